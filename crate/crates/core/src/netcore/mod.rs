//! The MLP, its LoRA perturbation with one frozen random factor, analytic
//! gradients and parameter counting.
//!
//! Layer indices in this module are 0-based: layer `t` maps `dims[t]` to
//! `dims[t + 1]` where `dims = arch.layer_dims()`.

mod adapter;
mod arch;
mod backprop;
pub mod io;
mod net;

pub use adapter::{
    init_adapter, init_adapter_with_role, materialize_delta, LoraAdapter, TrainedFactor,
};
pub use arch::{count_params, Activation, Architecture, ParamCounts};
pub(crate) use backprop::{accumulate_gradient, trace_unchecked};
pub use backprop::{backprop, forward_trace, zero_gradients, ForwardTrace};
pub use net::{forward_lora, forward_pretrained, PretrainedNet};
