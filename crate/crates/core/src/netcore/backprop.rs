use super::net::{check_compatible, check_input, pre_activation};
use super::{LoraAdapter, PretrainedNet, TrainedFactor};
use crate::numkit::Matrix;
use crate::{Error, Result};

/// Intermediate values of one LoRA forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each layer (`x⁽ᵗ⁾`).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// `A⁽ᵗ⁾x⁽ᵗ⁾` for each layer.
    ax: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

pub fn forward_trace(
    net: &PretrainedNet,
    adapter: &LoraAdapter,
    x: &[f64],
) -> Result<ForwardTrace> {
    check_compatible(net, adapter)?;
    check_input(net.arch(), x)?;
    Ok(trace_unchecked(net, adapter, x))
}

pub(crate) fn trace_unchecked(
    net: &PretrainedNet,
    adapter: &LoraAdapter,
    x: &[f64],
) -> ForwardTrace {
    let act = net.arch().activation();
    let layers = net.arch().num_layers();
    let mut inputs = Vec::with_capacity(layers);
    let mut pre = Vec::with_capacity(layers);
    let mut ax_all = Vec::with_capacity(layers);
    let mut h = x.to_vec();
    for t in 0..layers {
        let (z, ax) = pre_activation(net, Some(adapter), t, &h);
        inputs.push(h);
        h = if t + 1 < layers {
            z.iter().map(|v| act.apply(*v)).collect()
        } else {
            z.clone()
        };
        pre.push(z);
        ax_all.push(ax.expect("adapter present"));
    }
    ForwardTrace {
        inputs,
        pre,
        ax: ax_all,
        output: h,
    }
}

/// Adds `scale · ∂(upstreamᵀ f)/∂θ` for the trainable factor θ into `grads`.
pub(crate) fn accumulate_gradient(
    net: &PretrainedNet,
    adapter: &LoraAdapter,
    trace: &ForwardTrace,
    upstream: &[f64],
    scale: f64,
    grads: &mut [Matrix],
) {
    let act = net.arch().activation();
    let layers = net.arch().num_layers();
    let mut delta = upstream.to_vec();
    for t in (0..layers).rev() {
        let b = adapter.factor_b(t);
        let a = adapter.factor_a(t);
        // Bᵀδ is shared by the A-gradient and the backward signal
        let bt_delta = b.tr_matvec(&delta).expect("shapes checked");
        let g = &mut grads[t];
        match adapter.trained_factor() {
            TrainedFactor::A => {
                let x = &trace.inputs[t];
                let cols = g.cols();
                let gs = g.as_mut_slice();
                for (k, bk) in bt_delta.iter().enumerate() {
                    let coef = scale * bk;
                    if coef == 0.0 {
                        continue;
                    }
                    for (gv, xv) in gs[k * cols..(k + 1) * cols].iter_mut().zip(x) {
                        *gv += coef * xv;
                    }
                }
            }
            TrainedFactor::B => {
                let ax = &trace.ax[t];
                let cols = g.cols();
                let gs = g.as_mut_slice();
                for (i, di) in delta.iter().enumerate() {
                    let coef = scale * di;
                    if coef == 0.0 {
                        continue;
                    }
                    for (gv, av) in gs[i * cols..(i + 1) * cols].iter_mut().zip(ax) {
                        *gv += coef * av;
                    }
                }
            }
        }
        if t == 0 {
            break;
        }
        // δ_x = Wᵀδ + Aᵀ(Bᵀδ), then through the activation of layer t-1
        let mut dx = net.weights()[t].tr_matvec(&delta).expect("shapes checked");
        let at = a.tr_matvec(&bt_delta).expect("shapes checked");
        dx.iter_mut().zip(&at).for_each(|(d, v)| *d += v);
        for (d, z) in dx.iter_mut().zip(&trace.pre[t - 1]) {
            *d *= act.derivative(*z);
        }
        delta = dx;
    }
}

/// Zero gradient buffers shaped like the trainable factor.
pub fn zero_gradients(adapter: &LoraAdapter) -> Vec<Matrix> {
    adapter
        .trainable()
        .iter()
        .map(|m| Matrix::zeros(m.rows(), m.cols()))
        .collect()
}

/// Gradient of `upstream_gradᵀ · forward_lora(x)` with respect to every entry of
/// the trainable factor, one matrix per layer.
///
/// Pre-trained weights and the frozen factor receive no gradient.
pub fn backprop(
    net: &PretrainedNet,
    adapter: &LoraAdapter,
    x: &[f64],
    upstream_grad: &[f64],
) -> Result<Vec<Matrix>> {
    let trace = forward_trace(net, adapter, x)?;
    if upstream_grad.len() != net.arch().output_dim() {
        return Err(Error::InvalidInput(format!(
            "upstream gradient has length {}, expected {}",
            upstream_grad.len(),
            net.arch().output_dim()
        )));
    }
    let mut grads = zero_gradients(adapter);
    accumulate_gradient(net, adapter, &trace, upstream_grad, 1.0, &mut grads);
    Ok(grads)
}
