//! Numerical laboratory for asymmetric low-rank adaptation (LoRA) of small
//! multi-layer perceptrons.
//!
//! The crate covers four areas:
//!
//! * [`numkit`]: dense matrices, one-sided Jacobi SVD, pseudo-inverse,
//!   operator norms and seeded, splittable Gaussian sampling.
//! * [`netcore`]: the MLP, the LoRA-perturbed forward pass `W + BA` with one
//!   frozen random factor, analytic backpropagation and parameter counting.
//! * [`boundcalc`]: closed-form evaluation of the high-probability
//!   generalization bound and every intermediate quantity behind it.
//! * [`empiric`] and [`advbound`]: the measurement side. Projected SGD
//!   training, Monte Carlo Rademacher complexity, empirical covers, gap sweeps,
//!   and the constructive lower-bound instance with its random-matrix and
//!   anti-concentration ingredients.
//!
//! The [`cli`] module backs the `lorabounds` binary. Runnable walkthroughs of
//! each capability live in the crate's `examples/` directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod advbound;
pub mod boundcalc;
pub mod cli;
pub mod empiric;
mod error;
pub mod netcore;
pub mod numkit;

pub use error::{Error, Result};
