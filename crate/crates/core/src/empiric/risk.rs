use serde::{Deserialize, Serialize};

use crate::netcore::{forward_lora, forward_pretrained, LoraAdapter, PretrainedNet};
use crate::{Error, Result};

/// One labelled observation `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Anything that maps an input vector to an output vector.
pub trait Predictor {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// The network evaluated with an adapter applied.
#[derive(Debug, Clone, Copy)]
pub struct LoraModel<'a> {
    pub net: &'a PretrainedNet,
    pub adapter: &'a LoraAdapter,
}

impl<'a> LoraModel<'a> {
    pub fn new(net: &'a PretrainedNet, adapter: &'a LoraAdapter) -> Self {
        LoraModel { net, adapter }
    }
}

impl Predictor for LoraModel<'_> {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward_lora(self.net, self.adapter, x)
    }
}

impl Predictor for PretrainedNet {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward_pretrained(self, x)
    }
}

/// Wraps a closure as a [`Predictor`].
pub struct FnModel<F>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64>> Predictor for FnModel<F> {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.0)(x))
    }
}

/// `min(1, ‖ŷ − y‖₂)`: 1-Lipschitz in `ŷ` with values in `[0, 1]`.
pub fn clipped_abs_loss(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "prediction has length {}, target has length {}",
            y_hat.len(),
            y.len()
        )));
    }
    Ok(distance(y_hat, y).min(1.0))
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Mean clipped loss of `model` over `samples`.
pub fn empirical_risk<P: Predictor + ?Sized>(model: &P, samples: &[LabeledSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput(
            "empirical risk of an empty sample".into(),
        ));
    }
    let mut total = 0.0;
    for s in samples {
        total += clipped_abs_loss(&model.predict(&s.x)?, &s.y)?;
    }
    Ok(total / samples.len() as f64)
}
