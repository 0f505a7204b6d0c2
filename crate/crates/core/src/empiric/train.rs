use serde::{Deserialize, Serialize};

use super::risk::distance;
use super::{empirical_risk, LabeledSample, LoraModel};
use crate::netcore::{
    accumulate_gradient, trace_unchecked, zero_gradients, LoraAdapter, PretrainedNet,
};
use crate::numkit::RngState;
use crate::{Error, Result};

/// Projected minibatch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Box bound `M`; every step ends by clamping trainable entries into `[-M, M]`.
    pub box_bound: f64,
    pub seed: u64,
    /// Full-data risk is recorded every `eval_every` steps (and after the last step).
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn default_eval_every() -> usize {
    100
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::param("steps", "must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(
                "learning_rate",
                format!("must be finite and >= 0, got {}", self.learning_rate),
            ));
        }
        if self.batch_size < 1 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if !(self.box_bound > 0.0 && self.box_bound.is_finite()) {
            return Err(Error::param(
                "box_bound",
                format!("must be positive, got {}", self.box_bound),
            ));
        }
        if self.eval_every < 1 {
            return Err(Error::param("eval_every", "must be >= 1"));
        }
        Ok(())
    }
}

/// Result of [`train_projected_sgd`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub adapter: LoraAdapter,
    /// `(step, full training risk)`; step 0 is the initial risk.
    pub loss_trace: Vec<(usize, f64)>,
}

impl TrainOutcome {
    pub fn initial_risk(&self) -> f64 {
        self.loss_trace[0].1
    }

    pub fn final_risk(&self) -> f64 {
        self.loss_trace.last().expect("non-empty trace").1
    }
}

/// Gradient of `min(1, ‖ŷ − y‖)` in `ŷ`: the unit residual below the clip, zero above it.
fn loss_gradient(y_hat: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let dist = distance(y_hat, y);
    if dist == 0.0 || dist >= 1.0 {
        return None;
    }
    Some(y_hat.iter().zip(y).map(|(p, q)| (p - q) / dist).collect())
}

/// Minibatch SGD on the trainable factor only, followed by box projection
/// after every step.
///
/// The learning rate scales the minibatch-mean gradient of the clipped
/// absolute loss. Minibatches are drawn with replacement from a stream seeded
/// by `cfg.seed`. Training aborts with [`Error::Diverged`] if the recorded
/// training risk exceeds ten times its initial value.
pub fn train_projected_sgd(
    net: &PretrainedNet,
    adapter: &LoraAdapter,
    data: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if net.arch().layer_dims() != adapter.arch().layer_dims() {
        return Err(Error::InvalidInput(
            "adapter does not match the network".into(),
        ));
    }
    for s in data {
        if s.x.len() != net.arch().input_dim() || s.y.len() != net.arch().output_dim() {
            return Err(Error::InvalidInput(
                "sample dimensions do not match the network".into(),
            ));
        }
    }

    let mut adapter = adapter.with_box_bound(cfg.box_bound)?;
    let mut rng = RngState::new(cfg.seed);
    let initial = empirical_risk(&LoraModel::new(net, &adapter), data)?;
    let mut trace = vec![(0, initial)];
    let scale = -cfg.learning_rate / cfg.batch_size as f64;

    for step in 1..=cfg.steps {
        if cfg.learning_rate > 0.0 {
            let mut grads = zero_gradients(&adapter);
            for _ in 0..cfg.batch_size {
                let s = &data[rng.index(data.len())];
                let fwd = trace_unchecked(net, &adapter, &s.x);
                if let Some(g) = loss_gradient(&fwd.output, &s.y) {
                    accumulate_gradient(net, &adapter, &fwd, &g, scale, &mut grads);
                }
            }
            for (param, grad) in adapter.trainable_mut().iter_mut().zip(&grads) {
                param
                    .as_mut_slice()
                    .iter_mut()
                    .zip(grad.as_slice())
                    .for_each(|(p, g)| *p += g);
            }
            adapter.project();
        }
        if step % cfg.eval_every == 0 || step == cfg.steps {
            let risk = empirical_risk(&LoraModel::new(net, &adapter), data)?;
            if risk > 10.0 * initial {
                return Err(Error::Diverged {
                    step,
                    risk,
                    initial,
                });
            }
            trace.push((step, risk));
        }
    }
    Ok(TrainOutcome {
        adapter,
        loss_trace: trace,
    })
}
