use serde::{Deserialize, Serialize};

use crate::advbound::DEFAULT_GORDON_C;
use crate::empiric::{TaskSpec, TrainConfig};
use crate::{Error, Result};

fn default_trials() -> usize {
    10_000
}

fn default_holdout() -> usize {
    10_000
}

fn default_c() -> f64 {
    DEFAULT_GORDON_C
}

/// `verify`: the concentration checks behind both bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    /// `(d_out, r)` shapes for the single-matrix singular-value tail.
    pub gordon_shapes: Vec<(usize, usize)>,
    pub gordon_etas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub gordon_trials: usize,
    #[serde(default = "default_c")]
    pub gordon_c: f64,
    /// Layer schedule and `(r, η)` for the union bound over layers.
    pub union_dims: Vec<usize>,
    pub union_rank: usize,
    pub union_eta: f64,
    pub small_ball_n: Vec<usize>,
    pub small_ball_t: f64,
    pub small_ball_trials: usize,
    pub diameter_width: usize,
    pub diameter_rank: usize,
    pub diameter_nu: f64,
    pub diameter_box: f64,
    pub diameter_eps: f64,
    pub diameter_draws: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            gordon_shapes: vec![(64, 4), (128, 8), (256, 4)],
            gordon_etas: vec![1.0, 2.0, 4.0],
            gordon_trials: default_trials(),
            gordon_c: default_c(),
            union_dims: vec![64, 64, 64],
            union_rank: 4,
            union_eta: 2.0,
            small_ball_n: vec![16, 64, 256, 1024],
            small_ball_t: 2.0,
            small_ball_trials: 100_000,
            diameter_width: 32,
            diameter_rank: 4,
            diameter_nu: 1.0,
            diameter_box: 1.0,
            diameter_eps: 0.05,
            diameter_draws: 500,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gordon_trials < 1000 {
            return Err(Error::param(
                "gordon_trials",
                format!("must be >= 1000, got {}", self.gordon_trials),
            ));
        }
        if self.small_ball_trials < 1000 {
            return Err(Error::param(
                "small_ball_trials",
                format!("must be >= 1000, got {}", self.small_ball_trials),
            ));
        }
        if self.gordon_shapes.is_empty()
            || self.gordon_etas.is_empty()
            || self.small_ball_n.is_empty()
        {
            return Err(Error::InvalidInput("verify grids must be non-empty".into()));
        }
        Ok(())
    }
}

/// `train`: fine-tune one student on a teacher-student task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCommandConfig {
    pub task: TaskSpec,
    /// Student adapter rank.
    pub rank: usize,
    pub nu: f64,
    pub n_train: usize,
    #[serde(default = "default_holdout")]
    pub holdout_size: usize,
    pub train: TrainConfig,
    #[serde(default)]
    pub seed: u64,
}

impl TrainCommandConfig {
    pub fn validate(&self) -> Result<()> {
        self.task.arch.with_rank(self.rank)?;
        if self.n_train == 0 || self.holdout_size == 0 {
            return Err(Error::param("n_train/holdout_size", "must be >= 1"));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::param(
                "nu",
                format!("must be positive, got {}", self.nu),
            ));
        }
        self.train.validate()
    }
}
