use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::construct::{construct_adversarial, eta_star};
use super::gordon::DEFAULT_GORDON_C;
use super::smallball::small_ball_at;
use super::source::count_heads;
use crate::empiric::clipped_abs_loss;
use crate::netcore::{forward_lora, Activation, Architecture, PretrainedNet};
use crate::numkit::{sample_gaussian, RngState};
use crate::{Error, Result};

fn default_c() -> f64 {
    DEFAULT_GORDON_C
}

fn default_c_anti() -> f64 {
    3.0 * (2.0 / std::f64::consts::PI).sqrt()
}

fn one() -> f64 {
    1.0
}

/// Settings of the lower-bound experiment on a ReLU net `ℝ → ℝ`.
///
/// `rank == width` selects square frozen factors, where the construction is
/// exact; there the `η` window is empty and `η` is only recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfig {
    pub depth: usize,
    pub width: usize,
    pub rank: usize,
    pub eta: f64,
    pub delta: f64,
    #[serde(rename = "N")]
    pub n_samples: usize,
    pub trials: usize,
    /// Constant `c` of the Gaussian tail `2e^{−cη²}`.
    #[serde(default = "default_c")]
    pub gordon_c: f64,
    /// Constant `c` of the floor `(1 − δ/2)(1 − c/√N)`.
    #[serde(default = "default_c_anti")]
    pub c_anti: f64,
    #[serde(default = "one")]
    pub weight_scale: f64,
}

impl LowerBoundConfig {
    pub fn arch(&self) -> Result<Architecture> {
        Architecture::with_full_rank_adapters(
            1,
            1,
            self.depth,
            self.width,
            self.rank,
            Activation::Relu,
        )
    }

    pub fn is_square(&self) -> bool {
        self.rank == self.width
    }

    /// `2(T+1)e^{−cη²}`.
    pub fn gordon_bound(&self) -> f64 {
        2.0 * (self.depth + 1) as f64 * (-self.gordon_c * self.eta * self.eta).exp()
    }

    pub fn validate(&self) -> Result<()> {
        self.arch()?;
        if self.n_samples == 0 || self.trials == 0 {
            return Err(Error::param("N/trials", "must be >= 1"));
        }
        for (name, v) in [
            ("gordon_c", self.gordon_c),
            ("c_anti", self.c_anti),
            ("weight_scale", self.weight_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        let star = eta_star(self.width, self.rank);
        if !(self.eta > 0.0 && self.eta.is_finite()) || (!self.is_square() && self.eta >= star) {
            return Err(Error::param(
                "eta",
                format!("must lie in (0, {star}), got {}", self.eta),
            ));
        }
        let hi = 2.0 * (self.depth + 1) as f64;
        let lo = self.gordon_bound();
        if !(self.delta > lo && self.delta < hi) {
            return Err(Error::param(
                "delta",
                format!("must lie in ({lo}, {hi}), got {}", self.delta),
            ));
        }
        Ok(())
    }
}

/// Aggregate of a lower-bound run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub eta: f64,
    pub eta_star: f64,
    #[serde(rename = "M_eta")]
    pub m_eta: Option<f64>,
    /// Largest `C_pre` over trials.
    #[serde(rename = "C_pre")]
    pub c_pre: f64,
    pub residual_max: f64,
    /// Fraction of trials where some hidden frozen factor has
    /// `s_min < √W − √r − η` (zero for square factors).
    pub gordon_rate: f64,
    pub gordon_bound: f64,
    /// Exact `P(|Σ_{n≤N} ξₙ| ≤ 2)`.
    pub smallball_p: f64,
    /// Fraction of trials that are admissible with `|R(f̂) − R^N(f̂)| > 1/N`.
    pub event_frequency: f64,
    pub theory_floor: f64,
    #[serde(skip)]
    pub event_standard_error: f64,
    #[serde(skip)]
    pub admissible_fraction: f64,
    #[serde(skip)]
    pub trials: usize,
}

struct Trial {
    event: bool,
    admissible: bool,
    gordon_fail: bool,
    residual: f64,
    c_pre: f64,
}

fn run_trial(cfg: &LowerBoundConfig, arch: Architecture, rng: &mut RngState) -> Result<Trial> {
    let net = PretrainedNet::random(arch, rng, cfg.weight_scale, 0.0)?;
    let dims = arch.layer_dims();
    let frozen = dims
        .windows(2)
        .map(|p| sample_gaussian(rng, p[1], arch.rank(), 1.0))
        .collect::<Result<Vec<_>>>()?;
    let inst = construct_adversarial(&net, &frozen, cfg.eta)?;
    let threshold = (cfg.width as f64).sqrt() - (cfg.rank as f64).sqrt() - cfg.eta;
    let gordon_fail = !cfg.is_square()
        && inst.b_min_singular[..arch.depth()]
            .iter()
            .any(|&s| s < threshold);

    // Y = 0, so the loss at x is the clipped |f̂(x)|; R(f̂) averages x ∈ {0, 1}
    // and R − R^N = (ℓ₁ − ℓ₀)(N − 2k)/(2N) with k the number of ones.
    let l0 = clipped_abs_loss(&forward_lora(&net, &inst.adapter, &[0.0])?, &[0.0])?;
    let l1 = clipped_abs_loss(&forward_lora(&net, &inst.adapter, &[1.0])?, &[0.0])?;
    let n = cfg.n_samples as f64;
    let k = count_heads(rng, cfg.n_samples) as f64;
    let gap = (l1 - l0).abs() * (n - 2.0 * k).abs() / (2.0 * n);
    Ok(Trial {
        event: inst.admissible && gap > 1.0 / n,
        admissible: inst.admissible,
        gordon_fail,
        residual: inst.residual,
        c_pre: inst.c_pre,
    })
}

/// Repeats the adversarial construction and a fresh Bernoulli sample `trials`
/// times. Trial `i` draws from `rng.split(i)`.
pub fn lower_bound_experiment(cfg: &LowerBoundConfig, rng: &RngState) -> Result<LowerBoundReport> {
    cfg.validate()?;
    let arch = cfg.arch()?;
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, arch, &mut rng.split(i as u64)))
        .collect::<Result<_>>()?;
    let m = cfg.trials as f64;
    let frac = |f: fn(&Trial) -> bool| trials.iter().filter(|t| f(t)).count() as f64 / m;
    let event_frequency = frac(|t| t.event);
    let star = eta_star(cfg.width, cfg.rank);
    Ok(LowerBoundReport {
        eta: cfg.eta,
        eta_star: star,
        m_eta: (!cfg.is_square()).then(|| 1.0 / (star - cfg.eta)),
        c_pre: trials.iter().map(|t| t.c_pre).fold(0.0, f64::max),
        residual_max: trials.iter().map(|t| t.residual).fold(0.0, f64::max),
        gordon_rate: frac(|t| t.gordon_fail),
        gordon_bound: cfg.gordon_bound(),
        smallball_p: small_ball_at(cfg.n_samples, 2.0, 0.0)?,
        event_frequency,
        theory_floor: (1.0 - cfg.delta / 2.0)
            * (1.0 - cfg.c_anti / (cfg.n_samples as f64).sqrt()).max(0.0),
        event_standard_error: (event_frequency * (1.0 - event_frequency) / m).sqrt(),
        admissible_fraction: frac(|t| t.admissible),
        trials: cfg.trials,
    })
}
