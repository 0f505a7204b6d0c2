//! Closed-form evaluation of the LoRA generalization upper bound and each
//! quantity along its derivation.
//!
//! Two distinct small numbers appear here and are kept apart by name:
//!
//! * `eps`: the failure probability of the Lipschitz/diameter event on the
//!   frozen factors. The final bound splits the overall failure probability `δ`
//!   as `1 − δ = (1 − eps)²`, i.e. `eps = 1 − √(1 − δ)`.
//! * `eps_cov`: a covering radius.
//!
//! All logarithms are natural except the `⌊log₂ ε_cov⌋` of the parameter-ball
//! covering estimate. Each `*_from` function is the bare formula on plain
//! numbers; the config-taking versions derive their inputs from a
//! [`BoundConfig`].

use serde::{Deserialize, Serialize};

use crate::netcore::{count_params, Architecture};
use crate::{Error, Result};

/// Inputs of the upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub arch: Architecture,
    /// Box bound `M` on trainable entries.
    pub box_bound: f64,
    /// Scale `ν` of the frozen Gaussian factor.
    pub nu: f64,
    /// `R₀ = ‖θ_pre‖_∞`.
    pub r0: f64,
    /// Training sample count `N`.
    pub n_samples: u64,
    /// Overall failure probability `δ ∈ (0, 1]`.
    pub delta: f64,
    /// Lipschitz-width constant `c₂`. Never given numerically by the theory; 1.0 by convention.
    pub c2: f64,
    /// Lipschitz constant of the loss in its prediction argument.
    pub loss_lipschitz: f64,
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::param("n_samples", "must be >= 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::param(
                "delta",
                format!("must lie in (0, 1], got {}", self.delta),
            ));
        }
        for (name, v) in [
            ("c2", self.c2),
            ("box_bound", self.box_bound),
            ("nu", self.nu),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return Err(Error::param(
                "r0",
                format!("must be >= 0 and finite, got {}", self.r0),
            ));
        }
        if !(self.loss_lipschitz >= 0.0 && self.loss_lipschitz.is_finite()) {
            return Err(Error::param(
                "loss_lipschitz",
                format!("must be >= 0 and finite, got {}", self.loss_lipschitz),
            ));
        }
        Ok(())
    }

    /// `c₂ · T`.
    pub fn ct(&self) -> f64 {
        self.c2 * self.arch.depth() as f64
    }

    pub fn q_formula(&self) -> u64 {
        count_params(&self.arch).q_formula
    }
}

/// `ε = 1 − √(1 − δ)`, evaluated as `δ / (1 + √(1 − δ))` to avoid cancellation.
pub fn confidence_epsilon(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(
            "delta",
            format!("must lie in (0, 1], got {delta}"),
        ));
    }
    Ok(delta / (1.0 + (1.0 - delta).sqrt()))
}

/// Radius `R = M ν √(2 r log(2W/ε))` of the realized perturbations `BA`.
pub fn compute_r(m: f64, nu: f64, r: usize, w: usize, eps: f64) -> Result<f64> {
    if !(m > 0.0) || !(nu > 0.0) {
        return Err(Error::param(
            "box_bound/nu",
            format!("must be positive, got M={m}, nu={nu}"),
        ));
    }
    let ratio = 2.0 * w as f64 / eps;
    if !(eps > 0.0) || !(ratio > 1.0) {
        return Err(Error::param(
            "eps",
            format!("must lie in (0, 2W) = (0, {}), got {eps}", 2 * w),
        ));
    }
    Ok(m * nu * (2.0 * r as f64 * ratio.ln()).sqrt())
}

fn radius(cfg: &BoundConfig, eps: f64) -> Result<f64> {
    compute_r(
        cfg.box_bound,
        cfg.nu,
        cfg.arch.rank(),
        cfg.arch.width(),
        eps,
    )
}

/// `2^{cT} (R + R₀)^{cT}`.
pub fn lipschitz_bound_from(ct: f64, r: f64, r0: f64) -> f64 {
    (2.0 * (r + r0)).powf(ct)
}

/// High-probability bound on the Lipschitz constant of the parameter-to-LoRA map.
pub fn lipschitz_bound(cfg: &BoundConfig, eps: f64) -> Result<f64> {
    Ok(lipschitz_bound_from(cfg.ct(), radius(cfg, eps)?, cfg.r0))
}

/// Interval `[c₁ T (1 + log₂(R+R₀)), c₂ T (1 + log₂(R+R₀))]` for `log₂ L_LoRA`.
pub fn lipschitz_log2_interval(cfg: &BoundConfig, eps: f64, c1: f64) -> Result<(f64, f64)> {
    if !(c1 >= 0.0 && c1 <= cfg.c2) {
        return Err(Error::param(
            "c1",
            format!("must satisfy 0 <= c1 <= c2, got {c1}"),
        ));
    }
    let base = 1.0 + (radius(cfg, eps)? + cfg.r0).log2();
    let t = cfg.arch.depth() as f64;
    Ok((c1 * t * base, cfg.c2 * t * base))
}

/// Log of the ∞-ball covering estimate `(ρ · 2^{−⌊log₂ ε_cov⌋})^p`.
pub fn covering_bound_params(rho: f64, eps_cov: f64, p: u64) -> Result<f64> {
    if !(rho > 0.0) || !(eps_cov > 0.0) || p == 0 {
        return Err(Error::InvalidInput(format!(
            "need rho > 0, eps_cov > 0, p >= 1 (got {rho}, {eps_cov}, {p})"
        )));
    }
    let halvings = -eps_cov.log2().floor();
    Ok(p as f64 * (rho.ln() + halvings * std::f64::consts::LN_2))
}

/// `q((cT+1) log(2R+2R₀) − log ε_cov)`, the log of `((2R+2R₀)^{cT+1}/ε_cov)^q`.
pub fn covering_log_from(q: u64, ct: f64, r: f64, r0: f64, eps_cov: f64) -> f64 {
    q as f64 * ((ct + 1.0) * (2.0 * r + 2.0 * r0).ln() - eps_cov.ln())
}

/// Log covering-number bound of the LoRA function class at radius `eps_cov`.
pub fn covering_bound_lora(cfg: &BoundConfig, eps: f64, eps_cov: f64) -> Result<f64> {
    if !(eps_cov > 0.0) {
        return Err(Error::param(
            "eps_cov",
            format!("must be positive, got {eps_cov}"),
        ));
    }
    Ok(covering_log_from(
        cfg.q_formula(),
        cfg.ct(),
        radius(cfg, eps)?,
        cfg.r0,
        eps_cov,
    ))
}

/// `A = (cT + 1) log(2R + 2R₀)`.
pub fn a_term_from(ct: f64, r: f64, r0: f64) -> f64 {
    (ct + 1.0) * (2.0 * r + 2.0 * r0).ln()
}

pub fn a_term(cfg: &BoundConfig, eps: f64) -> Result<f64> {
    Ok(a_term_from(cfg.ct(), radius(cfg, eps)?, cfg.r0))
}

/// Entropy-integral cutoff and the resulting Rademacher bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DudleyValue {
    /// `exp(A − N/(9q))`, the stationary point of the truncated entropy integral.
    pub t_star: f64,
    /// `min(2, 12 √(qA) / √N)`.
    pub rademacher_bound: f64,
    /// `A ≤ 0`: the bound was evaluated with `max(A, 0)`.
    pub degenerate: bool,
}

pub fn dudley_from(q: u64, a: f64, n: u64) -> DudleyValue {
    let (q, n_f) = (q as f64, n as f64);
    let a_eff = a.max(0.0);
    DudleyValue {
        t_star: (a - n_f / (9.0 * q)).exp(),
        rademacher_bound: (12.0 * (q * a_eff).sqrt() / n_f.sqrt()).min(2.0),
        degenerate: a <= 0.0,
    }
}

pub fn dudley_value(cfg: &BoundConfig, eps: f64) -> Result<DudleyValue> {
    Ok(dudley_from(
        cfg.q_formula(),
        a_term(cfg, eps)?,
        cfg.n_samples,
    ))
}

/// `g(t) = 4t + (12/√N) ∫_t^{1/2} √(q (A + log(1/ε))) dε`, by quadrature.
///
/// The integral is taken in the variable `u = log(1/ε)`, which turns the
/// logarithmic endpoint singularity into an exponentially decaying tail.
pub fn dudley_objective(q: u64, a: f64, n: u64, t: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&t) {
        return Err(Error::param("t", format!("must lie in [0, 1/2], got {t}")));
    }
    let lo = std::f64::consts::LN_2;
    let hi = if t == 0.0 { lo + 60.0 } else { (1.0 / t).ln() };
    let q = q as f64;
    let f = |u: f64| (q * (a + u).max(0.0)).sqrt() * (-u).exp();
    let integral = if hi > lo {
        simpson(f, lo, hi, 20_000)
    } else {
        0.0
    };
    Ok(4.0 * t + 12.0 / (n as f64).sqrt() * integral)
}

/// Minimum of [`dudley_objective`] over `t ∈ [0, 1/2]`, attained at the clamped
/// stationary point since the objective is convex there.
pub fn dudley_integral_bound(q: u64, a: f64, n: u64) -> Result<f64> {
    let t = dudley_from(q, a, n).t_star.clamp(0.0, 0.5);
    dudley_objective(q, a, n, t)
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// `G* = 4 min(1, 6 √(qA)/√N) + √(8 log(2/ε)/N)`.
pub fn g_star_from(q: u64, a: f64, n: u64, eps: f64) -> f64 {
    let (q, n) = (q as f64, n as f64);
    4.0 * (6.0 * (q * a.max(0.0)).sqrt() / n.sqrt()).min(1.0) + tail_term(eps, n)
}

fn tail_term(eps: f64, n: f64) -> f64 {
    (8.0 * (2.0 / eps).ln() / n).sqrt()
}

/// Every quantity behind the upper bound for one configuration.
///
/// Serializes to exactly the fields
/// `{epsilon, R, R0, A, L_lora, t_star, G_star, q_formula, q_exact}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "A")]
    pub a_term: f64,
    #[serde(rename = "L_lora")]
    pub l_lora: f64,
    pub t_star: f64,
    #[serde(rename = "G_star")]
    pub g_star: f64,
    pub q_formula: u64,
    pub q_exact: u64,
    #[serde(skip)]
    pub ct: f64,
    #[serde(skip)]
    pub rademacher_bound: f64,
    #[serde(skip)]
    pub degenerate: bool,
    /// `L_ℓ · L_LoRA`: Lipschitz constant of the loss class.
    #[serde(skip)]
    pub l_total: f64,
}

impl BoundReport {
    /// Log covering-number bound of the function class at radius `eps_cov`.
    pub fn covering_log(&self, eps_cov: f64) -> f64 {
        covering_log_from(self.q_formula, self.ct, self.r, self.r0, eps_cov)
    }

    /// `4 min(1, 6 √(qA)/√N)`.
    pub fn complexity_term(&self) -> f64 {
        2.0 * self.rademacher_bound
    }
}

/// Evaluates the high-probability upper bound `G*` with all intermediates.
pub fn theorem1_bound(cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let eps = confidence_epsilon(cfg.delta)?;
    let r = radius(cfg, eps)?;
    let counts = count_params(&cfg.arch);
    let a = a_term_from(cfg.ct(), r, cfg.r0);
    let dudley = dudley_from(counts.q_formula, a, cfg.n_samples);
    let l_lora = lipschitz_bound_from(cfg.ct(), r, cfg.r0);
    Ok(BoundReport {
        epsilon: eps,
        r,
        r0: cfg.r0,
        a_term: a,
        l_lora,
        t_star: dudley.t_star,
        g_star: g_star_from(counts.q_formula, a, cfg.n_samples, eps),
        q_formula: counts.q_formula,
        q_exact: counts.q_exact,
        ct: cfg.ct(),
        rademacher_bound: dudley.rademacher_bound,
        degenerate: dudley.degenerate,
        l_total: loss_curry_lipschitz(cfg.loss_lipschitz)? * l_lora,
    })
}

/// Lipschitz constant of `f ↦ ℓ ∘ (f × id)` in the uniform norm: exactly `L_ℓ`.
pub fn loss_curry_lipschitz(loss_lipschitz: f64) -> Result<f64> {
    if !(loss_lipschitz >= 0.0) {
        return Err(Error::param(
            "loss_lipschitz",
            format!("must be >= 0, got {loss_lipschitz}"),
        ));
    }
    Ok(loss_lipschitz)
}
