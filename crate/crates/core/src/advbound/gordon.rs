use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numkit::{sample_gaussian, svd, RngState};
use crate::{Error, Result};

/// Default constant `c` in the tail `2e^{−cη²}`.
pub const DEFAULT_GORDON_C: f64 = 0.5;

/// Monte Carlo check of the smallest-singular-value tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GordonCheck {
    pub trials: usize,
    pub failure_rate: f64,
    pub bound: f64,
    /// `bound + 3 sqrt(bound / trials)`.
    pub tolerance: f64,
    pub mean_s_min: f64,
    pub passed: bool,
}

fn check_args(eta: f64, trials: usize, c: f64) -> Result<()> {
    if trials < 1000 {
        return Err(Error::param(
            "trials",
            format!("must be >= 1000, got {trials}"),
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("must be positive, got {c}")));
    }
    Ok(())
}

fn s_min_gaussian(rng: &mut RngState, rows: usize, cols: usize) -> Result<f64> {
    Ok(svd(&sample_gaussian(rng, rows, cols, 1.0)?)?.min_singular_value())
}

fn summarize(trials: usize, failures: usize, bound: f64, mean_s_min: f64) -> GordonCheck {
    let failure_rate = failures as f64 / trials as f64;
    let tolerance = bound + 3.0 * (bound / trials as f64).sqrt();
    GordonCheck {
        trials,
        failure_rate,
        bound,
        tolerance,
        mean_s_min,
        passed: failure_rate <= tolerance,
    }
}

/// Frequency with which a standard Gaussian `d_out × r` matrix has
/// `s_min < √d_out − √r − η`, against the bound `2e^{−cη²}`.
///
/// Trial `i` uses the stream `rng.split(i)`, so results do not depend on the
/// thread count.
pub fn gordon_verify(
    d_out: usize,
    r: usize,
    eta: f64,
    trials: usize,
    c: f64,
    rng: &RngState,
) -> Result<GordonCheck> {
    check_args(eta, trials, c)?;
    if r == 0 || d_out < r {
        return Err(Error::InvalidInput(format!(
            "need 1 <= r <= d_out, got r={r}, d_out={d_out}"
        )));
    }
    let threshold = (d_out as f64).sqrt() - (r as f64).sqrt() - eta;
    let s: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| s_min_gaussian(&mut rng.split(i as u64), d_out, r))
        .collect::<Result<_>>()?;
    let failures = s.iter().filter(|&&v| v < threshold).count();
    let mean = s.iter().sum::<f64>() / trials as f64;
    Ok(summarize(
        trials,
        failures,
        2.0 * (-c * eta * eta).exp(),
        mean,
    ))
}

/// Frequency with which any layer `t` of the schedule has
/// `s_min(B⁽ᵗ⁾) < √d_{t+1} − √r − η`, against `2(T+1)e^{−cη²}`.
pub fn union_gordon(
    dims: &[usize],
    r: usize,
    eta: f64,
    trials: usize,
    c: f64,
    rng: &RngState,
) -> Result<GordonCheck> {
    check_args(eta, trials, c)?;
    if dims.len() < 2 || r == 0 || dims[1..].iter().any(|&d| d < r) {
        return Err(Error::InvalidInput(format!(
            "need output widths >= r={r} in {dims:?}"
        )));
    }
    let outs = &dims[1..];
    let mins: Vec<(bool, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut local = rng.split(i as u64);
            let mut failed = false;
            let mut first = f64::NAN;
            for (k, &d) in outs.iter().enumerate() {
                let s = s_min_gaussian(&mut local, d, r)?;
                failed |= s < (d as f64).sqrt() - (r as f64).sqrt() - eta;
                if k == 0 {
                    first = s;
                }
            }
            Ok((failed, first))
        })
        .collect::<Result<_>>()?;
    let failures = mins.iter().filter(|m| m.0).count();
    let mean = mins.iter().map(|m| m.1).sum::<f64>() / trials as f64;
    let bound = 2.0 * outs.len() as f64 * (-c * eta * eta).exp();
    Ok(summarize(trials, failures, bound, mean))
}
