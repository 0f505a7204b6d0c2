use serde::{Deserialize, Serialize};

use super::source::count_heads;
use crate::numkit::RngState;
use crate::{Error, Result};

/// Largest `N` for which [`small_ball`] enumerates exactly.
pub const EXACT_LIMIT: usize = 64;

/// `p_t(N) = sup_v P(|Σ_{n≤N} ξₙ − v| ≤ t)` for i.i.d. signs `ξₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub p_hat: f64,
    pub standard_error: f64,
    pub exact_available: bool,
    pub p_exact: Option<f64>,
}

/// `P(Σξ = 2k − n)` for `k = 0..=n`, built from log binomial coefficients.
pub fn rademacher_sum_pmf(n: usize) -> Vec<f64> {
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut log_c = 0.0;
    let mut pmf = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            log_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        pmf.push((log_c - ln2n).exp());
    }
    pmf
}

/// Best total mass of `w` consecutive entries.
fn best_window(mass: &[f64], w: usize) -> f64 {
    let w = w.min(mass.len());
    let mut cur: f64 = mass[..w].iter().sum();
    let mut best = cur;
    for i in w..mass.len() {
        cur += mass[i] - mass[i - w];
        best = best.max(cur);
    }
    best
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param(
            "t",
            format!("must be finite and >= 0, got {t}"),
        ));
    }
    Ok(())
}

/// Sums lie on a lattice of spacing 2, so a window of half-width `t` holds at
/// most `⌊t⌋ + 1` consecutive values; the supremum over centers is the best
/// such run.
fn window_len(t: f64) -> usize {
    t.floor() as usize + 1
}

/// Exact `p_t(N)` by enumeration of the binomial law, for any `N ≥ 1`.
pub fn small_ball_exact(n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("N", "must be >= 1"));
    }
    check_t(t)?;
    Ok(best_window(&rademacher_sum_pmf(n), window_len(t)).min(1.0))
}

/// Exact `P(|Σ_{n≤N} ξₙ − v| ≤ t)` at a fixed center `v`.
pub fn small_ball_at(n: usize, t: f64, v: f64) -> Result<f64> {
    check_t(t)?;
    Ok(rademacher_sum_pmf(n)
        .iter()
        .enumerate()
        .filter(|(k, _)| ((2 * k) as f64 - n as f64 - v).abs() <= t)
        .map(|(_, p)| p)
        .sum())
}

/// `p_t(N)`: exact for `N ≤ 64`, otherwise Monte Carlo over `trials` draws of
/// the sum with the supremum taken over the empirical histogram.
pub fn small_ball(
    n: usize,
    t: f64,
    trials: usize,
    rng: &mut RngState,
) -> Result<SmallBallEstimate> {
    if n == 0 {
        return Err(Error::param("N", "must be >= 1"));
    }
    check_t(t)?;
    if n <= EXACT_LIMIT {
        let p = small_ball_exact(n, t)?;
        return Ok(SmallBallEstimate {
            n,
            t,
            p_hat: p,
            standard_error: 0.0,
            exact_available: true,
            p_exact: Some(p),
        });
    }
    if trials < 1000 {
        return Err(Error::param(
            "trials",
            format!("Monte Carlo needs >= 1000, got {trials}"),
        ));
    }
    let mut hist = vec![0.0; n + 1];
    for _ in 0..trials {
        hist[count_heads(rng, n) as usize] += 1.0;
    }
    let freq: Vec<f64> = hist.iter().map(|h| h / trials as f64).collect();
    let p = best_window(&freq, window_len(t));
    Ok(SmallBallEstimate {
        n,
        t,
        p_hat: p,
        standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
        exact_available: false,
        p_exact: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sign() {
        assert_eq!(small_ball_exact(1, 0.0).unwrap(), 0.5);
        assert_eq!(small_ball_exact(1, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn pmf_sums_to_one() {
        for n in [1, 7, 100, 1000] {
            let s: f64 = rademacher_sum_pmf(n).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_center_beats_lattice_center() {
        // t = 3 covers four lattice values from a midpoint, three from a lattice point
        let sup = small_ball_exact(10, 3.0).unwrap();
        let lattice = small_ball_at(10, 3.0, 0.0).unwrap();
        let mid = small_ball_at(10, 3.0, 1.0).unwrap();
        assert!((sup - mid).abs() < 1e-15 && sup > lattice);
    }
}
