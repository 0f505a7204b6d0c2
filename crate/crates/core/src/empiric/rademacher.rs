use serde::{Deserialize, Serialize};

use super::{clipped_abs_loss, LabeledSample};
use crate::netcore::{forward_lora, LoraAdapter, PretrainedNet};
use crate::numkit::RngState;
use crate::{Error, Result};

/// Loss values of a finite function class on a fixed sample:
/// row `f`, column `i` holds `ℓ(f(xᵢ), yᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    n_functions: usize,
    n_points: usize,
    data: Vec<f64>,
}

impl LossMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_points = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n_points == 0 {
            return Err(Error::InvalidInput(
                "loss matrix needs at least one function and one point".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != n_points) {
            return Err(Error::InvalidInput(
                "loss rows have different lengths".into(),
            ));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("loss values must be finite".into()));
        }
        Ok(LossMatrix {
            n_functions: data.len() / n_points,
            n_points,
            data,
        })
    }

    pub fn n_functions(&self) -> usize {
        self.n_functions
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn row(&self, f: usize) -> &[f64] {
        &self.data[f * self.n_points..(f + 1) * self.n_points]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_points)
    }

    /// `sup_f (1/m) Σᵢ σᵢ ℓ_{f,i}` for a fixed sign vector.
    pub fn sup_correlation(&self, signs: &[f64]) -> f64 {
        let m = self.n_points as f64;
        self.rows()
            .map(|row| row.iter().zip(signs).map(|(l, s)| l * s).sum::<f64>() / m)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Normalized distance `sqrt((1/m) Σᵢ (ℓ_{f,i} − ℓ_{g,i})²)`.
    pub fn l2s_distance(&self, f: usize, g: usize) -> f64 {
        let (a, b) = (self.row(f), self.row(g));
        let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (ss / self.n_points as f64).sqrt()
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_sign_draws: usize,
}

/// Empirical Rademacher complexity of the finite class in `losses`, averaged
/// over `n_sign_draws` sign vectors.
///
/// When the rows are a sample from a larger class this is a lower estimate of
/// that class's complexity.
pub fn rademacher_mc(
    losses: &LossMatrix,
    n_sign_draws: usize,
    rng: &mut RngState,
) -> Result<RademacherEstimate> {
    if n_sign_draws < 100 {
        return Err(Error::param(
            "n_sign_draws",
            format!("must be >= 100, got {n_sign_draws}"),
        ));
    }
    let mut signs = vec![0.0; losses.n_points()];
    let values: Vec<f64> = (0..n_sign_draws)
        .map(|_| {
            signs.iter_mut().for_each(|s| *s = rng.rademacher());
            losses.sup_correlation(&signs)
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(RademacherEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        n_sign_draws,
    })
}

/// Exact empirical Rademacher complexity by enumerating all `2^m` sign vectors.
pub fn rademacher_exact(losses: &LossMatrix) -> Result<f64> {
    let m = losses.n_points();
    if m > 20 {
        return Err(Error::InvalidInput(format!(
            "exact enumeration limited to 20 points, got {m}"
        )));
    }
    let mut signs = vec![0.0; m];
    let total: f64 = (0u32..1 << m)
        .map(|mask| {
            for (i, s) in signs.iter_mut().enumerate() {
                *s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            }
            losses.sup_correlation(&signs)
        })
        .sum();
    Ok(total / f64::from(1u32 << m))
}

/// Losses of each adapter (applied to `net`) on `samples`.
pub fn lora_loss_matrix(
    net: &PretrainedNet,
    adapters: &[LoraAdapter],
    samples: &[LabeledSample],
) -> Result<LossMatrix> {
    let rows = adapters
        .iter()
        .map(|a| {
            samples
                .iter()
                .map(|s| clipped_abs_loss(&forward_lora(net, a, &s.x)?, &s.y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    LossMatrix::new(rows)
}

/// Monte Carlo Rademacher estimate for the LoRA class around `template`.
///
/// The supremum runs over `n_model_draws` adapters whose trainable entries are
/// uniform in the template's box, plus any `extra` adapters (for example
/// trained ones). All share the template's frozen factor.
pub fn rademacher_lora(
    net: &PretrainedNet,
    template: &LoraAdapter,
    extra: &[LoraAdapter],
    samples: &[LabeledSample],
    n_model_draws: usize,
    n_sign_draws: usize,
    rng: &mut RngState,
) -> Result<RademacherEstimate> {
    let mut class: Vec<LoraAdapter> = (0..n_model_draws)
        .map(|_| template.with_uniform_trainable(rng))
        .collect();
    class.extend_from_slice(extra);
    if class.is_empty() {
        return Err(Error::InvalidInput("empty function class".into()));
    }
    let losses = lora_loss_matrix(net, &class, samples)?;
    rademacher_mc(&losses, n_sign_draws, rng)
}

/// Greedy `ε`-net of the rows under the normalized L2 distance: every row lies
/// within `eps` of some returned index.
pub fn greedy_l2s_cover(losses: &LossMatrix, eps: f64) -> Vec<usize> {
    let n = losses.n_functions();
    let mut centers = vec![0];
    let mut dist: Vec<f64> = (0..n).map(|f| losses.l2s_distance(f, 0)).collect();
    loop {
        let (far, &d) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty class");
        if d <= eps {
            return centers;
        }
        centers.push(far);
        for (f, slot) in dist.iter_mut().enumerate() {
            *slot = slot.min(losses.l2s_distance(f, far));
        }
    }
}

/// Multi-scale chaining bound on the empirical Rademacher complexity of the
/// finite class in `losses`.
///
/// With `B = max_f ‖ℓ_f − ℓ_0‖`, scales `εⱼ = B·2^{−j}` and greedy covers `Tⱼ`
/// (`T₀ = {ℓ_0}`), returns
/// `min_{1≤k≤levels} [ε_k + Σ_{j≤k} 3εⱼ·sqrt(2 ln(|Tⱼ||Tⱼ₋₁|)/m)]`.
pub fn chaining_bound(losses: &LossMatrix, levels: usize) -> Result<f64> {
    if levels < 1 {
        return Err(Error::param("levels", "must be >= 1"));
    }
    let b = (0..losses.n_functions())
        .map(|f| losses.l2s_distance(f, 0))
        .fold(0.0, f64::max);
    if b == 0.0 {
        return Ok(0.0);
    }
    let m = losses.n_points() as f64;
    let mut prev = 1usize;
    let mut sum = 0.0;
    let mut best = f64::INFINITY;
    for j in 1..=levels {
        let eps = b * 0.5f64.powi(j as i32);
        let size = greedy_l2s_cover(losses, eps).len();
        sum += 3.0 * eps * (2.0 * ((size as f64).ln() + (prev as f64).ln()) / m).sqrt();
        best = best.min(eps + sum);
        prev = size;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_class_is_zero_exactly() {
        let l = LossMatrix::new(vec![vec![0.3, 0.7, 0.1, 0.9]]).unwrap();
        assert!(rademacher_exact(&l).unwrap().abs() < 1e-15);
    }

    #[test]
    fn two_constants_closed_form() {
        // sup over {0, 1} of (1/m)Σσ = max(0, Σσ)/m, whose mean is E|Σσ|/(2m)
        let m = 6;
        let l = LossMatrix::new(vec![vec![0.0; m], vec![1.0; m]]).unwrap();
        let expected = {
            let mut acc = 0.0;
            for k in 0..=m {
                let c = (0..k).fold(1.0, |c, i| c * (m - i) as f64 / (i + 1) as f64);
                acc += c * (2.0 * k as f64 - m as f64).abs();
            }
            acc / 64.0 / (2.0 * m as f64)
        };
        assert!((rademacher_exact(&l).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mc_needs_enough_draws() {
        let l = LossMatrix::new(vec![vec![1.0]]).unwrap();
        assert!(rademacher_mc(&l, 99, &mut RngState::new(0)).is_err());
    }

    #[test]
    fn greedy_cover_radius_holds() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0, 0.5]).collect();
        let l = LossMatrix::new(rows).unwrap();
        for eps in [0.05, 0.2, 1.0] {
            let centers = greedy_l2s_cover(&l, eps);
            for f in 0..l.n_functions() {
                assert!(centers.iter().any(|&c| l.l2s_distance(f, c) <= eps));
            }
        }
        assert_eq!(greedy_l2s_cover(&l, 1.0).len(), 1);
    }
}
