use serde::{Deserialize, Serialize};

use super::stats::loglog_slope;
use crate::netcore::PretrainedNet;
use crate::numkit::{sample_gaussian, Matrix, RngState};
use crate::{Error, Result};

/// Finite-difference Lipschitz estimates of the factor-to-update maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzProbe {
    pub rho: Vec<f64>,
    /// Mean directional difference quotient of `A ↦ B₀A` at base norm `ρ`.
    pub one_factor: Vec<f64>,
    /// Same for `(A, B) ↦ BA`.
    pub two_factor: Vec<f64>,
    pub slope_one_factor: f64,
    pub slope_two_factor: f64,
}

fn unit(m: Matrix) -> Matrix {
    let n = m.frobenius_norm();
    m.scale(1.0 / n)
}

/// Probes the first layer's LoRA factor maps at base points of Frobenius norm
/// `ρ` for each `ρ` in `rho_grid`.
///
/// Each probe draws a base direction and a unit perturbation once and reuses
/// them across the grid, so the curves differ only through `ρ`. The one-factor
/// map is linear, giving a flat curve; the two-factor map is bilinear, giving
/// a curve proportional to `ρ`.
pub fn lipschitz_probe_asymmetric_vs_full(
    net: &PretrainedNet,
    rng: &mut RngState,
    n_probes: usize,
    rho_grid: &[f64],
) -> Result<LipschitzProbe> {
    if n_probes < 100 {
        return Err(Error::param(
            "n_probes",
            format!("must be >= 100, got {n_probes}"),
        ));
    }
    if rho_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::param(
            "rho_grid",
            "entries must be positive and finite",
        ));
    }
    let mut distinct = rho_grid.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 distinct rho values, got {}",
            distinct.len()
        )));
    }

    let arch = net.arch();
    let (d_in, d_out, r) = (arch.input_dim(), arch.width(), arch.rank());
    let b0 = sample_gaussian(rng, d_out, r, 1.0)?;
    let h = 1e-6;

    let mut one = vec![0.0; rho_grid.len()];
    let mut two = vec![0.0; rho_grid.len()];
    for _ in 0..n_probes {
        let a_dir = unit(sample_gaussian(rng, r, d_in, 1.0)?);
        let b_dir = unit(sample_gaussian(rng, d_out, r, 1.0)?);
        // joint unit perturbation of (A, B)
        let ua = sample_gaussian(rng, r, d_in, 1.0)?;
        let ub = sample_gaussian(rng, d_out, r, 1.0)?;
        let joint = (ua.frobenius_norm().powi(2) + ub.frobenius_norm().powi(2)).sqrt();
        let (ua, ub) = (ua.scale(1.0 / joint), ub.scale(1.0 / joint));
        let ua_alone = unit(ua.clone());

        for (k, &rho) in rho_grid.iter().enumerate() {
            let a = a_dir.scale(rho);
            let b = b_dir.scale(rho);
            let step = h * rho.max(1.0);

            let base = b0.matmul(&a)?;
            let moved = b0.matmul(&a.add(&ua_alone.scale(step))?)?;
            one[k] += moved.sub(&base)?.frobenius_norm() / step;

            let base = b.matmul(&a)?;
            let moved = b.add(&ub.scale(step))?.matmul(&a.add(&ua.scale(step))?)?;
            two[k] += moved.sub(&base)?.frobenius_norm() / step;
        }
    }
    let n = n_probes as f64;
    one.iter_mut().for_each(|v| *v /= n);
    two.iter_mut().for_each(|v| *v /= n);
    Ok(LipschitzProbe {
        slope_one_factor: loglog_slope(rho_grid, &one)?,
        slope_two_factor: loglog_slope(rho_grid, &two)?,
        rho: rho_grid.to_vec(),
        one_factor: one,
        two_factor: two,
    })
}
