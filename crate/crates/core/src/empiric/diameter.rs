use serde::{Deserialize, Serialize};

use crate::boundcalc::compute_r;
use crate::numkit::{sample_gaussian, RngState};
use crate::{Error, Result};

/// Frequency of the event that every entry of `BA` stays below `R` for the
/// worst `A` in the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterEvent {
    pub radius: f64,
    pub draws: usize,
    /// Frequency of `max_i M·|Σ_k B_ik| ≤ R`.
    pub frequency: f64,
    /// Frequency of `max_i M·Σ_k |B_ik| ≤ R`, the exact worst case over the box.
    pub frequency_worst_case: f64,
    /// `1 − ε − 3·sqrt(ε/draws)`.
    pub floor: f64,
}

/// Draws `draws` frozen `W × r` factors `B ~ N(0, ν²)` and records how often
/// the diameter event holds with `R = Mν·sqrt(2r ln(2W/ε))`.
pub fn diameter_event_frequency(
    width: usize,
    rank: usize,
    nu: f64,
    box_bound: f64,
    eps: f64,
    draws: usize,
    rng: &mut RngState,
) -> Result<DiameterEvent> {
    if draws == 0 {
        return Err(Error::param("draws", "must be >= 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(
            "eps",
            format!("must lie in (0, 1), got {eps}"),
        ));
    }
    let radius = compute_r(box_bound, nu, rank, width, eps)?;
    let (mut hit, mut hit_worst) = (0usize, 0usize);
    for _ in 0..draws {
        let b = sample_gaussian(rng, width, rank, nu)?;
        let (mut signed, mut absolute) = (0.0_f64, 0.0_f64);
        for i in 0..width {
            let row = b.row(i);
            signed = signed.max(row.iter().sum::<f64>().abs());
            absolute = absolute.max(row.iter().map(|v| v.abs()).sum::<f64>());
        }
        hit += usize::from(box_bound * signed <= radius);
        hit_worst += usize::from(box_bound * absolute <= radius);
    }
    let n = draws as f64;
    Ok(DiameterEvent {
        radius,
        draws,
        frequency: hit as f64 / n,
        frequency_worst_case: hit_worst as f64 / n,
        floor: 1.0 - eps - 3.0 * (eps / n).sqrt(),
    })
}
