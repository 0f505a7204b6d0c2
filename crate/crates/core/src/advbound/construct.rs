use serde::{Deserialize, Serialize};

use crate::netcore::{forward_lora, Activation, LoraAdapter, PretrainedNet, TrainedFactor};
use crate::numkit::{operator_norm, pinv, svd, Matrix};
use crate::{Error, Result};

/// `rows × cols` matrix with ones on the leading diagonal and zeros elsewhere.
pub fn padded_identity(rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Padded identities `Ī = I_{d_t} ⊕ 0` for each layer of a non-shrinking
/// schedule.
pub fn build_identity_interpolator(dims: &[usize]) -> Result<Vec<Matrix>> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidArchitecture(format!(
            "invalid layer schedule {dims:?}"
        )));
    }
    dims.windows(2)
        .map(|p| {
            if p[1] < p[0] {
                Err(Error::InvalidArchitecture(format!(
                    "width shrinks from {} to {} in {dims:?}",
                    p[0], p[1]
                )))
            } else {
                Ok(padded_identity(p[1], p[0]))
            }
        })
        .collect()
}

/// Adapter that makes the network emulate `x ↦ x`, with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialInstance {
    pub net: PretrainedNet,
    pub adapter: LoraAdapter,
    pub eta: f64,
    /// `min_t √d_{t+1} − √r` over hidden layers; non-positive for square factors.
    pub eta_star: f64,
    /// `1 / (η* − η)`; `None` when `η*` is non-positive.
    #[serde(rename = "M_eta")]
    pub m_eta: Option<f64>,
    #[serde(rename = "C_pre")]
    pub c_pre: f64,
    /// `max_{x ∈ {0,1}} |f̂(x) − x|`.
    pub residual: f64,
    pub a_op_norms: Vec<f64>,
    pub b_min_singular: Vec<f64>,
    /// Every layer satisfies `‖A‖_op ≤ C_pre / s_min(B) + 1e-8`.
    pub admissible: bool,
    /// Some frozen factor is numerically rank deficient.
    pub rank_deficient: bool,
}

/// `min_t √d_{t+1} − √r` over the layers whose output is hidden (width `W`).
pub fn eta_star(width: usize, rank: usize) -> f64 {
    (width as f64).sqrt() - (rank as f64).sqrt()
}

/// Builds `A⁽ᵗ⁾ = pinv(B⁽ᵗ⁾)(Ī − W⁽ᵗ⁾)` for every layer.
///
/// The network must be a ReLU net from `ℝ` to `ℝ` with zero biases. Hidden
/// layers target the padded identity; the readout layer `W → 1` targets
/// `e₁ᵀ`, which keeps the first coordinate. `η` must lie in `(0, η*)` unless the
/// factors are square (`r = W`), where `η*` is not positive and `η` is only
/// recorded.
pub fn construct_adversarial(
    net: &PretrainedNet,
    frozen_b: &[Matrix],
    eta: f64,
) -> Result<AdversarialInstance> {
    let arch = *net.arch();
    if arch.input_dim() != 1 || arch.output_dim() != 1 {
        return Err(Error::InvalidArchitecture(
            "construction needs d = D = 1".into(),
        ));
    }
    if arch.activation() != Activation::Relu {
        return Err(Error::InvalidArchitecture(
            "construction needs ReLU activations".into(),
        ));
    }
    if net.biases().iter().flatten().any(|&b| b != 0.0) {
        return Err(Error::InvalidInput("construction needs zero biases".into()));
    }
    let dims = arch.layer_dims();
    if frozen_b.len() != arch.num_layers() {
        return Err(Error::InvalidInput(format!(
            "expected {} frozen factors, got {}",
            arch.num_layers(),
            frozen_b.len()
        )));
    }
    let r = arch.rank();
    let star = eta_star(arch.width(), r);
    let square = star <= 0.0;
    if !(eta > 0.0 && eta.is_finite()) || (!square && eta >= star) {
        return Err(Error::param(
            "eta",
            format!(
                "must lie in (0, {star}) for W={}, r={r}, got {eta}",
                arch.width()
            ),
        ));
    }
    let c_pre = 1.0 + net.weights().iter().map(operator_norm).fold(0.0, f64::max);

    let mut a = Vec::with_capacity(dims.len() - 1);
    let mut a_op_norms = Vec::new();
    let mut b_min_singular = Vec::new();
    let mut admissible = true;
    let mut rank_deficient = false;
    for (t, pair) in dims.windows(2).enumerate() {
        let (din, dout) = (pair[0], pair[1]);
        let b = &frozen_b[t];
        if b.shape() != (dout, r) {
            return Err(Error::InvalidInput(format!(
                "frozen factor {t} has shape {:?}, expected {:?}",
                b.shape(),
                (dout, r)
            )));
        }
        let target = padded_identity(dout, din);
        let at = pinv(b)?.matmul(&target.sub(&net.weights()[t])?)?;
        let s = svd(b)?;
        let s_min = s.min_singular_value();
        rank_deficient |=
            s.rank(crate::numkit::default_rank_tol(b, s.max_singular_value())) < dout.min(r);
        let norm = operator_norm(&at);
        admissible &= norm <= c_pre / s_min + 1e-8;
        a_op_norms.push(norm);
        b_min_singular.push(s_min);
        a.push(at);
    }
    let box_bound = a.iter().map(Matrix::max_abs).fold(0.0, f64::max);
    let box_bound = if box_bound > 0.0 { box_bound } else { 1.0 };
    let adapter =
        LoraAdapter::from_parts(arch, TrainedFactor::A, frozen_b.to_vec(), a, box_bound, 1.0)?;
    let residual = [0.0, 1.0]
        .iter()
        .map(|&x| forward_lora(net, &adapter, &[x]).map(|y| (y[0] - x).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(AdversarialInstance {
        net: net.clone(),
        adapter,
        eta,
        eta_star: star,
        m_eta: (!square).then(|| 1.0 / (star - eta)),
        c_pre,
        residual,
        a_op_norms,
        b_min_singular,
        admissible,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_shapes() {
        let m = build_identity_interpolator(&[1, 3, 3]).unwrap();
        assert_eq!(m[0].as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(m[1], Matrix::identity(3));
        assert!(build_identity_interpolator(&[3, 2]).is_err());
    }
}
