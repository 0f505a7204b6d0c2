use serde::{Deserialize, Serialize};

use super::{Architecture, LoraAdapter};
use crate::numkit::{sample_gaussian, Matrix, RngState};
use crate::{Error, Result};

/// Frozen pre-trained weights and biases of the MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNet", into = "RawNet")]
pub struct PretrainedNet {
    arch: Architecture,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNet {
    arch: Architecture,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

impl TryFrom<RawNet> for PretrainedNet {
    type Error = Error;

    fn try_from(raw: RawNet) -> Result<Self> {
        PretrainedNet::new(raw.arch, raw.weights, raw.biases)
    }
}

impl From<PretrainedNet> for RawNet {
    fn from(n: PretrainedNet) -> Self {
        RawNet {
            arch: n.arch,
            weights: n.weights,
            biases: n.biases,
        }
    }
}

impl PretrainedNet {
    pub fn new(arch: Architecture, weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let dims = arch.layer_dims();
        let layers = arch.num_layers();
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::InvalidInput(format!(
                "expected {layers} weight matrices and bias vectors, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for t in 0..layers {
            if weights[t].shape() != (dims[t + 1], dims[t]) {
                return Err(Error::InvalidInput(format!(
                    "layer {t} weight has shape {:?}, expected {:?}",
                    weights[t].shape(),
                    (dims[t + 1], dims[t])
                )));
            }
            if biases[t].len() != dims[t + 1] {
                return Err(Error::InvalidInput(format!(
                    "layer {t} bias has length {}, expected {}",
                    biases[t].len(),
                    dims[t + 1]
                )));
            }
            if biases[t].iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidInput(format!("layer {t} bias is not finite")));
            }
        }
        Ok(PretrainedNet {
            arch,
            weights,
            biases,
        })
    }

    pub fn zeros(arch: Architecture) -> Self {
        let dims = arch.layer_dims();
        let weights = dims.windows(2).map(|p| Matrix::zeros(p[1], p[0])).collect();
        let biases = dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        PretrainedNet {
            arch,
            weights,
            biases,
        }
    }

    /// Gaussian weights with standard deviation `weight_scale / √fan_in` and
    /// Gaussian biases with standard deviation `bias_scale` (zero biases when
    /// `bias_scale == 0`).
    pub fn random(
        arch: Architecture,
        rng: &mut RngState,
        weight_scale: f64,
        bias_scale: f64,
    ) -> Result<Self> {
        if !(bias_scale >= 0.0) {
            return Err(Error::param(
                "bias_scale",
                format!("must be >= 0, got {bias_scale}"),
            ));
        }
        let dims = arch.layer_dims();
        let mut weights = Vec::with_capacity(arch.num_layers());
        let mut biases = Vec::with_capacity(arch.num_layers());
        for pair in dims.windows(2) {
            let (din, dout) = (pair[0], pair[1]);
            weights.push(sample_gaussian(
                rng,
                dout,
                din,
                weight_scale / (din as f64).sqrt(),
            )?);
            biases.push(if bias_scale > 0.0 {
                (0..dout)
                    .map(|_| bias_scale * rng.standard_normal())
                    .collect()
            } else {
                vec![0.0; dout]
            });
        }
        PretrainedNet::new(arch, weights, biases)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// `‖θ_pre‖_∞`: largest absolute weight or bias.
    pub fn r0(&self) -> f64 {
        let w = self.weights.iter().fold(0.0_f64, |m, w| m.max(w.max_abs()));
        self.biases.iter().flatten().fold(w, |m, b| m.max(b.abs()))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward_pretrained(self, x)
    }
}

pub(crate) fn check_input(arch: &Architecture, x: &[f64]) -> Result<()> {
    if x.len() != arch.input_dim() {
        return Err(Error::InvalidInput(format!(
            "input has length {}, expected {}",
            x.len(),
            arch.input_dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("input has non-finite entries".into()));
    }
    Ok(())
}

pub(crate) fn check_compatible(net: &PretrainedNet, adapter: &LoraAdapter) -> Result<()> {
    let (a, b) = (net.arch(), adapter.arch());
    if a.layer_dims() != b.layer_dims() {
        return Err(Error::InvalidInput(format!(
            "adapter layer schedule {:?} does not match network {:?}",
            b.layer_dims(),
            a.layer_dims()
        )));
    }
    Ok(())
}

/// Pre-activation of layer `t`: `(W x + B(A x)) + b`, or `W x + b` without an adapter.
pub(crate) fn pre_activation(
    net: &PretrainedNet,
    adapter: Option<&LoraAdapter>,
    t: usize,
    x: &[f64],
) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut z = net.weights[t].matvec(x).expect("shapes checked");
    let ax = adapter.map(|ad| {
        let ax = ad.factor_a(t).matvec(x).expect("shapes checked");
        let bax = ad.factor_b(t).matvec(&ax).expect("shapes checked");
        z.iter_mut().zip(&bax).for_each(|(zi, di)| *zi += di);
        ax
    });
    z.iter_mut()
        .zip(&net.biases[t])
        .for_each(|(zi, bi)| *zi += bi);
    (z, ax)
}

fn forward_impl(net: &PretrainedNet, adapter: Option<&LoraAdapter>, x: &[f64]) -> Vec<f64> {
    let act = net.arch.activation();
    let layers = net.arch.num_layers();
    let mut h = x.to_vec();
    for t in 0..layers {
        let (mut z, _) = pre_activation(net, adapter, t, &h);
        if t + 1 < layers {
            z.iter_mut().for_each(|v| *v = act.apply(*v));
        }
        h = z;
    }
    h
}

/// Evaluates the pre-trained MLP. The last layer is affine (no activation).
pub fn forward_pretrained(net: &PretrainedNet, x: &[f64]) -> Result<Vec<f64>> {
    check_input(&net.arch, x)?;
    Ok(forward_impl(net, None, x))
}

/// Evaluates the network with every weight replaced by `W + BA`.
///
/// The update is applied as `B(Ax)`, never materializing `BA`.
pub fn forward_lora(net: &PretrainedNet, adapter: &LoraAdapter, x: &[f64]) -> Result<Vec<f64>> {
    check_compatible(net, adapter)?;
    check_input(&net.arch, x)?;
    Ok(forward_impl(net, Some(adapter), x))
}
