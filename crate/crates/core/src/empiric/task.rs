use serde::{Deserialize, Serialize};

use super::LabeledSample;
use crate::netcore::{forward_lora, init_adapter, Architecture, LoraAdapter, PretrainedNet};
use crate::numkit::RngState;
use crate::{Error, Result};

/// Distribution of the inputs on `[0, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLaw {
    #[default]
    UniformCube,
    /// Independent fair `{0, 1}` coordinates.
    BernoulliCoordinates,
}

/// Teacher–student regression task.
///
/// The teacher is the pre-trained network perturbed by a hidden target adapter;
/// labels carry additive Gaussian noise. Students fine-tune the same
/// pre-trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub net: PretrainedNet,
    pub target: LoraAdapter,
    pub noise_std: f64,
    pub input_law: InputLaw,
}

/// Parameters of [`SyntheticTask::teacher_student`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    /// Architecture of the pre-trained net; its rank is the teacher's adapter rank.
    pub arch: Architecture,
    #[serde(default = "one")]
    pub weight_scale: f64,
    #[serde(default)]
    pub bias_scale: f64,
    /// Box of the uniformly drawn target factor.
    #[serde(default = "one")]
    pub target_box: f64,
    #[serde(default = "one")]
    pub target_nu: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub input_law: InputLaw,
}

fn one() -> f64 {
    1.0
}

impl TaskSpec {
    pub fn new(arch: Architecture) -> Self {
        TaskSpec {
            arch,
            weight_scale: 1.0,
            bias_scale: 0.0,
            target_box: 1.0,
            target_nu: 1.0,
            noise_std: 0.0,
            input_law: InputLaw::UniformCube,
        }
    }
}

impl SyntheticTask {
    pub fn new(
        net: PretrainedNet,
        target: LoraAdapter,
        noise_std: f64,
        input_law: InputLaw,
    ) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::param(
                "noise_std",
                format!("must be >= 0, got {noise_std}"),
            ));
        }
        if net.arch().layer_dims() != target.arch().layer_dims() {
            return Err(Error::InvalidInput(
                "target adapter does not match the network".into(),
            ));
        }
        Ok(SyntheticTask {
            net,
            target,
            noise_std,
            input_law,
        })
    }

    /// Random pre-trained net plus a target adapter with trainable entries
    /// uniform in `[-target_box, target_box]`.
    pub fn teacher_student(spec: &TaskSpec, rng: &mut RngState) -> Result<Self> {
        let net = PretrainedNet::random(spec.arch, rng, spec.weight_scale, spec.bias_scale)?;
        let target = init_adapter(rng, &spec.arch, spec.target_nu, spec.target_box)?
            .with_uniform_trainable(rng);
        SyntheticTask::new(net, target, spec.noise_std, spec.input_law)
    }

    /// Noise-free teacher output.
    pub fn teacher(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward_lora(&self.net, &self.target, x)
    }

    pub fn sample_input(&self, rng: &mut RngState) -> Vec<f64> {
        let d = self.net.arch().input_dim();
        match self.input_law {
            InputLaw::UniformCube => (0..d).map(|_| rng.uniform()).collect(),
            InputLaw::BernoulliCoordinates => (0..d)
                .map(|_| if rng.fair_coin() { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn sample(&self, rng: &mut RngState, n: usize) -> Result<Vec<LabeledSample>> {
        (0..n)
            .map(|_| {
                let x = self.sample_input(rng);
                let mut y = self.teacher(&x)?;
                if self.noise_std > 0.0 {
                    y.iter_mut()
                        .for_each(|v| *v += self.noise_std * rng.standard_normal());
                }
                Ok(LabeledSample { x, y })
            })
            .collect()
    }
}
