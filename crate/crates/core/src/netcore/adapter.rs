use serde::{Deserialize, Serialize};

use super::Architecture;
use crate::numkit::{sample_gaussian, Matrix, RngState};
use crate::{Error, Result};

/// Which LoRA factor is trained; the other one stays at its random draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainedFactor {
    /// Train the input-side factor `A` (`r × d_t`); `B` is frozen Gaussian.
    #[default]
    A,
    /// Role swap: train `B` (`d_{t+1} × r`); `A` is frozen Gaussian.
    B,
}

/// Asymmetric LoRA adapter: per layer `ΔW = B A` with one factor frozen.
///
/// Entries of the trainable factor always lie in `[-box_bound, box_bound]`.
/// The frozen factor cannot be changed after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAdapter", into = "RawAdapter")]
pub struct LoraAdapter {
    arch: Architecture,
    trained: TrainedFactor,
    b: Vec<Matrix>,
    a: Vec<Matrix>,
    box_bound: f64,
    init_scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdapter {
    arch: Architecture,
    #[serde(default)]
    trained: TrainedFactor,
    b: Vec<Matrix>,
    a: Vec<Matrix>,
    box_bound: f64,
    init_scale: f64,
}

impl TryFrom<RawAdapter> for LoraAdapter {
    type Error = Error;

    fn try_from(raw: RawAdapter) -> Result<Self> {
        LoraAdapter::from_parts(
            raw.arch,
            raw.trained,
            raw.b,
            raw.a,
            raw.box_bound,
            raw.init_scale,
        )
    }
}

impl From<LoraAdapter> for RawAdapter {
    fn from(l: LoraAdapter) -> Self {
        RawAdapter {
            arch: l.arch,
            trained: l.trained,
            b: l.b,
            a: l.a,
            box_bound: l.box_bound,
            init_scale: l.init_scale,
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

impl LoraAdapter {
    pub fn from_parts(
        arch: Architecture,
        trained: TrainedFactor,
        b: Vec<Matrix>,
        a: Vec<Matrix>,
        box_bound: f64,
        init_scale: f64,
    ) -> Result<Self> {
        check_positive("box_bound", box_bound)?;
        check_positive("init_scale", init_scale)?;
        let dims = arch.layer_dims();
        let r = arch.rank();
        let layers = arch.num_layers();
        if a.len() != layers || b.len() != layers {
            return Err(Error::InvalidInput(format!(
                "expected {layers} factor pairs, got {} B and {} A",
                b.len(),
                a.len()
            )));
        }
        for t in 0..layers {
            if b[t].shape() != (dims[t + 1], r) || a[t].shape() != (r, dims[t]) {
                return Err(Error::InvalidInput(format!(
                    "layer {t}: factors have shapes {:?} and {:?}, expected {:?} and {:?}",
                    b[t].shape(),
                    a[t].shape(),
                    (dims[t + 1], r),
                    (r, dims[t])
                )));
            }
        }
        let adapter = LoraAdapter {
            arch,
            trained,
            b,
            a,
            box_bound,
            init_scale,
        };
        let worst = adapter
            .trainable()
            .iter()
            .fold(0.0_f64, |m, f| m.max(f.max_abs()));
        if worst > box_bound {
            return Err(Error::InvalidInput(format!(
                "trainable entry of magnitude {worst} exceeds box bound {box_bound}"
            )));
        }
        Ok(adapter)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn trained_factor(&self) -> TrainedFactor {
        self.trained
    }

    pub fn box_bound(&self) -> f64 {
        self.box_bound
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale
    }

    pub fn factor_a(&self, t: usize) -> &Matrix {
        &self.a[t]
    }

    pub fn factor_b(&self, t: usize) -> &Matrix {
        &self.b[t]
    }

    pub fn factors_a(&self) -> &[Matrix] {
        &self.a
    }

    pub fn factors_b(&self) -> &[Matrix] {
        &self.b
    }

    pub fn trainable(&self) -> &[Matrix] {
        match self.trained {
            TrainedFactor::A => &self.a,
            TrainedFactor::B => &self.b,
        }
    }

    pub fn frozen(&self) -> &[Matrix] {
        match self.trained {
            TrainedFactor::A => &self.b,
            TrainedFactor::B => &self.a,
        }
    }

    pub(crate) fn trainable_mut(&mut self) -> &mut [Matrix] {
        match self.trained {
            TrainedFactor::A => &mut self.a,
            TrainedFactor::B => &mut self.b,
        }
    }

    /// Number of trainable scalars.
    pub fn num_trainable(&self) -> usize {
        self.trainable().iter().map(|m| m.rows() * m.cols()).sum()
    }

    /// Replaces the trainable factor of layer `t`; rejects wrong shapes and
    /// out-of-box entries.
    pub fn set_trainable(&mut self, t: usize, value: Matrix) -> Result<()> {
        let len = self.arch.num_layers();
        if t >= len {
            return Err(Error::IndexOutOfRange { index: t, len });
        }
        let current = &self.trainable()[t];
        if current.shape() != value.shape() {
            return Err(Error::InvalidInput(format!(
                "trainable factor of layer {t} has shape {:?}, got {:?}",
                current.shape(),
                value.shape()
            )));
        }
        if value.max_abs() > self.box_bound {
            return Err(Error::InvalidInput(format!(
                "entry of magnitude {} exceeds box bound {}",
                value.max_abs(),
                self.box_bound
            )));
        }
        self.trainable_mut()[t] = value;
        Ok(())
    }

    /// Clamps every trainable entry into `[-M, M]`.
    pub(crate) fn project(&mut self) {
        let m = self.box_bound;
        for f in self.trainable_mut() {
            f.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = v.clamp(-m, m));
        }
    }

    /// Copy with a new box bound; trainable entries are projected into it.
    pub fn with_box_bound(&self, box_bound: f64) -> Result<LoraAdapter> {
        check_positive("box_bound", box_bound)?;
        let mut out = self.clone();
        out.box_bound = box_bound;
        out.project();
        Ok(out)
    }

    /// Copy whose trainable factor is all zeros (so `ΔW = 0`).
    pub fn zeroed(&self) -> LoraAdapter {
        let mut out = self.clone();
        for f in out.trainable_mut() {
            f.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    /// Copy with trainable entries drawn uniformly from the box `[-M, M]`.
    pub fn with_uniform_trainable(&self, rng: &mut RngState) -> LoraAdapter {
        let m = self.box_bound;
        let mut out = self.clone();
        for f in out.trainable_mut() {
            f.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = rng.uniform_range(-m, m));
        }
        out
    }

    /// Order-sensitive 64-bit fingerprint of the frozen factor's bit patterns.
    pub fn frozen_checksum(&self) -> u64 {
        // FNV-1a over the raw bits
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for m in self.frozen() {
            for v in m.as_slice() {
                for byte in v.to_bits().to_le_bytes() {
                    h ^= u64::from(byte);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// Fresh adapter with Gaussian frozen `B ~ N(0, ν²)` and `A = 0`.
pub fn init_adapter(
    rng: &mut RngState,
    arch: &Architecture,
    nu: f64,
    box_bound: f64,
) -> Result<LoraAdapter> {
    init_adapter_with_role(rng, arch, nu, box_bound, TrainedFactor::A)
}

/// Like [`init_adapter`], choosing which factor is trained. The frozen factor is
/// Gaussian with scale `ν`; the trainable one starts at zero.
pub fn init_adapter_with_role(
    rng: &mut RngState,
    arch: &Architecture,
    nu: f64,
    box_bound: f64,
    trained: TrainedFactor,
) -> Result<LoraAdapter> {
    check_positive("nu", nu)?;
    check_positive("box_bound", box_bound)?;
    let dims = arch.layer_dims();
    let r = arch.rank();
    let mut a = Vec::with_capacity(arch.num_layers());
    let mut b = Vec::with_capacity(arch.num_layers());
    for pair in dims.windows(2) {
        let (din, dout) = (pair[0], pair[1]);
        match trained {
            TrainedFactor::A => {
                b.push(sample_gaussian(rng, dout, r, nu)?);
                a.push(Matrix::zeros(r, din));
            }
            TrainedFactor::B => {
                a.push(sample_gaussian(rng, r, din, nu)?);
                b.push(Matrix::zeros(dout, r));
            }
        }
    }
    LoraAdapter::from_parts(*arch, trained, b, a, box_bound, nu)
}

/// `B⁽ᵗ⁾A⁽ᵗ⁾` as a dense matrix (0-based layer index).
pub fn materialize_delta(adapter: &LoraAdapter, t: usize) -> Result<Matrix> {
    let len = adapter.arch.num_layers();
    if t >= len {
        return Err(Error::IndexOutOfRange { index: t, len });
    }
    adapter.b[t].matmul(&adapter.a[t])
}
