use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::{Error, Result};

/// Seeded, splittable random source.
///
/// Backed by the counter-based ChaCha8 generator: the 64-bit `seed` selects the
/// key and `stream` selects an independent keystream. Identical `(seed, stream)`
/// pairs yield bit-identical sequences. Parallel work derives child streams with
/// [`RngState::split`] instead of sharing one generator.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngState {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child generator whose stream is a hash of this stream and `key`.
    ///
    /// Depends only on `(seed, stream, key)`, never on how many values have
    /// already been drawn from `self`.
    pub fn split(&self, key: u64) -> RngState {
        let stream =
            splitmix64(splitmix64(self.stream) ^ splitmix64(key.wrapping_add(0x5851_F42D)));
        RngState::with_stream(self.seed, stream)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fair_coin(&mut self) -> bool {
        self.inner.next_u32() & 1 == 1
    }

    /// Uniform random sign in `{-1, +1}`.
    pub fn rademacher(&mut self) -> f64 {
        if self.fair_coin() {
            1.0
        } else {
            -1.0
        }
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `rows × cols` matrix with i.i.d. `N(0, scale²)` entries.
pub fn sample_gaussian(rng: &mut RngState, rows: usize, cols: usize, scale: f64) -> Result<Matrix> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::param(
            "scale",
            format!("must be a positive finite number, got {scale}"),
        ));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let data = (0..rows * cols)
        .map(|_| scale * rng.standard_normal())
        .collect();
    Matrix::new(rows, cols, data)
}
