use crate::empiric::LabeledSample;
use crate::numkit::RngState;

/// Data law of the lower bound: `X` a fair coin on `{0, 1}` and `Y = 0`.
#[derive(Debug, Clone)]
pub struct BernoulliSource {
    rng: RngState,
}

impl BernoulliSource {
    pub fn new(rng: RngState) -> Self {
        BernoulliSource { rng }
    }

    pub fn p(&self) -> f64 {
        0.5
    }

    pub fn sample(&mut self) -> LabeledSample {
        let x = if self.rng.fair_coin() { 1.0 } else { 0.0 };
        LabeledSample {
            x: vec![x],
            y: vec![0.0],
        }
    }

    pub fn sample_n(&mut self, n: usize) -> Vec<LabeledSample> {
        (0..n).map(|_| self.sample()).collect()
    }
}

/// `n` draws of `(X, 0)` with `X` a fair coin.
pub fn sample_assumption_dist(rng: &mut RngState, n: usize) -> Vec<LabeledSample> {
    (0..n)
        .map(|_| LabeledSample {
            x: vec![if rng.fair_coin() { 1.0 } else { 0.0 }],
            y: vec![0.0],
        })
        .collect()
}

/// Number of ones among `n` fair coins, 64 at a time.
pub(crate) fn count_heads(rng: &mut RngState, n: usize) -> u64 {
    use rand::RngCore;
    let mut heads = 0u64;
    let mut left = n;
    while left >= 64 {
        heads += u64::from(rng.next_u64().count_ones());
        left -= 64;
    }
    if left > 0 {
        let mask = (1u64 << left) - 1;
        heads += u64::from((rng.next_u64() & mask).count_ones());
    }
    heads
}
