use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hidden-layer nonlinearity.
///
/// `Tanh` stands in for the bounded Lipschitz family (Lipschitz constant 1,
/// bound 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative; the ReLU subgradient at 0 is taken as 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }

    /// Uniform bound on the output, if any.
    pub fn bound(self) -> Option<f64> {
        match self {
            Activation::Relu => None,
            Activation::Tanh => Some(1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

/// Network and adapter dimensions.
///
/// Layer widths follow `d, W, …, W, D` with `depth` hidden layers, so there
/// are `depth + 1` weight matrices. The adapter rank satisfies `1 ≤ rank < width`
/// unless the architecture was built with
/// [`Architecture::with_full_rank_adapters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawArchitecture", into = "RawArchitecture")]
pub struct Architecture {
    input_dim: usize,
    output_dim: usize,
    depth: usize,
    width: usize,
    rank: usize,
    activation: Activation,
    full_rank: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArchitecture {
    input_dim: usize,
    output_dim: usize,
    depth: usize,
    width: usize,
    rank: usize,
    activation: Activation,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    full_rank: bool,
}

impl TryFrom<RawArchitecture> for Architecture {
    type Error = Error;

    fn try_from(raw: RawArchitecture) -> Result<Self> {
        Architecture::build(
            raw.input_dim,
            raw.output_dim,
            raw.depth,
            raw.width,
            raw.rank,
            raw.activation,
            raw.full_rank,
        )
    }
}

impl From<Architecture> for RawArchitecture {
    fn from(a: Architecture) -> Self {
        RawArchitecture {
            input_dim: a.input_dim,
            output_dim: a.output_dim,
            depth: a.depth,
            width: a.width,
            rank: a.rank,
            activation: a.activation,
            full_rank: a.full_rank,
        }
    }
}

impl Architecture {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        depth: usize,
        width: usize,
        rank: usize,
        activation: Activation,
    ) -> Result<Self> {
        Self::build(input_dim, output_dim, depth, width, rank, activation, false)
    }

    /// Same as [`Architecture::new`] but admits `rank == width`.
    ///
    /// Only meant for construction tests where square frozen factors are
    /// needed; the generalization bound assumes `rank < width`.
    pub fn with_full_rank_adapters(
        input_dim: usize,
        output_dim: usize,
        depth: usize,
        width: usize,
        rank: usize,
        activation: Activation,
    ) -> Result<Self> {
        Self::build(input_dim, output_dim, depth, width, rank, activation, true)
    }

    fn build(
        input_dim: usize,
        output_dim: usize,
        depth: usize,
        width: usize,
        rank: usize,
        activation: Activation,
        full_rank: bool,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || depth == 0 || width == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "dimensions must be positive (d={input_dim}, D={output_dim}, T={depth}, W={width})"
            )));
        }
        let rank_ok = if full_rank {
            rank >= 1 && rank <= width
        } else {
            rank >= 1 && rank < width
        };
        if !rank_ok {
            let rel = if full_rank { "<=" } else { "<" };
            return Err(Error::InvalidArchitecture(format!(
                "rank must satisfy 1 <= r {rel} W, got r={rank}, W={width}"
            )));
        }
        Ok(Architecture {
            input_dim,
            output_dim,
            depth,
            width,
            rank,
            activation,
            full_rank,
        })
    }

    /// Copy with a different adapter rank.
    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        Self::build(
            self.input_dim,
            self.output_dim,
            self.depth,
            self.width,
            rank,
            self.activation,
            self.full_rank,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn allows_full_rank(&self) -> bool {
        self.full_rank
    }

    /// Number of weight matrices, `depth + 1`.
    pub fn num_layers(&self) -> usize {
        self.depth + 1
    }

    /// `[d, W, …, W, D]`, length `depth + 2`. Layer `t` maps `dims[t]` to `dims[t + 1]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.depth + 2);
        dims.push(self.input_dim);
        dims.extend(std::iter::repeat_n(self.width, self.depth));
        dims.push(self.output_dim);
        dims
    }
}

/// Parameter counts: the closed-form expressions used by the bound next to
/// the counts obtained by enumerating tensor shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    /// `W(TW − W + T + d + D + 1)`.
    pub p_formula: u64,
    /// Sum of weight and bias sizes.
    pub p_exact: u64,
    /// `r(W(T − 1) + d + D)`, the count entering the bound.
    pub q_formula: u64,
    /// `r(d + TW)`: entries of every trainable `A` factor.
    pub q_exact: u64,
}

pub fn count_params(arch: &Architecture) -> ParamCounts {
    let (d, dd, t, w, r) = (
        arch.input_dim as u64,
        arch.output_dim as u64,
        arch.depth as u64,
        arch.width as u64,
        arch.rank as u64,
    );
    let dims = arch.layer_dims();
    let p_exact = dims
        .windows(2)
        .map(|pair| (pair[1] * pair[0] + pair[1]) as u64)
        .sum();
    let q_exact = dims[..dims.len() - 1]
        .iter()
        .map(|&din| r * din as u64)
        .sum();
    ParamCounts {
        p_formula: w * (t * w - w + t + d + dd + 1),
        p_exact,
        q_formula: r * (w * (t - 1) + d + dd),
        q_exact,
    }
}
