use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::Result;
use crate::autodiff::{Tape, Tensor};
use crate::params::{glorot, ParamSet};

/// Two-layer perceptron `relu(x·W0 + b0)·W1 + b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub params: ParamSet,
}

impl Mlp {
    pub fn new(prefix: &str, input: usize, hidden: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut params = ParamSet::new();
        params.push(format!("{prefix}.mlp0.weight"), glorot(input, hidden, rng));
        params.push(format!("{prefix}.mlp0.bias"), Array2::zeros((1, hidden)));
        params.push(format!("{prefix}.mlp1.weight"), glorot(hidden, output, rng));
        params.push(format!("{prefix}.mlp1.bias"), Array2::zeros((1, output)));
        Self { params }
    }

    pub fn forward(tape: &mut Tape, bound: &[Tensor], x: Tensor) -> Result<Tensor> {
        let h = tape.matmul(x, bound[0])?;
        let h = tape.add_row(h, bound[1])?;
        let h = tape.relu(h);
        let o = tape.matmul(h, bound[2])?;
        Ok(tape.add_row(o, bound[3])?)
    }
}

/// MLP discriminator on `concat(patch, summary)`. The first layer is stored
/// as its patch and summary halves so that all pairs can be scored without
/// materializing the concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDiscriminator {
    pub params: ParamSet,
}

impl PairDiscriminator {
    pub fn new(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // Glorot bounds of the full (2q × q) first layer.
        let full = glorot(2 * dim, dim, rng);
        let mut params = ParamSet::new();
        params.push("disc.patch.weight", full.slice(ndarray::s![..dim, ..]).to_owned());
        params.push("disc.summary.weight", full.slice(ndarray::s![dim.., ..]).to_owned());
        params.push("disc.mlp0.bias", Array2::zeros((1, dim)));
        params.push("disc.mlp1.weight", glorot(dim, 1, rng));
        params.push("disc.mlp1.bias", Array2::zeros((1, 1)));
        Self { params }
    }

    /// Scores every (patch, summary) pair: output is `N×B`.
    pub fn score_all(tape: &mut Tape, bound: &[Tensor], patches: Tensor, summaries: Tensor) -> Result<Tensor> {
        let p = tape.matmul(patches, bound[0])?;
        let s = tape.matmul(summaries, bound[1])?;
        let s = tape.add_row(s, bound[2])?;
        let b = tape.shape(summaries).0;
        let mut cols = Vec::with_capacity(b);
        for j in 0..b {
            let sj = tape.row_index(s, &[j])?;
            let h = tape.add_row(p, sj)?;
            let h = tape.relu(h);
            let o = tape.matmul(h, bound[3])?;
            cols.push(tape.add_row(o, bound[4])?);
        }
        Ok(tape.concat(&cols, ndarray::Axis(1))?)
    }
}
