//! GCN and GIN encoders over dense (possibly relaxed) adjacency.

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor};
use crate::graph::Graph;
use crate::params::{self, CheckpointError, ParamSet};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

pub type Result<T> = std::result::Result<T, EncoderError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Gcn,
    Gin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Prelu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub num_layers: usize,
    pub hidden_dim: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_readout")]
    pub readout: Readout,
}

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_readout() -> Readout {
    Readout::Mean
}

impl EncoderConfig {
    pub fn new(kind: EncoderKind, num_layers: usize, hidden_dim: usize) -> Self {
        Self {
            kind,
            num_layers,
            hidden_dim,
            dropout: 0.0,
            activation: Activation::Relu,
            readout: Readout::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(EncoderError::InvalidConfig("num_layers must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(EncoderError::InvalidConfig("hidden_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(EncoderError::InvalidConfig(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    fn params_per_layer(&self) -> usize {
        let base = match self.kind {
            EncoderKind::Gcn => 2,
            EncoderKind::Gin => 4,
        };
        base + usize::from(self.activation == Activation::Prelu)
    }
}

/// Parameterized encoder `f_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    config: EncoderConfig,
    in_dim: usize,
    params: ParamSet,
}

#[derive(Serialize, Deserialize)]
struct StoredEncoder {
    encoder: EncoderConfig,
    in_dim: usize,
}

impl EncoderModel {
    pub fn new(config: EncoderConfig, in_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if in_dim == 0 {
            return Err(EncoderError::InvalidConfig("input dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_dim;
        let mut params = ParamSet::new();
        for l in 0..config.num_layers {
            let d = if l == 0 { in_dim } else { h };
            match config.kind {
                EncoderKind::Gcn => {
                    params.push(format!("layer{l}.weight"), params::glorot(d, h, &mut rng));
                    params.push(format!("layer{l}.bias"), Array2::zeros((1, h)));
                }
                EncoderKind::Gin => {
                    params.push(format!("layer{l}.mlp0.weight"), params::glorot(d, h, &mut rng));
                    params.push(format!("layer{l}.mlp0.bias"), Array2::zeros((1, h)));
                    params.push(format!("layer{l}.mlp1.weight"), params::glorot(h, h, &mut rng));
                    params.push(format!("layer{l}.mlp1.bias"), Array2::zeros((1, h)));
                }
            }
            if config.activation == Activation::Prelu {
                params.push(format!("layer{l}.alpha"), Array2::from_elem((1, h), 0.25));
            }
        }
        Ok(Self {
            config,
            in_dim,
            params,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.config.hidden_dim
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn checksum(&self) -> u64 {
        self.params.checksum()
    }

    /// Node representations `n×q` for adjacency `w` (`n×n`, symmetric) and
    /// features `x`. Dropout is applied only when `dropout_rng` is given.
    pub fn encode(
        &self,
        tape: &mut Tape,
        bound: &[Tensor],
        w: Tensor,
        x: Tensor,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor> {
        let (n, f) = tape.shape(x);
        if f != self.in_dim {
            return Err(AutodiffError::ShapeMismatch {
                op: "encode",
                lhs: (n, f),
                rhs: (n, self.in_dim),
            }
            .into());
        }
        if tape.shape(w) != (n, n) {
            return Err(AutodiffError::ShapeMismatch {
                op: "encode",
                lhs: tape.shape(w),
                rhs: (n, n),
            }
            .into());
        }
        let stride = self.config.params_per_layer();
        let inv_sqrt_deg = match self.config.kind {
            EncoderKind::Gcn => {
                let deg = tape.sum_axis(w, Axis(1));
                let deg = tape.add_scalar(deg, 1.0);
                Some(tape.powf(deg, -0.5))
            }
            EncoderKind::Gin => None,
        };
        let mut h = x;
        for l in 0..self.config.num_layers {
            let p = &bound[l * stride..(l + 1) * stride];
            if let Some(rng) = dropout_rng.as_deref_mut() {
                h = dropout(tape, h, self.config.dropout, rng)?;
            }
            let pre = match self.config.kind {
                EncoderKind::Gcn => {
                    let d = inv_sqrt_deg.expect("gcn degree");
                    let hw = tape.matmul(h, p[0])?;
                    let s = tape.scale_rows(hw, d)?;
                    let mp = tape.weighted_message_pass(w, s)?;
                    let agg = tape.add(mp, s)?;
                    let agg = tape.scale_rows(agg, d)?;
                    tape.add_row(agg, p[1])?
                }
                EncoderKind::Gin => {
                    let mp = tape.weighted_message_pass(w, h)?;
                    let agg = tape.add(h, mp)?;
                    let z = tape.matmul(agg, p[0])?;
                    let z = tape.add_row(z, p[1])?;
                    let z = tape.relu(z);
                    let z = tape.matmul(z, p[2])?;
                    tape.add_row(z, p[3])?
                }
            };
            h = match self.config.activation {
                Activation::Relu => tape.relu(pre),
                Activation::Prelu => tape.prelu(pre, p[stride - 1])?,
            };
        }
        Ok(h)
    }

    /// Graph representation `1×q` of node representations.
    pub fn readout(&self, tape: &mut Tape, h: Tensor) -> Tensor {
        readout(tape, h, self.config.readout)
    }

    /// Eval-mode node representations of a clean graph.
    pub fn embed_nodes(&self, g: &Graph) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape, false)?;
        let w = tape.constant(g.dense_adjacency())?;
        let x = tape.constant(g.features().clone())?;
        let h = self.encode(&mut tape, &bound, w, x, None)?;
        Ok(tape.value(h).clone())
    }

    /// Eval-mode graph representation (`1×q`).
    pub fn embed_graph(&self, g: &Graph) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape, false)?;
        let w = tape.constant(g.dense_adjacency())?;
        let x = tape.constant(g.features().clone())?;
        let h = self.encode(&mut tape, &bound, w, x, None)?;
        let r = self.readout(&mut tape, h);
        Ok(tape.value(r).clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let cfg = serde_json::to_value(StoredEncoder {
            encoder: self.config.clone(),
            in_dim: self.in_dim,
        })
        .expect("encoder config serializes");
        params::save_checkpoint(path, "encoder", cfg, &self.params)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (cfg, params) = params::load_checkpoint(path, "encoder")?;
        let stored: StoredEncoder = serde_json::from_value(cfg)
            .map_err(|e| CheckpointError::Inconsistent(e.to_string()))?;
        let mut model = Self::new(stored.encoder, stored.in_dim, 0)?;
        check_layout(&model.params, &params)?;
        model.params = params;
        Ok(model)
    }
}

pub(crate) fn check_layout(expected: &ParamSet, found: &ParamSet) -> std::result::Result<(), CheckpointError> {
    let ok = expected.len() == found.len()
        && expected
            .names()
            .iter()
            .zip(found.names())
            .zip(expected.values().iter().zip(found.values()))
            .all(|((a, b), (x, y))| a == b && x.dim() == y.dim());
    if ok {
        Ok(())
    } else {
        Err(CheckpointError::Inconsistent(
            "parameter names or shapes differ from the configuration".into(),
        ))
    }
}

/// Inverted dropout with a freshly drawn mask.
pub fn dropout(tape: &mut Tape, h: Tensor, p: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    if p <= 0.0 {
        return Ok(h);
    }
    let keep = 1.0 - p;
    let mask = Array2::from_shape_fn(tape.shape(h), |_| {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    });
    let m = tape.constant(mask)?;
    Ok(tape.mul(h, m)?)
}

/// `D̂^{-1/2}(W+I)D̂^{-1/2}` with `D̂` the row sums of `W+I`.
pub fn normalize_adjacency(tape: &mut Tape, w: Tensor) -> Result<Tensor> {
    let n = tape.shape(w).0;
    let eye = tape.constant(crate::autodiff::identity(n))?;
    let wi = tape.add(w, eye)?;
    let deg = tape.sum_axis(wi, Axis(1));
    let d = tape.powf(deg, -0.5);
    let rows = tape.scale_rows(wi, d)?;
    let t = tape.transpose(rows);
    let both = tape.scale_rows(t, d)?;
    Ok(tape.transpose(both))
}

pub fn readout(tape: &mut Tape, h: Tensor, kind: Readout) -> Tensor {
    match kind {
        Readout::Mean => tape.mean_axis(h, Axis(0)),
        Readout::Sum => tape.sum_axis(h, Axis(0)),
    }
}

/// `sigmoid(mean of rows)`.
pub fn dgi_summary(tape: &mut Tape, h: Tensor) -> Tensor {
    let m = tape.mean_axis(h, Axis(0));
    tape.sigmoid(m)
}
