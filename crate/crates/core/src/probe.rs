//! Linear evaluation on frozen representations and the supervised baseline.

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor};
use crate::contrastive::EpochRecord;
use crate::encoders::{EncoderConfig, EncoderError, EncoderModel};
use crate::graph::{Graph, GraphDataset, Task};
use crate::params::{self, Adam, CheckpointError, ParamSet};
use crate::seed::derive;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("selection is empty")]
    EmptySelection,
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    TrainingDiverged { epoch: usize },
    #[error("graph override has {got} graphs, dataset has {expected}")]
    OverrideMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

pub type Result<T> = std::result::Result<T, ProbeError>;

/// Mean cross-entropy of `logits` rows against `labels`, restricted to rows
/// where `mask` is true.
pub fn cross_entropy(tape: &mut Tape, logits: Tensor, labels: &[usize], mask: Option<&[bool]>) -> Result<Tensor> {
    let (n, k) = tape.shape(logits);
    if labels.len() != n {
        return Err(AutodiffError::ShapeMismatch {
            op: "cross_entropy",
            lhs: (n, k),
            rhs: (labels.len(), k),
        }
        .into());
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(ProbeError::LabelOutOfRange { label, classes: k });
    }
    let rows: Vec<usize> = match mask {
        Some(m) => (0..n).filter(|&i| m[i]).collect(),
        None => (0..n).collect(),
    };
    if rows.is_empty() {
        return Err(ProbeError::EmptySelection);
    }
    let sel = if rows.len() == n { logits } else { tape.row_index(logits, &rows)? };
    let sel_labels: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    let lsm = tape.log_softmax_rows(sel);
    let picked = tape.pick_per_row(lsm, &sel_labels)?;
    let m = tape.mean(picked);
    Ok(tape.neg(m))
}

/// Index of the row maximum, ties to the lowest index.
pub fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    params: ParamSet,
}

impl LinearProbe {
    pub fn new(dim: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        params.push("probe.weight", params::glorot(dim, classes, &mut rng));
        params.push("probe.bias", Array2::zeros((1, classes)));
        Self { params }
    }

    pub fn dim(&self) -> usize {
        self.params.values()[0].nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.params.values()[0].ncols()
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

    pub fn logits(&self, tape: &mut Tape, bound: &[Tensor], h: Tensor) -> Result<Tensor> {
        let z = tape.matmul(h, bound[0])?;
        Ok(tape.add_row(z, bound[1])?)
    }

    pub fn logits_array(&self, h: &Array2<f64>) -> Array2<f64> {
        h.dot(&self.params.values()[0]) + &self.params.values()[1]
    }

    pub fn predict(&self, h: &Array2<f64>) -> Vec<usize> {
        argmax_rows(&self.logits_array(h))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let cfg = serde_json::json!({"dim": self.dim(), "num_classes": self.num_classes()});
        params::save_checkpoint(path, "probe", cfg, &self.params)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (cfg, params) = params::load_checkpoint(path, "probe")?;
        let dim = cfg["dim"].as_u64().unwrap_or(0) as usize;
        let classes = cfg["num_classes"].as_u64().unwrap_or(0) as usize;
        let expected = Self::new(dim, classes, 0);
        crate::encoders::check_layout(&expected.params, &params)?;
        Ok(Self { params })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    #[serde(default = "default_probe_epochs")]
    pub epochs: usize,
    #[serde(default = "default_probe_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_probe_epochs() -> usize {
    300
}

fn default_probe_lr() -> f64 {
    1e-2
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: default_probe_epochs(),
            lr: default_probe_lr(),
            seed: 0,
        }
    }
}

/// Eval-mode representations of the dataset's items: node rows for node
/// tasks, one readout row per graph otherwise.
pub fn embeddings(encoder: &EncoderModel, dataset: &GraphDataset, graphs: Option<&[Graph]>) -> Result<Array2<f64>> {
    let graphs = match graphs {
        Some(gs) => {
            if gs.len() != dataset.graphs().len() {
                return Err(ProbeError::OverrideMismatch {
                    got: gs.len(),
                    expected: dataset.graphs().len(),
                });
            }
            gs
        }
        None => dataset.graphs(),
    };
    match dataset.task() {
        Task::NodeClassification => Ok(encoder.embed_nodes(&graphs[0])?),
        Task::GraphClassification => {
            let rows: Vec<Array2<f64>> = graphs.iter().map(|g| encoder.embed_graph(g)).collect::<std::result::Result<_, _>>()?;
            let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
            Ok(ndarray::concatenate(Axis(0), &views).expect("equal widths"))
        }
    }
}

/// Full-batch Adam on cached representations, restricted to `train` rows.
pub fn fit_probe(
    emb: &Array2<f64>,
    labels: &[usize],
    train: &[usize],
    num_classes: usize,
    cfg: &ProbeConfig,
) -> Result<LinearProbe> {
    if train.is_empty() {
        return Err(ProbeError::EmptySelection);
    }
    let x = emb.select(Axis(0), train);
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let mut probe = LinearProbe::new(emb.ncols(), num_classes, derive(cfg.seed, 0, "probe-init"));
    let mut opt = Adam::new(cfg.lr, &[&probe.params]);
    for epoch in 1..=cfg.epochs {
        let mut tape = Tape::new();
        let b = probe.params.bind(&mut tape, true)?;
        let xt = tape.constant(x.clone())?;
        let logits = probe.logits(&mut tape, &b, xt)?;
        let loss = cross_entropy(&mut tape, logits, &y, None)?;
        if !tape.scalar(loss).is_finite() {
            return Err(ProbeError::TrainingDiverged { epoch });
        }
        tape.backward(loss)?;
        let grads = ParamSet::grads(&tape, &b);
        opt.step(&mut [&mut probe.params], &grads);
    }
    Ok(probe)
}

/// Caches clean eval-mode representations and fits a probe on the train
/// split. The encoder is only read.
pub fn train_probe(encoder: &EncoderModel, dataset: &GraphDataset, cfg: &ProbeConfig) -> Result<LinearProbe> {
    let emb = embeddings(encoder, dataset, None)?;
    fit_probe(&emb, &dataset.labels(), &dataset.split().train, dataset.num_classes(), cfg)
}

/// Fraction of `split` items predicted correctly. With `graph_override` the
/// representations are recomputed on the supplied graphs.
pub fn accuracy(
    probe: &LinearProbe,
    encoder: &EncoderModel,
    dataset: &GraphDataset,
    split: &[usize],
    graph_override: Option<&[Graph]>,
) -> Result<f64> {
    if split.is_empty() {
        return Err(ProbeError::EmptySelection);
    }
    let emb = embeddings(encoder, dataset, graph_override)?;
    let pred = probe.predict(&emb);
    let labels = dataset.labels();
    let correct = split.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(correct as f64 / split.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedConfig {
    pub epochs: usize,
    pub lr: f64,
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch() -> usize {
    64
}

#[derive(Debug, Clone)]
pub struct SupervisedOutcome {
    pub encoder: EncoderModel,
    pub probe: LinearProbe,
    pub history: Vec<EpochRecord>,
}

/// End-to-end supervised training of encoder plus linear head with
/// cross-entropy on the train split (dropout active).
pub fn train_supervised(dataset: &GraphDataset, encoder_config: &EncoderConfig, cfg: &SupervisedConfig) -> Result<SupervisedOutcome> {
    let mut encoder = EncoderModel::new(encoder_config.clone(), dataset.feature_dim(), derive(cfg.seed, 0, "encoder-init"))?;
    let mut probe = LinearProbe::new(encoder.out_dim(), dataset.num_classes(), derive(cfg.seed, 0, "probe-init"));
    let mut opt = Adam::new(cfg.lr, &[encoder.params(), &probe.params]);
    let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, 0, "train"));
    let labels = dataset.labels();
    let train = &dataset.split().train;
    if train.is_empty() {
        return Err(ProbeError::EmptySelection);
    }
    let mut history = Vec::new();
    let (mut best, mut stale) = (f64::INFINITY, 0);
    for epoch in 1..=cfg.epochs {
        let start = std::time::Instant::now();
        let batches: Vec<Vec<usize>> = match dataset.task() {
            Task::NodeClassification => vec![train.clone()],
            Task::GraphClassification => {
                let mut order = train.clone();
                order.shuffle(&mut rng);
                order.chunks(cfg.batch_size.max(1)).map(<[usize]>::to_vec).collect()
            }
        };
        let mut total = 0.0;
        for batch in &batches {
            let mut drop = ChaCha8Rng::seed_from_u64(rng.random());
            let mut tape = Tape::new();
            let eb = encoder.params().bind(&mut tape, true)?;
            let pb = probe.params.bind(&mut tape, true)?;
            let (h, y) = match dataset.task() {
                Task::NodeClassification => {
                    let g = &dataset.graphs()[0];
                    let w = tape.constant(g.dense_adjacency())?;
                    let x = tape.constant(g.features().clone())?;
                    let h = encoder.encode(&mut tape, &eb, w, x, Some(&mut drop))?;
                    let h = tape.row_index(h, batch)?;
                    (h, batch.iter().map(|&i| labels[i]).collect::<Vec<_>>())
                }
                Task::GraphClassification => {
                    let mut rows = Vec::with_capacity(batch.len());
                    for &i in batch {
                        let g = &dataset.graphs()[i];
                        let w = tape.constant(g.dense_adjacency())?;
                        let x = tape.constant(g.features().clone())?;
                        let h = encoder.encode(&mut tape, &eb, w, x, Some(&mut drop))?;
                        rows.push(encoder.readout(&mut tape, h));
                    }
                    (tape.concat(&rows, Axis(0))?, batch.iter().map(|&i| labels[i]).collect())
                }
            };
            let logits = probe.logits(&mut tape, &pb, h)?;
            let loss = cross_entropy(&mut tape, logits, &y, None)?;
            let value = tape.scalar(loss);
            if !value.is_finite() {
                return Err(ProbeError::TrainingDiverged { epoch });
            }
            tape.backward(loss)?;
            let mut grads = ParamSet::grads(&tape, &eb);
            grads.extend(ParamSet::grads(&tape, &pb));
            opt.step(&mut [encoder.params_mut(), &mut probe.params], &grads);
            total += value;
        }
        let loss = total / batches.len() as f64;
        if !encoder.params().all_finite() || !probe.params.all_finite() {
            return Err(ProbeError::TrainingDiverged { epoch });
        }
        history.push(EpochRecord {
            epoch,
            loss,
            wall_ms: start.elapsed().as_millis() as u64,
        });
        if let Some(p) = cfg.patience {
            if loss < best {
                best = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= p {
                    break;
                }
            }
        }
    }
    Ok(SupervisedOutcome { encoder, probe, history })
}
