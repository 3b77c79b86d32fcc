use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::heads::{Mlp, PairDiscriminator};
use super::losses::{dgi_loss, info_nce, infograph_loss};
use super::{ContrastiveError, Result};
use crate::augment::{
    augment, augment_chain, learned_edge_drop_sample, AugmentKind, AugmentSpec, LearnedAugmenter,
};
use crate::autodiff::{Tape, Tensor};
use crate::encoders::{dgi_summary, EncoderConfig, EncoderModel};
use crate::graph::{Graph, GraphDataset, Task};
use crate::params::{glorot, Adam, ParamSet};
use crate::seed::derive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Dgi,
    InfoGraph,
    GraphCl,
    Gca,
    AdGcl,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Dgi => "DGI",
            ObjectiveKind::InfoGraph => "InfoGraph",
            ObjectiveKind::GraphCl => "GraphCL",
            ObjectiveKind::Gca => "GCA",
            ObjectiveKind::AdGcl => "AD-GCL",
        }
    }

    pub fn supports(self, task: Task) -> bool {
        match self {
            ObjectiveKind::Dgi | ObjectiveKind::Gca => task == Task::NodeClassification,
            ObjectiveKind::InfoGraph | ObjectiveKind::AdGcl => task == Task::GraphClassification,
            ObjectiveKind::GraphCl => true,
        }
    }
}

/// Objective hyperparameters. Views are sequences of augmentations applied
/// in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub view1: Vec<AugmentSpec>,
    #[serde(default)]
    pub view2: Vec<AugmentSpec>,
    #[serde(default = "default_temperature")]
    pub augmenter_temperature: f64,
}

fn default_tau() -> f64 {
    0.5
}

fn default_lambda() -> f64 {
    5.0
}

fn default_temperature() -> f64 {
    1.0
}

impl Objective {
    pub fn new(kind: ObjectiveKind) -> Self {
        let spec = |k, s| AugmentSpec::new(k, s);
        let (view1, view2) = match kind {
            ObjectiveKind::GraphCl => (
                vec![spec(AugmentKind::NodeDrop, 0.2)],
                vec![spec(AugmentKind::AttrMask, 0.2)],
            ),
            ObjectiveKind::Gca => (
                vec![spec(AugmentKind::AdaptiveEdgeDrop, 0.2), spec(AugmentKind::AdaptiveAttrMask, 0.3)],
                vec![spec(AugmentKind::AdaptiveEdgeDrop, 0.4), spec(AugmentKind::AdaptiveAttrMask, 0.4)],
            ),
            _ => (Vec::new(), Vec::new()),
        };
        Self {
            kind,
            tau: default_tau(),
            lambda: default_lambda(),
            view1,
            view2,
            augmenter_temperature: default_temperature(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(ContrastiveError::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.lambda >= 0.0) {
            return Err(ContrastiveError::InvalidConfig(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if matches!(self.kind, ObjectiveKind::GraphCl | ObjectiveKind::Gca)
            && (self.view1.is_empty() || self.view2.is_empty())
        {
            return Err(ContrastiveError::InvalidConfig("two-view objectives need both views".into()));
        }
        for s in self.view1.iter().chain(&self.view2) {
            s.validate()?;
            if s.kind == AugmentKind::LearnedEdgeDrop {
                return Err(ContrastiveError::InvalidConfig(
                    "learned_edge_drop is only available to AD-GCL".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub encoder: EncoderModel,
    pub history: Vec<EpochRecord>,
}

pub fn write_loss_log(path: &Path, history: &[EpochRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in history {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Encodes `g` with adjacency `w` (defaults to the clean adjacency).
fn encode_graph(
    enc: &EncoderModel,
    tape: &mut Tape,
    eb: &[Tensor],
    g: &Graph,
    w: Option<Tensor>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor> {
    let w = match w {
        Some(w) => w,
        None => tape.constant(g.dense_adjacency())?,
    };
    let x = tape.constant(g.features().clone())?;
    Ok(enc.encode(tape, eb, w, x, rng)?)
}

fn stack_readouts(enc: &EncoderModel, tape: &mut Tape, hs: &[Tensor]) -> Result<Tensor> {
    let rs: Vec<Tensor> = hs.iter().map(|&h| enc.readout(tape, h)).collect();
    Ok(tape.concat(&rs, Axis(0))?)
}

/// AD-GCL terms for a batch: InfoNCE between the anchor graphs and their
/// views reweighted by `keep` (per-graph `m×1` keep weights, `None` for
/// edgeless graphs), and the mean keep weight over all edges.
#[allow(clippy::too_many_arguments)]
pub fn adgcl_losses(
    tape: &mut Tape,
    encoder: &EncoderModel,
    eb: &[Tensor],
    projector: &[Tensor],
    graphs: &[&Graph],
    keep: &[Option<Tensor>],
    tau: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor, Option<Tensor>)> {
    let mut anchors = Vec::with_capacity(graphs.len());
    let mut views = Vec::with_capacity(graphs.len());
    for (g, k) in graphs.iter().zip(keep) {
        anchors.push(encode_graph(encoder, tape, eb, g, None, rng.as_deref_mut())?);
        let w = match k {
            Some(p) => tape.scatter_symmetric(*p, g.edges(), g.num_nodes())?,
            None => tape.constant(Array2::zeros((g.num_nodes(), g.num_nodes())))?,
        };
        views.push(encode_graph(encoder, tape, eb, g, Some(w), rng.as_deref_mut())?);
    }
    let a = stack_readouts(encoder, tape, &anchors)?;
    let v = stack_readouts(encoder, tape, &views)?;
    let za = Mlp::forward(tape, projector, a)?;
    let zv = Mlp::forward(tape, projector, v)?;
    let nce = info_nce(tape, za, zv, tau)?;
    let present: Vec<Tensor> = keep.iter().flatten().copied().collect();
    let mean_keep = if present.is_empty() {
        None
    } else {
        let all = tape.concat(&present, Axis(0))?;
        Some(tape.mean(all))
    };
    Ok((nce, mean_keep))
}

struct Trainer<'a> {
    encoder: EncoderModel,
    heads: ParamSet,
    augmenter: Option<LearnedAugmenter>,
    opt: Adam,
    aug_opt: Option<Adam>,
    objective: &'a Objective,
    rng: ChaCha8Rng,
}

impl Trainer<'_> {
    fn fresh_rng(&mut self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng.random())
    }

    fn apply(&mut self, tape: &mut Tape, loss: Tensor, eb: &[Tensor], hb: &[Tensor]) -> Result<f64> {
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Ok(value);
        }
        tape.backward(loss)?;
        let mut grads = ParamSet::grads(tape, eb);
        grads.extend(ParamSet::grads(tape, hb));
        self.opt.step(&mut [self.encoder.params_mut(), &mut self.heads], &grads);
        Ok(value)
    }

    fn bind(&self, tape: &mut Tape) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
        Ok((self.encoder.params().bind(tape, true)?, self.heads.bind(tape, true)?))
    }

    fn dgi_step(&mut self, g: &Graph) -> Result<f64> {
        let corrupt_seed = self.rng.random();
        let mut drop = self.fresh_rng();
        let corrupted = augment(g, &AugmentSpec::new(AugmentKind::FeatureShuffle, 1.0).with_seed(corrupt_seed))?;
        let mut tape = Tape::new();
        let (eb, hb) = self.bind(&mut tape)?;
        let w = tape.constant(g.dense_adjacency())?;
        let h = encode_graph(&self.encoder, &mut tape, &eb, g, Some(w), Some(&mut drop))?;
        let hc = encode_graph(&self.encoder, &mut tape, &eb, &corrupted, Some(w), Some(&mut drop))?;
        let s = dgi_summary(&mut tape, h);
        let loss = dgi_loss(&mut tape, h, hc, s, hb[0])?;
        self.apply(&mut tape, loss, &eb, &hb)
    }

    fn node_two_view_step(&mut self, g: &Graph, batch_size: usize) -> Result<f64> {
        let (s1, s2) = (self.rng.random(), self.rng.random());
        let (v1, m1) = augment_chain(g, &self.objective.view1, s1)?;
        let (v2, m2) = augment_chain(g, &self.objective.view2, s2)?;
        let mut pos2 = vec![usize::MAX; g.num_nodes()];
        for (k, &o) in m2.iter().enumerate() {
            pos2[o] = k;
        }
        let mut pairs: Vec<(usize, usize)> = m1
            .iter()
            .enumerate()
            .filter(|(_, &o)| pos2[o] != usize::MAX)
            .map(|(k, &o)| (k, pos2[o]))
            .collect();
        if pairs.len() > batch_size {
            let mut pick = index::sample(&mut self.rng, pairs.len(), batch_size).into_vec();
            pick.sort_unstable();
            pairs = pick.into_iter().map(|i| pairs[i]).collect();
        }
        if pairs.len() < 2 {
            return Err(ContrastiveError::NeedNegatives(pairs.len()));
        }
        let idx1: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let idx2: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let mut drop = self.fresh_rng();
        let mut tape = Tape::new();
        let (eb, hb) = self.bind(&mut tape)?;
        let h1 = encode_graph(&self.encoder, &mut tape, &eb, &v1, None, Some(&mut drop))?;
        let h2 = encode_graph(&self.encoder, &mut tape, &eb, &v2, None, Some(&mut drop))?;
        let h1 = tape.row_index(h1, &idx1)?;
        let h2 = tape.row_index(h2, &idx2)?;
        let z1 = Mlp::forward(&mut tape, &hb, h1)?;
        let z2 = Mlp::forward(&mut tape, &hb, h2)?;
        let loss = info_nce(&mut tape, z1, z2, self.objective.tau)?;
        self.apply(&mut tape, loss, &eb, &hb)
    }

    fn graph_two_view_step(&mut self, batch: &[&Graph]) -> Result<f64> {
        let mut views = Vec::with_capacity(batch.len());
        for g in batch {
            let (s1, s2) = (self.rng.random(), self.rng.random());
            views.push((
                augment_chain(g, &self.objective.view1, s1)?.0,
                augment_chain(g, &self.objective.view2, s2)?.0,
            ));
        }
        let mut drop = self.fresh_rng();
        let mut tape = Tape::new();
        let (eb, hb) = self.bind(&mut tape)?;
        let mut h1 = Vec::new();
        let mut h2 = Vec::new();
        for (a, b) in &views {
            h1.push(encode_graph(&self.encoder, &mut tape, &eb, a, None, Some(&mut drop))?);
            h2.push(encode_graph(&self.encoder, &mut tape, &eb, b, None, Some(&mut drop))?);
        }
        let r1 = stack_readouts(&self.encoder, &mut tape, &h1)?;
        let r2 = stack_readouts(&self.encoder, &mut tape, &h2)?;
        let z1 = Mlp::forward(&mut tape, &hb, r1)?;
        let z2 = Mlp::forward(&mut tape, &hb, r2)?;
        let loss = info_nce(&mut tape, z1, z2, self.objective.tau)?;
        self.apply(&mut tape, loss, &eb, &hb)
    }

    fn infograph_step(&mut self, batch: &[&Graph]) -> Result<f64> {
        let mut drop = self.fresh_rng();
        let mut tape = Tape::new();
        let (eb, hb) = self.bind(&mut tape)?;
        let mut hs = Vec::with_capacity(batch.len());
        let mut graph_of = Vec::new();
        for (j, g) in batch.iter().enumerate() {
            hs.push(encode_graph(&self.encoder, &mut tape, &eb, g, None, Some(&mut drop))?);
            graph_of.extend(std::iter::repeat_n(j, g.num_nodes()));
        }
        let patches = tape.concat(&hs, Axis(0))?;
        let summaries = stack_readouts(&self.encoder, &mut tape, &hs)?;
        let scores = PairDiscriminator::score_all(&mut tape, &hb, patches, summaries)?;
        let loss = infograph_loss(&mut tape, scores, &graph_of)?;
        self.apply(&mut tape, loss, &eb, &hb)
    }

    fn sample_keep(
        aug: &LearnedAugmenter,
        tape: &mut Tape,
        ab: &crate::augment::AugmenterBound,
        batch: &[&Graph],
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Option<Tensor>>> {
        batch
            .iter()
            .map(|g| {
                let seed = rng.random();
                if g.num_edges() == 0 {
                    Ok(None)
                } else {
                    Ok(Some(learned_edge_drop_sample(tape, aug, ab, g, seed)?))
                }
            })
            .collect()
    }

    /// One alternating AD-GCL update; returns (encoder loss, augmenter loss).
    fn adgcl_step(&mut self, batch: &[&Graph]) -> Result<(f64, f64)> {
        let tau = self.objective.tau;
        let lambda = self.objective.lambda;
        let aug = self.augmenter.take().expect("AD-GCL trainer holds an augmenter");
        let result = (|| {
            // Encoder: maximize agreement with the sampled view.
            let mut noise = self.fresh_rng();
            let mut drop = self.fresh_rng();
            let mut tape = Tape::new();
            let (eb, hb) = self.bind(&mut tape)?;
            let ab = aug.bind(&mut tape, false)?;
            let keep = Self::sample_keep(&aug, &mut tape, &ab, batch, &mut noise)?;
            let (nce, _) = adgcl_losses(&mut tape, &self.encoder, &eb, &hb, batch, &keep, tau, Some(&mut drop))?;
            let enc_loss = self.apply(&mut tape, nce, &eb, &hb)?;
            if !enc_loss.is_finite() {
                return Ok((enc_loss, f64::NAN, None));
            }
            // Augmenter: minimize agreement plus the keep-rate penalty.
            let mut noise = self.fresh_rng();
            let mut drop = self.fresh_rng();
            let mut tape = Tape::new();
            let eb = self.encoder.params().bind(&mut tape, false)?;
            let hb = self.heads.bind(&mut tape, false)?;
            let ab = aug.bind(&mut tape, true)?;
            let keep = Self::sample_keep(&aug, &mut tape, &ab, batch, &mut noise)?;
            let (nce, mean_keep) =
                adgcl_losses(&mut tape, &self.encoder, &eb, &hb, batch, &keep, tau, Some(&mut drop))?;
            let mut loss = tape.neg(nce);
            if let Some(mk) = mean_keep {
                let reg = tape.scale(mk, lambda);
                loss = tape.add(loss, reg)?;
            }
            let aug_loss = tape.scalar(loss);
            if !aug_loss.is_finite() {
                return Ok((enc_loss, aug_loss, None));
            }
            tape.backward(loss)?;
            let mut grads = ParamSet::grads(&tape, &ab.gnn);
            grads.extend(ParamSet::grads(&tape, &ab.mlp));
            Ok((enc_loss, aug_loss, Some(grads)))
        })();
        let mut aug = aug;
        let out = match result {
            Ok((e, a, grads)) => {
                if let Some(grads) = grads {
                    let opt = self.aug_opt.as_mut().expect("augmenter optimizer");
                    opt.step(&mut aug.param_sets_mut(), &grads);
                }
                Ok((e, a))
            }
            Err(err) => Err(err),
        };
        self.augmenter = Some(aug);
        out
    }
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::NodeClassification => "node classification",
        Task::GraphClassification => "graph classification",
    }
}

/// Trains an encoder with `objective`. Node tasks train full-batch on the
/// single graph; graph tasks draw mini-batches from the training graphs.
pub fn train_encoder(
    dataset: &GraphDataset,
    encoder_config: &EncoderConfig,
    objective: &Objective,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    objective.validate()?;
    if !objective.kind.supports(dataset.task()) {
        return Err(ContrastiveError::ObjectiveTaskMismatch {
            objective: objective.kind.name(),
            task: task_name(dataset.task()),
        });
    }
    if !(cfg.lr >= 0.0) {
        return Err(ContrastiveError::InvalidConfig(format!("lr must be nonnegative, got {}", cfg.lr)));
    }
    if cfg.batch_size < 2 {
        return Err(ContrastiveError::InvalidConfig("batch_size must be at least 2".into()));
    }
    let in_dim = dataset.feature_dim();
    let encoder = EncoderModel::new(encoder_config.clone(), in_dim, derive(cfg.seed, 0, "encoder-init"))?;
    let q = encoder.out_dim();
    let mut head_rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, 0, "heads-init"));
    let heads = match objective.kind {
        ObjectiveKind::Dgi => {
            let mut p = ParamSet::new();
            p.push("dgi.bilinear", glorot(q, q, &mut head_rng));
            p
        }
        ObjectiveKind::InfoGraph => PairDiscriminator::new(q, &mut head_rng).params,
        _ => Mlp::new("projector", q, q, q, &mut head_rng).params,
    };
    let augmenter = match objective.kind {
        ObjectiveKind::AdGcl => {
            let mut aug_cfg = encoder_config.clone();
            aug_cfg.dropout = 0.0;
            Some(LearnedAugmenter::new(
                aug_cfg,
                in_dim,
                objective.augmenter_temperature,
                derive(cfg.seed, 0, "augmenter-init"),
            )?)
        }
        _ => None,
    };
    let opt = Adam::new(cfg.lr, &[encoder.params(), &heads]);
    let aug_opt = augmenter.as_ref().map(|a| Adam::new(cfg.lr, &a.param_sets()));
    let mut t = Trainer {
        encoder,
        heads,
        augmenter,
        opt,
        aug_opt,
        objective,
        rng: ChaCha8Rng::seed_from_u64(derive(cfg.seed, 0, "train")),
    };

    let train_graphs: Vec<&Graph> = match dataset.task() {
        Task::NodeClassification => vec![&dataset.graphs()[0]],
        Task::GraphClassification => dataset.split().train.iter().map(|&i| &dataset.graphs()[i]).collect(),
    };
    if dataset.task() == Task::GraphClassification && train_graphs.len() < 2 {
        return Err(ContrastiveError::NeedNegatives(train_graphs.len()));
    }

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let loss = match dataset.task() {
            Task::NodeClassification => {
                let g = train_graphs[0];
                match objective.kind {
                    ObjectiveKind::Dgi => t.dgi_step(g)?,
                    _ => t.node_two_view_step(g, cfg.batch_size.max(2))?,
                }
            }
            Task::GraphClassification => {
                let mut order: Vec<usize> = (0..train_graphs.len()).collect();
                order.shuffle(&mut t.rng);
                let mut batches: Vec<Vec<&Graph>> = order
                    .chunks(cfg.batch_size)
                    .map(|c| c.iter().map(|&i| train_graphs[i]).collect())
                    .collect();
                if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
                    let tail = batches.pop().expect("nonempty");
                    batches.last_mut().expect("nonempty").extend(tail);
                }
                let mut total = 0.0;
                for b in &batches {
                    total += match objective.kind {
                        ObjectiveKind::InfoGraph => t.infograph_step(b)?,
                        ObjectiveKind::AdGcl => t.adgcl_step(b)?.0,
                        _ => t.graph_two_view_step(b)?,
                    };
                }
                total / batches.len() as f64
            }
        };
        if !loss.is_finite() || !t.encoder.params().all_finite() {
            return Err(ContrastiveError::TrainingDiverged { epoch });
        }
        history.push(EpochRecord {
            epoch,
            loss,
            wall_ms: start.elapsed().as_millis() as u64,
        });
        if let Some(patience) = cfg.patience {
            if loss < best {
                best = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome {
        encoder: t.encoder,
        history,
    })
}
