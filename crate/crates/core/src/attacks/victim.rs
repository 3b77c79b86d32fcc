use ndarray::Array2;

use super::{num_candidates, pair_index, pair_of, AttackError, AttackLoss, Result};
use crate::autodiff::{Tape, Tensor};
use crate::encoders::EncoderModel;
use crate::graph::Graph;
use crate::probe::{argmax_rows, cross_entropy, LinearProbe};

/// What the attack tries to misclassify.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Nodes of a single graph, attacked jointly.
    Nodes { nodes: Vec<usize>, labels: Vec<usize> },
    /// The graph's own label.
    Graph { label: usize },
}

impl Targets {
    fn labels(&self) -> Vec<usize> {
        match self {
            Targets::Nodes { labels, .. } => labels.clone(),
            Targets::Graph { label } => vec![*label],
        }
    }
}

/// `L_atk` for adjacency `w` (dense, possibly relaxed). Lower is a stronger
/// attack. Parameters are bound as constants.
pub fn attack_loss(
    tape: &mut Tape,
    encoder: &EncoderModel,
    probe: &LinearProbe,
    features: &Array2<f64>,
    w: Tensor,
    targets: &Targets,
    loss: AttackLoss,
) -> Result<Tensor> {
    let logits = target_logits(tape, encoder, probe, features, w, targets)?;
    let labels = targets.labels();
    Ok(match loss {
        AttackLoss::NegCrossEntropy => {
            let ce = cross_entropy(tape, logits, &labels, None)?;
            tape.neg(ce)
        }
        AttackLoss::Margin => {
            let m = tape.margin_rows(logits, &labels)?;
            let t = tape.tanh(m);
            tape.mean(t)
        }
    })
}

fn target_logits(
    tape: &mut Tape,
    encoder: &EncoderModel,
    probe: &LinearProbe,
    features: &Array2<f64>,
    w: Tensor,
    targets: &Targets,
) -> Result<Tensor> {
    let eb = encoder.params().bind(tape, false)?;
    let pb = probe.params().bind(tape, false)?;
    let x = tape.constant(features.clone())?;
    let h = encoder.encode(tape, &eb, w, x, None)?;
    let rows = match targets {
        Targets::Nodes { nodes, .. } => tape.row_index(h, nodes)?,
        Targets::Graph { .. } => encoder.readout(tape, h),
    };
    Ok(probe.logits(tape, &pb, rows)?)
}

/// A frozen victim together with the graph under attack.
pub struct AttackProblem<'a> {
    encoder: &'a EncoderModel,
    probe: &'a LinearProbe,
    graph: &'a Graph,
    targets: Targets,
    loss: AttackLoss,
    adjacency: Array2<f64>,
}

impl<'a> AttackProblem<'a> {
    pub fn new(
        encoder: &'a EncoderModel,
        probe: &'a LinearProbe,
        graph: &'a Graph,
        targets: Targets,
        loss: AttackLoss,
    ) -> Result<Self> {
        match &targets {
            Targets::Nodes { nodes, labels } => {
                if nodes.is_empty() || nodes.len() != labels.len() {
                    return Err(AttackError::InvalidTarget(format!(
                        "{} target nodes with {} labels",
                        nodes.len(),
                        labels.len()
                    )));
                }
                if let Some(&v) = nodes.iter().find(|&&v| v >= graph.num_nodes()) {
                    return Err(AttackError::InvalidTarget(format!("node {v} outside graph of {}", graph.num_nodes())));
                }
            }
            Targets::Graph { .. } => {}
        }
        if let Some(&l) = targets.labels().iter().find(|&&l| l >= probe.num_classes()) {
            return Err(AttackError::InvalidTarget(format!("label {l} outside 0..{}", probe.num_classes())));
        }
        Ok(AttackProblem {
            encoder,
            probe,
            graph,
            targets,
            loss,
            adjacency: graph.dense_adjacency(),
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_candidates(&self) -> usize {
        num_candidates(self.graph.num_nodes())
    }

    pub fn encoder(&self) -> &EncoderModel {
        self.encoder
    }

    pub fn probe(&self) -> &LinearProbe {
        self.probe
    }

    pub(super) fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub(super) fn pair(&self, e: usize) -> (usize, usize) {
        pair_of(e, self.num_nodes())
    }

    /// Clean adjacency with candidate entries `flips` toggled.
    pub(super) fn toggled(&self, base: &Array2<f64>, flips: &[usize]) -> Array2<f64> {
        let mut a = base.clone();
        for &e in flips {
            let (i, j) = self.pair(e);
            let v = 1.0 - a[[i, j]];
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
        a
    }

    /// Exact `L_atk` at a discrete (or any symmetric) adjacency.
    pub fn loss_at(&self, adjacency: &Array2<f64>) -> Result<f64> {
        let mut tape = Tape::new();
        let w = tape.constant(adjacency.clone())?;
        let l = attack_loss(&mut tape, self.encoder, self.probe, self.graph.features(), w, &self.targets, self.loss)?;
        Ok(tape.scalar(l))
    }

    /// Loss with candidate entries `flips` toggled on the clean graph.
    pub fn loss_with_flips(&self, flips: &[usize]) -> Result<f64> {
        self.loss_at(&self.toggled(&self.adjacency, flips))
    }

    /// Relaxed loss `L(base + (1 − 2 base_e) p_e)` over `entries` and its
    /// gradient with respect to `p`.
    pub(super) fn relaxed_loss_grad(&self, base: &Array2<f64>, entries: &[usize], p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.num_nodes();
        let pairs: Vec<(usize, usize)> = entries.iter().map(|&e| pair_of(e, n)).collect();
        let sign = Array2::from_shape_fn((entries.len(), 1), |(k, _)| 1.0 - 2.0 * base[[pairs[k].0, pairs[k].1]]);
        let pv = Array2::from_shape_vec((entries.len(), 1), p.to_vec()).expect("one weight per entry");
        let mut tape = Tape::new();
        let pt = tape.leaf(pv, true)?;
        let st = tape.constant(sign)?;
        let d = tape.mul(pt, st)?;
        let delta = tape.scatter_symmetric(d, &pairs, n)?;
        let a = tape.constant(base.clone())?;
        let w = tape.add(a, delta)?;
        let l = attack_loss(&mut tape, self.encoder, self.probe, self.graph.features(), w, &self.targets, self.loss)?;
        tape.backward(l)?;
        let g = tape.grad(pt).map(|g| g.column(0).to_vec()).unwrap_or_else(|| vec![0.0; entries.len()]);
        Ok((tape.scalar(l), g))
    }

    /// Fraction of targets classified correctly at `adjacency`.
    pub fn accuracy_at(&self, adjacency: &Array2<f64>) -> Result<f64> {
        let mut tape = Tape::new();
        let w = tape.constant(adjacency.clone())?;
        let logits = target_logits(&mut tape, self.encoder, self.probe, self.graph.features(), w, &self.targets)?;
        let pred = argmax_rows(tape.value(logits));
        let labels = self.targets.labels();
        let correct = pred.iter().zip(&labels).filter(|(p, l)| p == l).count();
        Ok(correct as f64 / labels.len() as f64)
    }

    /// Candidate indices of `(i, j)` pairs.
    pub fn candidate_indices(&self, pairs: &[(usize, usize)]) -> Vec<usize> {
        let n = self.num_nodes();
        pairs.iter().map(|&(i, j)| pair_index(i.min(j), i.max(j), n)).collect()
    }
}
