//! Stochastic graph views: GraphCL augmentations, DGI corruption, centrality
//! weighted GCA variants and the learnable edge-drop augmenter.

use std::collections::{BTreeSet, HashSet};

use ndarray::{Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor};
use crate::encoders::{EncoderConfig, EncoderError, EncoderModel};
use crate::graph::Graph;
use crate::params::{self, ParamSet};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("augmentation left no nodes")]
    DegenerateAugmentation,
    #[error("{0} centrality did not converge")]
    CentralityDiverged(&'static str),
    #[error("augmentation strength must lie in [0, 1], got {0}")]
    InvalidStrength(f64),
    #[error("cut-off must satisfy strength <= cut <= 1, got cut {cut} for strength {strength}")]
    InvalidCut { strength: f64, cut: f64 },
    #[error("learned edge dropping needs a trained augmenter")]
    NeedsAugmenter,
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

pub type Result<T> = std::result::Result<T, AugmentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    NodeDrop,
    EdgePerturb,
    AttrMask,
    Subgraph,
    FeatureShuffle,
    AdaptiveEdgeDrop,
    AdaptiveAttrMask,
    LearnedEdgeDrop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Centrality {
    #[default]
    Degree,
    Eigenvector,
    Pagerank,
}

impl Centrality {
    fn name(self) -> &'static str {
        match self {
            Centrality::Degree => "degree",
            Centrality::Eigenvector => "eigenvector",
            Centrality::Pagerank => "pagerank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub kind: AugmentKind,
    pub strength: f64,
    #[serde(default)]
    pub centrality: Centrality,
    /// Upper bound on adaptive drop probabilities.
    #[serde(default = "default_cut")]
    pub cut: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_cut() -> f64 {
    0.7
}

impl AugmentSpec {
    pub fn new(kind: AugmentKind, strength: f64) -> Self {
        Self {
            kind,
            strength,
            centrality: Centrality::Degree,
            cut: default_cut(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(AugmentError::InvalidStrength(self.strength));
        }
        let adaptive = matches!(
            self.kind,
            AugmentKind::AdaptiveEdgeDrop | AugmentKind::AdaptiveAttrMask
        );
        if adaptive && !(self.strength <= self.cut && self.cut <= 1.0) {
            return Err(AugmentError::InvalidCut {
                strength: self.strength,
                cut: self.cut,
            });
        }
        Ok(())
    }
}

/// Applies `spec` to `g`.
pub fn augment(g: &Graph, spec: &AugmentSpec) -> Result<Graph> {
    augment_with_map(g, spec).map(|(view, _)| view)
}

/// Applies `spec` and also returns, for every node of the view, the index of
/// the original node it came from.
pub fn augment_with_map(g: &Graph, spec: &AugmentSpec) -> Result<(Graph, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = g.num_nodes();
    let identity = || (0..n).collect::<Vec<_>>();
    let rho = spec.strength;
    match spec.kind {
        AugmentKind::NodeDrop => {
            let k = (rho * n as f64).floor() as usize;
            if k >= n {
                return Err(AugmentError::DegenerateAugmentation);
            }
            let dropped: HashSet<usize> = index::sample(&mut rng, n, k).into_iter().collect();
            let keep: Vec<usize> = (0..n).filter(|i| !dropped.contains(i)).collect();
            Ok((g.induced_subgraph(&keep), keep))
        }
        AugmentKind::Subgraph => {
            let target = ((1.0 - rho) * n as f64).ceil() as usize;
            if target == 0 {
                return Err(AugmentError::DegenerateAugmentation);
            }
            let keep = random_walk_nodes(g, target, &mut rng);
            Ok((g.induced_subgraph(&keep), keep))
        }
        AugmentKind::EdgePerturb => Ok((edge_perturb(g, rho, &mut rng), identity())),
        AugmentKind::AttrMask => {
            let f = g.feature_dim();
            let probs = vec![rho; f];
            Ok((mask_columns(g, &probs, &mut rng), identity()))
        }
        AugmentKind::FeatureShuffle => {
            let mut perm = identity();
            perm.shuffle(&mut rng);
            let x = g.features().select(Axis(0), &perm);
            Ok((g.with_features(x).expect("row count preserved"), identity()))
        }
        AugmentKind::AdaptiveEdgeDrop => {
            let probs = adaptive_edge_drop_probs(g, spec.centrality, rho, spec.cut)?;
            let kept: BTreeSet<(usize, usize)> = g
                .edges()
                .iter()
                .zip(&probs)
                .filter(|(_, &p)| rng.random::<f64>() >= p)
                .map(|(&e, _)| e)
                .collect();
            Ok((g.with_edge_set(kept), identity()))
        }
        AugmentKind::AdaptiveAttrMask => {
            let probs = adaptive_feature_mask_probs(g, spec.centrality, rho, spec.cut)?;
            Ok((mask_columns(g, &probs, &mut rng), identity()))
        }
        AugmentKind::LearnedEdgeDrop => Err(AugmentError::NeedsAugmenter),
    }
}

/// Applies a sequence of augmentations, composing the node maps. Each step
/// is seeded from `seed` and its position.
pub fn augment_chain(g: &Graph, specs: &[AugmentSpec], seed: u64) -> Result<(Graph, Vec<usize>)> {
    let mut view = g.clone();
    let mut map: Vec<usize> = (0..g.num_nodes()).collect();
    for (k, spec) in specs.iter().enumerate() {
        let s = spec
            .clone()
            .with_seed(crate::seed::derive(seed, k as u64, "augment"));
        let (next, m) = augment_with_map(&view, &s)?;
        map = m.into_iter().map(|i| map[i]).collect();
        view = next;
    }
    Ok((view, map))
}

fn mask_columns(g: &Graph, probs: &[f64], rng: &mut ChaCha8Rng) -> Graph {
    let mut x = g.features().clone();
    for (c, &p) in probs.iter().enumerate() {
        if rng.random::<f64>() < p {
            x.column_mut(c).fill(0.0);
        }
    }
    g.with_features(x).expect("row count preserved")
}

fn edge_perturb(g: &Graph, rho: f64, rng: &mut ChaCha8Rng) -> Graph {
    let n = g.num_nodes();
    let m = g.num_edges();
    let mut kept: BTreeSet<(usize, usize)> = g
        .edges()
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() >= rho)
        .collect();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let non_edges = total_pairs - m;
    let want = if m == 0 || rho == 0.0 {
        0
    } else {
        Binomial::new(m as u64, rho).expect("valid binomial").sample(rng) as usize
    };
    let add = want.min(non_edges);
    if add == 0 {
        return g.with_edge_set(kept);
    }
    if add * 2 <= non_edges {
        let mut added = BTreeSet::new();
        while added.len() < add {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let p = (i.min(j), i.max(j));
            if !g.has_edge(p.0, p.1) {
                added.insert(p);
            }
        }
        kept.extend(added);
    } else {
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        kept.extend(index::sample(rng, candidates.len(), add).into_iter().map(|k| candidates[k]));
    }
    g.with_edge_set(kept)
}

/// Nodes visited by a random walk from a uniform start until `target`
/// distinct nodes are collected. The walk jumps to a uniformly chosen
/// unvisited node when it is stuck. Returned sorted.
fn random_walk_nodes(g: &Graph, target: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.num_nodes();
    let adj = g.neighbors();
    let mut visited = vec![false; n];
    let mut count = 0;
    let mut current = rng.random_range(0..n);
    visited[current] = true;
    count += 1;
    let mut idle = 0;
    while count < target {
        let nb = &adj[current];
        if nb.is_empty() || idle > 4 * n {
            let unvisited: Vec<usize> = (0..n).filter(|&i| !visited[i]).collect();
            current = unvisited[rng.random_range(0..unvisited.len())];
            idle = 0;
        } else {
            current = nb[rng.random_range(0..nb.len())];
            idle += 1;
        }
        if !visited[current] {
            visited[current] = true;
            count += 1;
            idle = 0;
        }
    }
    (0..n).filter(|&i| visited[i]).collect()
}

fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = Vec::new();
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

const EIG_TOL: f64 = 1e-8;
const PR_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 1000;

pub fn centrality_scores(g: &Graph, kind: Centrality) -> Result<Vec<f64>> {
    let n = g.num_nodes();
    let adj = g.neighbors();
    match kind {
        Centrality::Degree => Ok(adj.iter().map(|a| a.len() as f64).collect()),
        Centrality::Eigenvector => {
            // Power iteration on A + I per component; the shift keeps
            // bipartite components from oscillating.
            let mut out = vec![0.0; n];
            for comp in components(&adj) {
                if comp.len() == 1 {
                    continue;
                }
                let mut v = vec![1.0 / (comp.len() as f64).sqrt(); n];
                let mut converged = false;
                for _ in 0..MAX_ITERS {
                    let mut next = vec![0.0; n];
                    for &u in &comp {
                        next[u] = v[u] + adj[u].iter().map(|&w| v[w]).sum::<f64>();
                    }
                    let norm = comp.iter().map(|&u| next[u] * next[u]).sum::<f64>().sqrt();
                    let mut diff = 0.0;
                    for &u in &comp {
                        next[u] /= norm;
                        diff += (next[u] - v[u]).powi(2);
                    }
                    v = next;
                    if diff.sqrt() < EIG_TOL {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(AugmentError::CentralityDiverged(kind.name()));
                }
                let scale = (comp.len() as f64 / n as f64).sqrt();
                for &u in &comp {
                    out[u] = v[u].abs() * scale;
                }
            }
            Ok(out)
        }
        Centrality::Pagerank => {
            if n == 0 {
                return Ok(Vec::new());
            }
            let d = 0.85;
            let mut r = vec![1.0 / n as f64; n];
            for _ in 0..MAX_ITERS {
                let dangling: f64 = (0..n).filter(|&u| adj[u].is_empty()).map(|u| r[u]).sum();
                let base = (1.0 - d) / n as f64 + d * dangling / n as f64;
                let mut next = vec![base; n];
                for u in 0..n {
                    if adj[u].is_empty() {
                        continue;
                    }
                    let share = d * r[u] / adj[u].len() as f64;
                    for &v in &adj[u] {
                        next[v] += share;
                    }
                }
                let diff: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
                r = next;
                if diff < PR_TOL {
                    return Ok(r);
                }
            }
            Err(AugmentError::CentralityDiverged(kind.name()))
        }
    }
}

/// Maps importance scores to drop probabilities: the most important item
/// gets 0, the mean item gets `base`, capped at `cut`.
fn gap_normalize(scores: &[f64], base: f64, cut: f64) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let gap = max - mean;
    if gap <= 1e-12 * max.abs().max(1.0) {
        return vec![base; scores.len()];
    }
    scores
        .iter()
        .map(|&s| ((max - s) / gap * base).min(cut))
        .collect()
}

fn log_floor(x: f64) -> f64 {
    x.max(1e-12).ln()
}

/// Per-edge drop probabilities in `g.edges()` order.
pub fn adaptive_edge_drop_probs(g: &Graph, kind: Centrality, base: f64, cut: f64) -> Result<Vec<f64>> {
    let c = centrality_scores(g, kind)?;
    let s: Vec<f64> = g
        .edges()
        .iter()
        .map(|&(u, v)| (log_floor(c[u]) + log_floor(c[v])) / 2.0)
        .collect();
    Ok(gap_normalize(&s, base, cut))
}

/// Per-feature-column mask probabilities.
pub fn adaptive_feature_mask_probs(g: &Graph, kind: Centrality, base: f64, cut: f64) -> Result<Vec<f64>> {
    let c = centrality_scores(g, kind)?;
    let x = g.features();
    let s: Vec<f64> = (0..x.ncols())
        .map(|i| {
            let w: f64 = x.column(i).iter().zip(&c).map(|(v, c)| v.abs() * c).sum();
            log_floor(w)
        })
        .collect();
    Ok(gap_normalize(&s, base, cut))
}

/// GNN plus edge MLP producing per-edge keep logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedAugmenter {
    gnn: EncoderModel,
    mlp: ParamSet,
    temperature: f64,
}

/// Tape handles for a bound [`LearnedAugmenter`].
#[derive(Debug, Clone)]
pub struct AugmenterBound {
    pub gnn: Vec<Tensor>,
    pub mlp: Vec<Tensor>,
}

impl LearnedAugmenter {
    pub fn new(config: EncoderConfig, in_dim: usize, temperature: f64, seed: u64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(AugmentError::InvalidTemperature(temperature));
        }
        let gnn = EncoderModel::new(config, in_dim, seed)?;
        let q = gnn.out_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, 0, "edge-mlp"));
        let mut mlp = ParamSet::new();
        mlp.push("edge.mlp0.weight", params::glorot(2 * q, q, &mut rng));
        mlp.push("edge.mlp0.bias", Array2::zeros((1, q)));
        mlp.push("edge.mlp1.weight", params::glorot(q, 1, &mut rng));
        mlp.push("edge.mlp1.bias", Array2::zeros((1, 1)));
        Ok(Self {
            gnn,
            mlp,
            temperature,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn gnn(&self) -> &EncoderModel {
        &self.gnn
    }

    pub fn param_sets_mut(&mut self) -> [&mut ParamSet; 2] {
        [self.gnn.params_mut(), &mut self.mlp]
    }

    pub fn param_sets(&self) -> [&ParamSet; 2] {
        [self.gnn.params(), &self.mlp]
    }

    pub fn bind(&self, tape: &mut Tape, requires_grad: bool) -> Result<AugmenterBound> {
        Ok(AugmenterBound {
            gnn: self.gnn.params().bind(tape, requires_grad)?,
            mlp: self.mlp.bind(tape, requires_grad)?,
        })
    }

    /// Per-edge logits (`m×1`, `g.edges()` order).
    pub fn edge_logits(&self, tape: &mut Tape, bound: &AugmenterBound, g: &Graph) -> Result<Tensor> {
        let w = tape.constant(g.dense_adjacency())?;
        let x = tape.constant(g.features().clone())?;
        let z = self.gnn.encode(tape, &bound.gnn, w, x, None)?;
        let us: Vec<usize> = g.edges().iter().map(|e| e.0).collect();
        let vs: Vec<usize> = g.edges().iter().map(|e| e.1).collect();
        let zu = tape.row_index(z, &us)?;
        let zv = tape.row_index(z, &vs)?;
        let cat = tape.concat(&[zu, zv], Axis(1))?;
        let p = &bound.mlp;
        let h = tape.matmul(cat, p[0])?;
        let h = tape.add_row(h, p[1])?;
        let h = tape.relu(h);
        let o = tape.matmul(h, p[2])?;
        Ok(tape.add_row(o, p[3])?)
    }
}

/// Logistic noise `ln u − ln(1−u)` with `u ~ U(0,1)` clamped away from 0 and 1.
pub fn logistic_noise(m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((m, 1), |_| {
        let u: f64 = rng.random::<f64>().clamp(1e-10, 1.0 - 1e-10);
        u.ln() - (1.0 - u).ln()
    })
}

/// `sigmoid((logits + noise)/temperature)`.
pub fn relaxed_bernoulli(
    tape: &mut Tape,
    logits: Tensor,
    noise: &Array2<f64>,
    temperature: f64,
) -> Result<Tensor> {
    let eps = tape.constant(noise.clone())?;
    let z = tape.add(logits, eps)?;
    let z = tape.scale(z, 1.0 / temperature);
    Ok(tape.sigmoid(z))
}

/// Relaxed keep weights in `[0,1]^m` for every edge of `g`.
pub fn learned_edge_drop_sample(
    tape: &mut Tape,
    aug: &LearnedAugmenter,
    bound: &AugmenterBound,
    g: &Graph,
    seed: u64,
) -> Result<Tensor> {
    let logits = aug.edge_logits(tape, bound, g)?;
    let noise = logistic_noise(g.num_edges(), seed);
    relaxed_bernoulli(tape, logits, &noise, aug.temperature)
}
