//! Evasion attacks on graph structure against a frozen encoder and probe.
//!
//! Candidates are all unordered node pairs `i < j`, indexed row-major. A
//! perturbation toggles up to `Δ` of them.

mod grbcd;
mod pgd;
mod projection;
mod random;
mod victim;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::encoders::{EncoderError, EncoderModel};
use crate::graph::{Graph, GraphDataset, GraphError, Task};
use crate::probe::{LinearProbe, ProbeError};
use crate::seed::derive;

pub use grbcd::{grbcd_attack, grbcd_chunks};
pub use pgd::{pgd_attack, prbcd_attack};
pub use projection::project_budget;
pub use random::random_flip_attack;
pub use victim::{attack_loss, AttackProblem, Targets};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("budget {delta} exceeds capacity {capacity}")]
    BudgetInfeasible { delta: usize, capacity: usize },
    #[error("invalid attack config: {0}")]
    InvalidConfig(String),
    #[error("attack target: {0}")]
    InvalidTarget(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, AttackError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Random,
    Pgd,
    Prbcd,
    Grbcd,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Random => "random",
            AttackKind::Pgd => "pgd",
            AttackKind::Prbcd => "prbcd",
            AttackKind::Grbcd => "grbcd",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            AttackKind::Random => "Random",
            AttackKind::Pgd => "PGD",
            AttackKind::Prbcd => "PR-BCD",
            AttackKind::Grbcd => "GR-BCD",
        }
    }

    pub const ALL: [AttackKind; 4] = [AttackKind::Random, AttackKind::Pgd, AttackKind::Prbcd, AttackKind::Grbcd];
}

impl std::str::FromStr for AttackKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "random" => Ok(AttackKind::Random),
            "pgd" => Ok(AttackKind::Pgd),
            "prbcd" => Ok(AttackKind::Prbcd),
            "grbcd" => Ok(AttackKind::Grbcd),
            other => Err(AttackError::InvalidConfig(format!("unknown attack kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackLoss {
    /// Negated mean cross-entropy over the targets.
    #[default]
    #[serde(alias = "ce")]
    NegCrossEntropy,
    /// Mean `tanh` of the true-class margin.
    Margin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawAttackConfig")]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub steps: usize,
    pub lr: f64,
    pub block_size: usize,
    pub resample_keep_fraction: f64,
    pub discretize_samples: usize,
    pub loss: AttackLoss,
    pub seed: u64,
}

/// Omitted fields take the defaults of the given kind.
#[derive(Deserialize)]
struct RawAttackConfig {
    #[serde(default = "default_kind")]
    kind: AttackKind,
    steps: Option<usize>,
    lr: Option<f64>,
    block_size: Option<usize>,
    resample_keep_fraction: Option<f64>,
    discretize_samples: Option<usize>,
    loss: Option<AttackLoss>,
    seed: Option<u64>,
}

fn default_kind() -> AttackKind {
    AttackKind::Prbcd
}

impl From<RawAttackConfig> for AttackConfig {
    fn from(r: RawAttackConfig) -> Self {
        let d = AttackConfig::new(r.kind);
        AttackConfig {
            kind: r.kind,
            steps: r.steps.unwrap_or(d.steps),
            lr: r.lr.unwrap_or(d.lr),
            block_size: r.block_size.unwrap_or(d.block_size),
            resample_keep_fraction: r.resample_keep_fraction.unwrap_or(d.resample_keep_fraction),
            discretize_samples: r.discretize_samples.unwrap_or(d.discretize_samples),
            loss: r.loss.unwrap_or(d.loss),
            seed: r.seed.unwrap_or(d.seed),
        }
    }
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig::new(AttackKind::Prbcd)
    }
}

impl AttackConfig {
    /// Defaults for `kind`.
    pub fn new(kind: AttackKind) -> Self {
        let steps = match kind {
            AttackKind::Grbcd => 10,
            _ => 100,
        };
        AttackConfig {
            kind,
            steps,
            lr: DEFAULT_LR,
            block_size: 2_000,
            resample_keep_fraction: 0.5,
            discretize_samples: 20,
            loss: AttackLoss::NegCrossEntropy,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != AttackKind::Random {
            if self.steps == 0 {
                return Err(AttackError::InvalidConfig("steps must be at least 1".into()));
            }
            if !(self.lr.is_finite() && self.lr >= 0.0) {
                return Err(AttackError::InvalidConfig(format!("lr {} must be finite and non-negative", self.lr)));
            }
        }
        if matches!(self.kind, AttackKind::Prbcd | AttackKind::Grbcd) && self.block_size == 0 {
            return Err(AttackError::InvalidConfig("block_size must be positive".into()));
        }
        if !(self.resample_keep_fraction > 0.0 && self.resample_keep_fraction <= 1.0) {
            return Err(AttackError::InvalidConfig(format!(
                "resample_keep_fraction {} outside (0, 1]",
                self.resample_keep_fraction
            )));
        }
        if matches!(self.kind, AttackKind::Pgd | AttackKind::Prbcd) && self.discretize_samples == 0 {
            return Err(AttackError::InvalidConfig("discretize_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Step size for the relaxed attacks. The per-entry gradient of a mean loss
/// over many targets is small, so the step is large.
pub const DEFAULT_LR: f64 = 100.0;

/// `round(fraction · m)`.
pub fn budget_from_fraction(num_edges: usize, fraction: f64) -> Result<usize> {
    if !(fraction.is_finite() && fraction >= 0.0) {
        return Err(AttackError::InvalidConfig(format!("budget fraction {fraction} must be non-negative")));
    }
    Ok((fraction * num_edges as f64).round() as usize)
}

/// Number of unordered pairs on `n` nodes.
pub fn num_candidates(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Row-major index of pair `(i, j)`, `i < j`.
pub fn pair_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_of(e: usize, n: usize) -> (usize, usize) {
    debug_assert!(e < num_candidates(n));
    // Row i starts at s(i) = i*n - i(i+1)/2; estimate i from the quadratic
    // and correct for rounding.
    let nf = n as f64;
    let disc = (2.0 * nf - 1.0).powi(2) - 8.0 * e as f64;
    let mut i = (((2.0 * nf - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
    let start = |i: usize| i * n - i * (i + 1) / 2;
    while i > 0 && start(i) > e {
        i -= 1;
    }
    while i + 1 < n && start(i + 1) <= e {
        i += 1;
    }
    (i, i + 1 + (e - start(i)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub attack: AttackKind,
    pub delta: usize,
    /// Toggled pairs `(i, j)`, `i < j`, sorted.
    pub flips: Vec<(usize, usize)>,
    /// Non-zero relaxed weights at the end of optimization.
    pub relaxed_final: Option<Vec<((usize, usize), f64)>>,
    /// Accuracy on the targets after applying `flips`.
    pub acc_adv: f64,
    pub loss_trace: Vec<f64>,
    /// Largest number of relaxed weights held at once.
    pub peak_live_weights: usize,
    pub wall_ms: u64,
}

/// Runs `cfg.kind` on one problem.
pub fn run_attack(problem: &AttackProblem<'_>, delta: usize, cfg: &AttackConfig) -> Result<AttackResult> {
    cfg.validate()?;
    match cfg.kind {
        AttackKind::Random => random_flip_attack(problem, delta, cfg.seed),
        AttackKind::Pgd => pgd_attack(problem, delta, cfg),
        AttackKind::Prbcd => prbcd_attack(problem, delta, cfg),
        AttackKind::Grbcd => grbcd_attack(problem, delta, cfg),
    }
}

/// Outcome of attacking every test item of a dataset.
#[derive(Debug, Clone)]
pub struct DatasetAttack {
    pub attack: AttackKind,
    /// Total budget (sum over attacked graphs for graph tasks).
    pub delta: usize,
    pub acc_clean: f64,
    pub acc_adv: f64,
    pub flips: Vec<(usize, usize)>,
    pub loss_trace: Vec<f64>,
    pub perturbed: Vec<Graph>,
    pub wall_ms: u64,
}

/// Global attack for node tasks (one graph, all test nodes jointly); for
/// graph tasks every test graph is attacked independently with its own
/// budget. Flips of graph tasks are reported per graph concatenated.
pub fn attack_dataset(
    encoder: &EncoderModel,
    probe: &LinearProbe,
    dataset: &GraphDataset,
    cfg: &AttackConfig,
    budget_fraction: f64,
) -> Result<DatasetAttack> {
    cfg.validate()?;
    let start = Instant::now();
    let test = &dataset.split().test;
    let acc_clean = crate::probe::accuracy(probe, encoder, dataset, test, None)?;
    let labels = dataset.labels();
    let mut perturbed = dataset.graphs().to_vec();
    let mut flips = Vec::new();
    let mut loss_trace = Vec::new();
    let mut delta_total = 0;
    match dataset.task() {
        Task::NodeClassification => {
            let g = &dataset.graphs()[0];
            let targets = Targets::Nodes {
                nodes: test.clone(),
                labels: test.iter().map(|&i| labels[i]).collect(),
            };
            let problem = AttackProblem::new(encoder, probe, g, targets, cfg.loss)?;
            let delta = budget_from_fraction(g.num_edges(), budget_fraction)?;
            let r = run_attack(&problem, delta, cfg)?;
            perturbed[0] = g.apply_perturbation(&r.flips)?;
            delta_total = delta;
            flips = r.flips;
            loss_trace = r.loss_trace;
        }
        Task::GraphClassification => {
            for &gi in test {
                let g = &dataset.graphs()[gi];
                let problem = AttackProblem::new(encoder, probe, g, Targets::Graph { label: labels[gi] }, cfg.loss)?;
                let delta = budget_from_fraction(g.num_edges(), budget_fraction)?;
                let local = AttackConfig {
                    seed: derive(cfg.seed, gi as u64, "attack-graph"),
                    ..cfg.clone()
                };
                let r = run_attack(&problem, delta.min(num_candidates(g.num_nodes())), &local)?;
                perturbed[gi] = g.apply_perturbation(&r.flips)?;
                delta_total += delta;
                flips.extend(r.flips);
                if let Some(&last) = r.loss_trace.last() {
                    loss_trace.push(last);
                }
            }
        }
    }
    let acc_adv = crate::probe::accuracy(probe, encoder, dataset, test, Some(&perturbed))?;
    Ok(DatasetAttack {
        attack: cfg.kind,
        delta: delta_total,
        acc_clean,
        acc_adv,
        flips,
        loss_trace,
        perturbed,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// One JSONL line in the attack record format.
pub fn result_json(kind: AttackKind, delta: usize, flips: &[(usize, usize)], acc_adv: f64, loss_trace: &[f64], seed: u64) -> serde_json::Value {
    serde_json::json!({
        "attack": kind.name(),
        "delta": delta,
        "flips": flips.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
        "acc_adv": acc_adv,
        "loss_trace": loss_trace,
        "seed": seed,
    })
}
