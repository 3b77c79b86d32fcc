use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::hparams::{self, Hparams};
use super::{Result, RunnerError};
use crate::attacks::AttackConfig;
use crate::augment::AugmentSpec;
use crate::contrastive::{Objective, ObjectiveKind};
use crate::data_io::{GraphSetSpec, SbmSpec};
use crate::encoders::{Activation, EncoderConfig, EncoderKind, Readout};
use crate::graph::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Path(PathBuf),
    Sbm(SbmSpec),
    SbmGraphs(GraphSetSpec),
}

/// Training objective of a model: self-supervised or the supervised
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelObjective {
    Dgi,
    InfoGraph,
    GraphCl,
    Gca,
    AdGcl,
    Supervised,
}

impl ModelObjective {
    pub fn contrastive(self) -> Option<ObjectiveKind> {
        match self {
            ModelObjective::Dgi => Some(ObjectiveKind::Dgi),
            ModelObjective::InfoGraph => Some(ObjectiveKind::InfoGraph),
            ModelObjective::GraphCl => Some(ObjectiveKind::GraphCl),
            ModelObjective::Gca => Some(ObjectiveKind::Gca),
            ModelObjective::AdGcl => Some(ObjectiveKind::AdGcl),
            ModelObjective::Supervised => None,
        }
    }
}

/// Per-model overrides of the default hyperparameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HparamOverrides {
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub patience: Option<usize>,
    pub dropout: Option<f64>,
    pub layers: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub batch_size: Option<usize>,
    pub activation: Option<Activation>,
    pub readout: Option<Readout>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub view1: Option<Vec<AugmentSpec>>,
    pub view2: Option<Vec<AugmentSpec>>,
    pub probe_epochs: Option<usize>,
    pub probe_lr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub objective: ModelObjective,
    #[serde(default)]
    pub encoder: Option<EncoderKind>,
    #[serde(default)]
    pub hparams: HparamOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub dataset_id: String,
    pub models: Vec<ModelSpec>,
    pub attacks: Vec<AttackConfig>,
    #[serde(default = "default_budget")]
    pub budget_fraction: f64,
    #[serde(default = "default_seeds")]
    pub num_seeds: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_true")]
    pub save_checkpoints: bool,
}

fn default_budget() -> f64 {
    0.05
}

fn default_seeds() -> usize {
    15
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))?;
        // Relative paths resolve against the config file's directory.
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let DatasetSource::Path(p) = &mut cfg.dataset {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RunnerError::Config(m));
        if self.num_seeds == 0 {
            return bad("num_seeds must be at least 1".into());
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction < 1.0) {
            return bad(format!("budget_fraction {} outside (0, 1)", self.budget_fraction));
        }
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        let mut ids: Vec<&str> = self.models.iter().map(|m| m.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("model ids must be unique".into());
        }
        let mut kinds: Vec<&str> = self.attacks.iter().map(|a| a.kind.name()).collect();
        kinds.sort_unstable();
        if kinds.windows(2).any(|w| w[0] == w[1]) {
            return bad("each attack kind may appear once".into());
        }
        for a in &self.attacks {
            a.validate().map_err(|e| RunnerError::Config(e.to_string()))?;
        }
        if self.models.iter().any(|m| m.id.contains(['/', '\\'])) {
            return bad("model ids may not contain path separators".into());
        }
        Ok(())
    }
}

/// Fully resolved training setup of one model on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedModel {
    pub id: String,
    pub objective: ModelObjective,
    pub encoder: EncoderConfig,
    pub hparams: Hparams,
    pub batch_size: usize,
    pub contrastive: Option<Objective>,
    pub probe_epochs: usize,
    pub probe_lr: f64,
}

/// Table key of a model: the encoder name for supervised baselines,
/// otherwise the objective name.
pub fn model_key(objective: ModelObjective, encoder: EncoderKind) -> &'static str {
    match (objective, encoder) {
        (ModelObjective::Supervised, EncoderKind::Gcn) => "GCN",
        (ModelObjective::Supervised, EncoderKind::Gin) => "GIN",
        (o, _) => o.contrastive().expect("contrastive objective").name(),
    }
}

fn default_encoder(objective: ModelObjective, task: Task) -> EncoderKind {
    match objective {
        ModelObjective::Dgi | ModelObjective::Gca => EncoderKind::Gcn,
        ModelObjective::InfoGraph | ModelObjective::AdGcl => EncoderKind::Gin,
        ModelObjective::GraphCl | ModelObjective::Supervised => match task {
            Task::NodeClassification => EncoderKind::Gcn,
            Task::GraphClassification => EncoderKind::Gin,
        },
    }
}

impl ModelSpec {
    pub fn resolve(&self, dataset_id: &str, task: Task) -> Result<ResolvedModel> {
        if let Some(kind) = self.objective.contrastive() {
            if !kind.supports(task) {
                return Err(RunnerError::Config(format!("model {}: {} does not support this task", self.id, kind.name())));
            }
        }
        let kind = self.encoder.unwrap_or_else(|| default_encoder(self.objective, task));
        let key = model_key(self.objective, kind);
        let dkey = hparams::dataset_key(dataset_id, task);
        let o = &self.hparams;
        let base = hparams::lookup(key, &dkey).ok_or_else(|| {
            RunnerError::Config(format!("model {}: no default hyperparameters for ({key}, {dkey})", self.id))
        })?;
        let hp = Hparams {
            lr: o.lr.unwrap_or(base.lr),
            epochs: o.epochs.unwrap_or(base.epochs),
            patience: o.patience.or(base.patience),
            dropout: o.dropout.unwrap_or(base.dropout),
            layers: o.layers.unwrap_or(base.layers),
            hidden_dim: o.hidden_dim.unwrap_or(base.hidden_dim),
        };
        let mut encoder = EncoderConfig::new(kind, hp.layers, hp.hidden_dim);
        encoder.dropout = hp.dropout;
        if self.objective == ModelObjective::Dgi {
            encoder.activation = Activation::Prelu;
        }
        if kind == EncoderKind::Gin {
            encoder.readout = Readout::Sum;
        }
        if let Some(a) = o.activation {
            encoder.activation = a;
        }
        if let Some(r) = o.readout {
            encoder.readout = r;
        }
        encoder.validate().map_err(|e| RunnerError::Config(format!("model {}: {e}", self.id)))?;
        let contrastive = self.objective.contrastive().map(|k| {
            let mut obj = Objective::new(k);
            if let Some(t) = o.tau {
                obj.tau = t;
            }
            if let Some(l) = o.lambda {
                obj.lambda = l;
            }
            if let Some(v) = &o.view1 {
                obj.view1 = v.clone();
            }
            if let Some(v) = &o.view2 {
                obj.view2 = v.clone();
            }
            obj
        });
        Ok(ResolvedModel {
            id: self.id.clone(),
            objective: self.objective,
            encoder,
            hparams: hp,
            batch_size: o.batch_size.unwrap_or(64),
            contrastive,
            probe_epochs: o.probe_epochs.unwrap_or(300),
            probe_lr: o.probe_lr.unwrap_or(1e-2),
        })
    }
}
