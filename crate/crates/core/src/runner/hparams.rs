//! Published training hyperparameters keyed by (model, dataset), plus
//! small presets for synthetic data.

use serde::{Deserialize, Serialize};

use crate::graph::Task;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hparams {
    pub lr: f64,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub dropout: f64,
    pub layers: usize,
    pub hidden_dim: usize,
}

const fn hp(lr: f64, epochs: usize, patience: Option<usize>, dropout: f64, layers: usize, hidden_dim: usize) -> Hparams {
    Hparams {
        lr,
        epochs,
        patience,
        dropout,
        layers,
        hidden_dim,
    }
}

/// Dataset key used for lookup: a known benchmark name, or a synthetic
/// preset chosen by task.
pub fn dataset_key(dataset_id: &str, task: Task) -> String {
    let k: String = dataset_id.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    match k.as_str() {
        "cora" | "citeseer" | "pubmed" | "proteins" | "nci1" | "dd" => k,
        "ogb" | "ogbarxiv" | "arxiv" => "ogbarxiv".into(),
        _ => match task {
            Task::NodeClassification => "synthetic-node".into(),
            Task::GraphClassification => "synthetic-graph".into(),
        },
    }
}

/// Defaults for `model` ("GCN", "GIN", "DGI", "GraphCL", "GCA", "InfoGraph",
/// "AD-GCL") on `dataset_key`. `None` if the pair has no entry.
pub fn lookup(model: &str, dataset_key: &str) -> Option<Hparams> {
    let planetoid = matches!(dataset_key, "cora" | "citeseer" | "pubmed");
    let tu = matches!(dataset_key, "proteins" | "nci1" | "dd");
    let h = match (model, dataset_key) {
        ("GCN", _) if planetoid => hp(1e-2, 200, Some(10), 0.5, 2, 16),
        ("GCN", "ogbarxiv") => hp(1e-2, 500, Some(10), 0.5, 3, 256),
        ("GCN", "dd") => hp(5e-3, 50, None, 0.0, 4, 32),
        ("GCN", _) if tu => hp(5e-3, 50, None, 0.0, 4, 128),
        ("GIN" | "GraphCL", "proteins") => hp(1e-3, 10, None, 0.0, 8, 512),
        ("GIN" | "GraphCL", "nci1") => hp(1e-4, 10, None, 0.0, 12, 512),
        ("GIN" | "GraphCL", "dd") => hp(1e-4, 20, None, 0.0, 4, 32),
        ("DGI", "pubmed") => hp(1e-3, 1000, Some(20), 0.0, 1, 256),
        ("DGI", "ogbarxiv") => hp(1e-3, 1000, Some(20), 0.0, 2, 512),
        ("DGI", _) if planetoid => hp(1e-3, 1000, Some(20), 0.0, 1, 512),
        ("GraphCL", "ogbarxiv") => hp(1e-3, 1000, Some(20), 0.0, 1, 512),
        ("GraphCL", _) if planetoid => hp(1e-3, 1000, Some(20), 0.0, 1, 512),
        // Layer count is not given for GCA; two layers.
        ("GCA", "ogbarxiv") => hp(1e-3, 500, Some(20), 0.0, 2, 256),
        ("GCA", _) if planetoid => hp(1e-3, 500, Some(20), 0.0, 2, 256),
        ("InfoGraph", _) if tu => hp(1e-3, 100, None, 0.0, 8, 256),
        ("AD-GCL", _) if tu => hp(1e-2, 150, Some(20), 0.5, 5, 32),

        ("GCN", "synthetic-node") => hp(1e-2, 200, None, 0.5, 2, 16),
        ("DGI", "synthetic-node") => hp(1e-3, 300, Some(20), 0.0, 1, 64),
        ("GraphCL", "synthetic-node") => hp(1e-3, 200, Some(20), 0.0, 1, 64),
        ("GCA", "synthetic-node") => hp(1e-3, 200, Some(20), 0.0, 2, 64),
        ("GCN", "synthetic-graph") => hp(5e-3, 50, None, 0.0, 2, 32),
        ("GIN", "synthetic-graph") => hp(1e-3, 30, None, 0.0, 2, 32),
        ("GraphCL", "synthetic-graph") => hp(1e-3, 20, None, 0.0, 2, 32),
        ("InfoGraph", "synthetic-graph") => hp(1e-3, 20, None, 0.0, 2, 32),
        ("AD-GCL", "synthetic-graph") => hp(1e-2, 20, None, 0.5, 2, 32),
        _ => return None,
    };
    Some(h)
}
