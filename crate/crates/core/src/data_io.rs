//! Dataset files and synthetic generators.
//!
//! File format (one JSON document):
//! `{"task": "node"|"graph", "num_classes": k, "graphs": [{"num_nodes": n,
//! "edges": [[i,j],...], "features": [[...],...], "node_labels": [...]?,
//! "graph_label": l?}], "split": {"train": [...], "test": [...]}?}`

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{random_split, Graph, GraphDataset, GraphError, Split, Task};
use crate::seed::{derive, stream};

/// Seed of the generated split when a file has none.
pub const DEFAULT_SPLIT_SEED: u64 = 0;
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid dataset ({}): {message}", graph.map_or("dataset".to_string(), |g| format!("graph {g}")))]
    Validation { graph: Option<usize>, message: String },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("csv {path}: {message}")]
    Csv { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    num_nodes: usize,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph_label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_mask: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    test_mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetFile {
    task: Task,
    num_classes: usize,
    graphs: Vec<GraphFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn invalid(graph: Option<usize>, e: impl ToString) -> DataError {
    DataError::Validation {
        graph,
        message: e.to_string(),
    }
}

fn build_graph(idx: usize, gf: GraphFile) -> Result<Graph> {
    let n = gf.num_nodes;
    if gf.features.len() != n {
        return Err(invalid(Some(idx), GraphError::FeatureRows { rows: gf.features.len(), nodes: n }));
    }
    let f = gf.features.first().map_or(0, Vec::len);
    if let Some(r) = gf.features.iter().position(|row| row.len() != f) {
        return Err(invalid(Some(idx), format!("feature row {r} has {} columns, expected {f}", gf.features[r].len())));
    }
    let features = Array2::from_shape_vec((n, f), gf.features.into_iter().flatten().collect()).expect("rectangular rows");
    let edges: BTreeSet<(usize, usize)> = gf.edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let mut g = Graph::new(n, &edges, features).map_err(|e| invalid(Some(idx), e))?;
    if let Some(l) = gf.node_labels {
        g = g.with_node_labels(l).map_err(|e| invalid(Some(idx), e))?;
    }
    if let Some(l) = gf.graph_label {
        g = g.with_graph_label(l);
    }
    match (gf.train_mask, gf.test_mask) {
        (Some(tr), Some(te)) => g = g.with_masks(tr, te).map_err(|e| invalid(Some(idx), e))?,
        (None, None) => {}
        _ => return Err(invalid(Some(idx), "train_mask and test_mask must be given together")),
    }
    Ok(g)
}

/// Parses a dataset document. Edges are normalized to `i < j` and
/// deduplicated. Without a split, node tasks use the graph's masks when
/// present; otherwise a seeded 80/20 split is generated.
pub fn parse_dataset(text: &str, split_seed: u64) -> Result<GraphDataset> {
    let file: DatasetFile = serde_json::from_str(text).map_err(|e| DataError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let graphs: Vec<Graph> = file.graphs.into_iter().enumerate().map(|(k, gf)| build_graph(k, gf)).collect::<Result<_>>()?;
    if let Some(f) = graphs.first().map(Graph::feature_dim) {
        if let Some(k) = graphs.iter().position(|g| g.feature_dim() != f) {
            return Err(invalid(Some(k), format!("feature dimension {} differs from {f}", graphs[k].feature_dim())));
        }
    }
    let split = match file.split {
        Some(s) => s,
        None => default_split(&graphs, file.task, split_seed)?,
    };
    GraphDataset::new(graphs, file.task, file.num_classes, split).map_err(|e| {
        let msg = e.to_string();
        let graph = msg.strip_prefix("graph ").and_then(|r| r.split(':').next()).and_then(|d| d.parse().ok());
        invalid(graph, msg)
    })
}

fn default_split(graphs: &[Graph], task: Task, seed: u64) -> Result<Split> {
    let items = match task {
        Task::NodeClassification => {
            let g = graphs.first().ok_or_else(|| invalid(None, "node classification needs exactly one graph"))?;
            if let (Some(tr), Some(te)) = (g.train_mask(), g.test_mask()) {
                return Ok(Split {
                    train: (0..g.num_nodes()).filter(|&i| tr[i]).collect(),
                    test: (0..g.num_nodes()).filter(|&i| te[i]).collect(),
                });
            }
            g.num_nodes()
        }
        Task::GraphClassification => graphs.len(),
    };
    let (train, test) = random_split(items, TRAIN_FRACTION, seed).map_err(|e| invalid(None, e))?;
    Ok(Split { train, test })
}

pub fn load_dataset(path: &Path) -> Result<GraphDataset> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_dataset(&text, DEFAULT_SPLIT_SEED)
}

pub fn dataset_to_json(ds: &GraphDataset) -> serde_json::Value {
    let graphs = ds
        .graphs()
        .iter()
        .map(|g| GraphFile {
            num_nodes: g.num_nodes(),
            edges: g.edges().to_vec(),
            features: g.features().rows().into_iter().map(|r| r.to_vec()).collect(),
            node_labels: g.node_labels().map(<[usize]>::to_vec),
            graph_label: g.graph_label(),
            train_mask: g.train_mask().map(<[bool]>::to_vec),
            test_mask: g.test_mask().map(<[bool]>::to_vec),
        })
        .collect();
    serde_json::to_value(DatasetFile {
        task: ds.task(),
        num_classes: ds.num_classes(),
        graphs,
        split: Some(ds.split().clone()),
    })
    .expect("dataset serializes")
}

pub fn save_dataset(ds: &GraphDataset, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&dataset_to_json(ds)).expect("dataset serializes");
    std::fs::write(path, text).map_err(io_err(path))
}

/// Stochastic block model with block-dependent feature means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Offset of the class mean along the block's feature axis.
    pub feature_signal: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.blocks == 0 || self.nodes_per_block == 0 {
            return Err(DataError::InvalidSpec("blocks and nodes_per_block must be positive".into()));
        }
        if !prob(self.p_in) || !prob(self.p_out) {
            return Err(DataError::InvalidSpec(format!("probabilities {} / {} outside [0, 1]", self.p_in, self.p_out)));
        }
        if self.p_out > self.p_in {
            return Err(DataError::InvalidSpec(format!("p_out {} exceeds p_in {}", self.p_out, self.p_in)));
        }
        if self.feature_dim == 0 {
            return Err(DataError::InvalidSpec("feature_dim must be positive".into()));
        }
        if !self.feature_signal.is_finite() {
            return Err(DataError::InvalidSpec("feature_signal must be finite".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.blocks * self.nodes_per_block
    }

    /// Samples one graph with node labels set to block ids.
    pub fn sample_graph(&self, seed: u64) -> Result<Graph> {
        self.validate()?;
        let n = self.num_nodes();
        let block = |i: usize| i / self.nodes_per_block;
        let mut rng = stream(seed, "sbm-edges");
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if block(i) == block(j) { self.p_in } else { self.p_out };
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let mut rng = stream(seed, "sbm-features");
        let mut x = Array2::from_shape_simple_fn((n, self.feature_dim), || rng.sample::<f64, _>(StandardNormal));
        for i in 0..n {
            x[[i, block(i) % self.feature_dim]] += self.feature_signal;
        }
        let labels = (0..n).map(block).collect();
        Graph::new(n, &edges, x).and_then(|g| g.with_node_labels(labels)).map_err(|e| invalid(Some(0), e))
    }
}

/// Node-classification dataset on one SBM graph, labels = blocks, seeded
/// 80/20 split.
pub fn generate_sbm_node_dataset(spec: &SbmSpec) -> Result<GraphDataset> {
    let g = spec.sample_graph(spec.seed)?;
    let (train, test) = random_split(g.num_nodes(), TRAIN_FRACTION, derive(spec.seed, 0, "split")).map_err(|e| invalid(None, e))?;
    GraphDataset::new(vec![g], Task::NodeClassification, spec.blocks, Split { train, test }).map_err(|e| invalid(None, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSetSpec {
    pub num_graphs: usize,
    pub spec_a: SbmSpec,
    pub spec_b: SbmSpec,
    #[serde(default)]
    pub seed: u64,
}

/// Two-class graph-classification dataset: half the graphs drawn from
/// `spec_a` (label 0), the rest from `spec_b` (label 1), shuffled and split
/// 80/20.
pub fn generate_graph_classification_dataset(num_graphs: usize, spec_a: &SbmSpec, spec_b: &SbmSpec, seed: u64) -> Result<GraphDataset> {
    spec_a.validate()?;
    spec_b.validate()?;
    if num_graphs < 2 {
        return Err(DataError::InvalidSpec(format!("need at least two graphs, got {num_graphs}")));
    }
    if spec_a.feature_dim != spec_b.feature_dim {
        return Err(DataError::InvalidSpec("specs must share feature_dim".into()));
    }
    let na = num_graphs.div_ceil(2);
    let mut graphs = Vec::with_capacity(num_graphs);
    for k in 0..num_graphs {
        let (spec, label) = if k < na { (spec_a, 0) } else { (spec_b, 1) };
        graphs.push(spec.sample_graph(derive(seed, k as u64, "graph"))?.with_graph_label(label));
    }
    graphs.shuffle(&mut stream(seed, "graph-order"));
    let (train, test) = random_split(num_graphs, TRAIN_FRACTION, derive(seed, 0, "split")).map_err(|e| invalid(None, e))?;
    GraphDataset::new(graphs, Task::GraphClassification, 2, Split { train, test }).map_err(|e| invalid(None, e))
}

/// Generator document accepted by `gen-data`: either an SBM node spec or a
/// graph-set spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Graphs(GraphSetSpec),
    Sbm(SbmSpec),
}

pub fn generate(spec: &GeneratorSpec) -> Result<GraphDataset> {
    match spec {
        GeneratorSpec::Sbm(s) => generate_sbm_node_dataset(s),
        GeneratorSpec::Graphs(g) => generate_graph_classification_dataset(g.num_graphs, &g.spec_a, &g.spec_b, g.seed),
    }
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let csv_err = |e: csv::Error| DataError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if row.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(row);
    }
    // A leading row that does not parse as numbers is a header.
    if rows.first().is_some_and(|r| r.iter().any(|c| c.parse::<f64>().is_err())) {
        rows.remove(0);
    }
    Ok(rows)
}

fn parse_cell<T: std::str::FromStr>(path: &Path, line: usize, cell: &str) -> Result<T> {
    cell.parse().map_err(|_| DataError::Csv {
        path: path.display().to_string(),
        message: format!("row {line}: cannot parse {cell:?}"),
    })
}

/// Node-classification dataset from `edges.csv` (`i,j` per row),
/// `features.csv` (one row per node) and `labels.csv` (label in the last
/// column, one row per node).
pub fn convert_edgelist(edges: &Path, features: &Path, labels: &Path, split_seed: u64) -> Result<GraphDataset> {
    let feat_rows = read_csv_rows(features)?;
    let n = feat_rows.len();
    let mut x = Vec::new();
    for (r, row) in feat_rows.iter().enumerate() {
        for c in row {
            x.push(parse_cell::<f64>(features, r + 1, c)?);
        }
    }
    let f = feat_rows.first().map_or(0, Vec::len);
    if x.len() != n * f {
        return Err(invalid(Some(0), "feature rows have differing lengths"));
    }
    let x = Array2::from_shape_vec((n, f), x).expect("checked shape");
    let mut e = BTreeSet::new();
    for (r, row) in read_csv_rows(edges)?.iter().enumerate() {
        if row.len() < 2 {
            return Err(DataError::Csv {
                path: edges.display().to_string(),
                message: format!("row {}: expected two columns", r + 1),
            });
        }
        let i: usize = parse_cell(edges, r + 1, &row[0])?;
        let j: usize = parse_cell(edges, r + 1, &row[1])?;
        e.insert((i.min(j), i.max(j)));
    }
    let y: Vec<usize> = read_csv_rows(labels)?
        .iter()
        .enumerate()
        .map(|(r, row)| parse_cell(labels, r + 1, row.last().map_or("", String::as_str)))
        .collect::<Result<_>>()?;
    let k = y.iter().max().map_or(1, |m| m + 1);
    let edges: Vec<(usize, usize)> = e.into_iter().collect();
    let g = Graph::new(n, &edges, x).and_then(|g| g.with_node_labels(y)).map_err(|e| invalid(Some(0), e))?;
    let (train, test) = random_split(n, TRAIN_FRACTION, split_seed).map_err(|e| invalid(None, e))?;
    GraphDataset::new(vec![g], Task::NodeClassification, k, Split { train, test }).map_err(|e| invalid(None, e))
}
