//! Immutable undirected attributed graphs and graph collections.
//!
//! Edges are stored once as `(i, j)` with `i < j`, so symmetry of the
//! adjacency is a property of the representation rather than of the data.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("feature matrix has {rows} rows for {nodes} nodes")]
    FeatureRows { rows: usize, nodes: usize },
    #[error("{what} has length {len}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("node {0} is in both the train and test mask")]
    OverlappingMasks(usize),
    #[error("cannot split fewer than two items (got {0})")]
    SplitTooSmall(usize),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("invalid flip ({0}, {1})")]
    InvalidFlip(usize, usize),
    #[error("{0}")]
    InvalidDataset(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Undirected graph with dense node features and optional labels/masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    node_labels: Option<Vec<usize>>,
    graph_label: Option<usize>,
    train_mask: Option<Vec<bool>>,
    test_mask: Option<Vec<bool>>,
}

fn normalize_pair(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Graph {
    /// Builds a graph from pairs given in either orientation. Self-loops,
    /// out-of-range endpoints and duplicates (in any orientation) are errors.
    pub fn new(num_nodes: usize, edges: &[(usize, usize)], features: Array2<f64>) -> Result<Self> {
        if features.nrows() != num_nodes {
            return Err(GraphError::FeatureRows {
                rows: features.nrows(),
                nodes: num_nodes,
            });
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(GraphError::NodeOutOfRange(a, b, num_nodes));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let p = normalize_pair(a, b);
            if !set.insert(p) {
                return Err(GraphError::DuplicateEdge(p.0, p.1));
            }
        }
        Ok(Self {
            num_nodes,
            edges: set.into_iter().collect(),
            features,
            node_labels: None,
            graph_label: None,
            train_mask: None,
            test_mask: None,
        })
    }

    pub fn with_node_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(GraphError::LengthMismatch {
                what: "node_labels",
                len: labels.len(),
                expected: self.num_nodes,
            });
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn with_graph_label(mut self, label: usize) -> Self {
        self.graph_label = Some(label);
        self
    }

    pub fn with_masks(mut self, train: Vec<bool>, test: Vec<bool>) -> Result<Self> {
        for (what, m) in [("train_mask", &train), ("test_mask", &test)] {
            if m.len() != self.num_nodes {
                return Err(GraphError::LengthMismatch {
                    what,
                    len: m.len(),
                    expected: self.num_nodes,
                });
            }
        }
        if let Some(i) = (0..self.num_nodes).find(|&i| train[i] && test[i]) {
            return Err(GraphError::OverlappingMasks(i));
        }
        self.train_mask = Some(train);
        self.test_mask = Some(test);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn graph_label(&self) -> Option<usize> {
        self.graph_label
    }

    pub fn train_mask(&self) -> Option<&[bool]> {
        self.train_mask.as_deref()
    }

    pub fn test_mask(&self) -> Option<&[bool]> {
        self.test_mask.as_deref()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.binary_search(&normalize_pair(i, j)).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Symmetric 0/1 adjacency with zero diagonal.
    pub fn dense_adjacency(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.num_nodes, self.num_nodes));
        for &(i, j) in &self.edges {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        a
    }

    /// Toggles every pair in `flips` (treated as a set). All other fields are
    /// carried over unchanged.
    pub fn apply_perturbation(&self, flips: &[(usize, usize)]) -> Result<Graph> {
        let mut toggles = BTreeSet::new();
        for &(a, b) in flips {
            if a == b || a >= self.num_nodes || b >= self.num_nodes {
                return Err(GraphError::InvalidFlip(a, b));
            }
            toggles.insert(normalize_pair(a, b));
        }
        let mut edges: BTreeSet<(usize, usize)> = self.edges.iter().copied().collect();
        for p in toggles {
            if !edges.remove(&p) {
                edges.insert(p);
            }
        }
        Ok(Graph {
            edges: edges.into_iter().collect(),
            ..self.clone()
        })
    }

    /// Same structure with replaced features (row count must match).
    pub fn with_features(&self, features: Array2<f64>) -> Result<Graph> {
        if features.nrows() != self.num_nodes {
            return Err(GraphError::FeatureRows {
                rows: features.nrows(),
                nodes: self.num_nodes,
            });
        }
        Ok(Graph {
            features,
            ..self.clone()
        })
    }

    /// Same nodes and attributes with a new, already validated edge list.
    pub(crate) fn with_edge_set(&self, edges: BTreeSet<(usize, usize)>) -> Graph {
        Graph {
            edges: edges.into_iter().collect(),
            ..self.clone()
        }
    }

    /// Subgraph induced by `keep` (original indices, reindexed in the given
    /// order). Labels and masks follow their nodes.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Graph {
        let mut new_index = vec![usize::MAX; self.num_nodes];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (new_index[i], new_index[j]);
                (a != usize::MAX && b != usize::MAX).then(|| normalize_pair(a, b))
            })
            .collect::<BTreeSet<_>>();
        let features = self.features.select(ndarray::Axis(0), keep);
        let pick = |v: &Option<Vec<bool>>| v.as_ref().map(|m| keep.iter().map(|&k| m[k]).collect());
        Graph {
            num_nodes: keep.len(),
            edges: edges.into_iter().collect(),
            features,
            node_labels: self
                .node_labels
                .as_ref()
                .map(|l| keep.iter().map(|&k| l[k]).collect()),
            graph_label: self.graph_label,
            train_mask: pick(&self.train_mask),
            test_mask: pick(&self.test_mask),
        }
    }
}

/// Number of differing entries between two dense adjacencies.
pub fn edit_distance(a: &Array2<f64>, b: &Array2<f64>) -> usize {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[serde(rename = "node")]
    NodeClassification,
    #[serde(rename = "graph")]
    GraphClassification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Ordered graph collection. Node tasks hold exactly one graph and the split
/// indexes its nodes; graph tasks split over graph indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    graphs: Vec<Graph>,
    task: Task,
    num_classes: usize,
    split: Split,
}

impl GraphDataset {
    pub fn new(graphs: Vec<Graph>, task: Task, num_classes: usize, split: Split) -> Result<Self> {
        let invalid = |msg: String| Err(GraphError::InvalidDataset(msg));
        if num_classes == 0 {
            return invalid("num_classes must be positive".into());
        }
        let items = match task {
            Task::NodeClassification => {
                if graphs.len() != 1 {
                    return invalid(format!(
                        "node classification needs exactly one graph, got {}",
                        graphs.len()
                    ));
                }
                let Some(labels) = graphs[0].node_labels() else {
                    return invalid("graph 0: node classification requires node_labels".into());
                };
                if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
                    return invalid(format!("graph 0: node label {l} outside 0..{num_classes}"));
                }
                graphs[0].num_nodes()
            }
            Task::GraphClassification => {
                for (idx, g) in graphs.iter().enumerate() {
                    match g.graph_label() {
                        Some(l) if l < num_classes => {}
                        Some(l) => {
                            return invalid(format!(
                                "graph {idx}: graph_label {l} outside 0..{num_classes}"
                            ))
                        }
                        None => return invalid(format!("graph {idx}: missing graph_label")),
                    }
                    if g.num_nodes() == 0 {
                        return invalid(format!("graph {idx}: empty graph"));
                    }
                }
                graphs.len()
            }
        };
        let mut seen = vec![false; items];
        for &i in split.train.iter().chain(split.test.iter()) {
            if i >= items {
                return invalid(format!("split index {i} outside 0..{items}"));
            }
            if seen[i] {
                return invalid(format!("split index {i} appears twice"));
            }
            seen[i] = true;
        }
        Ok(Self {
            graphs,
            task,
            num_classes,
            split,
        })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }

    /// Number of split-able items: nodes for node tasks, graphs otherwise.
    pub fn num_items(&self) -> usize {
        match self.task {
            Task::NodeClassification => self.graphs[0].num_nodes(),
            Task::GraphClassification => self.graphs.len(),
        }
    }

    /// Labels of the split-able items.
    pub fn labels(&self) -> Vec<usize> {
        match self.task {
            Task::NodeClassification => self.graphs[0].node_labels().unwrap_or(&[]).to_vec(),
            Task::GraphClassification => self
                .graphs
                .iter()
                .map(|g| g.graph_label().unwrap_or(0))
                .collect(),
        }
    }
}

/// Seeded random partition of `0..n` with `round(train_fraction·n)` training
/// indices, clamped so that both sides are non-empty. Both lists are sorted.
pub fn random_split(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(GraphError::SplitTooSmall(n));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(GraphError::InvalidFraction(train_fraction));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
