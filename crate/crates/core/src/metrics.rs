//! Relative adversarial accuracy drop, min-over-attacks aggregation and
//! cross-dataset model comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::AttackKind;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("relative drop undefined for clean accuracy {acc_clean}")]
    UndefinedDrop { acc_clean: f64 },
    #[error("no records")]
    NoRecords,
    #[error("dataset {dataset:?} missing for model {model:?}")]
    IncompleteCoverage { model: String, dataset: String },
    #[error("record line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// One attacked-accuracy measurement of a trained model for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model_id: String,
    pub dataset_id: String,
    #[serde(rename = "attack", alias = "attack_id")]
    pub attack_id: String,
    pub seed: u64,
    pub acc_clean: f64,
    pub acc_adv: f64,
    #[serde(rename = "delta", alias = "delta_budget")]
    pub delta_budget: usize,
    #[serde(default)]
    pub flips: Vec<(usize, usize)>,
    #[serde(default)]
    pub loss_trace: Vec<f64>,
    /// Per-seed drop; `None` when the clean accuracy is zero.
    #[serde(default)]
    pub drop: Option<f64>,
    /// Set when the attacked accuracy exceeds the clean accuracy.
    #[serde(default)]
    pub negative_drop: bool,
    #[serde(default)]
    pub wall_ms: u64,
}

impl EvalRecord {
    /// Key identifying a completed measurement.
    pub fn key(&self) -> (String, String, String, u64) {
        (self.model_id.clone(), self.dataset_id.clone(), self.attack_id.clone(), self.seed)
    }
}

/// `(acc_clean − acc_adv) / acc_clean`, negative values passed through.
pub fn relative_drop(acc_clean: f64, acc_adv: f64) -> Result<f64> {
    if acc_clean == 0.0 || !acc_clean.is_finite() {
        return Err(MetricsError::UndefinedDrop { acc_clean });
    }
    Ok((acc_clean - acc_adv) / acc_clean)
}

/// The attack with the largest drop; ties go to the lexicographically first
/// id.
pub fn min_over_attacks(drops: &[(String, f64)]) -> Result<(String, f64)> {
    let mut best: Option<&(String, f64)> = None;
    for cand in drops {
        best = match best {
            None => Some(cand),
            Some(b) if cand.1 > b.1 || (cand.1 == b.1 && cand.0 < b.0) => Some(cand),
            keep => keep,
        };
    }
    best.cloned().ok_or(MetricsError::NoRecords)
}

/// Mean over `datasets` of `R_model − R_reference`.
pub fn model_delta(
    model_id: &str,
    model: &BTreeMap<String, f64>,
    reference_id: &str,
    reference: &BTreeMap<String, f64>,
    datasets: &[String],
) -> Result<f64> {
    if datasets.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let mut total = 0.0;
    for d in datasets {
        let m = model.get(d).ok_or_else(|| MetricsError::IncompleteCoverage {
            model: model_id.to_string(),
            dataset: d.clone(),
        })?;
        let r = reference.get(d).ok_or_else(|| MetricsError::IncompleteCoverage {
            model: reference_id.to_string(),
            dataset: d.clone(),
        })?;
        total += m - r;
    }
    Ok(total / datasets.len() as f64)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub attack_id: String,
    pub num_seeds: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    /// Drop computed from the seed-mean accuracies.
    pub drop: Option<f64>,
    pub negative_drop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinSummary {
    pub attack_id: String,
    pub acc_mean: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub model_id: String,
    pub dataset_id: String,
    pub num_seeds: usize,
    pub clean_mean: f64,
    pub clean_std: f64,
    pub attacks: Vec<AttackSummary>,
    pub min: Option<MinSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub model_id: String,
    /// `None` when the model lacks a dataset the reference covers.
    pub delta: Option<f64>,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSection {
    pub reference: String,
    pub datasets: Vec<String>,
    pub rows: Vec<DeltaRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub groups: Vec<GroupSummary>,
    pub delta: Option<DeltaSection>,
}

/// Canonical attack order for display; unknown ids sort after, by name.
fn attack_rank(id: &str) -> (usize, String) {
    match id.parse::<AttackKind>() {
        Ok(k) => (AttackKind::ALL.iter().position(|&a| a == k).unwrap_or(usize::MAX), String::new()),
        Err(_) => (usize::MAX, id.to_string()),
    }
}

fn attack_label(id: &str) -> String {
    id.parse::<AttackKind>().map(|k| k.label().to_string()).unwrap_or_else(|_| id.to_string())
}

/// Aggregates records per (model, dataset, attack) over seeds. With a
/// reference model, adds the model-comparison section on Min-row drops.
pub fn summarize(records: &[EvalRecord], reference: Option<&str>) -> Result<RobustnessSummary> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let mut by_group: BTreeMap<(String, String), Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        by_group.entry((r.model_id.clone(), r.dataset_id.clone())).or_default().push(r);
    }
    let mut groups = Vec::new();
    for ((model_id, dataset_id), recs) in by_group {
        let mut clean: BTreeMap<u64, f64> = BTreeMap::new();
        let mut per_attack: BTreeMap<String, BTreeMap<u64, f64>> = BTreeMap::new();
        for r in &recs {
            clean.entry(r.seed).or_insert(r.acc_clean);
            per_attack.entry(r.attack_id.clone()).or_default().insert(r.seed, r.acc_adv);
        }
        let clean_vals: Vec<f64> = clean.values().copied().collect();
        let (clean_mean, clean_std) = mean_std(&clean_vals);
        let mut ids: Vec<String> = per_attack.keys().cloned().collect();
        ids.sort_by_key(|id| attack_rank(id));
        let mut attacks = Vec::new();
        for id in ids {
            let vals: Vec<f64> = per_attack[&id].values().copied().collect();
            let (acc_mean, acc_std) = mean_std(&vals);
            let drop = relative_drop(clean_mean, acc_mean).ok();
            attacks.push(AttackSummary {
                attack_id: id,
                num_seeds: vals.len(),
                acc_mean,
                acc_std,
                drop,
                negative_drop: drop.is_some_and(|d| d < 0.0),
            });
        }
        let drops: Vec<(String, f64)> = attacks.iter().filter_map(|a| a.drop.map(|d| (a.attack_id.clone(), d))).collect();
        let min = min_over_attacks(&drops).ok().map(|(id, drop)| MinSummary {
            acc_mean: attacks.iter().find(|a| a.attack_id == id).map(|a| a.acc_mean).unwrap_or(f64::NAN),
            attack_id: id,
            drop,
        });
        groups.push(GroupSummary {
            model_id,
            dataset_id,
            num_seeds: clean.len(),
            clean_mean,
            clean_std,
            attacks,
            min,
        });
    }
    let delta = reference.map(|reference| delta_section(&groups, reference));
    Ok(RobustnessSummary { groups, delta })
}

fn delta_section(groups: &[GroupSummary], reference: &str) -> DeltaSection {
    let mut min_r: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for g in groups {
        if let Some(m) = &g.min {
            min_r.entry(g.model_id.clone()).or_default().insert(g.dataset_id.clone(), m.drop);
        }
    }
    let empty = BTreeMap::new();
    let ref_r = min_r.get(reference).unwrap_or(&empty);
    let datasets: Vec<String> = ref_r.keys().cloned().collect();
    let models: BTreeSet<&String> = groups.iter().map(|g| &g.model_id).collect();
    let rows = models
        .into_iter()
        .map(|m| {
            let mr = min_r.get(m).unwrap_or(&empty);
            let missing: Vec<String> = datasets.iter().filter(|d| !mr.contains_key(*d)).cloned().collect();
            DeltaRow {
                model_id: m.clone(),
                delta: model_delta(m, mr, reference, ref_r, &datasets).ok(),
                missing,
            }
        })
        .collect();
    DeltaSection {
        reference: reference.to_string(),
        datasets,
        rows,
    }
}

/// Reads JSONL records. Blank lines are skipped; a malformed line is an
/// error carrying its 1-based line number.
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (k, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| MetricsError::Parse {
            line: k + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let pad = widths[c] - s.chars().count();
                if c == 0 { format!("{s}{}", " ".repeat(pad)) } else { format!("{}{s}", " ".repeat(pad)) }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Plain-text table per dataset: models as columns, a Clean row, one row per
/// attack with `mean ± std (↓ drop)` in percent, and a Min row naming the
/// strongest attack.
pub fn render_table(summary: &RobustnessSummary) -> String {
    let datasets: BTreeSet<&String> = summary.groups.iter().map(|g| &g.dataset_id).collect();
    let mut out = String::new();
    for d in datasets {
        let groups: Vec<&GroupSummary> = summary.groups.iter().filter(|g| &g.dataset_id == d).collect();
        let mut attack_ids: Vec<String> = groups.iter().flat_map(|g| g.attacks.iter().map(|a| a.attack_id.clone())).collect();
        attack_ids.sort_by_key(|id| attack_rank(id));
        attack_ids.dedup();
        let mut rows = vec![std::iter::once(format!("Dataset: {d}")).chain(groups.iter().map(|g| g.model_id.clone())).collect::<Vec<_>>()];
        rows.push(
            std::iter::once("Clean".to_string())
                .chain(groups.iter().map(|g| format!("{} ± {}", pct(g.clean_mean), pct(g.clean_std))))
                .collect(),
        );
        for id in &attack_ids {
            let mut row = vec![attack_label(id)];
            for g in &groups {
                row.push(match g.attacks.iter().find(|a| &a.attack_id == id) {
                    Some(a) => {
                        let drop = a.drop.map(|x| format!(" (↓ {})", pct(x))).unwrap_or_default();
                        format!("{} ± {}{drop}", pct(a.acc_mean), pct(a.acc_std))
                    }
                    None => "-".to_string(),
                });
            }
            rows.push(row);
        }
        let mut min_row = vec!["Min".to_string()];
        for g in &groups {
            min_row.push(match &g.min {
                Some(m) => format!("{} (↓ {}) [{}]", pct(m.acc_mean), pct(m.drop), attack_label(&m.attack_id)),
                None => "-".to_string(),
            });
        }
        rows.push(min_row);
        out.push_str(&pad_table(&rows));
        out.push('\n');
    }
    if let Some(ds) = &summary.delta {
        let _ = writeln!(out, "Robustness delta vs {} over [{}] (percentage points, Min rows)", ds.reference, ds.datasets.join(", "));
        let rows: Vec<Vec<String>> = ds
            .rows
            .iter()
            .map(|r| {
                let v = match r.delta {
                    Some(x) => format!("{:+.2}", 100.0 * x),
                    None => format!("n/a (missing {})", r.missing.join(", ")),
                };
                vec![r.model_id.clone(), v]
            })
            .collect();
        out.push_str(&pad_table(&rows));
    }
    out
}
