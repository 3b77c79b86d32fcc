use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use super::config::{DatasetSource, ExperimentConfig, ModelObjective, ResolvedModel};
use super::{io_err, Result, RunnerError};
use crate::attacks::{attack_dataset, AttackConfig};
use crate::contrastive::{train_encoder, write_loss_log, TrainConfig};
use crate::data_io::{generate_graph_classification_dataset, generate_sbm_node_dataset, load_dataset};
use crate::encoders::EncoderModel;
use crate::graph::GraphDataset;
use crate::metrics::{relative_drop, EvalRecord};
use crate::probe::{accuracy, train_probe, train_supervised, LinearProbe, ProbeConfig, SupervisedConfig};
use crate::seed::derive;

/// Caps the number of worker threads.
pub const THREADS_ENV: &str = "GRAIL_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub model: String,
    pub seed: u64,
    pub stage: &'static str,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records_path: PathBuf,
    pub written: usize,
    /// Records already present from an earlier run.
    pub resumed: usize,
    pub failures: Vec<SeedFailure>,
}

type Key = (String, String, String, u64);

pub fn load_experiment_dataset(source: &DatasetSource) -> Result<GraphDataset> {
    Ok(match source {
        DatasetSource::Path(p) => load_dataset(p)?,
        DatasetSource::Sbm(s) => generate_sbm_node_dataset(s)?,
        DatasetSource::SbmGraphs(g) => generate_graph_classification_dataset(g.num_graphs, &g.spec_a, &g.spec_b, g.seed)?,
    })
}

/// Parses a records file. Returns the records and the byte length of the
/// well-formed prefix; only trailing lines may be malformed. A missing file
/// is empty.
pub fn scan_records(path: &Path) -> Result<(Vec<EvalRecord>, usize)> {
    let text = match std::fs::read(path) {
        Ok(b) => String::from_utf8_lossy(&b).into_owned(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut records = Vec::new();
    let mut valid = 0;
    let mut offset = 0;
    let mut bad_line = None;
    for (k, line) in text.split_inclusive('\n').enumerate() {
        offset += line.len();
        if line.trim().is_empty() {
            if bad_line.is_none() {
                valid = offset;
            }
            continue;
        }
        match serde_json::from_str::<EvalRecord>(line.trim_end()) {
            Ok(r) => {
                if let Some(line) = bad_line {
                    return Err(RunnerError::CorruptRecords {
                        path: path.display().to_string(),
                        line,
                    });
                }
                records.push(r);
                valid = offset;
            }
            Err(_) => {
                bad_line.get_or_insert(k + 1);
            }
        }
    }
    Ok((records, valid))
}

/// Drops a malformed tail and makes sure the file ends with a newline.
fn prepare_records_file(path: &Path) -> Result<Vec<EvalRecord>> {
    let (records, valid) = scan_records(path)?;
    if path.exists() {
        let file = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
        file.set_len(valid as u64).map_err(io_err(path))?;
        drop(file);
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            let mut f = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
            f.write_all(b"\n").map_err(io_err(path))?;
        }
    }
    Ok(records)
}

struct RecordWriter {
    path: PathBuf,
    inner: Mutex<BufWriter<File>>,
}

impl RecordWriter {
    fn append(&self, rec: &EvalRecord) -> Result<()> {
        let mut line = serde_json::to_vec(rec).expect("record serializes");
        line.push(b'\n');
        let mut w = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        w.write_all(&line).and_then(|_| w.flush()).map_err(io_err(&self.path))
    }
}

fn thread_count() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0).unwrap_or(0)
}

/// Runs every (model, seed) pair: train, probe, clean accuracy, then each
/// attack not yet recorded. Records are appended to
/// `output_dir/records.jsonl` as they complete; a failing seed is reported
/// and does not stop the others.
pub fn run_protocol(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dataset = load_experiment_dataset(&cfg.dataset)?;
    let models: Vec<ResolvedModel> =
        cfg.models.iter().map(|m| m.resolve(&cfg.dataset_id, dataset.task())).collect::<Result<_>>()?;
    let out = &cfg.output_dir;
    for sub in ["", "logs", "checkpoints"] {
        let d = out.join(sub);
        std::fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let records_path = out.join("records.jsonl");
    let existing = prepare_records_file(&records_path)?;
    let done: HashSet<Key> = existing.iter().map(EvalRecord::key).collect();
    let file = OpenOptions::new().create(true).append(true).open(&records_path).map_err(io_err(&records_path))?;
    let writer = RecordWriter {
        path: records_path.clone(),
        inner: Mutex::new(BufWriter::new(file)),
    };

    let mut jobs = Vec::new();
    for m in &models {
        for s in 0..cfg.num_seeds as u64 {
            let pending: Vec<&AttackConfig> = cfg
                .attacks
                .iter()
                .filter(|a| !done.contains(&(m.id.clone(), cfg.dataset_id.clone(), a.kind.name().to_string(), s)))
                .collect();
            if !pending.is_empty() {
                jobs.push((m, s, pending));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| RunnerError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<std::result::Result<usize, SeedFailure>> =
        pool.install(|| jobs.par_iter().map(|(m, s, pending)| run_seed(cfg, &dataset, m, *s, pending, &writer)).collect());

    let mut written = 0;
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(n) => written += n,
            Err(f) => {
                eprintln!("seed failure: model {} seed {} stage {}: {}", f.model, f.seed, f.stage, f.message);
                failures.push(f);
            }
        }
    }
    Ok(RunSummary {
        records_path,
        written,
        resumed: existing.len(),
        failures,
    })
}

fn run_seed(
    cfg: &ExperimentConfig,
    dataset: &GraphDataset,
    model: &ResolvedModel,
    seed: u64,
    pending: &[&AttackConfig],
    writer: &RecordWriter,
) -> std::result::Result<usize, SeedFailure> {
    let fail = |stage: &'static str, e: &dyn std::fmt::Display| SeedFailure {
        model: model.id.clone(),
        seed,
        stage,
        message: e.to_string(),
    };
    let base = cfg.base_seed;
    let hp = &model.hparams;
    let (encoder, probe, history): (EncoderModel, LinearProbe, _) = match model.objective {
        ModelObjective::Supervised => {
            let sc = SupervisedConfig {
                epochs: hp.epochs,
                lr: hp.lr,
                patience: hp.patience,
                batch_size: model.batch_size,
                seed: derive(base, seed, "train"),
            };
            let o = train_supervised(dataset, &model.encoder, &sc).map_err(|e| fail("train", &e))?;
            (o.encoder, o.probe, o.history)
        }
        _ => {
            let tc = TrainConfig {
                epochs: hp.epochs,
                lr: hp.lr,
                patience: hp.patience,
                batch_size: model.batch_size,
                seed: derive(base, seed, "train"),
            };
            let objective = model.contrastive.as_ref().expect("contrastive objective");
            let o = train_encoder(dataset, &model.encoder, objective, &tc).map_err(|e| fail("train", &e))?;
            let pc = ProbeConfig {
                epochs: model.probe_epochs,
                lr: model.probe_lr,
                seed: derive(base, seed, "probe"),
            };
            let probe = train_probe(&o.encoder, dataset, &pc).map_err(|e| fail("probe", &e))?;
            (o.encoder, probe, o.history)
        }
    };
    let stem = format!("{}_seed{seed}", model.id);
    let log = cfg.output_dir.join("logs").join(format!("{stem}.jsonl"));
    write_loss_log(&log, &history).map_err(|e| fail("checkpoint", &e))?;
    if cfg.save_checkpoints {
        let dir = cfg.output_dir.join("checkpoints");
        encoder.save(&dir.join(format!("{stem}_encoder.json"))).map_err(|e| fail("checkpoint", &e))?;
        probe.save(&dir.join(format!("{stem}_probe.json"))).map_err(|e| fail("checkpoint", &e))?;
    }
    let acc_clean = accuracy(&probe, &encoder, dataset, &dataset.split().test, None).map_err(|e| fail("evaluate", &e))?;

    let mut written = 0;
    for a in pending {
        let ac = AttackConfig {
            seed: derive(base, seed, &format!("attack-{}", a.kind.name())),
            ..(*a).clone()
        };
        let r = attack_dataset(&encoder, &probe, dataset, &ac, cfg.budget_fraction).map_err(|e| fail("attack", &e))?;
        let drop = relative_drop(acc_clean, r.acc_adv).ok();
        let rec = EvalRecord {
            model_id: model.id.clone(),
            dataset_id: cfg.dataset_id.clone(),
            attack_id: a.kind.name().to_string(),
            seed,
            acc_clean,
            acc_adv: r.acc_adv,
            delta_budget: r.delta,
            flips: r.flips,
            loss_trace: r.loss_trace,
            drop,
            negative_drop: drop.is_some_and(|d| d < 0.0),
            wall_ms: r.wall_ms,
        };
        writer.append(&rec).map_err(|e| fail("write", &e))?;
        written += 1;
    }
    Ok(written)
}
