use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use grail::attacks::{attack_dataset, result_json, AttackConfig, AttackKind};
use grail::data_io::{convert_edgelist, generate, load_dataset, save_dataset, GeneratorSpec, DEFAULT_SPLIT_SEED};
use grail::encoders::EncoderModel;
use grail::probe::LinearProbe;
use grail::runner::{report, run_protocol, ExperimentConfig};

#[derive(Parser)]
#[command(name = "grail", version, about = "Robustness evaluation of graph encoders under structure attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceFormat {
    Edgelist,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from an SBM or graph-set spec.
    GenData {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run an experiment config: train, probe and attack every seed.
    Run { config: PathBuf },
    /// Summarize a records file into summary.json and summary.txt.
    Report {
        records: PathBuf,
        /// Model id used as the reference for the robustness delta.
        #[arg(long)]
        reference: Option<String>,
        /// Output directory (defaults to the records' directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attack a saved encoder and probe on a dataset.
    Attack {
        model: PathBuf,
        probe: PathBuf,
        data: PathBuf,
        #[arg(long, default_value = "prbcd")]
        kind: String,
        /// Budget as a fraction of the edge count.
        #[arg(long, default_value_t = 0.05)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        block_size: Option<usize>,
        /// Append the result line to this file as well as printing it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Convert CSV edge list, features and labels into the dataset format.
    Convert {
        #[arg(long, value_enum)]
        from: SourceFormat,
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
        split_seed: u64,
    },
}

/// Failure with its exit code: 1 for configuration or input problems, 2 for
/// runtime failures.
struct Failure(u8, String);

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure(1, e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure(2, e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GenData { spec, output } => {
            let spec: GeneratorSpec = read_json(&spec)?;
            let ds = generate(&spec).map_err(config_err)?;
            save_dataset(&ds, &output).map_err(runtime_err)?;
            println!("wrote {} ({} graphs)", output.display(), ds.graphs().len());
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config).map_err(|e| Failure(e.exit_code() as u8, e.to_string()))?;
            let summary = run_protocol(&cfg).map_err(|e| Failure(e.exit_code() as u8, e.to_string()))?;
            println!(
                "{}: {} new records, {} resumed, {} failed seeds",
                summary.records_path.display(),
                summary.written,
                summary.resumed,
                summary.failures.len()
            );
            if !summary.failures.is_empty() {
                return Err(runtime_err("some seeds failed"));
            }
        }
        Command::Report { records, reference, out } => {
            let files = report(&records, reference.as_deref(), out.as_deref()).map_err(runtime_err)?;
            print!("{}", std::fs::read_to_string(&files.text).map_err(runtime_err)?);
        }
        Command::Attack {
            model,
            probe,
            data,
            kind,
            budget,
            seed,
            steps,
            lr,
            block_size,
            output,
        } => {
            let kind: AttackKind = kind.parse().map_err(config_err)?;
            let encoder = EncoderModel::load(&model).map_err(config_err)?;
            let probe = LinearProbe::load(&probe).map_err(config_err)?;
            let ds = load_dataset(&data).map_err(config_err)?;
            let mut cfg = AttackConfig::new(kind).with_seed(seed);
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.lr = lr.unwrap_or(cfg.lr);
            cfg.block_size = block_size.unwrap_or(cfg.block_size);
            cfg.validate().map_err(config_err)?;
            if !(budget > 0.0 && budget < 1.0) {
                return Err(config_err(format!("budget {budget} outside (0, 1)")));
            }
            let r = attack_dataset(&encoder, &probe, &ds, &cfg, budget).map_err(runtime_err)?;
            let mut line = result_json(kind, r.delta, &r.flips, r.acc_adv, &r.loss_trace, seed);
            line["acc_clean"] = r.acc_clean.into();
            let text = line.to_string();
            println!("{text}");
            if let Some(out) = output {
                use std::io::Write;
                let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&out).map_err(runtime_err)?;
                writeln!(f, "{text}").map_err(runtime_err)?;
            }
        }
        Command::Convert {
            from: SourceFormat::Edgelist,
            edges,
            features,
            labels,
            output,
            split_seed,
        } => {
            let ds = convert_edgelist(&edges, &features, &labels, split_seed).map_err(config_err)?;
            save_dataset(&ds, &output).map_err(runtime_err)?;
            println!("wrote {}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
