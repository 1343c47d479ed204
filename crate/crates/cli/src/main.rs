use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use surfprobe::embedding::save_jsonl;
use surfprobe::runner::{compare_reports, export_figure_data, run_experiment, ExperimentConfig, RunReport};
use surfprobe::synthetic::{generate, SyntheticSpec};
use surfprobe::Error;

#[derive(Parser)]
#[command(name = "surfprobe", version, about = "Probe embeddings for surface information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run probing experiments.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Generate synthetic embedding tables.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Post-process run reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Override the global seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of worker threads.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Write a synthetic table as JSONL.
    Generate { spec: PathBuf, out: PathBuf },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Diff two run reports; exits 1 when they differ.
    Compare { a: PathBuf, b: PathBuf },
    /// Write CSV inputs for the length and constitution figures.
    Figures { report: PathBuf, dir: PathBuf },
}

enum Outcome {
    Done(serde_json::Value),
    Differs(serde_json::Value),
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Probe(ProbeCommand::Run {
            config,
            seed,
            out,
            workers,
        }) => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output_dir = Some(out);
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let report = run_experiment(&cfg)?;
            let summary: serde_json::Map<_, _> = report
                .reports
                .iter()
                .map(|r| {
                    let means: serde_json::Map<_, _> =
                        r.metrics.iter().map(|(k, m)| (k.clone(), json!(m.mean))).collect();
                    (r.task.clone(), serde_json::Value::Object(means))
                })
                .collect();
            if cfg.output_dir.is_none() {
                print!("{}", report.to_json()?);
                return Ok(Outcome::Done(serde_json::Value::Null));
            }
            Ok(Outcome::Done(json!({
                "output_dir": cfg.output_dir,
                "metrics": summary,
                "failures": report.failures,
            })))
        }
        Command::Synth(SynthCommand::Generate { spec, out }) => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let spec: SyntheticSpec = serde_json::from_str(&text)?;
            let table = generate(&spec)?;
            save_jsonl(&table, &out)?;
            Ok(Outcome::Done(json!({
                "path": out,
                "n_tokens": table.len(),
                "dim": table.dim(),
            })))
        }
        Command::Report(ReportCommand::Compare { a, b }) => {
            let diff = compare_reports(&RunReport::load(&a)?, &RunReport::load(&b)?);
            let value = serde_json::to_value(&diff)?;
            Ok(if diff.is_empty() {
                Outcome::Done(value)
            } else {
                Outcome::Differs(value)
            })
        }
        Command::Report(ReportCommand::Figures { report, dir }) => {
            let files = export_figure_data(&RunReport::load(&report)?, &dir)?;
            Ok(Outcome::Done(json!({ "files": files })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done(serde_json::Value::Null)) => ExitCode::SUCCESS,
        Ok(Outcome::Done(v)) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Differs(v)) => {
            println!("{v}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(2)
        }
    }
}
