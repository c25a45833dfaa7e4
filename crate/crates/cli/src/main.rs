//! `wordlab`: generate datasets, run experiments and score label files.
//!
//! Settings are resolved in this order, later winning: built-in defaults for
//! the experiment kind, the `--config` file (with its includes), `--set`
//! assignments in command-line order, then `--seed`, `--workers` and `--out`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 execution failure (every cell of a run failed).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use wordlab::config::{render_config, Config};
use wordlab::data::{read_labels_csv, write_features_csv, write_labels_csv};
use wordlab::harness::{build_dataset, run_experiment, summarize, render_summary, tuned_config, write_outputs, ExperimentKind};
use wordlab::metrics::evaluate;
use wordlab::Error;

#[derive(Parser)]
#[command(name = "wordlab", version, about = "Description-game word learning experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset: features, labels, lexicon and metadata.
    Gen(Common),
    /// Run the experiment described by the configuration.
    Run(Common),
    /// Score predicted label sets against true ones.
    Score {
        truth: PathBuf,
        predictions: PathBuf,
        /// Word universe size; defaults to the largest id seen plus one.
        #[arg(long)]
        m: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Extra `key=value` assignment, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
    Execution(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl Common {
    fn config(&self) -> Result<Config, Failure> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::new(),
        };
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
            c.set(k.trim(), v.trim());
        }
        if let Some(seed) = self.seed {
            c.set("seed", seed);
        }
        if let Some(w) = self.workers {
            c.set("workers", w);
        }
        if let Some(out) = &self.out {
            c.set("output", out.display());
        }
        Ok(c)
    }
}

fn output_dir(spec_output: Option<&Path>, id: &str) -> PathBuf {
    spec_output.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results").join(id))
}

fn cmd_gen(args: &Common) -> Result<(), Failure> {
    let spec = args.config()?.to_spec()?;
    spec.validate_data()?;
    let dir = output_dir(spec.output.as_deref(), &spec.id);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    let data = build_dataset(&spec, 0, spec.dataset.n, spec.tutor.sensitivity_p)?;
    write_features_csv(&dir.join("features.csv"), &data.dataset.objects)?;
    write_labels_csv(&dir.join("labels.csv"), data.dataset.labels.rows())?;
    if let Some(view) = &data.tutor_view {
        write_features_csv(&dir.join("tutor_features.csv"), view)?;
    }
    if let Some(lexicon) = &data.lexicon {
        lexicon.save(&dir.join("lexicon.txt"))?;
    }
    data.metadata(render_config(&spec)).save(&dir.join("metadata.json"))?;
    println!(
        "wrote {} objects x {} features with {} words each to {}",
        data.dataset.rows(),
        data.n,
        data.dataset.k,
        dir.display()
    );
    Ok(())
}

fn cmd_run(args: &Common) -> Result<(), Failure> {
    let mut spec = args.config()?.to_spec()?;
    spec.validate()?;
    let dir = output_dir(spec.output.as_deref(), &spec.id);
    spec.output = Some(dir.clone());
    info!("running {} ({}) into {}", spec.id, spec.kind, dir.display());
    let out = run_experiment(&spec)?;
    let written = write_outputs(&out, &dir)?;
    print!("{}", render_summary(&summarize(&out.records), spec.kind.axis()));
    if spec.kind == ExperimentKind::GridSearch {
        print!("{}", tuned_config(&out.grid));
    }
    for note in &out.notes {
        println!("note: {note}");
    }
    for path in written {
        info!("wrote {}", path.display());
    }
    let failed = out.records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see the error column", out.records.len());
    }
    if !out.records.is_empty() && failed == out.records.len() {
        return Err(Failure::Execution("every cell failed".into()));
    }
    Ok(())
}

fn cmd_score(truth: &Path, predictions: &Path, m: Option<usize>) -> Result<(), Failure> {
    let t = read_labels_csv(truth)?;
    let p = read_labels_csv(predictions)?;
    let seen = t.iter().chain(&p).filter_map(|s| s.max_id()).max().map_or(0, |id| id + 1);
    let m = m.unwrap_or(seen);
    let report = evaluate(&t, &p, &vec![0; m])?;
    println!("rows       {}", t.len());
    println!("sample_f   {:.2}", report.sample_f);
    println!("precision  {:.2}", report.sample_precision);
    println!("recall     {:.2}", report.sample_recall);
    println!("macro_f    {:.2}", report.macro_f);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Score { truth, predictions, m } => cmd_score(truth, predictions, *m),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("data error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Execution(msg)) => {
            eprintln!("execution failed: {msg}");
            ExitCode::from(3)
        }
    }
}
