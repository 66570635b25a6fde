use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nanonmr_core::experiment::{self, ConfigError, ExperimentConfig, RunError};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "nanonmr", version, about = "Fisher-information sweeps for nanoscale NMR with NV sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config and write CSV + manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "NANONMR_THREADS")]
        threads: Option<usize>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the closed-form dipolar integrals of one order as CSV.
    Integrals {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        depth: f64,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        order: u8,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, kind, msg) = match self {
            Failure::Config(m) => (EXIT_CONFIG, "config error", m),
            Failure::Numeric(m) => (EXIT_NUMERIC, "numeric failure", m),
            Failure::Io(m) => (EXIT_IO, "i/o error", m),
        };
        eprintln!("nanonmr: {kind}: {msg}");
        ExitCode::from(code)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Point { .. } => Failure::Numeric(e.to_string()),
            RunError::Table(t) => Failure::Io(t.to_string()),
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(experiment::parse_config(&text)?)
}

fn run(config: PathBuf, out: PathBuf, threads: Option<usize>, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = load(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| Failure::Io(e.to_string()))?;
    let output = pool.install(|| experiment::run_experiment(&cfg))?;
    let path = experiment::emit_csv(&output.table, &output.manifest, &out, &cfg.stem())
        .map_err(|e| Failure::Io(e.to_string()))?;
    let infeasible = output.table.reasons.iter().filter(|r| !r.is_empty()).count();
    eprintln!(
        "{}: {} rows ({infeasible} infeasible) in {:.3} s",
        cfg.experiment,
        output.table.rows.len(),
        output.manifest.wall_time_seconds
    );
    println!("{}", path.display());
    Ok(())
}

fn validate(config: PathBuf) -> Result<(), Failure> {
    let cfg = load(&config)?;
    let pretty: serde_json::Value = serde_json::from_str(&cfg.canonical_json()).expect("canonical JSON parses");
    println!("{}", serde_json::to_string_pretty(&pretty).expect("value serializes"));
    Ok(())
}

fn integrals(alpha: f64, depth: f64, order: u8) -> Result<(), Failure> {
    let text = serde_json::json!({
        "experiment": "integral-table",
        "grid": { "depth": depth, "alpha": alpha, "order": order },
    })
    .to_string();
    let cfg = experiment::parse_config(&text)?;
    let output = experiment::run_experiment(&cfg)?;
    let bytes = output.table.to_csv_bytes().map_err(|e| Failure::Io(e.to_string()))?;
    std::io::stdout().write_all(&bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, threads, seed } => run(config, out, threads, seed),
        Command::Validate { config } => validate(config),
        Command::Integrals { alpha, depth, order } => integrals(alpha, depth, order),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
