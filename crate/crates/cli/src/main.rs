mod config;
mod report;
mod run;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{load_config, ConfigError, ExperimentConfig, StageConfig, SystemSpec, SCHEMA_VERSION};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE: u8 = 3;
const WORKERS_VAR: &str = "MANE_LAB_WORKERS";

#[derive(Parser)]
#[command(name = "mane-lab", version, about = "Run pipeline experiments and report on them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON experiment config.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a run directory into report.md and SVG plots.
    Report { dir: PathBuf },
    /// Subshift ops: girth, entropy.
    Sft(Single),
    /// Ergodic optimization ops: lock-suite, random, search.
    Ergopt(Single),
    /// Weak KAM ops: potential, critical, sets, channel, checks, curves.
    Weakkam(Single),
    /// Shadowing ops: shadow-suite, closeness, escape.
    Shadow(Single),
    /// Perturbation pipeline ops: palga, palga-sweep.
    Palga(Single),
}

#[derive(Args)]
struct Single {
    op: String,
    /// Stage parameters as a JSON object.
    #[arg(long, default_value = "{}")]
    params: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// System spec as JSON, for weakkam ops.
    #[arg(long)]
    system: Option<String>,
    #[arg(long, default_value = "mane-run")]
    out: PathBuf,
}

impl Single {
    fn config(&self, module: &str) -> Result<ExperimentConfig, ConfigError> {
        let params: Value =
            serde_json::from_str(&self.params).map_err(|e| ConfigError::field("--params", e.to_string()))?;
        let system: Option<SystemSpec> = match &self.system {
            Some(s) => Some(serde_json::from_str(s).map_err(|e| ConfigError::field("--system", e.to_string()))?),
            None => None,
        };
        Ok(ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            system,
            pipeline: vec![StageConfig { module: module.into(), op: self.op.clone(), params }],
            seed: self.seed,
            output_dir: Some(self.out.clone()),
        })
    }
}

fn configure_workers() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var(WORKERS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::field(WORKERS_VAR, format!("expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::field(WORKERS_VAR, e.to_string()))
}

fn execute(cfg: ExperimentConfig, out: Option<PathBuf>) -> ExitCode {
    let stages = match stages::plan(&cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = run::output_dir(&cfg, out);
    match run::run(&cfg, &stages, &dir) {
        Ok(m) => {
            for s in &m.stages {
                let msg = s.message.as_deref().unwrap_or("");
                println!("{:>3} {}/{} {:?} {}", s.index, s.module, s.op, s.status, msg);
            }
            println!("run directory: {}", dir.display());
            if m.failures() > 0 {
                ExitCode::from(EXIT_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("config error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let single = |s: &Single, module: &str| match s.config(module) {
        Ok(cfg) => execute(cfg, None),
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    };
    match &cli.command {
        Command::Run { config, out } => match load_config(config) {
            Ok(cfg) => execute(cfg, out.clone()),
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Report { dir } => match report::report(dir) {
            Ok(r) if r.empty => {
                eprintln!("warning: {} is an empty run, report is empty", dir.display());
                ExitCode::SUCCESS
            }
            Ok(r) if !r.missing.is_empty() => {
                eprintln!("missing artifacts:");
                for m in &r.missing {
                    eprintln!("  {m}");
                }
                ExitCode::from(EXIT_FAILURE)
            }
            Ok(r) => {
                println!("wrote {} with {} plots", dir.join("report.md").display(), r.plots);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Sft(s) => single(s, "sft"),
        Command::Ergopt(s) => single(s, "ergopt"),
        Command::Weakkam(s) => single(s, "weakkam"),
        Command::Shadow(s) => single(s, "shadowing"),
        Command::Palga(s) => single(s, "orbitlab"),
    }
}
