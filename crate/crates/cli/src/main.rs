//! `fcgprobe`: synthesize a corpus, train a target, attack it, report.
//!
//! Exit status: 0 success, 1 configuration error, 2 data error,
//! 3 some attack seeds failed while the rest completed.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcgprobe::embed::Scheme;
use fcgprobe::experiment::TargetKind;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "fcgprobe", version, about = "Adversarial robustness probe for call-graph malware classifiers")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus.
    Synth(SynthArgs),
    /// Embed a corpus, train a classifier and write model.json.
    Train(TrainArgs),
    /// Run the genetic search against every held-out malware graph.
    Attack(AttackArgs),
    /// Run the random baseline against every held-out malware graph.
    Baseline(AttackArgs),
    /// Check and print metrics files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n_graphs: Option<usize>,
    #[arg(long)]
    min_nodes: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Malicious-pattern motifs per malware graph.
    #[arg(long)]
    malware_motifs: Option<usize>,
    #[arg(long)]
    benign_motifs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    sensitive_apis: Option<PathBuf>,
    #[arg(long)]
    abstraction: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    kind: Option<TargetKind>,
    #[arg(long)]
    holdout: Option<usize>,
    /// Seed of the trained model (MLP, forest, boosting and surrogate).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    initial_ops: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable dependency-aware grouping.
    #[arg(long)]
    no_grouping: bool,
    /// Keep searching after the first success.
    #[arg(long)]
    no_stop: bool,
    /// Attack seeds concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Metrics files; defaults to `<out>/metrics.json`.
    files: Vec<PathBuf>,
}

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const CONFIG: u8 = 1;
    pub const DATA: u8 = 2;
    pub const PARTIAL: u8 = 3;

    pub fn config(message: impl fmt::Display) -> Self {
        Self { code: Self::CONFIG, message: message.to_string() }
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Self { code: Self::DATA, message: message.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(Failure::CONFIG);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set_path(&mut cfg.paths.out, cli.out);
    match cli.command {
        Command::Synth(a) => {
            let s = &mut cfg.synth;
            set(&mut s.n_graphs, a.n_graphs);
            set(&mut s.min_nodes, a.min_nodes);
            set(&mut s.max_nodes, a.max_nodes);
            set(&mut s.malware_motifs, a.malware_motifs);
            set(&mut s.benign_motifs, a.benign_motifs);
            set(&mut s.seed, a.seed);
            commands::synth(&cfg)
        }
        Command::Train(a) => {
            set_path(&mut cfg.paths.corpus, a.corpus);
            set_path(&mut cfg.paths.sensitive_apis, a.sensitive_apis);
            set_path(&mut cfg.paths.abstraction, a.abstraction);
            set(&mut cfg.embed.scheme, a.scheme);
            set(&mut cfg.model.kind, a.kind);
            set(&mut cfg.batch.holdout, a.holdout);
            if let Some(seed) = a.seed {
                cfg.model.mlp.seed = seed;
                cfg.model.surrogate.seed = seed;
                cfg.model.forest.seed = seed;
                cfg.model.adaboost.seed = seed;
            }
            commands::train(&cfg)
        }
        Command::Attack(a) => {
            apply_attack_args(&mut cfg, a);
            commands::attack(&cfg, commands::Mode::Genetic)
        }
        Command::Baseline(a) => {
            apply_attack_args(&mut cfg, a);
            commands::attack(&cfg, commands::Mode::Random)
        }
        Command::Report(a) => commands::report(&cfg, &a.files),
    }
}

fn apply_attack_args(cfg: &mut RunConfig, a: AttackArgs) {
    set_path(&mut cfg.paths.corpus, a.corpus);
    set_path(&mut cfg.paths.model, a.model);
    set(&mut cfg.batch.holdout, a.holdout);
    let at = &mut cfg.attack;
    set(&mut at.population_size, a.population);
    set(&mut at.generations, a.generations);
    set(&mut at.initial_ops, a.initial_ops);
    set(&mut at.baseline_iterations, a.iterations);
    set(&mut at.seed, a.seed);
    at.genome.dependency_aware &= !a.no_grouping;
    at.stop_on_success &= !a.no_stop;
    cfg.batch.parallel |= a.parallel;
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, flag: Option<PathBuf>) {
    if flag.is_some() {
        *slot = flag;
    }
}
