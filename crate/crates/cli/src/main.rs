use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cutforge_core::synth::SynthStyle;
use cutforge_core::{Algorithm, PartitionMode, RewardScale};

mod commands;
mod compare;
mod failure;
mod manifest;

use failure::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "cutforge",
    version,
    about = "Build, train and check packet-classification decision trees"
)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a ClassBench rule file and summarize it.
    Validate { rules: PathBuf },
    /// Build a tree with a heuristic builder and export it.
    Build(BuildArgs),
    /// Train a tree-growing policy and export the best tree found.
    Train(Box<TrainArgs>),
    /// Check an exported tree against the linear-scan matcher.
    Eval(EvalArgs),
    /// Side-by-side statistics of exported trees over one rule file.
    Compare(CompareArgs),
    /// Write a synthetic rule file.
    Gen(GenArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Builder {
    Hicuts,
    Efficuts,
}

#[derive(Args, Debug)]
struct BuildArgs {
    rules: PathBuf,
    #[arg(long, value_enum, default_value = "hicuts")]
    builder: Builder,
    #[arg(long, default_value_t = 16)]
    binth: usize,
    #[arg(long, default_value_t = 1.0)]
    spfac: f64,
    #[arg(long, default_value_t = 32)]
    max_cuts: u32,
    /// Give up once the tree or forest holds more nodes than this.
    #[arg(long, default_value_t = cutforge_core::DEFAULT_MAX_NODES)]
    max_nodes: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

impl From<ScaleArg> for RewardScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => RewardScale::Linear,
            ScaleArg::Log => RewardScale::Log,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PartitionArg {
    None,
    Simple,
    Efficuts,
}

impl From<PartitionArg> for PartitionMode {
    fn from(p: PartitionArg) -> Self {
        match p {
            PartitionArg::None => PartitionMode::None,
            PartitionArg::Simple => PartitionMode::Simple,
            PartitionArg::Efficuts => PartitionMode::Efficuts,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Ppo,
    ActorCritic,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Ppo => Algorithm::Ppo,
            AlgorithmArg::ActorCritic => Algorithm::ActorCritic,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    rules: PathBuf,
    /// Time-space coefficient: 1 optimizes depth only, 0 memory only.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "linear")]
    reward_scale: ScaleArg,
    #[arg(long, value_enum, default_value = "none")]
    partition: PartitionArg,
    /// Actions per rollout before the remaining nodes are forced into leaves.
    #[arg(long, default_value_t = 15_000)]
    max_rollout_len: usize,
    #[arg(long, default_value_t = 100)]
    max_depth: u32,
    #[arg(long, default_value_t = 16)]
    binth: usize,
    #[arg(long, env = "CUTFORGE_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total experience budget.
    #[arg(long, default_value_t = 10_000_000)]
    timesteps: usize,
    /// Optional cap on the number of trees grown.
    #[arg(long)]
    rollouts: Option<usize>,
    /// Stop once a complete tree scores this objective or lower.
    #[arg(long)]
    target_objective: Option<f64>,
    #[arg(long, default_value_t = 60_000)]
    batch: usize,
    #[arg(long, default_value_t = 1000)]
    minibatch: usize,
    #[arg(long, default_value_t = 30)]
    sgd_iters: usize,
    #[arg(long, default_value_t = 5e-5)]
    lr: f64,
    #[arg(long, default_value_t = 0.01)]
    entropy_coeff: f64,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "512,512")]
    hidden: Vec<usize>,
    #[arg(long, value_enum, default_value = "ppo")]
    algorithm: AlgorithmArg,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Also write a JSON-lines trace of the best rollout's experiences.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    tree: PathBuf,
    rules: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    packets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    rules: PathBuf,
    #[arg(required = true)]
    trees: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value = "firewall")]
    style: SynthStyle,
    #[arg(long, default_value_t = 1000)]
    rules: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { rules } => commands::validate(&rules),
        Command::Build(a) => commands::build(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Gen(a) => commands::gen(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
