//! `hdpan`: positive-unlabeled training and evaluation from the command line.

mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hdpan", version, about = "Positive-unlabeled learning with Hölder-divergence adversarial networks")]
struct Cli {
    /// Increase log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw labeled positives from a training split and write the index lists.
    MakePu(MakePuArgs),
    /// Train one model from a config file.
    #[command(after_help = config::KEYS_HELP)]
    Train(ConfigArgs),
    /// Train every (alpha, lr) pair and report the best cell per alpha.
    #[command(after_help = config::KEYS_HELP)]
    Grid(GridArgs),
    /// Score a checkpoint on the validation or test split.
    Eval(EvalArgs),
    /// Write a gradient saliency map for one image as a PGM file.
    Saliency(SaliencyArgs),
    /// Write a two-Gaussian synthetic benchmark.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct MakePuArgs {
    /// Dataset root holding train/, val/ and test/.
    #[arg(long)]
    dataset: PathBuf,
    /// Labeled positives to draw (default: per dataset name).
    #[arg(long)]
    n_positive: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BinarizeArg::Auto)]
    binarize: BinarizeArg,
    /// Output directory for positives.txt, unlabeled.txt and manifest.toml.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run config (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Run config (TOML); its alpha and lr are replaced per cell.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1.5,1.6,1.7,1.8,1.9,2.0")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.5,0.6,0.7,0.8")]
    lrs: Vec<f64>,
    /// Retrain every cell instead of reusing finished ones.
    #[arg(long)]
    fresh: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset root holding train/, val/ and test/.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    split: SplitArg,
    /// Label rule (default: the one stored in the checkpoint).
    #[arg(long, value_enum)]
    binarize: Option<BinarizeArg>,
}

#[derive(Debug, Args)]
struct SaliencyArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset root holding train/, val/ and test/.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Row of the image within the split.
    #[arg(long)]
    index: usize,
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output root; train/, val/ and test/ are created inside.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    train_per_class: usize,
    #[arg(long, default_value_t = 125)]
    eval_per_class: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Distance between the class means, in standard deviations.
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BinarizeArg {
    Auto,
    Direct,
    Parity,
}

impl From<BinarizeArg> for hdpan_core::Binarize {
    fn from(b: BinarizeArg) -> Self {
        match b {
            BinarizeArg::Auto => Self::Auto,
            BinarizeArg::Direct => Self::Direct,
            BinarizeArg::Parity => Self::Parity,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::MakePu(a) => commands::make_pu(&a.dataset, a.n_positive, a.seed, a.binarize.into(), &a.out),
        Command::Train(a) => commands::train(&a.config),
        Command::Grid(a) => commands::grid(&a.config, &a.alphas, &a.lrs, a.fresh),
        Command::Eval(a) => commands::eval(&a.checkpoint, &a.dataset, a.split == SplitArg::Test, a.binarize.map(Into::into)),
        Command::Saliency(a) => {
            commands::saliency(&a.checkpoint, &a.dataset, a.split == SplitArg::Test, a.index, &a.out)
        }
        Command::Synth(a) => commands::synth(&a.out, a.train_per_class, a.eval_per_class, a.dim, a.separation, a.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdpan: {e}");
            e.exit_code()
        }
    }
}
