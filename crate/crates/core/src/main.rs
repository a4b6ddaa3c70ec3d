use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use msgnn::experiment::{run_experiment, ExperimentConfig, Mode, Overrides};

#[derive(Parser)]
#[command(name = "msgnn", version, about = "Multiscale training of graph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment in the mode given by the config.
    Run(Common),
    /// Print per-level sizes and loss gaps of the configured hierarchy.
    Inspect(Common),
    /// Run the least squares trials.
    Theorem(Common),
    /// Print the forward FLOP cost of the configured schedule.
    Flops(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Output directory (overrides MSGNN_OUT_DIR and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn execute(common: &Common, mode: Option<Mode>) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(&common.config)?;
    let overrides = Overrides {
        mode,
        seed: common.seed_override,
        out: common.out.clone(),
        jobs: Some(common.jobs),
    };
    let cfg = overrides.apply(cfg)?;
    let base = common.config.parent().unwrap_or(Path::new("."));
    let summary = run_experiment(&cfg, base, common.jobs)?;
    let out = cfg.output.join(&cfg.name);
    match (summary.test_acc_mean, summary.test_acc_std) {
        (Some(m), Some(s)) => println!(
            "{} runs, test accuracy {:.2}% ({:.2}%), mean FLOPs {:.3e}, results in {}",
            summary.runs,
            100.0 * m,
            100.0 * s,
            summary.total_flops_mean,
            out.display()
        ),
        _ => println!("{} runs, results in {}", summary.runs, out.display()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => execute(c, None),
        Command::Inspect(c) => execute(c, Some(Mode::CoarsenInspect)),
        Command::Theorem(c) => execute(c, Some(Mode::Theorem)),
        Command::Flops(c) => execute(c, Some(Mode::Flops)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
