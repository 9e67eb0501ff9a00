use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isac_harness::commands::{run, Command, RunOptions};
use isac_harness::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "isac", version, about = "Radar-aided beam association simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render radar images and write ground-truth labels.
    Simulate(Common),
    /// Run the reference detector and write detections.
    Detect(Common),
    /// Beam training and detection-to-VE association.
    Associate(Common),
    /// P(correct) against SNR per antenna.
    SweepSnr(Common),
    /// P(correct) against the number of clutter vehicles.
    SweepClutter(Common),
    /// P(correct) over VE count and clutter count.
    SweepMatrix(Common),
    /// Detection metrics and top-k beam accuracy.
    EvalMetrics(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Also write raw complex images.
    #[arg(long)]
    dump_images: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Detect(c) => (Command::Detect, c),
        Cmd::Associate(c) => (Command::Associate, c),
        Cmd::SweepSnr(c) => (Command::SweepSnr, c),
        Cmd::SweepClutter(c) => (Command::SweepClutter, c),
        Cmd::SweepMatrix(c) => (Command::SweepMatrix, c),
        Cmd::EvalMetrics(c) => (Command::EvalMetrics, c),
    };
    match execute(cmd, common) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<isac_core::Error>() {
                Some(_) => 3,
                None => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn execute(cmd: Command, c: Common) -> anyhow::Result<Vec<PathBuf>> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.experiment.seed = seed;
    }
    run(cmd, cfg, &c.out_dir, RunOptions { threads: c.threads, dump_images: c.dump_images })
}
