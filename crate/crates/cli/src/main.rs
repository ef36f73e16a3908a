use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use shotwise::harness::{
    records_path, run_campaign, save_outcome, summarize_records_file, train, transfer_eval, CampaignSummary,
    ExperimentConfig, TrainSpec, WORKERS_ENV,
};
use shotwise::measurement::Allocator;
use shotwise::vqe::OptimizerConfig;

#[derive(Parser)]
#[command(name = "shotwise", version, about = "Shot-budgeted VQE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a shot-allocation policy with TD3.
    Train {
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint path; the episode log is written next to it.
        #[arg(long, default_value = "results/policy/h2_1.75.json")]
        out: PathBuf,
        #[arg(long, default_value = "data/hamiltonians/H2_1.75.toml")]
        hamiltonian: PathBuf,
        #[arg(long, default_value = "data/ansatz/h2.toml")]
        ansatz: PathBuf,
        /// Maximum shots per energy evaluation.
        #[arg(long, default_value_t = 3000)]
        budget: u64,
        #[arg(long, value_enum, default_value_t = AllocatorArg::Uniform)]
        allocator: AllocatorArg,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
    },
    /// Run an evaluation campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare RL configs against their uniform counterparts with one policy.
    Transfer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute shot statistics from a records.csv (or its directory).
    Stats {
        #[arg(long)]
        records: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AllocatorArg {
    Uniform,
    Vm,
}

fn print_summary(s: &CampaignSummary) {
    let shots = &s.shots;
    println!(
        "{} {}: E_gs {:.10} Ha, {} cliques, {} trials, reached {} / never {}",
        s.system, s.config.method, s.ground_energy, s.n_cliques, shots.trials, shots.reached, shots.never_reached
    );
    if let Some(b) = &shots.shots_to_threshold {
        println!(
            "  shots to 1%: min {:.0}  q25 {:.0}  median {:.0}  q75 {:.0}  max {:.0}  outliers {}",
            b.min,
            b.q25,
            b.median,
            b.q75,
            b.max,
            b.outliers.len()
        );
    }
    if let Some(b) = &shots.shots_to_threshold_exact {
        println!(
            "  (exact-energy criterion: median {:.0}, reached {})",
            b.median, shots.reached_exact
        );
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            episodes,
            seed,
            out,
            hamiltonian,
            ansatz,
            budget,
            allocator,
            max_iterations,
        } => {
            if episodes == 0 {
                bail!("--episodes must be at least 1");
            }
            let spec = TrainSpec {
                hamiltonian,
                ansatz,
                budget,
                allocator: match allocator {
                    AllocatorArg::Uniform => Allocator::Uniform,
                    AllocatorArg::Vm => Allocator::Vm,
                },
                optimizer: OptimizerConfig {
                    max_iterations,
                    ..OptimizerConfig::gd()
                },
                episodes,
                seed,
                ..TrainSpec::default()
            };
            let outcome = train(&spec).context("training failed")?;
            let log_path = save_outcome(&outcome, &out)?;
            let converged = outcome.log.episodes.iter().filter(|e| e.converged).count();
            println!(
                "trained {episodes} episodes (seed {seed}): reward slope {:+.4}/episode, {converged} converged",
                outcome.log.reward_slope()
            );
            println!("checkpoint {}\nepisode log {}", out.display(), log_path.display());
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            log::info!(
                "running {} trials ({} workers from {WORKERS_ENV})",
                cfg.trials,
                std::env::var(WORKERS_ENV).unwrap_or_else(|_| "default".into())
            );
            let campaign = run_campaign(&cfg)?;
            print_summary(&campaign.summary);
            if let Some(dir) = cfg.output_path() {
                println!("outputs in {}", dir.display());
            }
        }
        Command::Transfer {
            checkpoint,
            configs,
            out,
        } => {
            let cfgs = configs
                .iter()
                .map(|p| ExperimentConfig::load(p))
                .collect::<shotwise::Result<Vec<_>>>()?;
            let report = transfer_eval(&checkpoint, &cfgs)?;
            print!("{}", report.to_table());
            if let Some(path) = out {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
                }
                std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
                    .with_context(|| path.display().to_string())?;
            }
        }
        Command::Stats { records } => {
            let path = records_path(&records);
            let summary = summarize_records_file(&path)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}
