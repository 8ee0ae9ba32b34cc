use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tsclab::harness::{self, Method};
use tsclab::scenario::Scenario;

#[derive(Parser)]
#[command(name = "tsclab", version, about = "Traffic-signal cycle control laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a controller on a scenario and write a run directory
    Train {
        /// Scenario file (TOML)
        #[arg(long)]
        scenario: PathBuf,
        /// aap-ccda | aap-fc | aap-fd | cnp | non | spd | asp
        #[arg(long)]
        method: String,
        /// Intervention interval in seconds (0 = act every cycle)
        #[arg(long, default_value_t = 0)]
        dt: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        /// Parent directory for the run
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Evaluate a checkpoint greedily on fresh arrivals
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        dt: u32,
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long, default_value_t = harness::EVAL_SEED_BASE)]
        seed_base: u64,
        /// Sample actions from the policy instead of taking the argmax
        #[arg(long, default_value_t = false)]
        stochastic: bool,
    },
    /// Run a rule-based controller (ft30 | ft40 | webster)
    Baseline {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run every cell of an experiment grid config
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Regenerate report.csv and comparison plots from persisted records
    Report {
        #[arg(long)]
        runs: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { scenario, method, dt, seed, episodes, out } => {
            let sc = Scenario::load(&scenario).context("loading scenario")?;
            let method = Method::parse(&method)?;
            let dir = out.join(harness::run_dir_name(&sc.name, method, dt, seed));
            let record = harness::train_run(&sc, method, dt, seed, episodes, &dir)?;
            println!(
                "trained {} on {} (dt={dt}, seed={seed}): mean queue {:.3} m, steadiness {:.4}",
                method.name(),
                sc.name,
                record.mean_queue_m,
                record.steadiness
            );
            println!("run directory: {}", dir.display());
        }
        Command::Eval { checkpoint, scenario, dt, episodes, seed_base, stochastic } => {
            let sc = Scenario::load(&scenario).context("loading scenario")?;
            let (method, report) = harness::eval_checkpoint(&checkpoint, &sc, dt, episodes, seed_base, !stochastic)?;
            println!(
                "evaluated {} on {} (dt={dt}, {episodes} episodes): mean queue {:.3} m, steadiness {:.4}",
                method.name(),
                sc.name,
                report.mean_queue_m,
                report.steadiness
            );
            for e in &report.episodes {
                println!(
                    "  seed {}: mean queue {:.3} m, steadiness {:.4}, reward {:.4}",
                    e.arrival_seed, e.mean_queue_m, e.steadiness, e.cumulative_reward
                );
            }
        }
        Command::Baseline { kind, scenario, out } => {
            let sc = Scenario::load(&scenario).context("loading scenario")?;
            let method = Method::parse(&kind)?;
            let dir = out.join(harness::run_dir_name(&sc.name, method, 0, 0));
            let record = harness::baseline_run(&sc, method, &dir)?;
            println!(
                "{} on {}: mean queue {:.3} m, steadiness {:.4}",
                method.name(),
                sc.name,
                record.mean_queue_m,
                record.steadiness
            );
            println!("run directory: {}", dir.display());
        }
        Command::Grid { config, out } => {
            let grid = harness::GridConfig::load(&config)?;
            let config_dir = config.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
            let outcomes = harness::run_grid(&grid, &config_dir, &out)?;
            let ok = outcomes.iter().filter(|o| o.result.is_ok()).count();
            println!("grid finished: {ok}/{} cells succeeded", outcomes.len());
            for o in outcomes.iter().filter(|o| o.result.is_err()) {
                if let Err(e) = &o.result {
                    println!("  FAILED {}: {e}", o.name);
                }
            }
            println!("report: {}", out.join("report.csv").display());
        }
        Command::Report { runs } => {
            let path = harness::write_report(&runs)?;
            println!("report written to {}", path.display());
        }
    }
    Ok(())
}
