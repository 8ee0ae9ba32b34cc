//! Experiment harness: named methods, run directories with config echoes,
//! learning-curve CSVs, checkpoints, plots, the grid runner, and report
//! assembly.

mod grid;
pub mod plot;
mod report;

pub use grid::{run_grid, CellOutcome, GridConfig};
pub use report::{collect_records, write_report};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{fixed_time_plan, make_baseline_agent, webster_inputs_from_counts, webster_plan, BaselineDesign, DEFAULT_STARTUP_LOST_S, WEBSTER_WINDOW_S};
use crate::error::{Error, Result};
use crate::metrics::green_time_ratio;
use crate::nn::{load_checkpoint, save_checkpoint};
use crate::scenario::Scenario;
use crate::signal::DEFAULT_AAP_DELTAS;
use crate::train::{evaluate, evaluate_with_mode, train_with_callback, ActionDesign, EvalReport, Topology, TrafficEnv, TrainConfig};
use crate::Real;

/// Evaluation episodes share one arrival-seed base so every method sees the
/// same five fresh-traffic draws.
pub const EVAL_SEED_BASE: u64 = 777_000;
pub const DEFAULT_EVAL_EPISODES: usize = 5;

/// Every controller selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    AapCcda,
    AapFc,
    AapFd,
    Cnp,
    Non,
    Spd,
    Asp,
    Ft30,
    Ft40,
    Webster,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::AapCcda,
        Method::AapFc,
        Method::AapFd,
        Method::Cnp,
        Method::Non,
        Method::Spd,
        Method::Asp,
        Method::Ft30,
        Method::Ft40,
        Method::Webster,
    ];

    pub fn parse(name: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::spec(format!("unknown method {name}; expected one of aap-ccda|aap-fc|aap-fd|cnp|non|spd|asp|ft30|ft40|webster")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::AapCcda => "aap-ccda",
            Method::AapFc => "aap-fc",
            Method::AapFd => "aap-fd",
            Method::Cnp => "cnp",
            Method::Non => "non",
            Method::Spd => "spd",
            Method::Asp => "asp",
            Method::Ft30 => "ft30",
            Method::Ft40 => "ft40",
            Method::Webster => "webster",
        }
    }

    /// Whether this method learns a policy (rule-based controllers do not).
    pub fn is_trained(self) -> bool {
        !matches!(self, Method::Ft30 | Method::Ft40 | Method::Webster)
    }

    pub fn design(self, intervention_dt: u32) -> Result<ActionDesign> {
        match self {
            Method::AapCcda | Method::AapFc | Method::AapFd => {
                Ok(ActionDesign::AdjustAllPhases { deltas: DEFAULT_AAP_DELTAS.to_vec() })
            }
            Method::Cnp => Ok(make_baseline_agent(BaselineDesign::ChooseNextPhase, intervention_dt)),
            Method::Non => Ok(make_baseline_agent(BaselineDesign::NextOrNot, intervention_dt)),
            Method::Spd => Ok(make_baseline_agent(BaselineDesign::SetPhaseDuration, intervention_dt)),
            Method::Asp => Ok(make_baseline_agent(BaselineDesign::AdjustSinglePhase, intervention_dt)),
            Method::Ft30 | Method::Ft40 | Method::Webster => {
                Err(Error::spec(format!("{} is rule-based and not trainable", self.name())))
            }
        }
    }

    pub fn topology(self) -> Topology {
        match self {
            Method::AapFc => Topology::Fc,
            Method::AapFd => Topology::Fd,
            _ => Topology::Ccda,
        }
    }
}

/// Echo of everything needed to reproduce one run, written into the run
/// directory as structured text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    pub method: String,
    pub dt: u32,
    pub seed: u64,
    pub eval_episodes: usize,
    pub eval_seed_base: u64,
    pub train: TrainConfig,
}

/// Persisted outcome of one grid cell; reports are pure functions of these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub method: String,
    pub dt: u32,
    pub seed: u64,
    pub episode_rewards: Vec<Real>,
    pub mean_queue_m: Real,
    pub steadiness: Real,
    pub group_labels: Vec<String>,
    /// Green-time ratio per period per group for the first evaluation episode.
    pub green_ratio: Vec<Vec<Real>>,
    pub eval: EvalReport,
}

pub fn run_dir_name(scenario: &str, method: Method, dt: u32, seed: u64) -> String {
    format!("{scenario}__{}__dt{dt}__seed{seed}", method.name())
}

/// Trains one method on one scenario and writes the full run directory:
/// config echo, learning-curve CSV, periodic and final checkpoints, the run
/// record, and SVG plots.
pub fn train_run(
    scenario: &Scenario,
    method: Method,
    dt: u32,
    seed: u64,
    episodes: usize,
    out_dir: &Path,
) -> Result<RunRecord> {
    let design = method.design(dt)?;
    let mut env = TrafficEnv::new(scenario.env_config(design, dt)?)?;
    let config = TrainConfig { seed, episodes, ..TrainConfig::default() };
    std::fs::create_dir_all(out_dir)?;
    let run_config = RunConfig {
        scenario: scenario.name.clone(),
        method: method.name().to_string(),
        dt,
        seed,
        eval_episodes: DEFAULT_EVAL_EPISODES,
        eval_seed_base: EVAL_SEED_BASE,
        train: config.clone(),
    };
    std::fs::write(
        out_dir.join("config.toml"),
        toml::to_string_pretty(&run_config).map_err(|e| Error::spec(format!("config echo: {e}")))?,
    )?;

    let snapshot_every = (episodes / 4).max(1);
    let out = train_with_callback(&mut env, &config, method.topology(), |stats, net| {
        if (stats.episode + 1) % snapshot_every == 0 && stats.episode + 1 < episodes {
            let path = out_dir.join(format!("checkpoint_ep{:05}.bin", stats.episode + 1));
            save_checkpoint(net, method.name(), &path)?;
        }
        Ok(())
    })?;
    save_checkpoint(&out.net, method.name(), &out_dir.join("checkpoint.bin"))?;
    write_learning_curve(&out_dir.join("learning_curve.csv"), &out.episodes)?;

    let eval = evaluate(&mut env, &out.net, DEFAULT_EVAL_EPISODES, EVAL_SEED_BASE)?;
    let record = finish_record(
        scenario,
        method,
        dt,
        seed,
        out.episodes.iter().map(|e| e.cumulative_reward).collect(),
        eval,
        out_dir,
    )?;

    plot::line_chart(
        &out_dir.join("learning_curve.svg"),
        &format!("{} on {} (dt={})", method.name(), scenario.name, dt),
        "episode",
        "cumulative reward",
        &[plot::Series {
            label: method.name().to_string(),
            points: record.episode_rewards.iter().enumerate().map(|(i, &r)| (i as f64, r)).collect(),
        }],
    )?;
    Ok(record)
}

/// Runs a rule-based controller (fixed-time or Webster) through the shared
/// evaluation protocol and writes the same run-directory artifacts minus the
/// checkpoint.
pub fn baseline_run(scenario: &Scenario, method: Method, out_dir: &Path) -> Result<RunRecord> {
    if method.is_trained() {
        return Err(Error::spec(format!("{} needs train_run", method.name())));
    }
    let phases = scenario.intersection.phases.len();
    let design = ActionDesign::AdjustAllPhases { deltas: DEFAULT_AAP_DELTAS.to_vec() };
    let mut env = TrafficEnv::new(scenario.env_config(design, 0)?)?;
    std::fs::create_dir_all(out_dir)?;
    let run_config = RunConfig {
        scenario: scenario.name.clone(),
        method: method.name().to_string(),
        dt: 0,
        seed: 0,
        eval_episodes: DEFAULT_EVAL_EPISODES,
        eval_seed_base: EVAL_SEED_BASE,
        train: TrainConfig::default(),
    };
    std::fs::write(
        out_dir.join("config.toml"),
        toml::to_string_pretty(&run_config).map_err(|e| Error::spec(format!("config echo: {e}")))?,
    )?;

    let horizon = scenario.arrivals.horizon_s;
    let mut episodes = Vec::with_capacity(DEFAULT_EVAL_EPISODES);
    for e in 0..DEFAULT_EVAL_EPISODES {
        let arrival_seed = EVAL_SEED_BASE.wrapping_add(e as u64);
        env.reset(arrival_seed)?;
        let mean_reward = match method {
            Method::Ft30 | Method::Ft40 => {
                let duration = if method == Method::Ft30 { 30 } else { 40 };
                let plan = fixed_time_plan(
                    duration,
                    phases,
                    scenario.signal.yellow_s,
                    scenario.signal.min_green_s,
                    scenario.signal.max_green_s,
                )?;
                env.set_pending_plan(plan)?;
                env.advance_plain(horizon)?
            }
            Method::Webster => run_webster_episode(scenario, &mut env)?,
            _ => unreachable!("trained methods handled above"),
        };
        episodes.push(crate::train::episode_summary(&env, arrival_seed, mean_reward)?);
    }
    let eval = crate::train::summarize(episodes);
    finish_record(scenario, method, 0, 0, Vec::new(), eval, out_dir)
}

/// One Webster evaluation episode: run ten-minute blocks, re-time the plan
/// from the measured volumes after each block.
fn run_webster_episode(scenario: &Scenario, env: &mut TrafficEnv) -> Result<Real> {
    let horizon = scenario.arrivals.horizon_s;
    let lost = scenario.signal.yellow_s as f64 + DEFAULT_STARTUP_LOST_S;
    let mut reward_weighted = 0.0;
    let mut seconds = 0u32;
    while !env.done() {
        let block = WEBSTER_WINDOW_S.min(horizon - env.clock_s());
        let mean = env.advance_plain(block)?;
        reward_weighted += mean * block as Real;
        seconds += block;
        if !env.done() {
            let counts = env.arrival_volumes(WEBSTER_WINDOW_S);
            let inputs = webster_inputs_from_counts(&counts, WEBSTER_WINDOW_S, &scenario.intersection, lost)?;
            let timed = webster_plan(
                &inputs,
                scenario.signal.yellow_s,
                scenario.signal.min_green_s,
                scenario.signal.max_green_s,
            )?;
            env.set_pending_plan(timed.plan)?;
        }
    }
    Ok(reward_weighted / seconds as Real)
}

fn finish_record(
    scenario: &Scenario,
    method: Method,
    dt: u32,
    seed: u64,
    episode_rewards: Vec<Real>,
    eval: EvalReport,
    out_dir: &Path,
) -> Result<RunRecord> {
    let groups = scenario.direction_groups();
    let group_phases: Vec<Vec<usize>> = groups.iter().map(|g| g.phases.clone()).collect();
    let green_ratio: Vec<Vec<Real>> = if eval.episodes[0].duration_rows.is_empty() {
        Vec::new()
    } else {
        green_time_ratio(&eval.episodes[0].duration_rows, &group_phases)?
    };
    let record = RunRecord {
        scenario: scenario.name.clone(),
        method: method.name().to_string(),
        dt,
        seed,
        episode_rewards,
        mean_queue_m: eval.mean_queue_m,
        steadiness: eval.steadiness,
        group_labels: groups.iter().map(|g| g.label.clone()).collect(),
        green_ratio,
        eval,
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| Error::spec(format!("record: {e}")))?;
    std::fs::write(out_dir.join("record.json"), json)?;

    if !record.green_ratio.is_empty() {
        let series: Vec<plot::Series> = record
            .group_labels
            .iter()
            .enumerate()
            .map(|(g, label)| plot::Series {
                label: label.clone(),
                points: record.green_ratio.iter().enumerate().map(|(p, row)| (p as f64, row[g])).collect(),
            })
            .collect();
        plot::line_chart(
            &out_dir.join("green_ratio.svg"),
            &format!("green-time ratio: {} on {} (dt={})", method.name(), scenario.name, dt),
            "period",
            "ratio",
            &series,
        )?;
    }
    Ok(record)
}

/// Learning-curve CSV, one row per episode. Column order is fixed:
/// `episode,cum_reward,decisions,updates,policy_loss,value_loss,entropy,total_loss,mean_queue_m`.
fn write_learning_curve(path: &Path, episodes: &[crate::train::EpisodeStats]) -> Result<()> {
    let mut csv = String::from("episode,cum_reward,decisions,updates,policy_loss,value_loss,entropy,total_loss,mean_queue_m\n");
    for e in episodes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            e.episode,
            e.cumulative_reward,
            e.decisions,
            e.updates,
            e.policy_loss,
            e.value_loss,
            e.entropy,
            e.total_loss,
            e.mean_queue_m
        );
    }
    std::fs::write(path, csv)?;
    Ok(())
}

/// Loads a checkpoint and evaluates it on a scenario.
pub fn eval_checkpoint(
    checkpoint: &Path,
    scenario: &Scenario,
    dt: u32,
    episodes: usize,
    seed_base: u64,
    greedy: bool,
) -> Result<(Method, EvalReport)> {
    let (net, method_name) = load_checkpoint::<Real>(checkpoint)?;
    let method = Method::parse(&method_name)?;
    let design = method.design(dt)?;
    let mut env = TrafficEnv::new(scenario.env_config(design, dt)?)?;
    let report = evaluate_with_mode(&mut env, &net, episodes, seed_base, greedy)?;
    Ok((method, report))
}

pub fn scenario_from_path(path: &Path) -> Result<(Scenario, PathBuf)> {
    let scenario = Scenario::load(path)?;
    Ok((scenario, path.to_path_buf()))
}
