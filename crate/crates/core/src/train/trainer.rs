//! Training workflow: collect decisions into the trajectory buffer, and once
//! a mini-batch of contiguous transitions is available, run a few epochs of
//! clipped-surrogate updates and clear the buffer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::nn::{argmax, sample_categorical, Adam, Forward, HeadLayout};
use crate::{Net, Real};

use super::buffer::{TrajectoryBuffer, Transition};
use super::env::{ActionDesign, TrafficEnv};
use super::gae::compute_gae;
use super::ppo::{ppo_loss_and_grads, LossReport, PpoSample, PpoSettings};

/// Actor/critic wiring for the *adjust all phases* agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Decentralized actors, one centralized critic.
    Ccda,
    /// Fully centralized: a single actor over the joint action space.
    Fc,
    /// Fully decentralized: per-phase actors and per-phase critics.
    Fd,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: Real,
    pub memory_capacity: usize,
    pub batch_size: usize,
    pub clip: Real,
    pub gamma: Real,
    pub gae_lambda: Real,
    pub value_coef: Real,
    pub entropy_coef: Real,
    pub epochs_per_update: usize,
    pub episodes: usize,
    pub seed: u64,
    pub paper_entropy_sign: bool,
    pub normalize_advantages: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            memory_capacity: 3000,
            batch_size: 256,
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            value_coef: 0.9,
            entropy_coef: 0.01,
            epochs_per_update: 4,
            episodes: 200,
            seed: 0,
            paper_entropy_sign: false,
            normalize_advantages: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::spec(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::spec(format!("lambda {} outside [0, 1]", self.gae_lambda)));
        }
        if self.clip <= 0.0 {
            return Err(Error::spec("clip range must be positive"));
        }
        if self.batch_size < 2 || self.memory_capacity < self.batch_size {
            return Err(Error::spec("memory must hold at least one mini-batch of size >= 2"));
        }
        if self.epochs_per_update == 0 || self.episodes == 0 {
            return Err(Error::spec("epochs and episodes must be positive"));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::spec("learning rate must be positive"));
        }
        Ok(())
    }

    fn settings(&self) -> PpoSettings<Real> {
        PpoSettings {
            clip: self.clip,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
            paper_entropy_sign: self.paper_entropy_sign,
        }
    }
}

/// Network head wiring for a design/topology pair. Non-decentralizable
/// designs always train a single actor head over their whole action set.
pub fn head_layout(design: &ActionDesign, phases: usize, topology: Topology) -> Result<HeadLayout> {
    let choices = design.choices(phases);
    if design.per_phase() {
        match topology {
            Topology::Ccda => HeadLayout::new(phases, choices, 1),
            Topology::Fd => HeadLayout::new(phases, choices, phases),
            Topology::Fc => {
                let joint = (choices as u64).pow(phases as u32);
                if joint > 1 << 20 {
                    return Err(Error::spec(format!("joint action space of {joint} is too large to train")));
                }
                HeadLayout::new(1, joint as usize, 1)
            }
        }
    } else {
        HeadLayout::new(1, choices, 1)
    }
}

/// Splits a joint action index into per-phase delta indices (little-endian).
pub fn decode_joint(index: usize, phases: usize, choices: usize) -> Vec<usize> {
    let mut rest = index;
    let mut digits = Vec::with_capacity(phases);
    for _ in 0..phases {
        digits.push(rest % choices);
        rest /= choices;
    }
    digits
}

pub fn encode_joint(digits: &[usize], choices: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &d| acc * choices + d)
}

/// Per-episode training log row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub cumulative_reward: Real,
    pub decisions: usize,
    pub updates: usize,
    pub policy_loss: Real,
    pub value_loss: Real,
    pub entropy: Real,
    pub total_loss: Real,
    pub mean_queue_m: Real,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub net: Net,
    pub episodes: Vec<EpisodeStats>,
}

fn select_actions(
    fwd: &Forward<Real>,
    layout: HeadLayout,
    env_heads: usize,
    env_choices: usize,
    greedy: bool,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>, Vec<Real>) {
    let mut net_actions = Vec::with_capacity(layout.actor_heads);
    let mut log_probs = Vec::with_capacity(layout.actor_heads);
    for head in 0..layout.actor_heads {
        let probs = &fwd.probs[head];
        let action = if greedy { argmax(probs) } else { sample_categorical(probs, rng) };
        net_actions.push(action);
        log_probs.push(probs[action].ln());
    }
    let env_actions = if layout.actor_heads == 1 && env_heads > 1 {
        // joint actor driving a per-phase design
        decode_joint(net_actions[0], env_heads, env_choices)
    } else {
        net_actions.clone()
    };
    (net_actions, env_actions, log_probs)
}

struct Updater {
    adam: Adam<Real>,
    settings: PpoSettings<Real>,
    gamma: Real,
    lambda: Real,
    normalize: bool,
    epochs: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl Updater {
    /// One optimization round on a contiguous window, per the workflow:
    /// compute advantages against the stored value estimates, then take
    /// `epochs` clipped-surrogate steps on that window.
    fn update(&mut self, net: &mut Net, buffer: &TrajectoryBuffer) -> Result<LossReport<Real>> {
        let window = buffer.window(self.batch_size, &mut self.rng)?;
        let critic_heads = net.layout().critic_heads;
        let rewards: Vec<Real> = window.iter().map(|t| t.reward).collect();
        let dones: Vec<bool> = window.iter().map(|t| t.done).collect();

        let mut advantages: Vec<Vec<Real>> = vec![Vec::with_capacity(critic_heads); window.len()];
        let mut returns: Vec<Real> = Vec::new();
        for c in 0..critic_heads {
            let values: Vec<Real> = window.iter().map(|t| t.values[c]).collect();
            let bootstrap = window.last().expect("non-empty window").next_values[c];
            let (mut adv, ret) = compute_gae(&rewards, &values, bootstrap, &dones, self.gamma, self.lambda)?;
            if c == 0 {
                returns = ret;
            }
            if self.normalize && adv.len() > 1 {
                let n = adv.len() as Real;
                let mean = adv.iter().sum::<Real>() / n;
                let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<Real>() / n;
                let std = var.sqrt().max(1e-8);
                for a in adv.iter_mut() {
                    *a = (*a - mean) / std;
                }
            }
            for (row, a) in advantages.iter_mut().zip(&adv) {
                row.push(*a);
            }
        }

        let samples: Vec<PpoSample<'_, Real>> = window
            .iter()
            .enumerate()
            .map(|(i, t)| PpoSample {
                input: &t.obs,
                actions: &t.actions,
                old_log_probs: &t.log_probs,
                advantages: &advantages[i],
                return_target: returns[i],
            })
            .collect();

        let mut last = LossReport::default();
        for _ in 0..self.epochs {
            let (report, grads) = ppo_loss_and_grads(net, &samples, &self.settings)?;
            self.adam.step(net, &grads)?;
            last = report;
        }
        Ok(last)
    }
}

/// Trains an agent on `env` and returns the final network plus the
/// per-episode learning curve. Training episodes replay the scenario's
/// arrival seed; the decision policy stays stochastic.
pub fn train(env: &mut TrafficEnv, config: &TrainConfig, topology: Topology) -> Result<TrainOutput> {
    train_with_callback(env, config, topology, |_, _| Ok(()))
}

/// [`train`] with a hook after every episode (progress logs, periodic
/// checkpoints).
pub fn train_with_callback(
    env: &mut TrafficEnv,
    config: &TrainConfig,
    topology: Topology,
    mut after_episode: impl FnMut(&EpisodeStats, &Net) -> Result<()>,
) -> Result<TrainOutput> {
    config.validate()?;
    let (env_heads, env_choices) = env.action_heads();
    let layout = head_layout(env.design(), env.phase_count(), topology)?;
    let mut net = Net::new(layout, config.seed);
    let mut buffer = TrajectoryBuffer::new(config.memory_capacity);
    let mut action_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5EED_0001));
    let mut updater = Updater {
        adam: Adam::new(&net, config.learning_rate),
        settings: config.settings(),
        gamma: config.gamma,
        lambda: config.gae_lambda,
        normalize: config.normalize_advantages,
        epochs: config.epochs_per_update,
        batch_size: config.batch_size,
        rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5EED_0002)),
    };

    let mut episodes = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let mut obs = env.reset(env.base_seed())?;
        let mut cumulative_reward = 0.0;
        let mut decisions = 0usize;
        let mut updates = 0usize;
        let mut loss_acc = LossReport::<Real>::default();
        loop {
            let fwd = net.forward(&obs);
            let (net_actions, env_actions, log_probs) =
                select_actions(&fwd, layout, env_heads, env_choices, false, &mut action_rng);
            let out = env.step(&env_actions)?;
            let next_values = net.forward(&out.obs).values;
            buffer.push(Transition {
                obs,
                actions: net_actions,
                reward: out.reward,
                next_obs: out.obs,
                log_probs,
                values: fwd.values.clone(),
                next_values,
                done: out.done,
            })?;
            cumulative_reward += out.reward;
            decisions += 1;
            if buffer.len() >= config.batch_size {
                let report = updater.update(&mut net, &buffer)?;
                buffer.clear();
                updates += 1;
                loss_acc.policy += report.policy;
                loss_acc.value += report.value;
                loss_acc.entropy += report.entropy;
                loss_acc.total += report.total;
            }
            obs = out.obs;
            if out.done {
                break;
            }
        }
        let scale = if updates > 0 { updates as Real } else { 1.0 };
        let stats = EpisodeStats {
            episode,
            cumulative_reward,
            decisions,
            updates,
            policy_loss: loss_acc.policy / scale,
            value_loss: loss_acc.value / scale,
            entropy: loss_acc.entropy / scale,
            total_loss: loss_acc.total / scale,
            mean_queue_m: metrics::efficiency(env.queue_trace())?,
        };
        after_episode(&stats, &net)?;
        episodes.push(stats);
    }
    Ok(TrainOutput { net, episodes })
}

/// One greedy evaluation episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalEpisode {
    pub arrival_seed: u64,
    pub cumulative_reward: Real,
    pub mean_queue_m: Real,
    pub steadiness: Real,
    pub duration_rows: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: Vec<EvalEpisode>,
    pub mean_queue_m: Real,
    pub steadiness: Real,
}

/// Evaluates a trained policy greedily over fresh-arrival episodes.
pub fn evaluate(env: &mut TrafficEnv, net: &Net, episodes: usize, seed_base: u64) -> Result<EvalReport> {
    evaluate_with_mode(env, net, episodes, seed_base, true)
}

/// Evaluation with explicit action selection: greedy argmax, or the policy's
/// own action distribution (useful when measuring how much a controller
/// actually moves the plan around).
pub fn evaluate_with_mode(
    env: &mut TrafficEnv,
    net: &Net,
    episodes: usize,
    seed_base: u64,
    greedy: bool,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::spec("evaluation needs at least one episode"));
    }
    let layout = net.layout();
    let (env_heads, env_choices) = env.action_heads();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_base);
    let mut out = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let seed = seed_base.wrapping_add(e as u64);
        let mut obs = env.reset(seed)?;
        let mut cumulative_reward = 0.0;
        loop {
            let fwd = net.forward(&obs);
            let (_, env_actions, _) = select_actions(&fwd, layout, env_heads, env_choices, greedy, &mut rng);
            let step = env.step(&env_actions)?;
            cumulative_reward += step.reward;
            obs = step.obs;
            if step.done {
                break;
            }
        }
        out.push(episode_summary(env, seed, cumulative_reward)?);
    }
    Ok(summarize(out))
}

pub(crate) fn episode_summary(env: &TrafficEnv, arrival_seed: u64, cumulative_reward: Real) -> Result<EvalEpisode> {
    let mean_queue_m = metrics::efficiency(env.queue_trace())?;
    let rows = env.duration_rows().to_vec();
    let steadiness = if rows.len() >= 3 { metrics::steadiness(&rows)? } else { 0.0 };
    Ok(EvalEpisode { arrival_seed, cumulative_reward, mean_queue_m, steadiness, duration_rows: rows })
}

pub(crate) fn summarize(episodes: Vec<EvalEpisode>) -> EvalReport {
    let n = episodes.len() as Real;
    let mean_queue_m = episodes.iter().map(|e| e.mean_queue_m).sum::<Real>() / n;
    let steadiness = episodes.iter().map(|e| e.steadiness).sum::<Real>() / n;
    EvalReport { episodes, mean_queue_m, steadiness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::DEFAULT_AAP_DELTAS;
    use crate::testing::{int1_plan, int1_spec, int1_steady_profile};
    use crate::train::env::EnvConfig;

    fn env(dt: u32, horizon: u32) -> TrafficEnv {
        TrafficEnv::new(EnvConfig {
            spec: int1_spec(),
            profile: int1_steady_profile(11, horizon),
            initial_plan: int1_plan(),
            design: ActionDesign::AdjustAllPhases { deltas: DEFAULT_AAP_DELTAS.to_vec() },
            intervention_dt: dt,
            horizon_s: horizon,
        })
        .unwrap()
    }

    #[test]
    fn joint_encoding_round_trips() {
        for index in [0usize, 1, 7, 311, 624] {
            let digits = decode_joint(index, 4, 5);
            assert_eq!(digits.len(), 4);
            assert!(digits.iter().all(|&d| d < 5));
            assert_eq!(encode_joint(&digits, 5), index);
        }
    }

    #[test]
    fn layouts_match_action_space_table() {
        let design = ActionDesign::AdjustAllPhases { deltas: DEFAULT_AAP_DELTAS.to_vec() };
        let ccda = head_layout(&design, 4, Topology::Ccda).unwrap();
        assert_eq!((ccda.actor_heads, ccda.actor_width, ccda.critic_heads), (4, 5, 1));
        let fc = head_layout(&design, 4, Topology::Fc).unwrap();
        assert_eq!((fc.actor_heads, fc.actor_width), (1, 625));
        let fc6 = head_layout(&design, 6, Topology::Fc).unwrap();
        assert_eq!(fc6.actor_width, 15625);
        let fd = head_layout(&design, 4, Topology::Fd).unwrap();
        assert_eq!((fd.actor_heads, fd.critic_heads), (4, 4));
        let asp = head_layout(&ActionDesign::AdjustSinglePhase { delta_s: 5 }, 4, Topology::Ccda).unwrap();
        assert_eq!((asp.actor_heads, asp.actor_width), (1, 9));
    }

    #[test]
    fn zero_update_training_equals_initial_policy() {
        // horizon too short to ever fill a 256-transition batch
        let mut e = env(0, 1200);
        let config = TrainConfig { episodes: 2, seed: 5, ..TrainConfig::default() };
        let out = train(&mut e, &config, Topology::Ccda).unwrap();
        assert!(out.episodes.iter().all(|ep| ep.updates == 0));
        let fresh = Net::new(out.net.layout(), config.seed);
        for (a, b) in out.net.tensors().iter().zip(fresh.tensors()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn training_runs_updates_and_stays_finite() {
        let mut e = env(0, 3000);
        let config = TrainConfig { episodes: 14, batch_size: 64, seed: 3, ..TrainConfig::default() };
        let out = train(&mut e, &config, Topology::Ccda).unwrap();
        let total_updates: usize = out.episodes.iter().map(|ep| ep.updates).sum();
        assert!(total_updates > 0, "batch of 64 fills within 14 episodes");
        assert!(out.episodes.iter().all(|ep| ep.cumulative_reward.is_finite()));
        assert!(out.net.tensors().iter().all(|t| t.data().iter().all(|v| v.is_finite())));
    }

    #[test]
    fn training_is_deterministic_for_fixed_seed() {
        let run = || {
            let mut e = env(0, 2000);
            let config = TrainConfig { episodes: 6, batch_size: 32, seed: 9, ..TrainConfig::default() };
            train(&mut e, &config, Topology::Ccda).unwrap()
        };
        let a = run();
        let b = run();
        for (x, y) in a.episodes.iter().zip(&b.episodes) {
            assert_eq!(x.cumulative_reward.to_bits(), y.cumulative_reward.to_bits());
            assert_eq!(x.total_loss.to_bits(), y.total_loss.to_bits());
        }
        for (t, u) in a.net.tensors().iter().zip(b.net.tensors()) {
            assert_eq!(t.data(), u.data());
        }
    }

    #[test]
    fn fc_and_fd_topologies_train() {
        for topology in [Topology::Fc, Topology::Fd] {
            let mut e = env(0, 2000);
            let config = TrainConfig { episodes: 5, batch_size: 32, seed: 1, ..TrainConfig::default() };
            let out = train(&mut e, &config, topology).unwrap();
            assert_eq!(out.episodes.len(), 5);
        }
    }

    #[test]
    fn greedy_evaluation_is_deterministic() {
        let mut e = env(0, 2000);
        let config = TrainConfig { episodes: 3, batch_size: 32, seed: 2, ..TrainConfig::default() };
        let out = train(&mut e, &config, Topology::Ccda).unwrap();
        let r1 = evaluate(&mut e, &out.net, 2, 777).unwrap();
        let r2 = evaluate(&mut e, &out.net, 2, 777).unwrap();
        assert_eq!(r1.mean_queue_m.to_bits(), r2.mean_queue_m.to_bits());
        assert_eq!(r1.episodes[0].duration_rows, r2.episodes[0].duration_rows);
    }
}
