//! Single-intersection decision environment: wires the simulator, the signal
//! plans, and the observation/reward pipeline into per-decision steps.
//!
//! Cycle-based designs (*adjust all phases*, *adjust single phase*) rewrite
//! the plan once per decision and then advance the simulator by the realized
//! intervention interval; plan edits take effect at the next cycle start so
//! a running cycle is never truncated. Slot-based designs (*choose next
//! phase*, *next or not*) decide every few seconds, and *set current phase
//! duration* decides at each phase start.

use crate::agent::{build_state, compute_reward, scale_for_network, ActivePhase};
use crate::error::{Error, Result};
use crate::signal::{
    apply_aap, apply_adjust_single_phase, apply_choose_next_phase, apply_next_or_not, apply_set_phase_duration,
    intervention_interval, phase_frame, AapAction, KeepOrChange, SignalColor, SignalFrame, SignalPlan,
};
use crate::sim::{queue_lengths_m, ArrivalProfile, IntersectionSpec, SimState};
use crate::{NetInput, Real};

/// Decision cadence for slot-based designs when no tighter interval is
/// configured.
pub const DEFAULT_SLOT_S: u32 = 5;
/// Duration choices offered to *set current phase duration*.
pub const DEFAULT_SPD_CHOICES: [u32; 7] = [10, 15, 20, 25, 30, 35, 40];

/// The five action designs, each a different way of rewriting the signal.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionDesign {
    /// Every phase moves by a delta drawn from `deltas`, once per decision.
    AdjustAllPhases { deltas: Vec<i32> },
    /// One phase moves by `±delta_s` (or nothing), once per decision.
    AdjustSinglePhase { delta_s: i32 },
    /// Any phase may be selected every `slot_s` seconds.
    ChooseNextPhase { slot_s: u32 },
    /// Keep the current phase or advance to the next, every `slot_s` seconds.
    NextOrNot { slot_s: u32 },
    /// Pick the duration of each phase as it starts.
    SetPhaseDuration { choices_s: Vec<u32> },
}

impl ActionDesign {
    /// True when the agent emits one action per phase (decentralizable).
    pub fn per_phase(&self) -> bool {
        matches!(self, ActionDesign::AdjustAllPhases { .. })
    }

    /// Choices per head: the delta-set size for *adjust all phases*, the full
    /// action count otherwise.
    pub fn choices(&self, phases: usize) -> usize {
        match self {
            ActionDesign::AdjustAllPhases { deltas } => deltas.len(),
            ActionDesign::AdjustSinglePhase { .. } => 2 * phases + 1,
            ActionDesign::ChooseNextPhase { .. } => phases,
            ActionDesign::NextOrNot { .. } => 2,
            ActionDesign::SetPhaseDuration { choices_s } => choices_s.len(),
        }
    }

    /// Whether decisions happen on cycle boundaries (Eq.-style scheduling
    /// applies) rather than on a fixed slot.
    pub fn cycle_based(&self) -> bool {
        matches!(self, ActionDesign::AdjustAllPhases { .. } | ActionDesign::AdjustSinglePhase { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            ActionDesign::AdjustAllPhases { deltas } if deltas.is_empty() => {
                Err(Error::spec("adjust-all-phases needs a non-empty delta set"))
            }
            ActionDesign::AdjustSinglePhase { delta_s } if *delta_s <= 0 => {
                Err(Error::spec("adjust-single-phase delta must be positive"))
            }
            ActionDesign::ChooseNextPhase { slot_s } | ActionDesign::NextOrNot { slot_s } if *slot_s == 0 => {
                Err(Error::spec("slot length must be positive"))
            }
            ActionDesign::SetPhaseDuration { choices_s } if choices_s.is_empty() => {
                Err(Error::spec("set-phase-duration needs duration choices"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub spec: IntersectionSpec,
    pub profile: ArrivalProfile,
    pub initial_plan: SignalPlan,
    pub design: ActionDesign,
    /// Configured intervention interval for cycle-based designs.
    pub intervention_dt: u32,
    pub horizon_s: u32,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: NetInput,
    pub reward: Real,
    pub done: bool,
}

/// Where the unrolled signal currently stands within one wall cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CyclePoint {
    phase: usize,
    offset: u32,
    yellow: bool,
}

fn locate(plan: &SignalPlan, pos: u32) -> CyclePoint {
    let mut rest = pos;
    for (phase, &d) in plan.durations().iter().enumerate() {
        if rest < d {
            return CyclePoint { phase, offset: rest, yellow: false };
        }
        rest -= d;
        if rest < plan.yellow_s() {
            return CyclePoint { phase, offset: rest, yellow: true };
        }
        rest -= plan.yellow_s();
    }
    // pos is taken modulo the wall cycle, so this is unreachable
    unreachable!("cycle position {pos} beyond wall cycle {}", plan.wall_cycle_s())
}

#[derive(Debug)]
pub struct TrafficEnv {
    cfg: EnvConfig,
    profile: ArrivalProfile,
    sim: SimState,
    clock: u32,
    // cycle-based driver
    active_plan: SignalPlan,
    pending_plan: SignalPlan,
    cycle_pos: u32,
    // slot-based driver
    slot_phase: usize,
    green_run: u32,
    window_pos: u32,
    window_green: Vec<u32>,
    spd_durations: Vec<u32>,
    spd_filled: usize,
    // per-episode diagnostics
    queue_trace: Vec<Vec<Real>>,
    duration_rows: Vec<Vec<u32>>,
}

impl TrafficEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.spec.validate()?;
        cfg.profile.validate(&cfg.spec)?;
        cfg.design.validate()?;
        if cfg.initial_plan.phase_count() != cfg.spec.phases.len() {
            return Err(Error::spec(format!(
                "plan has {} phases, intersection defines {}",
                cfg.initial_plan.phase_count(),
                cfg.spec.phases.len()
            )));
        }
        if cfg.horizon_s == 0 {
            return Err(Error::spec("scenario horizon must be positive"));
        }
        let sim = SimState::new(&cfg.spec, &cfg.profile)?;
        let phases = cfg.initial_plan.phase_count();
        let mut env = TrafficEnv {
            profile: cfg.profile.clone(),
            sim,
            clock: 0,
            active_plan: cfg.initial_plan.clone(),
            pending_plan: cfg.initial_plan.clone(),
            cycle_pos: 0,
            slot_phase: 0,
            green_run: 0,
            window_pos: 0,
            window_green: vec![0; phases],
            spd_durations: vec![0; phases],
            spd_filled: 0,
            queue_trace: Vec::new(),
            duration_rows: Vec::new(),
            cfg,
        };
        env.reset_runtime(env.cfg.profile.rng_seed)?;
        Ok(env)
    }

    fn reset_runtime(&mut self, arrival_seed: u64) -> Result<()> {
        self.profile = self.cfg.profile.with_seed(arrival_seed);
        self.sim = SimState::new(&self.cfg.spec, &self.profile)?;
        self.clock = 0;
        self.active_plan = self.cfg.initial_plan.clone();
        self.pending_plan = self.cfg.initial_plan.clone();
        self.cycle_pos = 0;
        self.slot_phase = 0;
        self.green_run = 0;
        self.window_pos = 0;
        self.window_green = vec![0; self.phase_count()];
        self.spd_durations = vec![0; self.phase_count()];
        self.spd_filled = 0;
        self.queue_trace.clear();
        self.duration_rows.clear();
        Ok(())
    }

    /// Starts a fresh episode drawing arrivals from `arrival_seed`.
    pub fn reset(&mut self, arrival_seed: u64) -> Result<NetInput> {
        self.reset_runtime(arrival_seed)?;
        self.observe()
    }

    pub fn done(&self) -> bool {
        self.clock >= self.cfg.horizon_s
    }

    pub fn clock_s(&self) -> u32 {
        self.clock
    }

    pub fn phase_count(&self) -> usize {
        self.cfg.initial_plan.phase_count()
    }

    pub fn design(&self) -> &ActionDesign {
        &self.cfg.design
    }

    pub fn spec(&self) -> &IntersectionSpec {
        &self.cfg.spec
    }

    pub fn horizon_s(&self) -> u32 {
        self.cfg.horizon_s
    }

    /// The scenario's own arrival seed (training episodes replay it).
    pub fn base_seed(&self) -> u64 {
        self.cfg.profile.rng_seed
    }

    /// Per-second, per-lane queue lengths (meters) recorded this episode.
    pub fn queue_trace(&self) -> &[Vec<Real>] {
        &self.queue_trace
    }

    /// Per-period phase durations recorded this episode: the plan at each
    /// cycle start for cycle-based designs, realized green time otherwise.
    pub fn duration_rows(&self) -> &[Vec<u32>] {
        &self.duration_rows
    }

    /// The plan decisions currently apply to.
    pub fn plan(&self) -> &SignalPlan {
        &self.pending_plan
    }

    /// Replaces the pending plan directly (rule-based controllers).
    pub fn set_pending_plan(&mut self, plan: SignalPlan) -> Result<()> {
        if plan.phase_count() != self.phase_count() {
            return Err(Error::spec("replacement plan has a different phase count"));
        }
        self.pending_plan = plan;
        Ok(())
    }

    /// Arrival counts per movement slot over the trailing window.
    pub fn arrival_volumes(&self, window_s: u32) -> [u64; 8] {
        self.sim.arrivals_in_window(window_s)
    }

    /// Observation heads for this design: `(heads, choices per head)`.
    pub fn action_heads(&self) -> (usize, usize) {
        let phases = self.phase_count();
        if self.cfg.design.per_phase() {
            (phases, self.cfg.design.choices(phases))
        } else {
            (1, self.cfg.design.choices(phases))
        }
    }

    /// Network-scaled observation of the current state.
    pub fn observe(&self) -> Result<NetInput> {
        let detectors = self.sim.read_detectors(self.cfg.spec.detector_window_s)?;
        let active: ActivePhase = if self.cfg.design.cycle_based() {
            let point = locate(&self.active_plan, self.cycle_pos);
            if point.yellow {
                None
            } else {
                Some((point.phase, point.offset))
            }
        } else {
            Some((self.slot_phase, self.green_run))
        };
        let obs = build_state(&detectors, &self.cfg.spec, &self.pending_plan, active)?;
        Ok(scale_for_network(&obs, &self.cfg.spec, &self.pending_plan))
    }

    /// Applies one decision and advances to the next decision point.
    ///
    /// `action` holds one index per phase for *adjust all phases* and a
    /// single index for every other design.
    pub fn step(&mut self, action: &[usize]) -> Result<StepOutcome> {
        if self.done() {
            return Err(Error::spec("episode already finished"));
        }
        let reward = match self.cfg.design.clone() {
            ActionDesign::AdjustAllPhases { deltas } => {
                self.pending_plan = apply_aap(&self.pending_plan, &AapAction(action.to_vec()), &deltas)?;
                let interval = intervention_interval(self.cfg.intervention_dt, self.pending_plan.cycle_length())?;
                self.advance_cycles(interval)?
            }
            ActionDesign::AdjustSinglePhase { delta_s } => {
                let index = single_action(action)?;
                if index >= self.cfg.design.choices(self.phase_count()) {
                    return Err(Error::spec(format!("action {index} out of range")));
                }
                if index > 0 {
                    let phase = (index - 1) / 2;
                    let delta = if (index - 1) % 2 == 0 { delta_s } else { -delta_s };
                    self.pending_plan = apply_adjust_single_phase(&self.pending_plan, phase, delta, delta_s)?;
                }
                let interval = intervention_interval(self.cfg.intervention_dt, self.pending_plan.cycle_length())?;
                self.advance_cycles(interval)?
            }
            ActionDesign::ChooseNextPhase { slot_s } => {
                let chosen = single_action(action)?;
                let transition = apply_choose_next_phase(self.slot_phase, chosen, self.phase_count())?;
                self.advance_slot(transition, slot_s)?
            }
            ActionDesign::NextOrNot { slot_s } => {
                let decision = match single_action(action)? {
                    0 => KeepOrChange::Keep,
                    1 => KeepOrChange::Change,
                    other => return Err(Error::spec(format!("next-or-not action {other} out of range"))),
                };
                let transition = apply_next_or_not(self.slot_phase, decision, self.phase_count())?;
                self.advance_slot(transition, slot_s)?
            }
            ActionDesign::SetPhaseDuration { choices_s } => {
                let index = single_action(action)?;
                let duration = *choices_s
                    .get(index)
                    .ok_or_else(|| Error::spec(format!("duration choice {index} out of range")))?;
                self.advance_phase_start(duration)?
            }
        };
        Ok(StepOutcome { obs: self.observe()?, reward, done: self.done() })
    }

    /// Advances the cycle-based driver without a decision (fixed-time and
    /// Webster controllers).
    pub fn advance_plain(&mut self, seconds: u32) -> Result<Real> {
        if !self.cfg.design.cycle_based() {
            return Err(Error::spec("plain advancement needs a cycle-based design"));
        }
        self.advance_cycles(seconds)
    }

    fn sim_second(&mut self, frame: &SignalFrame) -> Result<Real> {
        self.sim.step(frame, 1, &self.profile, &self.cfg.spec)?;
        self.queue_trace.push(queue_lengths_m(&self.sim, &self.cfg.spec));
        self.clock += 1;
        compute_reward(&self.sim.queue_counts(), &self.cfg.spec)
    }

    fn advance_cycles(&mut self, seconds: u32) -> Result<Real> {
        let mut total = 0.0;
        let mut count = 0u32;
        for _ in 0..seconds {
            if self.done() {
                break;
            }
            if self.cycle_pos == 0 {
                self.active_plan = self.pending_plan.clone();
                self.duration_rows.push(self.active_plan.durations().to_vec());
            }
            let point = locate(&self.active_plan, self.cycle_pos);
            let color = if point.yellow { SignalColor::Yellow } else { SignalColor::Green };
            let frame = phase_frame(&self.cfg.spec.phases[point.phase], color);
            total += self.sim_second(&frame)?;
            count += 1;
            self.cycle_pos = (self.cycle_pos + 1) % self.active_plan.wall_cycle_s();
        }
        if count == 0 {
            return Err(Error::spec("no time left to advance"));
        }
        Ok(total / count as Real)
    }

    /// Runs a slot decision: optional yellow for the outgoing phase, then one
    /// green slot of the (possibly new) phase.
    fn advance_slot(&mut self, transition: crate::signal::PhaseTransition, slot_s: u32) -> Result<Real> {
        let mut total = 0.0;
        let mut count = 0u32;
        if transition.yellow_first {
            let outgoing = phase_frame(&self.cfg.spec.phases[self.slot_phase], SignalColor::Yellow);
            for _ in 0..self.pending_plan.yellow_s() {
                if self.done() {
                    break;
                }
                total += self.sim_second(&outgoing)?;
                count += 1;
                self.bump_window(None);
            }
            self.slot_phase = transition.next_phase;
            self.green_run = 0;
        }
        let frame = phase_frame(&self.cfg.spec.phases[self.slot_phase], SignalColor::Green);
        for _ in 0..slot_s {
            if self.done() {
                break;
            }
            total += self.sim_second(&frame)?;
            count += 1;
            self.green_run += 1;
            self.bump_window(Some(self.slot_phase));
        }
        if count == 0 {
            return Err(Error::spec("no time left to advance"));
        }
        Ok(total / count as Real)
    }

    /// Accumulates realized green seconds into fixed windows of one nominal
    /// cycle, the per-period rows for slot-based designs.
    fn bump_window(&mut self, green_phase: Option<usize>) {
        if let Some(p) = green_phase {
            self.window_green[p] += 1;
        }
        self.window_pos += 1;
        if self.window_pos == self.cfg.initial_plan.wall_cycle_s() {
            let fresh = vec![0; self.phase_count()];
            self.duration_rows.push(std::mem::replace(&mut self.window_green, fresh));
            self.window_pos = 0;
        }
    }

    /// Runs one full phase for *set current phase duration*: green for the
    /// chosen duration, then yellow, stopping at the next phase start.
    fn advance_phase_start(&mut self, duration_s: u32) -> Result<Real> {
        let phase = self.slot_phase;
        self.pending_plan = apply_set_phase_duration(&self.pending_plan, phase, duration_s)?;
        let realized = self.pending_plan.durations()[phase];
        let mut total = 0.0;
        let mut count = 0u32;
        let green = phase_frame(&self.cfg.spec.phases[phase], SignalColor::Green);
        for _ in 0..realized {
            if self.done() {
                break;
            }
            total += self.sim_second(&green)?;
            count += 1;
            self.green_run += 1;
        }
        let yellow = phase_frame(&self.cfg.spec.phases[phase], SignalColor::Yellow);
        for _ in 0..self.pending_plan.yellow_s() {
            if self.done() {
                break;
            }
            total += self.sim_second(&yellow)?;
            count += 1;
        }
        self.spd_durations[phase] = realized;
        self.spd_filled += 1;
        if self.spd_filled == self.phase_count() {
            self.duration_rows.push(self.spd_durations.clone());
            self.spd_filled = 0;
        }
        self.slot_phase = (phase + 1) % self.phase_count();
        self.green_run = 0;
        if count == 0 {
            return Err(Error::spec("no time left to advance"));
        }
        Ok(total / count as Real)
    }
}

fn single_action(action: &[usize]) -> Result<usize> {
    if action.len() != 1 {
        return Err(Error::spec(format!("expected one action index, got {}", action.len())));
    }
    Ok(action[0])
}
