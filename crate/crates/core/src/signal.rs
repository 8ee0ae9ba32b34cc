//! Signal plans, cycle composition, the intervention scheduler, and the
//! action designs used to rewrite plans.
//!
//! All types here are immutable values and all transformers are pure
//! functions, so they are safe to share across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_YELLOW_S: u32 = 3;
pub const DEFAULT_MIN_GREEN_S: u32 = 9;
pub const DEFAULT_MAX_GREEN_S: u32 = 90;
/// Default change magnitudes for *adjust all phases*.
pub const DEFAULT_AAP_DELTAS: [i32; 5] = [-6, -3, 0, 3, 6];
/// Maximum per-decision change for *adjust single phase*.
pub const DEFAULT_ASP_DELTA_S: i32 = 5;

/// Ordered green durations for one cycle, plus the yellow interval and the
/// green bounds every transformer clamps against.
///
/// The cycle length counts green durations only; yellow time is overhead
/// appended when the plan is unrolled into a per-second signal sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalPlan {
    durations: Vec<u32>,
    yellow_s: u32,
    min_green_s: u32,
    max_green_s: u32,
}

impl SignalPlan {
    pub fn new(durations: Vec<u32>, yellow_s: u32, min_green_s: u32, max_green_s: u32) -> Result<Self> {
        if durations.len() < 2 {
            return Err(Error::spec(format!(
                "a signal plan needs at least 2 phases, got {}",
                durations.len()
            )));
        }
        if min_green_s == 0 || min_green_s > max_green_s {
            return Err(Error::spec(format!(
                "invalid green bounds [{min_green_s}, {max_green_s}]"
            )));
        }
        for (i, &d) in durations.iter().enumerate() {
            if d < min_green_s || d > max_green_s {
                return Err(Error::spec(format!(
                    "phase {i} duration {d}s outside green bounds [{min_green_s}, {max_green_s}]"
                )));
            }
        }
        Ok(SignalPlan { durations, yellow_s, min_green_s, max_green_s })
    }

    /// Plan with every phase at the same duration (fixed-time layouts).
    pub fn uniform(duration_s: u32, phases: usize, yellow_s: u32, min_green_s: u32, max_green_s: u32) -> Result<Self> {
        SignalPlan::new(vec![duration_s; phases], yellow_s, min_green_s, max_green_s)
    }

    /// Cycle length `C`: the sum of the green durations.
    pub fn cycle_length(&self) -> u32 {
        self.durations.iter().sum()
    }

    /// Wall-clock seconds of one unrolled cycle, yellows included.
    pub fn wall_cycle_s(&self) -> u32 {
        self.cycle_length() + self.phase_count() as u32 * self.yellow_s
    }

    pub fn phase_count(&self) -> usize {
        self.durations.len()
    }

    pub fn durations(&self) -> &[u32] {
        &self.durations
    }

    pub fn yellow_s(&self) -> u32 {
        self.yellow_s
    }

    pub fn min_green_s(&self) -> u32 {
        self.min_green_s
    }

    pub fn max_green_s(&self) -> u32 {
        self.max_green_s
    }

    fn clamped(&self, value: i64) -> u32 {
        value.clamp(self.min_green_s as i64, self.max_green_s as i64) as u32
    }

    fn with_durations(&self, durations: Vec<u32>) -> SignalPlan {
        SignalPlan { durations, ..self.clone() }
    }
}

/// Realized intervention interval: the configured `delta_t` rounded up to a
/// whole number of cycles so adjustments land on cycle starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterventionSchedule {
    pub delta_t: u32,
    pub delta_t_prime: u32,
}

impl InterventionSchedule {
    pub fn new(delta_t: u32, cycle_s: u32) -> Result<Self> {
        Ok(InterventionSchedule { delta_t, delta_t_prime: intervention_interval(delta_t, cycle_s)? })
    }
}

/// `max(1, ceil(delta_t / C)) * C`.
///
/// At `delta_t = 0` the agent still acts once per cycle, so the result is one
/// full cycle rather than zero.
pub fn intervention_interval(delta_t: u32, cycle_s: u32) -> Result<u32> {
    if cycle_s == 0 {
        return Err(Error::spec("cycle length must be positive"));
    }
    let cycles = delta_t.div_ceil(cycle_s).max(1);
    Ok(cycles * cycle_s)
}

/// One *adjust all phases* decision: per-phase indices into a delta set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AapAction(pub Vec<usize>);

/// Applies an *adjust all phases* action: every phase duration moves by its
/// selected delta, clamped to the green bounds. Phase order is unchanged.
pub fn apply_aap(plan: &SignalPlan, action: &AapAction, deltas: &[i32]) -> Result<SignalPlan> {
    if action.0.len() != plan.phase_count() {
        return Err(Error::spec(format!(
            "adjust-all-phases action has {} entries for {} phases",
            action.0.len(),
            plan.phase_count()
        )));
    }
    let mut durations = Vec::with_capacity(plan.phase_count());
    for (&d, &idx) in plan.durations.iter().zip(&action.0) {
        let delta = *deltas
            .get(idx)
            .ok_or_else(|| Error::spec(format!("delta index {idx} out of range for {} deltas", deltas.len())))?;
        durations.push(plan.clamped(d as i64 + delta as i64));
    }
    Ok(plan.with_durations(durations))
}

/// Changes a single phase duration by `delta` seconds, clamped to the green
/// bounds. `phase_index` is zero-based.
pub fn apply_adjust_single_phase(plan: &SignalPlan, phase_index: usize, delta: i32, max_abs_delta: i32) -> Result<SignalPlan> {
    if phase_index >= plan.phase_count() {
        return Err(Error::spec(format!(
            "phase index {phase_index} out of range for {} phases",
            plan.phase_count()
        )));
    }
    if delta.abs() > max_abs_delta {
        return Err(Error::spec(format!("|delta| = {} exceeds bound {max_abs_delta}", delta.abs())));
    }
    let mut durations = plan.durations.clone();
    durations[phase_index] = plan.clamped(durations[phase_index] as i64 + delta as i64);
    Ok(plan.with_durations(durations))
}

/// Outcome of a phase-sequencing action: which phase runs next and whether a
/// yellow interval precedes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseTransition {
    pub next_phase: usize,
    pub yellow_first: bool,
}

/// *Choose next phase*: any phase is selectable; yellow is inserted only when
/// the selection differs from the current phase.
pub fn apply_choose_next_phase(current_phase: usize, chosen_phase: usize, phase_count: usize) -> Result<PhaseTransition> {
    if current_phase >= phase_count || chosen_phase >= phase_count {
        return Err(Error::spec(format!(
            "phase out of range: current {current_phase}, chosen {chosen_phase}, count {phase_count}"
        )));
    }
    Ok(PhaseTransition { next_phase: chosen_phase, yellow_first: chosen_phase != current_phase })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeepOrChange {
    Keep,
    Change,
}

/// *Next or not*: keep the current phase or advance to the next one in order.
pub fn apply_next_or_not(current_phase: usize, decision: KeepOrChange, phase_count: usize) -> Result<PhaseTransition> {
    if current_phase >= phase_count {
        return Err(Error::spec(format!("phase index {current_phase} out of range for {phase_count} phases")));
    }
    Ok(match decision {
        KeepOrChange::Keep => PhaseTransition { next_phase: current_phase, yellow_first: false },
        KeepOrChange::Change => {
            PhaseTransition { next_phase: (current_phase + 1) % phase_count, yellow_first: true }
        }
    })
}

/// *Set current phase duration*: rewrites one phase to a duration drawn from
/// a configured discrete set, clamped to the green bounds.
pub fn apply_set_phase_duration(plan: &SignalPlan, phase_index: usize, duration_s: u32) -> Result<SignalPlan> {
    if phase_index >= plan.phase_count() {
        return Err(Error::spec(format!(
            "phase index {phase_index} out of range for {} phases",
            plan.phase_count()
        )));
    }
    let mut durations = plan.durations.clone();
    durations[phase_index] = plan.clamped(duration_s as i64);
    Ok(plan.with_durations(durations))
}

/// Signal color shown to one movement for one second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalColor {
    Green,
    Yellow,
    Red,
}

/// Per-second signal over all eight movement slots; absent movements stay red.
pub type SignalFrame = [SignalColor; 8];

pub fn all_red() -> SignalFrame {
    [SignalColor::Red; 8]
}

/// Builds one frame: `phase_movements` green or yellow, everything else red.
pub fn phase_frame(phase_movements: &[u8], color: SignalColor) -> SignalFrame {
    let mut frame = all_red();
    for &id in phase_movements {
        if (1..=8).contains(&id) {
            frame[id as usize - 1] = color;
        }
    }
    frame
}

/// Unrolls a plan into a per-second signal sequence of length `horizon_s`,
/// starting at the first phase: each phase runs green for its duration, then
/// its movements show yellow for `yellow_s` before the next phase starts.
pub fn unroll_signal(plan: &SignalPlan, phases: &[Vec<u8>], horizon_s: u32) -> Result<Vec<SignalFrame>> {
    if horizon_s == 0 {
        return Err(Error::spec("horizon must be positive"));
    }
    if phases.len() != plan.phase_count() {
        return Err(Error::spec(format!(
            "{} phase movement sets for {} plan phases",
            phases.len(),
            plan.phase_count()
        )));
    }
    let mut frames = Vec::with_capacity(horizon_s as usize);
    'outer: loop {
        for (movements, &duration) in phases.iter().zip(plan.durations()) {
            for _ in 0..duration {
                frames.push(phase_frame(movements, SignalColor::Green));
                if frames.len() as u32 == horizon_s {
                    break 'outer;
                }
            }
            for _ in 0..plan.yellow_s() {
                frames.push(phase_frame(movements, SignalColor::Yellow));
                if frames.len() as u32 == horizon_s {
                    break 'outer;
                }
            }
        }
    }
    Ok(frames)
}

/// Joint action-space size of *adjust all phases* under a single centralized
/// actor: `M^N` for `N` phases and `M` deltas.
pub fn aap_joint_actions(phases: usize, deltas: usize) -> u64 {
    (deltas as u64).pow(phases as u32)
}

/// Factored action-space size under decentralized actors: `N` heads of `M`.
pub fn aap_factored_actions(phases: usize, deltas: usize) -> u64 {
    phases as u64 * deltas as u64
}

/// *Adjust single phase* action count: a (phase, ±delta) choice plus an
/// explicit no-op, `2N + 1`.
pub fn asp_actions(phases: usize) -> u64 {
    2 * phases as u64 + 1
}
