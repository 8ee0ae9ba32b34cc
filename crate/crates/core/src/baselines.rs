//! Non-learning controllers (fixed-time, Webster) and the classical action
//! designs wrapped for the shared trainer.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::SignalPlan;
use crate::sim::IntersectionSpec;
use crate::train::{ActionDesign, DEFAULT_SLOT_S, DEFAULT_SPD_CHOICES};

/// Startup loss added to the yellow interval when deriving per-phase lost
/// time for Webster timing.
pub const DEFAULT_STARTUP_LOST_S: f64 = 1.0;
/// Webster recomputation window.
pub const WEBSTER_WINDOW_S: u32 = 600;

/// A plan with every phase at the same fixed duration.
pub fn fixed_time_plan(duration_s: u32, phases: usize, yellow_s: u32, min_green_s: u32, max_green_s: u32) -> Result<SignalPlan> {
    SignalPlan::uniform(duration_s, phases, yellow_s, min_green_s, max_green_s)
}

/// Measured inputs for one Webster recomputation: per-phase critical flow
/// ratios (volume over saturation flow) and the lost time per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct WebsterInputs {
    pub flow_ratios: Vec<f64>,
    pub lost_time_per_phase_s: f64,
}

#[derive(Debug, Clone)]
pub struct WebsterPlan {
    pub plan: SignalPlan,
    /// Raw optimal cycle before rounding and clamping.
    pub cycle_s: f64,
    /// Demand at or beyond saturation; the plan fell back to the green
    /// ceiling on every phase.
    pub oversaturated: bool,
}

/// Classical optimal cycle `(1.5 L + 5) / (1 - Y)` for total lost time `L`
/// and flow-ratio sum `Y < 1`.
pub fn webster_cycle<S: Scalar>(total_lost_s: S, flow_ratio_sum: S) -> S {
    let scale = S::from_f64_lossy(1.5);
    let five = S::from_f64_lossy(5.0);
    (scale * total_lost_s + five) / (S::one() - flow_ratio_sum)
}

/// Webster timing: optimal cycle from the measured flow ratios, effective
/// green split proportionally, clamped to the green bounds.
pub fn webster_plan(inputs: &WebsterInputs, yellow_s: u32, min_green_s: u32, max_green_s: u32) -> Result<WebsterPlan> {
    let phases = inputs.flow_ratios.len();
    if phases < 2 {
        return Err(Error::spec("webster needs at least two phases"));
    }
    if inputs.flow_ratios.iter().any(|y| *y < 0.0 || !y.is_finite()) {
        return Err(Error::spec("flow ratios must be non-negative"));
    }
    if inputs.lost_time_per_phase_s < 0.0 {
        return Err(Error::spec("lost time must be non-negative"));
    }
    let total_lost = phases as f64 * inputs.lost_time_per_phase_s;
    let ratio_sum: f64 = inputs.flow_ratios.iter().sum();

    if ratio_sum >= 1.0 {
        let plan = SignalPlan::uniform(max_green_s, phases, yellow_s, min_green_s, max_green_s)?;
        return Ok(WebsterPlan { plan, cycle_s: f64::INFINITY, oversaturated: true });
    }

    let cycle = webster_cycle(total_lost, ratio_sum);
    let effective_green = (cycle - total_lost).max(0.0);
    let shares: Vec<f64> = if ratio_sum > 0.0 {
        inputs.flow_ratios.iter().map(|y| y / ratio_sum * effective_green).collect()
    } else {
        vec![effective_green / phases as f64; phases]
    };
    let durations: Vec<u32> = round_preserving_sum(&shares)
        .into_iter()
        .map(|d| d.clamp(min_green_s, max_green_s))
        .collect();
    let plan = SignalPlan::new(durations, yellow_s, min_green_s, max_green_s)?;
    Ok(WebsterPlan { plan, cycle_s: cycle, oversaturated: false })
}

/// Largest-remainder rounding: the integer parts plus one extra second for
/// the largest fractions, so the rounded values sum to the rounded total.
fn round_preserving_sum(values: &[f64]) -> Vec<u32> {
    let target: i64 = values.iter().sum::<f64>().round() as i64;
    let mut floors: Vec<i64> = values.iter().map(|v| v.floor() as i64).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = values[a] - values[a].floor();
        let fb = values[b] - values[b].floor();
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut remainder = target - floors.iter().sum::<i64>();
    for &i in &order {
        if remainder <= 0 {
            break;
        }
        floors[i] += 1;
        remainder -= 1;
    }
    floors.into_iter().map(|v| v.max(0) as u32).collect()
}

/// Derives Webster inputs from raw arrival counts over a measurement window:
/// the critical flow ratio of a phase is the worst per-lane volume of its
/// movements divided by the saturation flow.
pub fn webster_inputs_from_counts(
    counts: &[u64; 8],
    window_s: u32,
    spec: &IntersectionSpec,
    lost_time_per_phase_s: f64,
) -> Result<WebsterInputs> {
    if window_s == 0 {
        return Err(Error::spec("measurement window must be positive"));
    }
    let saturation_flow_per_lane = 1.0 / spec.saturation_headway_s;
    let mut flow_ratios = Vec::with_capacity(spec.phases.len());
    for phase in &spec.phases {
        let mut critical: f64 = 0.0;
        for &id in phase {
            let m = spec
                .movements
                .iter()
                .find(|m| m.id == id)
                .ok_or_else(|| Error::spec(format!("unknown movement {id}")))?;
            let per_lane = counts[id as usize - 1] as f64 / window_s as f64 / m.lane_count as f64;
            critical = critical.max(per_lane / saturation_flow_per_lane);
        }
        flow_ratios.push(critical);
    }
    Ok(WebsterInputs { flow_ratios, lost_time_per_phase_s })
}

/// The four classical action designs, each trained under the shared workflow
/// with a single actor head sized to its action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineDesign {
    ChooseNextPhase,
    NextOrNot,
    SetPhaseDuration,
    AdjustSinglePhase,
}

/// Instantiates a baseline action design. Slot-based designs decide every
/// `max(DEFAULT_SLOT_S, dt)` seconds; cycle-based ones schedule via the
/// intervention interval like the joint-phase agent.
pub fn make_baseline_agent(kind: BaselineDesign, intervention_dt: u32) -> ActionDesign {
    let slot_s = DEFAULT_SLOT_S.max(intervention_dt);
    match kind {
        BaselineDesign::ChooseNextPhase => ActionDesign::ChooseNextPhase { slot_s },
        BaselineDesign::NextOrNot => ActionDesign::NextOrNot { slot_s },
        BaselineDesign::SetPhaseDuration => ActionDesign::SetPhaseDuration { choices_s: DEFAULT_SPD_CHOICES.to_vec() },
        BaselineDesign::AdjustSinglePhase => ActionDesign::AdjustSinglePhase { delta_s: crate::signal::DEFAULT_ASP_DELTA_S },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::int1_spec;

    #[test]
    fn fixed_time_layouts() {
        let ft30 = fixed_time_plan(30, 4, 3, 9, 90).unwrap();
        assert_eq!(ft30.durations(), &[30, 30, 30, 30]);
        assert_eq!(ft30.cycle_length(), 120);
        let ft40 = fixed_time_plan(40, 4, 3, 9, 90).unwrap();
        assert_eq!(ft40.durations(), &[40, 40, 40, 40]);
    }

    #[test]
    fn webster_cycle_at_zero_load() {
        let inputs = WebsterInputs { flow_ratios: vec![0.0; 4], lost_time_per_phase_s: 3.0 };
        let w = webster_plan(&inputs, 3, 9, 90).unwrap();
        assert!((w.cycle_s - (1.5 * 12.0 + 5.0)).abs() < 1e-12);
        let d = w.plan.durations();
        assert!(d.iter().all(|&x| x == d[0]), "equal splits at zero load");
    }

    #[test]
    fn webster_half_saturated_example() {
        // sum y = 0.5, lost 12 s total: C0 = (1.5 * 12 + 5) / 0.5 = 46
        let inputs = WebsterInputs { flow_ratios: vec![0.2, 0.1, 0.15, 0.05], lost_time_per_phase_s: 3.0 };
        let w = webster_plan(&inputs, 3, 9, 90).unwrap();
        assert!((w.cycle_s - 46.0).abs() < 1e-12);
        assert!(!w.oversaturated);
    }

    #[test]
    fn webster_splits_account_for_the_cycle_within_a_second() {
        let inputs = WebsterInputs { flow_ratios: vec![0.23, 0.17, 0.21, 0.11], lost_time_per_phase_s: 4.0 };
        let w = webster_plan(&inputs, 3, 1, 200).unwrap();
        let total_green: u32 = w.plan.durations().iter().sum();
        let lost = 4.0 * 4.0;
        assert!((total_green as f64 + lost - w.cycle_s).abs() <= 1.0);
    }

    #[test]
    fn doubling_volumes_stretches_the_cycle_but_not_the_split() {
        let base = WebsterInputs { flow_ratios: vec![0.10, 0.05, 0.10, 0.05], lost_time_per_phase_s: 4.0 };
        let doubled = WebsterInputs { flow_ratios: vec![0.20, 0.10, 0.20, 0.10], lost_time_per_phase_s: 4.0 };
        let a = webster_plan(&base, 3, 1, 200).unwrap();
        let b = webster_plan(&doubled, 3, 1, 200).unwrap();
        assert!(b.cycle_s > a.cycle_s);
        let share = |w: &WebsterPlan, n: usize| {
            w.plan.durations()[n] as f64 / w.plan.durations().iter().sum::<u32>() as f64
        };
        for n in 0..4 {
            assert!((share(&a, n) - share(&b, n)).abs() < 0.05);
        }
    }

    #[test]
    fn saturated_demand_falls_back_to_max_green() {
        let inputs = WebsterInputs { flow_ratios: vec![0.5, 0.3, 0.2, 0.1], lost_time_per_phase_s: 3.0 };
        let w = webster_plan(&inputs, 3, 9, 90).unwrap();
        assert!(w.oversaturated);
        assert!(w.plan.durations().iter().all(|&d| d == 90));
    }

    #[test]
    fn flow_ratios_from_counts_use_critical_movements() {
        let spec = int1_spec();
        let mut counts = [0u64; 8];
        counts[0] = 600; // movement 1: 1 veh/s over 2 lanes -> 0.5/lane, sat 0.5 -> y = 1? window
        counts[4] = 300;
        let inputs = webster_inputs_from_counts(&counts, 600, &spec, 4.0).unwrap();
        // movement 1: 600 / 600 s / 2 lanes = 0.5 veh/s/lane; saturation 0.5 -> y = 1.0
        assert!((inputs.flow_ratios[0] - 1.0).abs() < 1e-12);
        assert_eq!(inputs.flow_ratios[2], 0.0);
    }

    #[test]
    fn baseline_action_sets_match_expected_cardinalities() {
        let cnp = make_baseline_agent(BaselineDesign::ChooseNextPhase, 0);
        assert_eq!(cnp.choices(4), 4);
        let non = make_baseline_agent(BaselineDesign::NextOrNot, 0);
        assert_eq!(non.choices(4), 2);
        let asp = make_baseline_agent(BaselineDesign::AdjustSinglePhase, 0);
        assert_eq!(asp.choices(4), 9);
        assert_eq!(asp.choices(6), 13);
        assert_eq!(asp.choices(3), 7);
        // the 5-second decision slot stretches with the intervention interval
        let slow = make_baseline_agent(BaselineDesign::NextOrNot, 60);
        assert_eq!(slow, ActionDesign::NextOrNot { slot_s: 60 });
    }
}
