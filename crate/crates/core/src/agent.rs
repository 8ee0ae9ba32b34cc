//! Environment boundary for the learner: the fixed 8x8 observation matrix
//! and the normalized queue-length reward.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{DetectorReading, IntersectionSpec};
use crate::signal::SignalPlan;

/// Raw 8x8 state: one row per movement slot, absent movements zero-padded.
pub type ObsMatrix<S> = [[S; 8]; 8];

/// Column order of every observation row.
pub mod col {
    pub const FLOW: usize = 0;
    pub const OCC_MAX: usize = 1;
    pub const OCC_AVG: usize = 2;
    pub const IS_STRAIGHT: usize = 3;
    pub const LANES: usize = 4;
    pub const IS_GREEN: usize = 5;
    pub const GREEN_ELAPSED: usize = 6;
    pub const MIN_GREEN_MET: usize = 7;
}

/// Observation of one decision point.
///
/// Row `i` holds, in order: average flow, maximum occupancy, average
/// occupancy, straight-movement indicator, lane count, green indicator,
/// elapsed green seconds of the current phase, and whether that elapsed time
/// meets the minimum green requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<S: Scalar> {
    pub rows: ObsMatrix<S>,
}

/// Signal context at observation time: the active phase index and how long
/// it has been green. `None` during a yellow interval.
pub type ActivePhase = Option<(usize, u32)>;

/// Builds the observation matrix for one decision point.
pub fn build_state<S: Scalar>(
    detectors: &DetectorReading,
    spec: &IntersectionSpec,
    plan: &SignalPlan,
    active: ActivePhase,
) -> Result<Observation<S>> {
    if spec.movements.len() > 8 {
        return Err(Error::spec(format!("{} movements exceed the 8-row state", spec.movements.len())));
    }
    let zero = S::zero();
    let one = S::one();
    let mut rows = [[zero; 8]; 8];
    let green_ids: &[u8] = match active {
        Some((phase, _)) => plan_phase(spec, plan, phase)?,
        None => &[],
    };
    for m in &spec.movements {
        let slot = m.id as usize - 1;
        let row = &mut rows[slot];
        row[col::FLOW] = S::from_f64_lossy(detectors.flow[slot]);
        row[col::OCC_MAX] = S::from_f64_lossy(detectors.occ_max[slot]);
        row[col::OCC_AVG] = S::from_f64_lossy(detectors.occ_avg[slot]);
        row[col::IS_STRAIGHT] = if m.is_straight { one } else { zero };
        row[col::LANES] = S::from_usize_lossy(m.lane_count as usize);
        let is_green = green_ids.contains(&m.id);
        row[col::IS_GREEN] = if is_green { one } else { zero };
        let elapsed = if is_green { active.map_or(0, |(_, e)| e) } else { 0 };
        row[col::GREEN_ELAPSED] = S::from_usize_lossy(elapsed as usize);
        row[col::MIN_GREEN_MET] = if is_green && elapsed >= plan.min_green_s() { one } else { zero };
    }
    Ok(Observation { rows })
}

fn plan_phase<'a>(spec: &'a IntersectionSpec, plan: &SignalPlan, phase: usize) -> Result<&'a [u8]> {
    if phase >= plan.phase_count() || phase >= spec.phases.len() {
        return Err(Error::spec(format!("active phase {phase} out of range")));
    }
    Ok(&spec.phases[phase])
}

/// Rescales the mixed-unit columns for network input: flow by the movement's
/// saturation flow, elapsed green by the green ceiling, lane count by 4.
/// Occupancies and indicators already live in [0, 1].
pub fn scale_for_network<S: Scalar>(obs: &Observation<S>, spec: &IntersectionSpec, plan: &SignalPlan) -> ObsMatrix<S> {
    let mut rows = obs.rows;
    for m in &spec.movements {
        let slot = m.id as usize - 1;
        let sat_flow = S::from_f64_lossy(m.lane_count as f64 / spec.saturation_headway_s);
        rows[slot][col::FLOW] = rows[slot][col::FLOW] / sat_flow;
        rows[slot][col::GREEN_ELAPSED] =
            rows[slot][col::GREEN_ELAPSED] / S::from_usize_lossy(plan.max_green_s() as usize);
        rows[slot][col::LANES] = rows[slot][col::LANES] / S::from_f64_lossy(4.0);
    }
    rows
}

/// Normalized queue reward in [-1, 0]: zero iff every lane is empty, -1 when
/// every lane is saturated at the detector cap.
///
/// Each lane contributes `min(count, cap)` vehicles, where `cap` is the
/// per-lane capacity implied by the detector range, and the sum is divided by
/// `lane_total * cap`.
pub fn compute_reward<S: Scalar>(queue_counts: &[u32], spec: &IntersectionSpec) -> Result<S> {
    let lanes = spec.lane_total();
    if queue_counts.len() != lanes {
        return Err(Error::spec(format!(
            "{} queue counts for {} lanes",
            queue_counts.len(),
            lanes
        )));
    }
    let cap = spec.lane_capacity_veh();
    let total: f64 = queue_counts.iter().map(|&q| (q as f64).min(cap)).sum();
    Ok(S::from_f64_lossy(-total / (lanes as f64 * cap)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{int1_plan, int1_spec, int3_spec};
    use crate::sim::DetectorReading;

    #[test]
    fn zero_padding_for_three_way_intersections() {
        let spec = int3_spec();
        let plan = int1_plan();
        let obs: Observation<f64> = build_state(&DetectorReading::default(), &spec, &plan, Some((0, 0))).unwrap();
        // int3 movements occupy slots 1..=6; rows 7 and 8 stay zero.
        assert!(obs.rows[6].iter().all(|&v| v == 0.0));
        assert!(obs.rows[7].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fresh_phase_has_zero_elapsed_and_unmet_minimum() {
        let spec = int1_spec();
        let plan = int1_plan();
        let obs: Observation<f64> = build_state(&DetectorReading::default(), &spec, &plan, Some((0, 0))).unwrap();
        // movement 1 belongs to phase 0
        assert_eq!(obs.rows[0][col::IS_GREEN], 1.0);
        assert_eq!(obs.rows[0][col::GREEN_ELAPSED], 0.0);
        assert_eq!(obs.rows[0][col::MIN_GREEN_MET], 0.0);
        // movement 3 is red; elapsed forced to zero
        assert_eq!(obs.rows[2][col::IS_GREEN], 0.0);
        assert_eq!(obs.rows[2][col::GREEN_ELAPSED], 0.0);
    }

    #[test]
    fn elapsed_green_reports_minimum_requirement() {
        let spec = int1_spec();
        let plan = int1_plan();
        let obs: Observation<f64> = build_state(&DetectorReading::default(), &spec, &plan, Some((0, 12))).unwrap();
        assert_eq!(obs.rows[0][col::GREEN_ELAPSED], 12.0);
        assert_eq!(obs.rows[0][col::MIN_GREEN_MET], 1.0);
    }

    #[test]
    fn idle_network_keeps_topology_columns() {
        let spec = int1_spec();
        let plan = int1_plan();
        let obs: Observation<f64> = build_state(&DetectorReading::default(), &spec, &plan, None).unwrap();
        for m in &spec.movements {
            let row = obs.rows[m.id as usize - 1];
            assert_eq!(row[col::FLOW], 0.0);
            assert_eq!(row[col::OCC_MAX], 0.0);
            assert_eq!(row[col::LANES], m.lane_count as f64);
            assert_eq!(row[col::IS_STRAIGHT], if m.is_straight { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn network_scaling_normalizes_mixed_units() {
        let spec = int1_spec();
        let plan = int1_plan();
        let mut det = DetectorReading::default();
        det.flow[0] = 1.0; // movement 1: 2 lanes, headway 2 -> saturation flow 1.0
        let obs: Observation<f64> = build_state(&det, &spec, &plan, Some((0, 45))).unwrap();
        let scaled = scale_for_network(&obs, &spec, &plan);
        assert!((scaled[0][col::FLOW] - 1.0).abs() < 1e-12);
        assert!((scaled[0][col::GREEN_ELAPSED] - 0.5).abs() < 1e-12); // 45 / 90
        assert!((scaled[0][col::LANES] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reward_extremes() {
        let spec = int1_spec();
        let lanes = spec.lane_total();
        let zeros = vec![0u32; lanes];
        assert_eq!(compute_reward::<f64>(&zeros, &spec).unwrap(), 0.0);
        let cap = spec.lane_capacity_veh() as u32;
        let full = vec![cap + 50; lanes];
        assert!((compute_reward::<f64>(&full, &spec).unwrap() - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn reward_single_lane_at_half_cap() {
        // 8 lanes, one at half cap: r = -(cap/2) / (8 * cap) = -1/16.
        let mut spec = int1_spec();
        for m in &mut spec.movements {
            m.lane_count = 1;
        }
        let mut queues = vec![0u32; 8];
        queues[3] = (spec.lane_capacity_veh() / 2.0) as u32; // 10 of cap 20
        let r: f64 = compute_reward(&queues, &spec).unwrap();
        assert!((r - (-1.0 / 16.0)).abs() < 1e-12);
    }

    #[test]
    fn reward_is_monotone_in_queues() {
        let spec = int1_spec();
        let lanes = spec.lane_total();
        let mut a = vec![2u32; lanes];
        let b = vec![3u32; lanes];
        let ra: f64 = compute_reward(&a, &spec).unwrap();
        let rb: f64 = compute_reward(&b, &spec).unwrap();
        assert!(rb < ra);
        // permuting lanes within a movement leaves the reward unchanged
        a[0] = 7;
        a[1] = 2;
        let r1: f64 = compute_reward(&a, &spec).unwrap();
        a.swap(0, 1);
        let r2: f64 = compute_reward(&a, &spec).unwrap();
        assert_eq!(r1, r2);
    }
}
