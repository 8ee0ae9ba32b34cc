//! Shared fixtures for unit tests: the standard 4-way/4-phase intersection,
//! a 3-way variant, and a few arrival profiles.

use crate::sim::{ArrivalProfile, ArrivalSegment, IntersectionSpec, MovementSpec};
use crate::signal::SignalPlan;

fn movement(id: u8, is_straight: bool, lane_count: u32, entry: &str, exit: &str) -> MovementSpec {
    MovementSpec { id, is_straight, lane_count, entry_arm: entry.into(), exit_arm: exit.into() }
}

/// 4-way intersection, 8 movements, 4 phases (NS, NS-left, EW, EW-left).
pub(crate) fn int1_spec() -> IntersectionSpec {
    IntersectionSpec {
        movements: vec![
            movement(1, true, 2, "N", "S"),
            movement(2, false, 1, "N", "E"),
            movement(3, true, 2, "E", "W"),
            movement(4, false, 1, "E", "S"),
            movement(5, true, 2, "S", "N"),
            movement(6, false, 1, "S", "W"),
            movement(7, true, 2, "W", "E"),
            movement(8, false, 1, "W", "N"),
        ],
        phases: vec![vec![1, 5], vec![2, 6], vec![3, 7], vec![4, 8]],
        detector_range_m: 150.0,
        saturation_headway_s: 2.0,
        vehicle_footprint_m: 7.5,
        detector_window_s: 60,
    }
}

/// 3-way intersection, 6 movements, 3 phases.
pub(crate) fn int3_spec() -> IntersectionSpec {
    IntersectionSpec {
        movements: vec![
            movement(1, true, 2, "N", "S"),
            movement(2, false, 1, "N", "E"),
            movement(3, true, 2, "E", "N"),
            movement(4, false, 1, "E", "S"),
            movement(5, true, 2, "S", "N"),
            movement(6, false, 1, "S", "E"),
        ],
        phases: vec![vec![1, 5], vec![2, 6], vec![3, 4]],
        detector_range_m: 150.0,
        saturation_headway_s: 2.0,
        vehicle_footprint_m: 7.5,
        detector_window_s: 60,
    }
}

pub(crate) fn int1_plan() -> SignalPlan {
    SignalPlan::new(vec![30, 30, 30, 30], 3, 9, 90).unwrap()
}

/// Steady demand totalling ~0.94 veh/s across the eight movements.
pub(crate) fn int1_steady_profile(seed: u64, horizon_s: u32) -> ArrivalProfile {
    let rates = [(1, 0.20), (2, 0.07), (3, 0.15), (4, 0.05), (5, 0.20), (6, 0.07), (7, 0.15), (8, 0.05)];
    ArrivalProfile {
        segments: rates
            .iter()
            .map(|&(movement, rate)| ArrivalSegment { movement, start_s: 0, end_s: horizon_s, rate_veh_per_s: rate })
            .collect(),
        rng_seed: seed,
    }
}
