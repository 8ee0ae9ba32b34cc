//! Deterministic seeded point-queue microsimulation of a single intersection.
//!
//! Vehicles arrive per movement as Poisson counts, queue in the shortest lane
//! of their movement, and discharge at the saturation headway while their
//! movement is green. There is no car-following and no travel-time lag
//! between entry and stop line: queue formation and discharge are the only
//! dynamics, which keeps every trajectory hand-checkable.
//!
//! Instances are single-threaded and independent; running several with
//! distinct seeds in parallel is safe.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalColor, SignalFrame};

pub const DEFAULT_DETECTOR_RANGE_M: f64 = 150.0;
pub const DEFAULT_SATURATION_HEADWAY_S: f64 = 2.0;
/// 5 m vehicle length plus 2.5 m standstill gap.
pub const DEFAULT_VEHICLE_FOOTPRINT_M: f64 = 7.5;
pub const DEFAULT_DETECTOR_WINDOW_S: u32 = 60;

/// Movements per intersection are capped at eight; right turns are excluded
/// from control and never appear here.
pub const MAX_MOVEMENTS: usize = 8;

/// One permitted connection from an incoming arm to an outgoing arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementSpec {
    /// Unique id in 1..=8.
    pub id: u8,
    pub is_straight: bool,
    pub lane_count: u32,
    pub entry_arm: String,
    pub exit_arm: String,
}

/// Topology of one intersection: movements, phase composition, and the
/// detector geometry shared by every reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSpec {
    pub movements: Vec<MovementSpec>,
    /// Movement ids granted right-of-way per phase, in cycle order.
    pub phases: Vec<Vec<u8>>,
    #[serde(default = "default_detector_range")]
    pub detector_range_m: f64,
    #[serde(default = "default_headway")]
    pub saturation_headway_s: f64,
    #[serde(default = "default_footprint")]
    pub vehicle_footprint_m: f64,
    #[serde(default = "default_window")]
    pub detector_window_s: u32,
}

fn default_detector_range() -> f64 {
    DEFAULT_DETECTOR_RANGE_M
}
fn default_headway() -> f64 {
    DEFAULT_SATURATION_HEADWAY_S
}
fn default_footprint() -> f64 {
    DEFAULT_VEHICLE_FOOTPRINT_M
}
fn default_window() -> u32 {
    DEFAULT_DETECTOR_WINDOW_S
}

impl IntersectionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.movements.is_empty() || self.movements.len() > MAX_MOVEMENTS {
            return Err(Error::spec(format!("{} movements, expected 1..=8", self.movements.len())));
        }
        let mut seen = [false; MAX_MOVEMENTS];
        for m in &self.movements {
            if !(1..=8).contains(&m.id) {
                return Err(Error::spec(format!("movement id {} outside 1..=8", m.id)));
            }
            if seen[m.id as usize - 1] {
                return Err(Error::spec(format!("duplicate movement id {}", m.id)));
            }
            seen[m.id as usize - 1] = true;
            if m.lane_count == 0 {
                return Err(Error::spec(format!("movement {} has zero lanes", m.id)));
            }
        }
        if self.phases.is_empty() {
            return Err(Error::spec("intersection has no phases"));
        }
        let mut covered = [false; MAX_MOVEMENTS];
        for (i, phase) in self.phases.iter().enumerate() {
            if phase.is_empty() {
                return Err(Error::spec(format!("phase {i} is empty")));
            }
            for &id in phase {
                if !(1..=8).contains(&id) || !seen[id as usize - 1] {
                    return Err(Error::spec(format!("phase {i} references unknown movement {id}")));
                }
                covered[id as usize - 1] = true;
            }
        }
        for m in &self.movements {
            if !covered[m.id as usize - 1] {
                return Err(Error::spec(format!("movement {} not covered by any phase", m.id)));
            }
        }
        if self.detector_range_m <= 0.0 {
            return Err(Error::spec("detector range must be positive"));
        }
        if self.saturation_headway_s <= 0.0 || self.vehicle_footprint_m <= 0.0 {
            return Err(Error::spec("headway and vehicle footprint must be positive"));
        }
        if self.detector_window_s == 0 {
            return Err(Error::spec("detector window must be positive"));
        }
        Ok(())
    }

    pub fn movement_index(&self, id: u8) -> Option<usize> {
        self.movements.iter().position(|m| m.id == id)
    }

    /// Total lane count across movements (the `M` of the efficiency metric).
    pub fn lane_total(&self) -> usize {
        self.movements.iter().map(|m| m.lane_count as usize).sum()
    }

    /// Per-lane queue capacity in vehicles implied by the detector range.
    pub fn lane_capacity_veh(&self) -> f64 {
        self.detector_range_m / self.vehicle_footprint_m
    }
}

/// Piecewise-constant arrival rate for one movement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSegment {
    pub movement: u8,
    pub start_s: u32,
    pub end_s: u32,
    pub rate_veh_per_s: f64,
}

/// Poisson arrival configuration for the whole scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProfile {
    pub segments: Vec<ArrivalSegment>,
    pub rng_seed: u64,
}

impl ArrivalProfile {
    pub fn validate(&self, spec: &IntersectionSpec) -> Result<()> {
        for seg in &self.segments {
            if spec.movement_index(seg.movement).is_none() {
                return Err(Error::spec(format!("arrival segment references unknown movement {}", seg.movement)));
            }
            if seg.end_s <= seg.start_s {
                return Err(Error::spec(format!(
                    "arrival segment [{}, {}) for movement {} is empty",
                    seg.start_s, seg.end_s, seg.movement
                )));
            }
            if seg.rate_veh_per_s < 0.0 || !seg.rate_veh_per_s.is_finite() {
                return Err(Error::spec(format!("negative or non-finite arrival rate for movement {}", seg.movement)));
            }
        }
        // No overlap within a movement.
        for m in &spec.movements {
            let mut spans: Vec<(u32, u32)> = self
                .segments
                .iter()
                .filter(|s| s.movement == m.id)
                .map(|s| (s.start_s, s.end_s))
                .collect();
            spans.sort_unstable();
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 {
                    return Err(Error::spec(format!("overlapping arrival segments for movement {}", m.id)));
                }
            }
        }
        Ok(())
    }

    /// Expected arrivals for `movement` over `[t0, t0 + dt)`, integrating the
    /// piecewise-constant rate exactly.
    pub fn expected_arrivals(&self, movement: u8, t0: u64, dt: u32) -> f64 {
        let (a, b) = (t0, t0 + dt as u64);
        self.segments
            .iter()
            .filter(|s| s.movement == movement)
            .map(|s| {
                let lo = a.max(s.start_s as u64);
                let hi = b.min(s.end_s as u64);
                if hi > lo {
                    (hi - lo) as f64 * s.rate_veh_per_s
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// A copy of this profile drawing from a different seed (fresh-arrival
    /// evaluation episodes).
    pub fn with_seed(&self, rng_seed: u64) -> ArrivalProfile {
        ArrivalProfile { segments: self.segments.clone(), rng_seed }
    }
}

/// Per-step detector record; occupancy is sampled at the start of the step,
/// arrivals and departures are counted during it.
#[derive(Debug, Clone)]
pub struct DetectorSample {
    pub t_start: u64,
    pub dt: u32,
    pub arrivals: [u32; 8],
    pub departures: [u32; 8],
    pub occupancy: [f64; 8],
}

/// Aggregated detector reading per movement, indexed by movement id - 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorReading {
    /// Vehicles crossing the detector (arrivals plus departures) per second.
    pub flow: [f64; 8],
    pub occ_max: [f64; 8],
    pub occ_avg: [f64; 8],
}

/// Mutable simulation state: clock, per-lane queues, discharge credit, the
/// per-movement RNG streams, and the rolling detector history.
#[derive(Debug, Clone)]
pub struct SimState {
    clock_s: u64,
    /// Queue counts indexed `[movement position][lane]`.
    queues: Vec<Vec<u32>>,
    /// Fractional service accumulated while green; reset on yellow/red.
    credits: Vec<Vec<f64>>,
    streams: Vec<ChaCha8Rng>,
    history: VecDeque<DetectorSample>,
    history_window_s: u32,
    arrivals_total: u64,
    departures_total: u64,
}

impl SimState {
    pub fn new(spec: &IntersectionSpec, profile: &ArrivalProfile) -> Result<Self> {
        spec.validate()?;
        profile.validate(spec)?;
        let queues: Vec<Vec<u32>> = spec.movements.iter().map(|m| vec![0; m.lane_count as usize]).collect();
        let credits = queues.iter().map(|lanes| vec![0.0; lanes.len()]).collect();
        // One independent stream per movement so arrival draws never depend
        // on iteration order.
        let streams = spec
            .movements
            .iter()
            .map(|m| {
                let mut rng = ChaCha8Rng::seed_from_u64(profile.rng_seed);
                rng.set_stream(m.id as u64);
                rng
            })
            .collect();
        Ok(SimState {
            clock_s: 0,
            queues,
            credits,
            streams,
            history: VecDeque::new(),
            history_window_s: spec.detector_window_s.max(600),
            arrivals_total: 0,
            departures_total: 0,
        })
    }

    pub fn clock_s(&self) -> u64 {
        self.clock_s
    }

    pub fn arrivals_total(&self) -> u64 {
        self.arrivals_total
    }

    pub fn departures_total(&self) -> u64 {
        self.departures_total
    }

    pub fn total_queued(&self) -> u64 {
        self.queues.iter().flatten().map(|&q| q as u64).sum()
    }

    /// Flattened per-lane queue counts, movements in spec order.
    pub fn queue_counts(&self) -> Vec<u32> {
        self.queues.iter().flatten().copied().collect()
    }

    /// Warm-start hook: place `count` vehicles on one lane.
    pub fn seed_queue(&mut self, spec: &IntersectionSpec, movement: u8, lane: usize, count: u32) -> Result<()> {
        let idx = spec
            .movement_index(movement)
            .ok_or_else(|| Error::spec(format!("unknown movement id {movement}")))?;
        let lanes = &mut self.queues[idx];
        if lane >= lanes.len() {
            return Err(Error::spec(format!("movement {movement} has no lane {lane}")));
        }
        self.arrivals_total += count as u64;
        lanes[lane] += count;
        Ok(())
    }

    fn occupancy_of(&self, idx: usize, spec: &IntersectionSpec) -> f64 {
        let lanes = &self.queues[idx];
        let cap = spec.detector_range_m;
        let sum: f64 = lanes
            .iter()
            .map(|&q| (q as f64 * spec.vehicle_footprint_m).min(cap) / cap)
            .sum();
        sum / lanes.len() as f64
    }

    /// Advances the simulation by `dt` seconds under one signal frame.
    ///
    /// Arrivals are drawn `Poisson(rate * dt)` per movement and assigned one
    /// by one to the shortest lane queue (ties to the lowest lane index).
    /// Each green lane accumulates `dt / saturation_headway_s` of service
    /// credit and discharges a whole vehicle per unit of credit; yellow and
    /// red lanes discharge nothing and lose their credit.
    pub fn step(&mut self, signal: &SignalFrame, dt: u32, profile: &ArrivalProfile, spec: &IntersectionSpec) -> Result<()> {
        if dt == 0 {
            return Err(Error::spec("step dt must be positive"));
        }
        let mut sample = DetectorSample {
            t_start: self.clock_s,
            dt,
            arrivals: [0; 8],
            departures: [0; 8],
            occupancy: [0.0; 8],
        };
        for (idx, movement) in spec.movements.iter().enumerate() {
            sample.occupancy[movement.id as usize - 1] = self.occupancy_of(idx, spec);
        }

        // Arrivals.
        for (idx, movement) in spec.movements.iter().enumerate() {
            let lambda = profile.expected_arrivals(movement.id, self.clock_s, dt);
            let n = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map_err(|e| Error::spec(format!("invalid arrival rate for movement {}: {e}", movement.id)))?
                    .sample(&mut self.streams[idx]) as u64
            } else {
                0
            };
            for _ in 0..n {
                let lanes = &mut self.queues[idx];
                let shortest = (0..lanes.len()).min_by_key(|&l| (lanes[l], l)).expect("lane_count >= 1");
                lanes[shortest] += 1;
            }
            sample.arrivals[movement.id as usize - 1] = n as u32;
            self.arrivals_total += n;
        }

        // Discharge.
        for (idx, movement) in spec.movements.iter().enumerate() {
            let color = signal[movement.id as usize - 1];
            let lanes = &mut self.queues[idx];
            let credits = &mut self.credits[idx];
            let mut departed = 0u32;
            for (q, credit) in lanes.iter_mut().zip(credits.iter_mut()) {
                match color {
                    SignalColor::Green => {
                        *credit += dt as f64 / spec.saturation_headway_s;
                        let can = (*credit).floor() as u32;
                        let n = can.min(*q);
                        *q -= n;
                        departed += n;
                        if *q == 0 {
                            *credit = 0.0;
                        } else {
                            *credit -= n as f64;
                        }
                    }
                    SignalColor::Yellow | SignalColor::Red => {
                        *credit = 0.0;
                    }
                }
            }
            sample.departures[movement.id as usize - 1] = departed;
            self.departures_total += departed as u64;
        }

        self.clock_s += dt as u64;
        self.history.push_back(sample);
        let horizon = self.clock_s.saturating_sub(self.history_window_s as u64);
        while matches!(self.history.front(), Some(front) if front.t_start + front.dt as u64 <= horizon) {
            self.history.pop_front();
        }
        Ok(())
    }

    /// Detector reading over the last `window_k` seconds (or over whatever
    /// history exists when the clock is younger than the window).
    pub fn read_detectors(&self, window_k: u32) -> Result<DetectorReading> {
        if window_k == 0 {
            return Err(Error::spec("detector window must be positive"));
        }
        let from = self.clock_s.saturating_sub(window_k as u64);
        let mut reading = DetectorReading::default();
        let mut events = [0u64; 8];
        let mut occ_sum = [0.0f64; 8];
        let mut covered = 0u64;
        for sample in self.history.iter().filter(|s| s.t_start >= from) {
            covered += sample.dt as u64;
            for i in 0..8 {
                events[i] += (sample.arrivals[i] + sample.departures[i]) as u64;
                occ_sum[i] += sample.occupancy[i] * sample.dt as f64;
                reading.occ_max[i] = reading.occ_max[i].max(sample.occupancy[i]);
            }
        }
        if covered > 0 {
            for i in 0..8 {
                reading.flow[i] = events[i] as f64 / covered as f64;
                reading.occ_avg[i] = occ_sum[i] / covered as f64;
            }
        }
        Ok(reading)
    }

    /// Arrival counts per movement slot over the last `window_k` seconds
    /// (Webster volume input).
    pub fn arrivals_in_window(&self, window_k: u32) -> [u64; 8] {
        let from = self.clock_s.saturating_sub(window_k as u64);
        let mut counts = [0u64; 8];
        for sample in self.history.iter().filter(|s| s.t_start >= from) {
            for i in 0..8 {
                counts[i] += sample.arrivals[i] as u64;
            }
        }
        counts
    }
}

/// Per-lane queue lengths in meters: `count * footprint`, capped at the
/// detector range. Lanes are flattened in movement order.
pub fn queue_lengths_m(state: &SimState, spec: &IntersectionSpec) -> Vec<f64> {
    state
        .queues
        .iter()
        .flatten()
        .map(|&q| (q as f64 * spec.vehicle_footprint_m).min(spec.detector_range_m))
        .collect()
}
