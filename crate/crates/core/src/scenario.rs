//! Scenario files: intersection topology, phases, the initial signal plan,
//! and arrival segments, as structured text with validated invariants.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalPlan, DEFAULT_MAX_GREEN_S, DEFAULT_MIN_GREEN_S, DEFAULT_YELLOW_S};
use crate::sim::{ArrivalProfile, ArrivalSegment, IntersectionSpec};
use crate::train::{ActionDesign, EnvConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSection {
    pub initial_durations: Vec<u32>,
    #[serde(default = "default_yellow")]
    pub yellow_s: u32,
    #[serde(default = "default_min_green")]
    pub min_green_s: u32,
    #[serde(default = "default_max_green")]
    pub max_green_s: u32,
}

fn default_yellow() -> u32 {
    DEFAULT_YELLOW_S
}
fn default_min_green() -> u32 {
    DEFAULT_MIN_GREEN_S
}
fn default_max_green() -> u32 {
    DEFAULT_MAX_GREEN_S
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrivalsSection {
    pub seed: u64,
    pub horizon_s: u32,
    pub segments: Vec<ArrivalSegment>,
}

/// Named grouping of phases for green-time-ratio traces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionGroup {
    pub label: String,
    pub phases: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub intersection: IntersectionSpec,
    pub signal: SignalSection,
    pub arrivals: ArrivalsSection,
    #[serde(default)]
    pub groups: Vec<DirectionGroup>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::scenario(format!("cannot read {}: {e}", path.display())))?;
        let scenario: Scenario =
            toml::from_str(&text).map_err(|e| Error::scenario(format!("{}: {e}", path.display())))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.intersection.validate()?;
        self.profile().validate(&self.intersection)?;
        let plan = self.initial_plan()?;
        if plan.phase_count() != self.intersection.phases.len() {
            return Err(Error::scenario(format!(
                "{} initial durations for {} phases",
                plan.phase_count(),
                self.intersection.phases.len()
            )));
        }
        if self.arrivals.horizon_s == 0 {
            return Err(Error::scenario("horizon must be positive"));
        }
        for group in &self.groups {
            for &p in &group.phases {
                if p >= self.intersection.phases.len() {
                    return Err(Error::scenario(format!(
                        "group {} references phase {p} beyond {}",
                        group.label,
                        self.intersection.phases.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn initial_plan(&self) -> Result<SignalPlan> {
        SignalPlan::new(
            self.signal.initial_durations.clone(),
            self.signal.yellow_s,
            self.signal.min_green_s,
            self.signal.max_green_s,
        )
    }

    pub fn profile(&self) -> ArrivalProfile {
        ArrivalProfile { segments: self.arrivals.segments.clone(), rng_seed: self.arrivals.seed }
    }

    /// Phase groups for green-ratio traces; defaults to one group per phase.
    pub fn direction_groups(&self) -> Vec<DirectionGroup> {
        if self.groups.is_empty() {
            (0..self.intersection.phases.len())
                .map(|p| DirectionGroup { label: format!("P{}", p + 1), phases: vec![p] })
                .collect()
        } else {
            self.groups.clone()
        }
    }

    pub fn env_config(&self, design: ActionDesign, intervention_dt: u32) -> Result<EnvConfig> {
        Ok(EnvConfig {
            spec: self.intersection.clone(),
            profile: self.profile(),
            initial_plan: self.initial_plan()?,
            design,
            intervention_dt,
            horizon_s: self.arrivals.horizon_s,
        })
    }
}
