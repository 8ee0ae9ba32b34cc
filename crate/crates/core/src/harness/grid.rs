//! Grid runner: every (scenario, method, dt, seed) cell trained or evaluated
//! in parallel, failures recorded without stopping the sweep, report emitted
//! at the end.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

use super::{baseline_run, run_dir_name, train_run, write_report, Method, RunRecord};

fn default_episodes() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    /// Scenario files, relative to the grid config file.
    pub scenarios: Vec<PathBuf>,
    pub methods: Vec<String>,
    pub dt_list: Vec<u32>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    /// Parallel workers; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
}

impl GridConfig {
    pub fn load(path: &Path) -> Result<GridConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::spec(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub struct CellOutcome {
    pub name: String,
    pub result: std::result::Result<RunRecord, String>,
}

enum Cell {
    Train { scenario: usize, method: Method, dt: u32, seed: u64 },
    Baseline { scenario: usize, method: Method },
}

/// Runs the whole grid under `out_dir`. Rule-based methods run once per
/// scenario; trained methods run per (dt, seed). Any cell failure is recorded
/// in `grid_errors.csv` and the grid continues.
pub fn run_grid(config: &GridConfig, config_dir: &Path, out_dir: &Path) -> Result<Vec<CellOutcome>> {
    let mut scenarios = Vec::new();
    for rel in &config.scenarios {
        let path = if rel.is_absolute() { rel.clone() } else { config_dir.join(rel) };
        scenarios.push(Scenario::load(&path)?);
    }
    let methods: Vec<Method> = config.methods.iter().map(|m| Method::parse(m)).collect::<Result<_>>()?;
    if config.dt_list.is_empty() || config.seeds.is_empty() {
        return Err(Error::spec("grid needs at least one dt and one seed"));
    }
    std::fs::create_dir_all(out_dir)?;

    let mut cells = Vec::new();
    for (s, _) in scenarios.iter().enumerate() {
        for &method in &methods {
            if method.is_trained() {
                for &dt in &config.dt_list {
                    for &seed in &config.seeds {
                        cells.push(Cell::Train { scenario: s, method, dt, seed });
                    }
                }
            } else {
                cells.push(Cell::Baseline { scenario: s, method });
            }
        }
    }

    let run_cell = |cell: &Cell| -> CellOutcome {
        match *cell {
            Cell::Train { scenario, method, dt, seed } => {
                let sc = &scenarios[scenario];
                let name = run_dir_name(&sc.name, method, dt, seed);
                let result = train_run(sc, method, dt, seed, config.episodes, &out_dir.join(&name))
                    .map_err(|e| e.to_string());
                CellOutcome { name, result }
            }
            Cell::Baseline { scenario, method } => {
                let sc = &scenarios[scenario];
                let name = run_dir_name(&sc.name, method, 0, 0);
                let result = baseline_run(sc, method, &out_dir.join(&name)).map_err(|e| e.to_string());
                CellOutcome { name, result }
            }
        }
    };

    let outcomes: Vec<CellOutcome> = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::spec(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    } else {
        cells.par_iter().map(run_cell).collect()
    };

    let failures: Vec<&CellOutcome> = outcomes.iter().filter(|o| o.result.is_err()).collect();
    if !failures.is_empty() {
        let mut csv = String::from("cell,error\n");
        for f in &failures {
            if let Err(e) = &f.result {
                csv.push_str(&format!("{},{}\n", f.name, e.replace(',', ";").replace('\n', " ")));
            }
        }
        std::fs::write(out_dir.join("grid_errors.csv"), csv)?;
    }
    if outcomes.iter().any(|o| o.result.is_ok()) {
        write_report(out_dir)?;
    }
    Ok(outcomes)
}
