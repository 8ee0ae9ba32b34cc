//! Report assembly: aggregates persisted run records into a CSV of metric
//! means and standard deviations over seeds, plus comparison learning-curve
//! plots. Reports are pure functions of the records, so regeneration is
//! byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::Real;

use super::plot;
use super::RunRecord;

/// Reads every `*/record.json` under `runs_dir`, sorted by directory name.
pub fn collect_records(runs_dir: &Path) -> Result<Vec<RunRecord>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(runs_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join("record.json").is_file())
        .collect();
    dirs.sort();
    let mut records = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let path = dir.join("record.json");
        let text = std::fs::read_to_string(&path)?;
        let record: RunRecord =
            serde_json::from_str(&text).map_err(|e| Error::spec(format!("{}: {e}", path.display())))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::spec(format!("no run records under {}", runs_dir.display())));
    }
    Ok(records)
}

fn mean_std(values: &[Real]) -> (Real, Real) {
    let n = values.len() as Real;
    let mean = values.iter().sum::<Real>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>() / n;
    (mean, var.sqrt())
}

/// Writes `report.csv` (mean and population standard deviation of the two
/// metrics over seeds) and one reward-curve comparison plot per
/// (scenario, dt) group. Returns the report path.
pub fn write_report(runs_dir: &Path) -> Result<PathBuf> {
    let records = collect_records(runs_dir)?;

    let mut groups: BTreeMap<(String, String, u32), Vec<&RunRecord>> = BTreeMap::new();
    for record in &records {
        groups
            .entry((record.scenario.clone(), record.method.clone(), record.dt))
            .or_default()
            .push(record);
    }

    let mut csv = String::from("scenario,method,dt,seeds,mq_mean,mq_std,ms_mean,ms_std\n");
    for ((scenario, method, dt), runs) in &groups {
        let mq: Vec<Real> = runs.iter().map(|r| r.mean_queue_m).collect();
        let ms: Vec<Real> = runs.iter().map(|r| r.steadiness).collect();
        let (mq_mean, mq_std) = mean_std(&mq);
        let (ms_mean, ms_std) = mean_std(&ms);
        let _ = writeln!(
            csv,
            "{scenario},{method},{dt},{},{mq_mean:.6},{mq_std:.6},{ms_mean:.6},{ms_std:.6}",
            runs.len()
        );
    }
    let report_path = runs_dir.join("report.csv");
    std::fs::write(&report_path, csv)?;

    // Fig. 8-style overlays: one chart per (scenario, dt), the first seed of
    // each trained method.
    let mut curve_groups: BTreeMap<(String, u32), BTreeMap<String, &RunRecord>> = BTreeMap::new();
    for record in &records {
        if record.episode_rewards.is_empty() {
            continue;
        }
        curve_groups
            .entry((record.scenario.clone(), record.dt))
            .or_default()
            .entry(record.method.clone())
            .or_insert(record);
    }
    for ((scenario, dt), methods) in &curve_groups {
        let series: Vec<plot::Series> = methods
            .iter()
            .map(|(method, record)| plot::Series {
                label: method.clone(),
                points: record.episode_rewards.iter().enumerate().map(|(i, &r)| (i as f64, r)).collect(),
            })
            .collect();
        plot::line_chart(
            &runs_dir.join(format!("reward_curves__{scenario}__dt{dt}.svg")),
            &format!("training reward on {scenario} (dt={dt})"),
            "episode",
            "cumulative reward",
            &series,
        )?;
    }
    Ok(report_path)
}
