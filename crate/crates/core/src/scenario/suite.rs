//! Batch runs over scenarios × methods × seeds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_episode, EpisodeResult, Method};
use crate::config::{Config, SuiteSection};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub scenario: String,
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    pub completion_time: f64,
    pub disagreement: f64,
    pub alignment_time: f64,
    pub min_manipulability: f64,
    pub error: Option<String>,
}

impl EpisodeRow {
    fn from_result(scenario: &str, method: Method, seed: u64, r: Result<EpisodeResult>) -> Self {
        match r {
            Ok(r) => Self {
                scenario: scenario.to_string(),
                method,
                seed,
                success: r.metrics.success,
                completion_time: r.metrics.completion_time,
                disagreement: r.metrics.disagreement,
                alignment_time: r.metrics.alignment_time,
                min_manipulability: r.metrics.min_manipulability,
                error: None,
            },
            Err(e) => Self {
                scenario: scenario.to_string(),
                method,
                seed,
                success: false,
                completion_time: f64::NAN,
                disagreement: f64::NAN,
                alignment_time: f64::NAN,
                min_manipulability: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
}

impl MetricStats {
    /// Mean and sample standard deviation (zero for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Aggregate of one (scenario, method) cell. Flat so the CSV and JSON
/// outputs share one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub method: Method,
    pub episodes: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub completion_time_mean: f64,
    pub completion_time_std: f64,
    pub disagreement_mean: f64,
    pub disagreement_std: f64,
    pub alignment_time_mean: f64,
    pub alignment_time_std: f64,
    pub min_manipulability_mean: f64,
    pub min_manipulability_std: f64,
}

impl CellSummary {
    fn from_rows(scenario: &str, method: Method, rows: &[&EpisodeRow]) -> Self {
        let ok: Vec<&&EpisodeRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let stats = |f: fn(&EpisodeRow) -> f64| MetricStats::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        let ct = stats(|r| r.completion_time);
        let dis = stats(|r| r.disagreement);
        let al = stats(|r| r.alignment_time);
        let mm = stats(|r| r.min_manipulability);
        Self {
            scenario: scenario.to_string(),
            method,
            episodes: rows.len(),
            errors: rows.len() - ok.len(),
            success_rate: if ok.is_empty() { 0.0 } else { ok.iter().filter(|r| r.success).count() as f64 / ok.len() as f64 },
            completion_time_mean: ct.mean,
            completion_time_std: ct.std,
            disagreement_mean: dis.mean,
            disagreement_std: dis.std,
            alignment_time_mean: al.mean,
            alignment_time_std: al.std,
            min_manipulability_mean: mm.mean,
            min_manipulability_std: mm.std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResults {
    pub episodes: Vec<EpisodeRow>,
    pub cells: Vec<CellSummary>,
}

impl SuiteResults {
    pub fn cell(&self, scenario: &str, method: Method) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.scenario == scenario && c.method == method)
    }

    /// Writes `summary.{csv,json}` and `episodes.{csv,json}` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_csv(dir.join("summary.csv"), &self.cells)?;
        write_csv(dir.join("episodes.csv"), &self.episodes)?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.cells)?)?;
        std::fs::write(dir.join("episodes.json"), serde_json::to_string_pretty(&self.episodes)?)?;
        Ok(())
    }

    pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<CellSummary>> {
        let mut reader = csv::Reader::from_path(path)?;
        reader.deserialize().map(|r| r.map_err(Into::into)).collect()
    }
}

fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (scenario, method, seed) episode; per-episode failures are
/// recorded in the rows instead of aborting the suite.
pub fn run_suite(cfg: &Config, suite: &SuiteSection) -> SuiteResults {
    let jobs: Vec<(String, Method, u64)> = suite
        .scenarios
        .iter()
        .flat_map(|s| suite.methods.iter().flat_map(move |m| suite.seeds.iter().map(move |seed| (s.clone(), *m, *seed))))
        .collect();

    let run = |(name, method, seed): &(String, Method, u64)| {
        let result = cfg.scenario(name).and_then(|sc| run_episode(cfg, &sc, *method, *seed));
        EpisodeRow::from_result(name, *method, *seed, result)
    };

    #[cfg(feature = "parallel")]
    let episodes: Vec<EpisodeRow> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let episodes: Vec<EpisodeRow> = jobs.iter().map(run).collect();

    let mut cells = Vec::new();
    for s in &suite.scenarios {
        for m in &suite.methods {
            let rows: Vec<&EpisodeRow> = episodes.iter().filter(|r| &r.scenario == s && r.method == *m).collect();
            cells.push(CellSummary::from_rows(s, *m, &rows));
        }
    }
    SuiteResults { episodes, cells }
}
