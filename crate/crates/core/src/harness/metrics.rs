//! Success rates and min-normalized cost metrics, plus their CSV reports.
//!
//! Cost metrics average successful trials only. A framework's normalized
//! value is its mean divided by the smallest mean among frameworks with at
//! least one success, so the best framework scores exactly 1.0. Trials that
//! ended in an infrastructure fault are left out entirely.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::FailureCause;
use super::trial::{is_comparable, TrialRecord};
use super::HarnessError;
use crate::dialogue::FrameworkKind;
use crate::env::EnvKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("nothing to normalize")]
    Empty,
    #[error("metric values must be positive and finite, got {0}")]
    NonPositive(f64),
}

/// Divides every value by the minimum.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(MetricError::NonPositive(bad));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(values.iter().map(|v| v / min).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkMetrics {
    pub framework: FrameworkKind,
    /// Trials counted in the success rate.
    pub trials: usize,
    pub successes: usize,
    pub infra_errors: usize,
    pub failures: BTreeMap<FailureCause, usize>,
    pub success_rate: f64,
    pub mean_steps: Option<f64>,
    pub mean_api_calls: Option<f64>,
    pub mean_tokens: Option<f64>,
    pub norm_steps: Option<f64>,
    pub norm_api_calls: Option<f64>,
    pub norm_tokens: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvTable {
    pub env: EnvKind,
    pub rows: Vec<FrameworkMetrics>,
}

impl EnvTable {
    pub fn row(&self, framework: FrameworkKind) -> Option<&FrameworkMetrics> {
        self.rows.iter().find(|r| r.framework == framework)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub env: EnvKind,
    pub framework: FrameworkKind,
    pub robot_count: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub tables: Vec<EnvTable>,
    pub series: Vec<SeriesPoint>,
}

impl MetricSet {
    pub fn table(&self, env: EnvKind) -> Option<&EnvTable> {
        self.tables.iter().find(|t| t.env == env)
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Normalizes the present entries of `means`, leaving absent ones absent.
/// A non-positive mean leaves the whole column absent.
fn normalize_column(means: &[Option<f64>]) -> Vec<Option<f64>> {
    let present: Vec<f64> = means.iter().flatten().copied().collect();
    match normalize(&present) {
        Ok(norm) => {
            let mut it = norm.into_iter();
            means.iter().map(|m| m.and_then(|_| it.next())).collect()
        }
        Err(_) => vec![None; means.len()],
    }
}

pub fn aggregate(records: &[TrialRecord]) -> MetricSet {
    let mut by_env: BTreeMap<EnvKind, BTreeMap<FrameworkKind, Vec<&TrialRecord>>> = BTreeMap::new();
    let mut by_count: BTreeMap<(EnvKind, FrameworkKind, usize), (usize, usize)> = BTreeMap::new();
    for r in records {
        by_env.entry(r.env).or_default().entry(r.framework).or_default().push(r);
        if is_comparable(r) {
            let e = by_count.entry((r.env, r.framework, r.robot_count)).or_default();
            e.0 += 1;
            e.1 += usize::from(r.outcome.is_success());
        }
    }

    let mut tables = Vec::new();
    for (env, frameworks) in by_env {
        let mut rows = Vec::new();
        for (framework, recs) in frameworks {
            let counted: Vec<&&TrialRecord> = recs.iter().filter(|r| is_comparable(r)).collect();
            let ok: Vec<&&TrialRecord> = counted.iter().copied().filter(|r| r.outcome.is_success()).collect();
            let mut failures = BTreeMap::new();
            for r in &recs {
                if let Some(c) = r.outcome.cause() {
                    *failures.entry(c).or_insert(0) += 1;
                }
            }
            let trials = counted.len();
            rows.push(FrameworkMetrics {
                framework,
                trials,
                successes: ok.len(),
                infra_errors: recs.len() - trials,
                failures,
                success_rate: if trials == 0 { 0.0 } else { ok.len() as f64 / trials as f64 },
                mean_steps: mean(&ok.iter().map(|r| f64::from(r.steps_taken)).collect::<Vec<_>>()),
                mean_api_calls: mean(&ok.iter().map(|r| f64::from(r.api_calls)).collect::<Vec<_>>()),
                mean_tokens: mean(&ok.iter().map(|r| r.total_tokens as f64).collect::<Vec<_>>()),
                norm_steps: None,
                norm_api_calls: None,
                norm_tokens: None,
            });
        }
        let steps = normalize_column(&rows.iter().map(|r| r.mean_steps).collect::<Vec<_>>());
        let api = normalize_column(&rows.iter().map(|r| r.mean_api_calls).collect::<Vec<_>>());
        let tokens = normalize_column(&rows.iter().map(|r| r.mean_tokens).collect::<Vec<_>>());
        for (i, row) in rows.iter_mut().enumerate() {
            row.norm_steps = steps[i];
            row.norm_api_calls = api[i];
            row.norm_tokens = tokens[i];
        }
        tables.push(EnvTable { env, rows });
    }

    let series = by_count
        .into_iter()
        .map(|((env, framework, robot_count), (trials, successes))| SeriesPoint {
            env,
            framework,
            robot_count,
            trials,
            successes,
            success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        })
        .collect();
    MetricSet { tables, series }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

/// Writes `table_<env>.csv` (metrics by framework, `-` when no run
/// succeeded), `series.csv` (success rate by robot count) and
/// `summary.csv`. Returns the written paths.
type RowFn = fn(&FrameworkMetrics) -> String;

pub fn write_reports(set: &MetricSet, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    for table in &set.tables {
        let path = dir.join(format!("table_{}.csv", table.env.as_str()));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        let mut header = vec!["metric".to_string()];
        header.extend(table.rows.iter().map(|r| r.framework.display_name().to_string()));
        w.write_record(&header).map_err(csv_err)?;
        let rows: [(&str, RowFn); 4] = [
            ("success_rate", |r| format!("{:.1}", 100.0 * r.success_rate)),
            ("steps", |r| cell(r.norm_steps)),
            ("api_calls", |r| cell(r.norm_api_calls)),
            ("tokens", |r| cell(r.norm_tokens)),
        ];
        for (name, f) in rows {
            let mut rec = vec![name.to_string()];
            rec.extend(table.rows.iter().map(f));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        written.push(path);
    }

    let path = dir.join("series.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["env", "framework", "robot_count", "trials", "successes", "success_rate"])
        .map_err(csv_err)?;
    for p in &set.series {
        w.write_record([
            p.env.as_str().to_string(),
            p.framework.display_name().to_string(),
            p.robot_count.to_string(),
            p.trials.to_string(),
            p.successes.to_string(),
            p.success_rate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header: Vec<String> = [
        "env",
        "framework",
        "trials",
        "successes",
        "success_rate",
        "mean_steps",
        "mean_api_calls",
        "mean_tokens",
        "norm_steps",
        "norm_api_calls",
        "norm_tokens",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(FailureCause::ALL.iter().map(|c| c.as_str().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for table in &set.tables {
        for r in &table.rows {
            let mut rec = vec![
                table.env.as_str().to_string(),
                r.framework.display_name().to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                r.success_rate.to_string(),
                opt(r.mean_steps),
                opt(r.mean_api_calls),
                opt(r.mean_tokens),
                opt(r.norm_steps),
                opt(r.norm_api_calls),
                opt(r.norm_tokens),
            ];
            rec.extend(
                FailureCause::ALL
                    .iter()
                    .map(|c| r.failures.get(c).copied().unwrap_or(0).to_string()),
            );
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::Outcome;

    fn rec(env: EnvKind, framework: FrameworkKind, idx: u32, outcome: Outcome, steps: u32, api: u32, tokens: u64) -> TrialRecord {
        TrialRecord {
            trial_id: format!("{}-{}-{idx}", env.as_str(), framework.slug()),
            env,
            framework,
            robot_count: 4,
            trial_index: idx,
            seed: 0,
            config_digest: String::new(),
            outcome,
            detail: None,
            steps_taken: steps,
            api_calls: api,
            prompt_tokens: tokens,
            response_tokens: 0,
            total_tokens: tokens,
            wall_time_ms: 0,
            optimal_steps: None,
            max_iterations: 10,
            transcript: String::new(),
        }
    }

    fn fail(cause: FailureCause) -> Outcome {
        Outcome::Fail { cause }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0, 4.0, 8.0]).unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(normalize(&[3.5]).unwrap(), vec![1.0]);
        assert_eq!(normalize(&[]), Err(MetricError::Empty));
        assert!(normalize(&[1.0, 0.0]).is_err());
        assert!(normalize(&[1.0, -2.0]).is_err());
        assert!(normalize(&[f64::NAN]).is_err());
    }

    #[test]
    fn success_rate_of_33_in_40() {
        let records: Vec<_> = (0..40)
            .map(|i| {
                let o = if i < 33 { Outcome::Success } else { fail(FailureCause::Collision) };
                rec(EnvKind::BoxNet1, FrameworkKind::Hmas2, i, o, 5, 10, 100)
            })
            .collect();
        let set = aggregate(&records);
        let row = set.table(EnvKind::BoxNet1).unwrap().row(FrameworkKind::Hmas2).unwrap();
        assert_eq!(row.success_rate, 0.825);
        assert_eq!(row.norm_steps, Some(1.0));
    }

    #[test]
    fn all_failed_framework_is_absent() {
        let records = vec![
            rec(EnvKind::Warehouse, FrameworkKind::Dmas, 0, fail(FailureCause::ConsensusTimeout), 3, 30, 9000),
            rec(EnvKind::Warehouse, FrameworkKind::Cmas, 0, Outcome::Success, 4, 4, 2000),
            rec(EnvKind::Warehouse, FrameworkKind::Hmas2, 0, Outcome::Success, 4, 12, 5000),
        ];
        let set = aggregate(&records);
        let t = set.table(EnvKind::Warehouse).unwrap();
        let dmas = t.row(FrameworkKind::Dmas).unwrap();
        assert_eq!(dmas.success_rate, 0.0);
        assert_eq!((dmas.norm_steps, dmas.norm_api_calls, dmas.norm_tokens), (None, None, None));
        assert_eq!(t.row(FrameworkKind::Cmas).unwrap().norm_api_calls, Some(1.0));
        assert_eq!(t.row(FrameworkKind::Hmas2).unwrap().norm_api_calls, Some(3.0));
        assert_eq!(t.row(FrameworkKind::Hmas2).unwrap().norm_tokens, Some(2.5));
    }

    #[test]
    fn infra_errors_leave_denominator() {
        let records = vec![
            rec(EnvKind::BoxLift, FrameworkKind::Cmas, 0, Outcome::Success, 2, 2, 10),
            rec(EnvKind::BoxLift, FrameworkKind::Cmas, 1, fail(FailureCause::InfraError), 0, 1, 5),
            rec(EnvKind::BoxLift, FrameworkKind::Cmas, 2, fail(FailureCause::IterationLimit), 6, 6, 50),
        ];
        let set = aggregate(&records);
        let row = set.table(EnvKind::BoxLift).unwrap().row(FrameworkKind::Cmas).unwrap();
        assert_eq!((row.trials, row.successes, row.infra_errors), (2, 1, 1));
        assert_eq!(row.success_rate, 0.5);
        assert_eq!(set.series[0].trials, 2);
    }

    #[test]
    fn reports_have_table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            rec(EnvKind::BoxNet2, FrameworkKind::Dmas, 0, fail(FailureCause::ContextOverflow), 1, 9, 9),
            rec(EnvKind::BoxNet2, FrameworkKind::Cmas, 0, Outcome::Success, 4, 4, 400),
        ];
        let paths = write_reports(&aggregate(&records), dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        let table = std::fs::read_to_string(dir.path().join("table_boxnet2.csv")).unwrap();
        assert_eq!(
            table,
            "metric,DMAS,CMAS\nsuccess_rate,0.0,100.0\nsteps,-,1.00\napi_calls,-,1.00\ntokens,-,1.00\n"
        );
    }
}
