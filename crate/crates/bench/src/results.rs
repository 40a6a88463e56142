//! Benchmark results, summary statistics and CSV output.

use std::path::Path;

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationErrors {
    pub realization: usize,
    /// `errors[m][k]`, method `m`, time `steps[k]`.
    pub errors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub realization: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub seed: u64,
    pub methods: Vec<String>,
    /// Times `t` at which `‖x̂(t+1) − x(t+1)‖₁` is scored.
    pub steps: Vec<usize>,
    /// Completed realizations in test-split order.
    pub realizations: Vec<RealizationErrors>,
    /// Realizations aborted for every method.
    pub failures: Vec<Failure>,
    pub max_achievability: f64,
    pub synthesis_seconds: Vec<f64>,
    pub wall_seconds: f64,
}

/// Box-plot statistics of per-realization totals for one method.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
    /// `100·(mean − reference)/reference` against the best DR-MHE mean.
    pub rel_increment_pct: f64,
}

impl BenchResult {
    pub fn new(seed: u64, methods: Vec<String>, steps: Vec<usize>) -> Self {
        BenchResult {
            seed,
            methods,
            steps,
            realizations: Vec::new(),
            failures: Vec::new(),
            max_achievability: 0.0,
            synthesis_seconds: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    /// True when any realization was aborted.
    pub fn is_flagged(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }

    /// Per-realization sum of the per-step errors of method `m`.
    pub fn totals(&self, m: usize) -> Vec<f64> {
        self.realizations
            .iter()
            .map(|r| r.errors[m].iter().sum())
            .collect()
    }

    pub fn mean_total(&self, m: usize) -> f64 {
        let totals = self.totals(m);
        totals.iter().sum::<f64>() / totals.len() as f64
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let means: Vec<f64> = (0..self.methods.len()).map(|m| self.mean_total(m)).collect();
        let reference = self
            .methods
            .iter()
            .zip(&means)
            .filter(|(name, _)| name.starts_with("DRO"))
            .map(|(_, &mean)| mean)
            .fold(f64::NAN, f64::min);
        self.methods
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let mut totals = self.totals(m);
                totals.sort_by(f64::total_cmp);
                let (q1, median, q3) = (
                    quantile(&totals, 0.25),
                    quantile(&totals, 0.5),
                    quantile(&totals, 0.75),
                );
                let iqr = q3 - q1;
                let lo_fence = q1 - 1.5 * iqr;
                let hi_fence = q3 + 1.5 * iqr;
                let lo_whisker = totals.iter().copied().find(|&x| x >= lo_fence).unwrap_or(f64::NAN);
                let hi_whisker = totals.iter().rev().copied().find(|&x| x <= hi_fence).unwrap_or(f64::NAN);
                SummaryRow {
                    method: name.clone(),
                    mean: means[m],
                    median,
                    q1,
                    q3,
                    lo_whisker,
                    hi_whisker,
                    rel_increment_pct: 100.0 * (means[m] - reference) / reference,
                }
            })
            .collect()
    }
}

/// Linearly interpolated quantile of sorted data (NaN when empty).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = q * (len - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `per_step_errors.csv`, `totals.csv`, `summary.csv` and, when
/// realizations were aborted, `failures.csv` into `dir`.
pub fn emit_results(result: &BenchResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let per_step = result.methods.iter().enumerate().flat_map(|(m, method)| {
        result.realizations.iter().flat_map(move |r| {
            result.steps.iter().zip(&r.errors[m]).map(move |(t, e)| {
                vec![method.clone(), r.realization.to_string(), t.to_string(), e.to_string()]
            })
        })
    });
    write_rows(
        &dir.join("per_step_errors.csv"),
        &["method", "realization", "t", "error"],
        per_step,
    )?;

    let totals = result.methods.iter().enumerate().flat_map(|(m, method)| {
        result
            .realizations
            .iter()
            .zip(result.totals(m))
            .map(move |(r, total)| vec![method.clone(), r.realization.to_string(), total.to_string()])
    });
    write_rows(&dir.join("totals.csv"), &["method", "realization", "total"], totals)?;

    let summary = result.summary().into_iter().map(|s| {
        vec![
            s.method,
            s.mean.to_string(),
            s.median.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
            s.lo_whisker.to_string(),
            s.hi_whisker.to_string(),
            s.rel_increment_pct.to_string(),
        ]
    });
    write_rows(
        &dir.join("summary.csv"),
        &[
            "method",
            "mean",
            "median",
            "q1",
            "q3",
            "lo_whisker",
            "hi_whisker",
            "rel_increment_pct",
        ],
        summary,
    )?;

    if result.is_flagged() {
        let failures = result
            .failures
            .iter()
            .map(|f| vec![f.realization.to_string(), f.message.clone()]);
        write_rows(&dir.join("failures.csv"), &["realization", "message"], failures)?;
    }
    Ok(())
}

/// Writes the `(eps, mean total)` pairs of an epsilon sweep.
pub fn emit_sweep(points: &[(f64, f64)], path: &Path) -> Result<()> {
    write_rows(
        path,
        &["eps", "mean_total"],
        points.iter().map(|(e, m)| vec![e.to_string(), m.to_string()]),
    )
}
