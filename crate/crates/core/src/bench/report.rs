use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::mildata::{Dataset, FoldPlan};
use crate::milnet::Metrics;
use crate::milpool::PoolingKind;

pub const REPORT_KIND: &str = "attnmil-crossval";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub bags: usize,
    pub instances: usize,
    pub d_feat: usize,
    pub class_count: usize,
    pub class_counts: Vec<usize>,
}

impl DatasetSummary {
    pub fn of(dataset: &Dataset) -> Self {
        Self {
            name: dataset.name.clone(),
            bags: dataset.len(),
            instances: dataset.instance_count(),
            d_feat: dataset.d_feat,
            class_count: dataset.class_count,
            class_counts: dataset.class_counts(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub repeat: usize,
    pub fold: usize,
    /// Seed of the model and of its training run.
    pub seed: u64,
    pub train_bags: usize,
    pub test_bags: usize,
    pub final_train_loss: f64,
    pub metrics: Metrics,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub version: String,
    pub pooling: PoolingKind,
    pub dataset: DatasetSummary,
    pub config: RunConfig,
    /// One plan per repeat.
    pub fold_plans: Vec<FoldPlan>,
    /// Ordered by `(repeat, fold)`.
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    /// Sample standard deviation over all fold × repeat accuracies.
    pub std_accuracy: f64,
    pub wall_clock_secs: f64,
}

/// Mean and sample (n − 1) standard deviation; the deviation of a single value is 0.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

impl ExperimentReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.accuracy).collect()
    }

    /// Copy with every timing field zeroed; two runs of one configuration agree exactly on this.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.wall_clock_secs = 0.0;
        for f in &mut out.folds {
            f.wall_clock_secs = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            path: "<report>".into(),
            line: e.line(),
            msg: e.to_string(),
        })
    }

    pub fn fold_table_header(class_count: usize) -> String {
        let mut h = String::from("dataset,pooling,repeat,fold,seed,train_bags,test_bags,accuracy,final_train_loss");
        for c in 0..class_count {
            write!(h, ",precision_{c},recall_{c},f_score_{c}").unwrap();
        }
        h.push_str(",wall_clock_secs");
        h
    }

    /// Per-fold rows, without header.
    pub fn fold_table_rows(&self) -> String {
        let mut out = String::new();
        for f in &self.folds {
            write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.dataset.name,
                self.pooling,
                f.repeat,
                f.fold,
                f.seed,
                f.train_bags,
                f.test_bags,
                f.metrics.accuracy,
                f.final_train_loss
            )
            .unwrap();
            for c in 0..f.metrics.precision.len() {
                write!(out, ",{},{},{}", f.metrics.precision[c], f.metrics.recall[c], f.metrics.f_score[c]).unwrap();
            }
            writeln!(out, ",{}", f.wall_clock_secs).unwrap();
        }
        out
    }

    pub fn fold_table(&self) -> String {
        format!("{}\n{}", Self::fold_table_header(self.dataset.class_count), self.fold_table_rows())
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: accuracy {:.3} ± {:.3} over {} folds × {} repeats",
            self.dataset.name,
            self.pooling,
            self.mean_accuracy,
            self.std_accuracy,
            self.config.folds,
            self.config.repeats
        )
    }
}

/// Paired runs of several pooling kinds over the same fold plans and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<ExperimentReport>,
}

impl Comparison {
    pub fn without_timing(&self) -> Self {
        Self {
            reports: self.reports.iter().map(ExperimentReport::without_timing).collect(),
        }
    }

    pub fn report(&self, kind: PoolingKind) -> Option<&ExperimentReport> {
        self.reports.iter().find(|r| r.pooling == kind)
    }

    /// Rows are pooling kinds, columns mean ± std.
    pub fn summary_table(&self) -> String {
        let mut out = String::from("pooling     mean    std\n");
        for r in &self.reports {
            writeln!(out, "{:<10} {:.3} ± {:.3}", r.pooling.as_str(), r.mean_accuracy, r.std_accuracy).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }

    pub fn fold_table(&self) -> String {
        let classes = self.reports.first().map_or(2, |r| r.dataset.class_count);
        let mut out = ExperimentReport::fold_table_header(classes);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.fold_table_rows());
        }
        out
    }
}

/// `report.json` → `report.folds.csv`, so the table never lands on a `report.csv` dataset.
pub fn table_path(report_path: &Path) -> PathBuf {
    let base = if report_path.extension().is_some_and(|e| e == "json") {
        report_path.with_extension("")
    } else {
        report_path.to_path_buf()
    };
    let mut s = base.into_os_string();
    s.push(".folds.csv");
    PathBuf::from(s)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the JSON document at `path` and the flat table next to it.
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<PathBuf> {
    write_file(path, &report.to_json())?;
    let table = table_path(path);
    write_file(&table, &report.fold_table())?;
    Ok(table)
}

pub fn write_comparison(comparison: &Comparison, path: &Path) -> Result<PathBuf> {
    write_file(path, &comparison.to_json())?;
    let table = table_path(path);
    write_file(&table, &comparison.fold_table())?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = mean_and_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn table_path_next_to_report() {
        assert_eq!(table_path(Path::new("out/r.json")), PathBuf::from("out/r.folds.csv"));
        assert_eq!(table_path(Path::new("out/r")), PathBuf::from("out/r.folds.csv"));
    }
}
