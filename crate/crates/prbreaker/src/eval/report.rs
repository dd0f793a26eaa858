//! Evaluation report: one struct holding every table a run produces,
//! saved as a directory of plain CSVs plus a report.json that can be
//! reloaded to regenerate them byte for byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::bootstrap::ConfidenceInterval;
use crate::eval::importance::FeatureImportance;
use crate::eval::metrics::CalibrationBin;
use crate::eval::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Split label: "temporal", "repo", or "loao:<agent>".
    pub split: String,
    /// Scoring model: "full", "size_only", or "path_tokens".
    pub model: String,
    /// Metric name: "roc_auc", "pr_auc", "precision_at_budget", "recall_at_budget".
    pub metric: String,
    pub ci: ConfidenceInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileAuc {
    pub stratum: String,
    /// Inclusive upper bound on total_changes; None for the open top stratum.
    pub upper_bound: Option<u64>,
    pub n: usize,
    /// None when the stratum is single-class on the test side.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub stage: String,
    pub schema_hash: String,
    pub budget: f64,
    pub metrics: Vec<MetricsRow>,
    pub roc_points: Vec<(f64, f64)>,
    pub calibration: Vec<CalibrationBin>,
    pub topk_coverage: Vec<(f64, f64)>,
    pub quartile_auc: Vec<QuartileAuc>,
    pub importance: Vec<FeatureImportance>,
    /// ECDF of feedback-to-close durations in days.
    pub ecdf_days: Vec<(f64, f64)>,
}

impl EvalReport {
    pub fn validate(&self) -> Result<(), EvalError> {
        for row in &self.metrics {
            let c = &row.ci;
            let ok = (0.0..=1.0).contains(&c.point)
                && c.low <= c.point
                && c.point <= c.high
                && (0.0..=1.0).contains(&c.low)
                && (0.0..=1.0).contains(&c.high);
            if !ok {
                return Err(EvalError::Format(format!(
                    "metric {}/{}/{} out of bounds: {:?}",
                    row.split, row.model, row.metric, c
                )));
            }
        }
        Ok(())
    }

    /// Writes report.json plus the seven CSV tables into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), EvalError> {
        fs::create_dir_all(dir)?;
        let json =
            serde_json::to_string_pretty(self).map_err(|e| EvalError::Format(e.to_string()))?;
        fs::write(dir.join("report.json"), json + "\n")?;

        let mut w = table(
            dir,
            "metrics.csv",
            "split,model,metric,point,ci_low,ci_high",
        )?;
        for r in &self.metrics {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.split, r.model, r.metric, r.ci.point, r.ci.low, r.ci.high
            )?;
        }
        w.flush()?;

        let mut w = table(dir, "roc_points.csv", "fpr,tpr")?;
        for (fpr, tpr) in &self.roc_points {
            writeln!(w, "{fpr},{tpr}")?;
        }
        w.flush()?;

        let mut w = table(
            dir,
            "calibration.csv",
            "bin_mid,mean_predicted,fraction_positive,count",
        )?;
        for b in &self.calibration {
            writeln!(
                w,
                "{},{},{},{}",
                b.bin_mid, b.mean_predicted, b.fraction_positive, b.count
            )?;
        }
        w.flush()?;

        let mut w = table(dir, "topk_coverage.csv", "budget,recall")?;
        for (budget, recall) in &self.topk_coverage {
            writeln!(w, "{budget},{recall}")?;
        }
        w.flush()?;

        let mut w = table(dir, "quartile_auc.csv", "stratum,upper_bound,n,auc")?;
        for q in &self.quartile_auc {
            let upper = q.upper_bound.map_or(String::new(), |u| u.to_string());
            let auc = q.auc.map_or(String::new(), |a| a.to_string());
            writeln!(w, "{},{},{},{}", q.stratum, upper, q.n, auc)?;
        }
        w.flush()?;

        let mut w = table(dir, "importance.csv", "feature,mean_auc_drop")?;
        for fi in &self.importance {
            writeln!(w, "{},{}", fi.feature, fi.mean_auc_drop)?;
        }
        w.flush()?;

        let mut w = table(dir, "ecdf.csv", "days,cumulative_fraction")?;
        for (x, y) in &self.ecdf_days {
            writeln!(w, "{x},{y}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, EvalError> {
        let path = dir.join("report.json");
        let raw = fs::read_to_string(&path)?;
        serde_json::from_str(&raw).map_err(|e| EvalError::Format(e.to_string()))
    }
}

fn table(dir: &Path, name: &str, header: &str) -> Result<std::io::BufWriter<fs::File>, EvalError> {
    let file = fs::File::create(dir.join(name))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(point: f64) -> ConfidenceInterval {
        ConfidenceInterval {
            point,
            low: point - 0.05,
            high: point + 0.05,
        }
    }

    fn sample_report() -> EvalReport {
        EvalReport {
            seed: 42,
            stage: "t0".into(),
            schema_hash: "abcd1234".into(),
            budget: 0.2,
            metrics: vec![
                MetricsRow {
                    split: "temporal".into(),
                    model: "full".into(),
                    metric: "roc_auc".into(),
                    ci: ci(0.87),
                },
                MetricsRow {
                    split: "temporal".into(),
                    model: "size_only".into(),
                    metric: "roc_auc".into(),
                    ci: ci(0.79),
                },
            ],
            roc_points: vec![(0.0, 0.0), (0.25, 0.75), (1.0, 1.0)],
            calibration: vec![CalibrationBin {
                bin_mid: 0.15,
                mean_predicted: 0.14,
                fraction_positive: 0.16,
                count: 40,
            }],
            topk_coverage: vec![(0.01, 0.05), (0.2, 0.69), (1.0, 1.0)],
            quartile_auc: vec![
                QuartileAuc {
                    stratum: "q1".into(),
                    upper_bound: Some(51),
                    n: 25,
                    auc: Some(0.61),
                },
                QuartileAuc {
                    stratum: "q4".into(),
                    upper_bound: None,
                    n: 25,
                    auc: None,
                },
            ],
            importance: vec![FeatureImportance {
                feature: "additions".into(),
                mean_auc_drop: 0.12,
            }],
            ecdf_days: vec![(1.0, 0.3), (14.0, 0.9), (60.0, 1.0)],
        }
    }

    #[test]
    fn save_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample_report();
        report.save(dir.path()).unwrap();
        let loaded = EvalReport::load(dir.path()).unwrap();
        assert_eq!(report, loaded);
        for name in [
            "report.json",
            "metrics.csv",
            "roc_points.csv",
            "calibration.csv",
            "topk_coverage.csv",
            "quartile_auc.csv",
            "importance.csv",
            "ecdf.csv",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
    }

    #[test]
    fn save_is_byte_stable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let report = sample_report();
        report.save(a.path()).unwrap();
        report.save(b.path()).unwrap();
        for name in ["report.json", "metrics.csv", "quartile_auc.csv", "ecdf.csv"] {
            let x = fs::read(a.path().join(name)).unwrap();
            let y = fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between saves");
        }
    }

    #[test]
    fn csv_headers_are_documented() {
        let dir = tempfile::tempdir().unwrap();
        sample_report().save(dir.path()).unwrap();
        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(metrics.starts_with("split,model,metric,point,ci_low,ci_high\n"));
        assert!(metrics.contains("temporal,full,roc_auc,0.87,"));
        let quart = fs::read_to_string(dir.path().join("quartile_auc.csv")).unwrap();
        assert!(quart.contains("q4,,25,\n"), "open stratum row: {quart}");
    }

    #[test]
    fn validate_flags_inverted_intervals() {
        let mut report = sample_report();
        assert!(report.validate().is_ok());
        report.metrics[0].ci.low = 0.95;
        assert!(report.validate().is_err());
    }
}
