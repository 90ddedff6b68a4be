use serde::{Deserialize, Serialize};

use super::cv::Selection;
use super::dataset::CalibrationDataset;
use super::model::{predict, RegressionModel};
use crate::{Error, Result};

/// Absolute-error bands reported for a calibration holdout, in newtons.
pub const TOLERANCE_THRESHOLDS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub thresholds: Vec<f64>,
    pub pct_within: Vec<f64>,
    pub mae: f64,
    pub mae_std: f64,
    pub rmse: f64,
    pub n: usize,
}

impl ToleranceReport {
    /// Builds the report from raw absolute errors.
    pub fn from_errors(abs_err: &[f64]) -> Result<Self> {
        if abs_err.is_empty() {
            return Err(Error::Evaluation("no predictions to report on".into()));
        }
        let n = abs_err.len() as f64;
        let pct_within = TOLERANCE_THRESHOLDS
            .iter()
            .map(|t| 100.0 * abs_err.iter().filter(|e| **e <= *t).count() as f64 / n)
            .collect();
        let mae = abs_err.iter().sum::<f64>() / n;
        let mae_std = (abs_err.iter().map(|e| (e - mae) * (e - mae)).sum::<f64>() / n).sqrt();
        let rmse = (abs_err.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        Ok(ToleranceReport {
            thresholds: TOLERANCE_THRESHOLDS.to_vec(),
            pct_within,
            mae,
            mae_std,
            rmse,
            n: abs_err.len(),
        })
    }

    pub fn pct_at(&self, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|t| (*t - threshold).abs() < 1e-12)
            .map(|i| self.pct_within[i])
    }
}

/// Outcome of one calibrate-train run: the CV ranking and the holdout check
/// of the refitted winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub format_version: u32,
    pub seed: u64,
    pub folds: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub selection: Selection,
    pub holdout: ToleranceReport,
}

pub fn tolerance_report(model: &RegressionModel, test: &CalibrationDataset) -> Result<ToleranceReport> {
    let errs = test
        .samples
        .iter()
        .map(|s| Ok((predict(model, &s.features)? - s.force).abs()))
        .collect::<Result<Vec<_>>>()?;
    ToleranceReport::from_errors(&errs)
}
