//! Confusion counts and derived metrics for a detection report against
//! ground-truth fraud labels. Only this evaluation path ever reads the
//! labels; the detector itself never sees them.

use serde::{Deserialize, Serialize};

use crate::detector::DetectionReport;
use crate::error::{Error, Result};
use crate::fraud::FraudLabels;

/// Confusion counts with precision, recall, accuracy, and F1.
/// Ratios that are undefined (zero denominator) are `None` and are
/// reported as "n/a" rather than zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: f64,
    pub f1: Option<f64>,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Metrics {
        let total = tp + fp + fn_ + tn;
        let precision = if tp + fp > 0 {
            Some(tp as f64 / (tp + fp) as f64)
        } else {
            None
        };
        let recall = if tp + fn_ > 0 {
            Some(tp as f64 / (tp + fn_) as f64)
        } else {
            None
        };
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) => {
                if p + r > 0.0 {
                    Some(2.0 * p * r / (p + r))
                } else {
                    Some(0.0)
                }
            }
            _ => None,
        };
        let accuracy = if total > 0 {
            (tp + tn) as f64 / total as f64
        } else {
            0.0
        };
        Metrics {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            accuracy,
            f1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Regions flagged by the model, as a fraction of all regions.
    pub fn flagged_fraction(&self) -> f64 {
        (self.tp + self.fp) as f64 / self.total().max(1) as f64
    }

    /// Correctly flagged fraudulent regions, as a fraction of all regions.
    pub fn true_detected_fraction(&self) -> f64 {
        self.tp as f64 / self.total().max(1) as f64
    }
}

/// Exact confusion counting of a report against labels over the same
/// region set.
pub fn evaluate(report: &DetectionReport, labels: &FraudLabels) -> Result<Metrics> {
    if report.rows.len() != labels.regions.len() {
        return Err(Error::RegionSetMismatch);
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for row in &report.rows {
        let label = labels
            .regions
            .iter()
            .find(|l| l.region_id == row.region_id)
            .ok_or(Error::RegionSetMismatch)?;
        match (row.flagged, label.fraudulent) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}
