//! Metrics, month-ahead evaluation, criticality and reports.

mod criticality;
mod metrics;
mod report;

use serde::{Deserialize, Serialize};

pub use criticality::{criticality, CriticalityTrace, CRITICALITY_MAX};
pub use metrics::{f_beta, ConfusionCounts};
pub use report::{
    case_study_report, compare_models, write_case_study_csv, CaseStudyRow, ComparisonReport,
    ComparisonRow, CASE_STUDY_HEADER,
};

use crate::detector::{detect, DetectorModel};
use crate::error::{Error, Result};
use crate::ingest::{derive_labels, ScadaFrame, TurbineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthMetrics {
    pub counts: ConfusionCounts,
    pub f_half: f64,
    pub precision: f64,
    pub recall: f64,
}

impl MonthMetrics {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        Self {
            counts,
            f_half: counts.f_beta(0.5),
            precision: counts.precision(),
            recall: counts.recall(),
        }
    }
}

/// Scores `model` on an evaluation frame against labels derived from `config`.
///
/// The caller picks the frame, normally the month right after the model's
/// training or tuning data.
pub fn evaluate_month(model: &DetectorModel, frame: &ScadaFrame, config: &TurbineConfig) -> Result<MonthMetrics> {
    if frame.is_empty() {
        return Err(Error::EmptyResult("evaluation frame is empty".into()));
    }
    let labels = derive_labels(frame, config);
    let detections = detect(model, frame)?;
    let counts = ConfusionCounts::from_predictions(&detections, &labels.as_bools())?;
    Ok(MonthMetrics::from_counts(counts))
}
