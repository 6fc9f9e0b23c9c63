use std::io::{Read, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{criticality, evaluate_month};
use crate::detector::{anomaly_scores, apply_threshold, DetectorModel};
use crate::error::{Error, Result};
use crate::ingest::{format_timestamp, ScadaFrame, TurbineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model_id: String,
    pub f_half: f64,
    pub delta_f_half: f64,
    pub precision: f64,
    pub recall: f64,
}

/// F½ of several models on one evaluation frame, relative to a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_id: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, model_id: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model_id == model_id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Columns `model_id,f_half,delta_f_half,precision,recall`; the
    /// baseline id is not part of the CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, baseline_id: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let rows = r.deserialize().collect::<std::result::Result<Vec<ComparisonRow>, _>>()?;
        Ok(Self {
            baseline_id: baseline_id.to_string(),
            rows,
        })
    }
}

/// Evaluates every model on `frame` and reports F½ differences to `baseline_id`.
pub fn compare_models(
    models: &[(String, &DetectorModel)],
    baseline_id: &str,
    frame: &ScadaFrame,
    config: &TurbineConfig,
) -> Result<ComparisonReport> {
    if models.is_empty() {
        return Err(Error::EmptyResult("no models to compare".into()));
    }
    let metrics = models
        .iter()
        .map(|(id, m)| evaluate_month(m, frame, config).map(|r| (id.clone(), r)))
        .collect::<Result<Vec<_>>>()?;
    let baseline = metrics
        .iter()
        .find(|(id, _)| id == baseline_id)
        .map(|(_, m)| m.f_half)
        .ok_or_else(|| Error::UnknownModel(baseline_id.to_string()))?;
    Ok(ComparisonReport {
        baseline_id: baseline_id.to_string(),
        rows: metrics
            .into_iter()
            .map(|(model_id, m)| ComparisonRow {
                model_id,
                f_half: m.f_half,
                delta_f_half: m.f_half - baseline,
                precision: m.precision,
                recall: m.recall,
            })
            .collect(),
    })
}

/// One timestamp of a case-study trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyRow {
    pub timestamp: DateTime<Utc>,
    pub score: f64,
    pub threshold: f64,
    pub detected: bool,
    pub op_mode: String,
    pub criticality: u32,
}

/// Anomaly score, threshold, detection and criticality for every row of `frame`.
pub fn case_study_report(model: &DetectorModel, frame: &ScadaFrame) -> Result<Vec<CaseStudyRow>> {
    let scores = anomaly_scores(model, frame)?;
    let detected = apply_threshold(&scores, model.threshold);
    let crit = criticality(&detected, frame.op_modes())?;
    Ok((0..frame.len())
        .map(|i| CaseStudyRow {
            timestamp: frame.timestamps()[i],
            score: scores[i],
            threshold: model.threshold,
            detected: detected[i],
            op_mode: frame.op_modes()[i].clone(),
            criticality: crit.values[i],
        })
        .collect())
}

pub const CASE_STUDY_HEADER: [&str; 6] = ["timestamp", "score", "threshold", "detected", "op_mode", "criticality"];

/// Writes `timestamp,score,threshold,detected,op_mode,criticality`
/// with `detected` as 0/1.
pub fn write_case_study_csv<W: Write>(rows: &[CaseStudyRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CASE_STUDY_HEADER)?;
    for r in rows {
        w.write_record([
            format_timestamp(&r.timestamp),
            r.score.to_string(),
            r.threshold.to_string(),
            u8::from(r.detected).to_string(),
            r.op_mode.clone(),
            r.criticality.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let report = ComparisonReport {
            baseline_id: "base".into(),
            rows: vec![
                ComparisonRow {
                    model_id: "base".into(),
                    f_half: 0.8,
                    delta_f_half: 0.0,
                    precision: 0.9,
                    recall: 0.55,
                },
                ComparisonRow {
                    model_id: "tl, decoder".into(),
                    f_half: 0.8123456789,
                    delta_f_half: 0.0123456789,
                    precision: 1.0 / 3.0,
                    recall: 0.1,
                },
            ],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model_id,f_half,delta_f_half,precision,recall\n"));
        assert_eq!(ComparisonReport::read_csv(&buf[..], "base").unwrap(), report);
        assert_eq!(ComparisonReport::from_json(&report.to_json().unwrap()).unwrap(), report);
    }
}
