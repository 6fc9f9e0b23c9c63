//! Feature selection, angle expansion and min-max scaling.
//!
//! Pruning runs on the normal-behaviour training rows only:
//! counters and set points are dropped by role, then any remaining column
//! with at most three distinct values or with more than 80% zeros. Angle
//! columns become a sine/cosine pair. Every resulting feature is scaled
//! with the min and max seen during fitting; values outside that range are
//! left unclipped.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ColumnRole, ScadaFrame};

/// Columns with this many distinct values or fewer are dropped.
pub const MAX_LOW_VARIANCE_UNIQUE: usize = 3;
/// Columns whose zero share strictly exceeds `ZERO_SHARE_NUM / ZERO_SHARE_DEN` are dropped.
const ZERO_SHARE_NUM: usize = 4;
const ZERO_SHARE_DEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub kept_columns: Vec<String>,
    pub angle_columns: Vec<String>,
    pub feature_names: Vec<String>,
    pub min_vals: Vec<f64>,
    pub max_vals: Vec<f64>,
    /// Angle columns stored in radians; all others are degrees.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radian_columns: Vec<String>,
}

/// Scaled model input aligned to the source frame's timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub feature_names: Vec<String>,
    pub timestamps: Vec<DateTime<Utc>>,
}

fn is_radian_unit(unit: &str) -> bool {
    matches!(
        unit.trim().to_ascii_lowercase().as_str(),
        "rad" | "radian" | "radians"
    )
}

/// Canonical bit pattern for exact-equality counting (folds -0.0 into 0.0).
fn value_key(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

struct ColumnStats {
    unique: HashSet<u64>,
    zeros: usize,
}

impl FeaturePipeline {
    /// Fits on one normal-behaviour frame.
    pub fn fit(frame: &ScadaFrame) -> Result<Self> {
        Self::fit_frames(&[frame])
    }

    /// Fits on the concatenation of several frames sharing one schema.
    pub fn fit_frames(frames: &[&ScadaFrame]) -> Result<Self> {
        let first = *frames.first().ok_or(Error::EmptyInput)?;
        for f in &frames[1..] {
            if f.schema() != first.schema() {
                return Err(Error::SchemaMismatch(
                    "frames declare different columns".into(),
                ));
            }
        }
        let n_rows: usize = frames.iter().map(|f| f.len()).sum();
        if n_rows == 0 {
            return Err(Error::EmptyResult("no rows to fit the pipeline on".into()));
        }
        let schema = first.schema();
        let mut kept_columns = Vec::new();
        let mut angle_columns = Vec::new();
        let mut radian_columns = Vec::new();
        for (j, col) in schema.value_columns().enumerate() {
            if matches!(col.role, ColumnRole::Counter | ColumnRole::Setpoint) {
                continue;
            }
            let mut stats = ColumnStats {
                unique: HashSet::new(),
                zeros: 0,
            };
            for f in frames {
                for i in 0..f.len() {
                    let v = f.value(i, j);
                    if v == 0.0 {
                        stats.zeros += 1;
                    }
                    if stats.unique.len() <= MAX_LOW_VARIANCE_UNIQUE {
                        stats.unique.insert(value_key(v));
                    }
                }
            }
            if stats.unique.len() <= MAX_LOW_VARIANCE_UNIQUE {
                log::debug!("dropping low-variance column {}", col.name);
                continue;
            }
            if stats.zeros * ZERO_SHARE_DEN > n_rows * ZERO_SHARE_NUM {
                log::debug!("dropping zero-dominated column {}", col.name);
                continue;
            }
            kept_columns.push(col.name.clone());
            if col.role == ColumnRole::Angle {
                angle_columns.push(col.name.clone());
                if is_radian_unit(&col.unit) {
                    radian_columns.push(col.name.clone());
                }
            }
        }
        if kept_columns.is_empty() {
            return Err(Error::NoFeaturesLeft);
        }
        let mut feature_names = Vec::new();
        for c in &kept_columns {
            if angle_columns.contains(c) {
                feature_names.push(format!("{c}_sin"));
                feature_names.push(format!("{c}_cos"));
            } else {
                feature_names.push(c.clone());
            }
        }
        let mut pipeline = FeaturePipeline {
            min_vals: vec![f64::INFINITY; feature_names.len()],
            max_vals: vec![f64::NEG_INFINITY; feature_names.len()],
            kept_columns,
            angle_columns,
            feature_names,
            radian_columns,
        };
        let mut buf = vec![0.0; pipeline.n_features()];
        for f in frames {
            let plan = pipeline.plan(f)?;
            for i in 0..f.len() {
                pipeline.expand_row(&plan, f.row(i), &mut buf);
                for (k, v) in buf.iter().enumerate() {
                    pipeline.min_vals[k] = pipeline.min_vals[k].min(*v);
                    pipeline.max_vals[k] = pipeline.max_vals[k].max(*v);
                }
            }
        }
        Ok(pipeline)
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Resolves each kept column to (frame index, angle conversion factor).
    fn plan(&self, frame: &ScadaFrame) -> Result<Vec<(usize, Option<f64>)>> {
        self.kept_columns
            .iter()
            .map(|c| {
                let j = frame.require_column(c)?;
                let angle = if self.angle_columns.contains(c) {
                    Some(if self.radian_columns.contains(c) {
                        1.0
                    } else {
                        std::f64::consts::PI / 180.0
                    })
                } else {
                    None
                };
                Ok((j, angle))
            })
            .collect()
    }

    /// Unscaled features for one raw row.
    fn expand_row(&self, plan: &[(usize, Option<f64>)], row: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for &(j, angle) in plan {
            match angle {
                Some(factor) => {
                    let (s, c) = (row[j] * factor).sin_cos();
                    out[k] = s;
                    out[k + 1] = c;
                    k += 2;
                }
                None => {
                    out[k] = row[j];
                    k += 1;
                }
            }
        }
    }

    fn scale_in_place(&self, feats: &mut [f64]) {
        for (k, v) in feats.iter_mut().enumerate() {
            let (lo, hi) = (self.min_vals[k], self.max_vals[k]);
            *v = if hi == lo { 0.0 } else { (*v - lo) / (hi - lo) };
        }
    }

    /// Expanded, scaled features for every row of `frame`.
    pub fn apply(&self, frame: &ScadaFrame) -> Result<FeatureMatrix> {
        let values = self.transform(frame)?;
        Ok(FeatureMatrix {
            values,
            feature_names: self.feature_names.clone(),
            timestamps: frame.timestamps().to_vec(),
        })
    }

    /// The feature values only.
    pub fn transform(&self, frame: &ScadaFrame) -> Result<Array2<f64>> {
        let plan = self.plan(frame)?;
        let n = self.n_features();
        let mut values = Array2::zeros((frame.len(), n));
        for (i, mut out) in values.rows_mut().into_iter().enumerate() {
            let out = out.as_slice_mut().expect("standard layout");
            self.expand_row(&plan, frame.row(i), out);
            self.scale_in_place(out);
        }
        Ok(values)
    }

    /// Row-wise concatenation of several frames' features.
    pub fn transform_frames(&self, frames: &[&ScadaFrame]) -> Result<Array2<f64>> {
        let parts = frames
            .iter()
            .map(|f| self.transform(f))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        ndarray::concatenate(ndarray::Axis(0), &views)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))
    }
}
