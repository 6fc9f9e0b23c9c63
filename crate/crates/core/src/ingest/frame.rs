use std::sync::Arc;

use chrono::{DateTime, Utc};

use super::schema::{ColumnRole, Schema};
use crate::error::{Error, Result};

/// Sampling interval of SCADA records, in seconds.
pub const GRID_SECONDS: i64 = 600;

/// Time-indexed table of 10-minute SCADA records.
///
/// Values are stored row-major with one column per value column of the
/// schema (everything except timestamp and op-mode). Timestamps are
/// strictly increasing and aligned to the 10-minute grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScadaFrame {
    schema: Arc<Schema>,
    column_names: Arc<Vec<String>>,
    timestamps: Vec<DateTime<Utc>>,
    op_modes: Vec<String>,
    values: Vec<f64>,
}

pub(crate) fn on_grid(t: &DateTime<Utc>) -> bool {
    t.timestamp().rem_euclid(GRID_SECONDS) == 0 && t.timestamp_subsec_nanos() == 0
}

impl ScadaFrame {
    pub fn new(
        schema: Arc<Schema>,
        timestamps: Vec<DateTime<Utc>>,
        op_modes: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let column_names: Vec<String> = schema.value_columns().map(|c| c.name.clone()).collect();
        let n_cols = column_names.len();
        if op_modes.len() != timestamps.len() {
            return Err(Error::LengthMismatch {
                expected: timestamps.len(),
                found: op_modes.len(),
            });
        }
        if values.len() != timestamps.len() * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} rows x {} columns",
                values.len(),
                timestamps.len(),
                n_cols
            )));
        }
        for (i, t) in timestamps.iter().enumerate() {
            if !on_grid(t) {
                return Err(Error::BadTimestamp {
                    row: i,
                    value: t.to_rfc3339(),
                    reason: "not on the 10-minute grid".into(),
                });
            }
            if i > 0 && timestamps[i - 1] >= *t {
                return Err(Error::BadTimestamp {
                    row: i,
                    value: t.to_rfc3339(),
                    reason: "timestamps not strictly increasing".into(),
                });
            }
        }
        Ok(Self {
            schema,
            column_names: Arc::new(column_names),
            timestamps,
            op_modes,
            values,
        })
    }

    /// Builds a frame that reuses this frame's schema.
    fn with_rows(&self, timestamps: Vec<DateTime<Utc>>, op_modes: Vec<String>, values: Vec<f64>) -> Self {
        Self {
            schema: Arc::clone(&self.schema),
            column_names: Arc::clone(&self.column_names),
            timestamps,
            op_modes,
            values,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn op_modes(&self) -> &[String] {
        &self.op_modes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_columns();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_columns() + col]
    }

    /// Copies one column out.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.require_column(name)?;
        Ok((0..self.len()).map(|i| self.value(i, j)).collect())
    }

    pub fn column_by_role(&self, role: ColumnRole) -> Result<Vec<f64>> {
        let name = self
            .schema
            .columns()
            .iter()
            .find(|c| c.role == role)
            .map(|c| c.name.clone())
            .ok_or_else(|| Error::MissingColumn(format!("{role:?}")))?;
        self.column(&name)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn op_modes_mut(&mut self) -> &mut [String] {
        &mut self.op_modes
    }

    /// Rows at the given (ascending) indices.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let n = self.n_columns();
        let mut values = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        self.with_rows(
            indices.iter().map(|&i| self.timestamps[i]).collect(),
            indices.iter().map(|&i| self.op_modes[i].clone()).collect(),
            values,
        )
    }

    /// Rows with `start <= t < end`; empty when the ranges do not meet.
    pub fn slice_period(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        let lo = self.timestamps.partition_point(|t| *t < start);
        let hi = self.timestamps.partition_point(|t| *t < end).max(lo);
        let n = self.n_columns();
        self.with_rows(
            self.timestamps[lo..hi].to_vec(),
            self.op_modes[lo..hi].to_vec(),
            self.values[lo * n..hi * n].to_vec(),
        )
    }

    pub fn first_timestamp(&self) -> Option<DateTime<Utc>> {
        self.timestamps.first().copied()
    }

    /// One grid step past the last timestamp, i.e. the exclusive end of the covered span.
    pub fn end_timestamp(&self) -> Option<DateTime<Utc>> {
        self.timestamps
            .last()
            .map(|t| *t + chrono::Duration::seconds(GRID_SECONDS))
    }
}

/// Rows with `start <= t < end`, order preserved.
pub fn slice_period(frame: &ScadaFrame, start: DateTime<Utc>, end: DateTime<Utc>) -> ScadaFrame {
    frame.slice_period(start, end)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::ingest::schema::ColumnSchema;
    use chrono::TimeZone;

    pub fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                ColumnSchema::new("timestamp", ColumnRole::Timestamp, ""),
                ColumnSchema::new("op_mode", ColumnRole::Opmode, ""),
                ColumnSchema::new("power", ColumnRole::Power, "kW"),
                ColumnSchema::new("wind_speed", ColumnRole::Windspeed, "m/s"),
                ColumnSchema::new("temp", ColumnRole::Measurement, "degC"),
            ])
            .unwrap(),
        )
    }

    pub fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap()
    }

    /// `rows` of (op_mode, power, wind, temp) on consecutive grid steps.
    pub fn frame(rows: &[(&str, f64, f64, f64)]) -> ScadaFrame {
        let ts = (0..rows.len())
            .map(|i| t0() + chrono::Duration::seconds(GRID_SECONDS * i as i64))
            .collect();
        let modes = rows.iter().map(|r| r.0.to_string()).collect();
        let values = rows.iter().flat_map(|r| [r.1, r.2, r.3]).collect();
        ScadaFrame::new(schema(), ts, modes, values).unwrap()
    }
}
