use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::OP_DERATED;
use crate::error::{Error, Result};
use crate::ingest::ScadaFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Linear ramp, `magnitude` units per day since the window start.
    Drift,
    /// Constant offset of `magnitude`.
    ChangePoint,
    /// Power multiplied by `magnitude` and op-mode set to derated.
    Derate,
}

/// A fault on one sensor over the inclusive window `[start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub target_sensor: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub magnitude: f64,
}

impl FaultSpec {
    fn validate(&self) -> Result<()> {
        if !(self.magnitude != 0.0 && self.magnitude.is_finite()) {
            return Err(Error::BadSpec("fault magnitude must be finite and nonzero".into()));
        }
        if self.kind == FaultKind::Derate && !(self.magnitude > 0.0 && self.magnitude <= 1.0) {
            return Err(Error::BadSpec("derate cap fraction must lie in (0, 1]".into()));
        }
        if self.start >= self.end {
            return Err(Error::BadWindow(format!("start {} is not before end {}", self.start, self.end)));
        }
        Ok(())
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        self.start <= *t && *t <= self.end
    }
}

/// Applies `fault` to a copy of `frame` and returns it with one in-fault
/// flag per row. Rows outside the window are untouched.
///
/// A derate always acts on the schema's power column; `target_sensor`
/// must still name an existing column.
pub fn inject_fault(frame: &ScadaFrame, fault: &FaultSpec) -> Result<(ScadaFrame, Vec<bool>)> {
    fault.validate()?;
    let col = frame.require_column(&fault.target_sensor)?;
    let (first, last) = match (frame.first_timestamp(), frame.timestamps().last()) {
        (Some(f), Some(l)) => (f, *l),
        _ => return Err(Error::BadWindow("frame is empty".into())),
    };
    if fault.start < first || fault.end > last {
        return Err(Error::BadWindow(format!(
            "[{}, {}] is not within the frame span [{first}, {last}]",
            fault.start, fault.end
        )));
    }

    let flags: Vec<bool> = frame.timestamps().iter().map(|t| fault.contains(t)).collect();
    let mut out = frame.clone();
    let n_cols = out.n_columns();
    let power = out.require_column(&out.schema().power_column().name.clone())?;
    let timestamps = frame.timestamps();
    for (i, _) in flags.iter().enumerate().filter(|(_, f)| **f) {
        let row = &mut out.values_mut()[i * n_cols..(i + 1) * n_cols];
        match fault.kind {
            FaultKind::Drift => {
                let days = (timestamps[i] - fault.start).num_seconds() as f64 / 86_400.0;
                row[col] += fault.magnitude * days;
            }
            FaultKind::ChangePoint => row[col] += fault.magnitude,
            FaultKind::Derate => {
                row[power] *= fault.magnitude;
            }
        }
        if fault.kind == FaultKind::Derate {
            out.op_modes_mut()[i] = OP_DERATED.to_string();
        }
    }
    Ok((out, flags))
}
