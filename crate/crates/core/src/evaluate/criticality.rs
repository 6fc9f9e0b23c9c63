use crate::error::{Error, Result};
use crate::ingest::NORMAL_OPERATION;

pub const CRITICALITY_MAX: u32 = 1000;

/// Per-timestamp criticality counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalityTrace {
    pub values: Vec<u32>,
}

impl CriticalityTrace {
    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// Starting from 0: +1 for a detection during normal operation, -1 for no
/// detection during normal operation, unchanged otherwise; kept within
/// `[0, CRITICALITY_MAX]` after every step.
pub fn criticality<S: AsRef<str>>(detections: &[bool], op_modes: &[S]) -> Result<CriticalityTrace> {
    if detections.len() != op_modes.len() {
        return Err(Error::LengthMismatch {
            expected: op_modes.len(),
            found: detections.len(),
        });
    }
    let mut c: u32 = 0;
    let values = detections
        .iter()
        .zip(op_modes)
        .map(|(&detected, mode)| {
            if mode.as_ref() == NORMAL_OPERATION {
                c = if detected {
                    (c + 1).min(CRITICALITY_MAX)
                } else {
                    c.saturating_sub(1)
                };
            }
            c
        })
        .collect();
    Ok(CriticalityTrace { values })
}
