use serde::{Deserialize, Serialize};

use super::frame::ScadaFrame;
use super::schema::TurbineConfig;
use crate::error::{Error, Result};

/// Canonical op-mode token for normal operation.
pub const NORMAL_OPERATION: &str = "normal operation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn is_anomalous(self) -> bool {
        self == Label::Anomalous
    }
}

/// Per-timestamp labels aligned to a frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSeries(pub Vec<Label>);

impl LabelSeries {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn n_anomalous(&self) -> usize {
        self.0.iter().filter(|l| l.is_anomalous()).count()
    }

    /// `true` where anomalous.
    pub fn as_bools(&self) -> Vec<bool> {
        self.0.iter().map(|l| l.is_anomalous()).collect()
    }
}

impl FromIterator<Label> for LabelSeries {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        LabelSeries(iter.into_iter().collect())
    }
}

pub fn label_row(op_mode: &str, power: f64, wind: f64, config: &TurbineConfig) -> Label {
    let high_power = power >= config.high_power_fraction * config.rated_power;
    let wind_outside = wind < config.cut_in || wind > config.cut_out;
    if op_mode == NORMAL_OPERATION && power > 0.0 && !(high_power && wind_outside) {
        Label::Normal
    } else {
        Label::Anomalous
    }
}

/// Normal iff the op-mode is normal operation, power is positive, and the
/// turbine is not producing high power at a wind speed outside its
/// operating range.
pub fn derive_labels(frame: &ScadaFrame, config: &TurbineConfig) -> LabelSeries {
    let p = frame
        .require_column(&frame.schema().power_column().name)
        .expect("schema guarantees a power column");
    let w = frame
        .require_column(&frame.schema().windspeed_column().name)
        .expect("schema guarantees a wind speed column");
    (0..frame.len())
        .map(|i| {
            label_row(
                &frame.op_modes()[i],
                frame.value(i, p),
                frame.value(i, w),
                config,
            )
        })
        .collect()
}

/// Rows labeled normal, in order.
pub fn select_normal(frame: &ScadaFrame, labels: &LabelSeries) -> Result<ScadaFrame> {
    if labels.len() != frame.len() {
        return Err(Error::LengthMismatch {
            expected: frame.len(),
            found: labels.len(),
        });
    }
    let idx: Vec<usize> = labels
        .0
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == Label::Normal)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyResult("no rows labeled normal".into()));
    }
    Ok(frame.select_rows(&idx))
}
