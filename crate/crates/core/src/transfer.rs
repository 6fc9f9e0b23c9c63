//! Carrying a trained model over to another turbine.
//!
//! All three methods keep the source feature pipeline and refit the
//! threshold on the target's tuning window. `Decoder` additionally
//! fine-tunes the layers after the bottleneck with the encoder frozen;
//! `Ae` fine-tunes every layer at a tenth of the original learning rate.
//! Fine-tuning uses only the normal-labeled tuning rows and always starts
//! from a fresh optimizer state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::{
    fit_threshold, reconstruction_scores, shuffle_seed, DetectorModel, TimeWindow, TransferRecord,
};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::ingest::{select_normal, LabelSeries, ScadaFrame};
use crate::neural::{fit_autoencoder, FitOptions, FreezeGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMethod {
    Threshold,
    Decoder,
    Ae,
}

impl TransferMethod {
    pub const ALL: [TransferMethod; 3] = [
        TransferMethod::Threshold,
        TransferMethod::Decoder,
        TransferMethod::Ae,
    ];

    pub fn default_learning_rate(self) -> Option<f64> {
        match self {
            TransferMethod::Threshold => None,
            TransferMethod::Decoder => Some(0.001),
            TransferMethod::Ae => Some(0.0001),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransferMethod::Threshold => "threshold",
            TransferMethod::Decoder => "decoder",
            TransferMethod::Ae => "ae",
        }
    }
}

impl fmt::Display for TransferMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransferMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "threshold" => Ok(TransferMethod::Threshold),
            "decoder" => Ok(TransferMethod::Decoder),
            "ae" | "autoencoder" => Ok(TransferMethod::Ae),
            other => Err(Error::InvalidConfig(format!("unknown transfer method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub method: TransferMethod,
    #[serde(default = "default_transfer_epochs")]
    pub epochs: usize,
    /// Defaults to the method's own rate when absent.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_transfer_epochs() -> usize {
    10
}

fn default_batch_size() -> usize {
    256
}

impl TransferConfig {
    pub fn new(method: TransferMethod, seed: u64) -> Self {
        Self {
            method,
            epochs: default_transfer_epochs(),
            learning_rate: None,
            batch_size: default_batch_size(),
            seed,
        }
    }

    pub fn effective_learning_rate(&self) -> Option<f64> {
        match self.method {
            TransferMethod::Threshold => None,
            m => self.learning_rate.or(m.default_learning_rate()),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(lr) = self.effective_learning_rate() {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::InvalidConfig("learning_rate must be positive".into()));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_inputs(frame: &ScadaFrame, labels: &LabelSeries) -> Result<TimeWindow> {
    if labels.len() != frame.len() {
        return Err(Error::LengthMismatch {
            expected: frame.len(),
            found: labels.len(),
        });
    }
    TimeWindow::of_frame(frame).ok_or_else(|| Error::EmptyResult("empty tuning frame".into()))
}

fn refit_threshold(model: &mut DetectorModel, frame: &ScadaFrame, labels: &LabelSeries) -> Result<()> {
    let x = model.pipeline.transform(frame)?;
    let scores = reconstruction_scores(&model.network, x.view(), Parallelism::default())?;
    model.threshold = fit_threshold(&scores, labels)?.max(0.0);
    Ok(())
}

fn record(source: &DetectorModel, target_id: &str, config: &TransferConfig, window: TimeWindow, rows: usize) -> TransferRecord {
    TransferRecord {
        method: config.method,
        target_turbine: target_id.to_string(),
        source_turbines: source.metadata.source_turbines.clone(),
        epochs: if config.method == TransferMethod::Threshold { 0 } else { config.epochs },
        learning_rate: config.effective_learning_rate(),
        seed: config.seed,
        tuning_window: window,
        tuning_rows: rows,
    }
}

/// Source autoencoder unchanged; only the threshold is refitted.
pub fn transfer_threshold(
    source: &DetectorModel,
    target_id: &str,
    tuning_frame: &ScadaFrame,
    labels: &LabelSeries,
) -> Result<DetectorModel> {
    let window = check_inputs(tuning_frame, labels)?;
    let mut model = source.clone();
    refit_threshold(&mut model, tuning_frame, labels)?;
    let config = TransferConfig::new(TransferMethod::Threshold, 0);
    model
        .metadata
        .lineage
        .push(record(source, target_id, &config, window, tuning_frame.len()));
    Ok(model)
}

fn fine_tune(
    source: &DetectorModel,
    target_id: &str,
    tuning_frame: &ScadaFrame,
    labels: &LabelSeries,
    config: &TransferConfig,
    freeze: FreezeGroup,
) -> Result<DetectorModel> {
    config.validate()?;
    let window = check_inputs(tuning_frame, labels)?;
    let normal = select_normal(tuning_frame, labels)?;
    let x = source.pipeline.transform(&normal)?;
    let mut model = source.clone();
    model.network.set_frozen(freeze);
    let lr = config.effective_learning_rate().expect("tuning methods have a rate");
    let history = fit_autoencoder(
        &mut model.network,
        x.view(),
        &FitOptions {
            epochs: config.epochs,
            batch_size: config.batch_size,
            learning_rate: lr,
            seed: shuffle_seed(config.seed),
        },
    )?;
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        log::info!(
            "{} fine-tune on {} normal rows: loss {first:.4e} -> {last:.4e}",
            config.method,
            x.nrows()
        );
    }
    model.network.set_frozen(FreezeGroup::None);
    refit_threshold(&mut model, tuning_frame, labels)?;
    model
        .metadata
        .lineage
        .push(record(source, target_id, config, window, tuning_frame.len()));
    Ok(model)
}

/// Fine-tunes the decoder with the encoder frozen, then refits the threshold.
pub fn transfer_decoder(
    source: &DetectorModel,
    target_id: &str,
    tuning_frame: &ScadaFrame,
    labels: &LabelSeries,
    config: &TransferConfig,
) -> Result<DetectorModel> {
    if config.method != TransferMethod::Decoder {
        return Err(Error::InvalidConfig(format!(
            "transfer_decoder called with method {}",
            config.method
        )));
    }
    fine_tune(source, target_id, tuning_frame, labels, config, FreezeGroup::Encoder)
}

/// Fine-tunes every layer, then refits the threshold.
pub fn transfer_full_ae(
    source: &DetectorModel,
    target_id: &str,
    tuning_frame: &ScadaFrame,
    labels: &LabelSeries,
    config: &TransferConfig,
) -> Result<DetectorModel> {
    if config.method != TransferMethod::Ae {
        return Err(Error::InvalidConfig(format!(
            "transfer_full_ae called with method {}",
            config.method
        )));
    }
    fine_tune(source, target_id, tuning_frame, labels, config, FreezeGroup::None)
}

/// Dispatches on `config.method`.
pub fn transfer(
    source: &DetectorModel,
    target_id: &str,
    tuning_frame: &ScadaFrame,
    labels: &LabelSeries,
    config: &TransferConfig,
) -> Result<DetectorModel> {
    match config.method {
        TransferMethod::Threshold => transfer_threshold(source, target_id, tuning_frame, labels),
        TransferMethod::Decoder => transfer_decoder(source, target_id, tuning_frame, labels, config),
        TransferMethod::Ae => transfer_full_ae(source, target_id, tuning_frame, labels, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names() {
        for m in TransferMethod::ALL {
            assert_eq!(m.as_str().parse::<TransferMethod>().unwrap(), m);
        }
        assert!("bogus".parse::<TransferMethod>().is_err());
        assert_eq!(serde_json::to_string(&TransferMethod::Ae).unwrap(), "\"ae\"");
    }

    #[test]
    fn default_rates() {
        assert_eq!(TransferConfig::new(TransferMethod::Decoder, 0).effective_learning_rate(), Some(0.001));
        assert_eq!(TransferConfig::new(TransferMethod::Ae, 0).effective_learning_rate(), Some(0.0001));
        assert_eq!(TransferConfig::new(TransferMethod::Threshold, 0).effective_learning_rate(), None);
        let mut c = TransferConfig::new(TransferMethod::Ae, 0);
        c.learning_rate = Some(0.5);
        assert_eq!(c.effective_learning_rate(), Some(0.5));
        assert_eq!(c.epochs, 10);
    }
}
