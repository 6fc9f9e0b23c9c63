//! Detector models: feature pipeline + autoencoder + score threshold.

mod artifact;
mod threshold;

use chrono::{DateTime, Utc};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use artifact::{load_model, network_json, save_model, FORMAT_VERSION};
pub use threshold::{apply_threshold, candidate_margin, fit_threshold, THRESHOLD_BETA};

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::ingest::{select_normal, Label, LabelSeries, ScadaFrame, TurbineConfig};
use crate::neural::{build_network, fit_autoencoder, FitOptions, Network, ROW_CHUNK};
use crate::preprocess::FeaturePipeline;
use crate::transfer::TransferMethod;

/// Hyperparameters for training a model from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "crate::ingest::schema_default_high_power_fraction")]
    pub high_power_fraction: f64,
}

fn default_learning_rate() -> f64 {
    0.001
}
fn default_epochs() -> usize {
    50
}
fn default_batch_size() -> usize {
    256
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![25, 10, 25],
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            seed: 0,
            high_power_fraction: crate::ingest::schema_default_high_power_fraction(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.high_power_fraction > 0.0 && self.high_power_fraction <= 1.0) {
            return Err(Error::InvalidConfig("high_power_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// `turbine` with this config's high-power fraction, used when deriving
    /// the labels a model is trained, tuned and evaluated against.
    pub fn labeling_config(&self, turbine: &TurbineConfig) -> TurbineConfig {
        TurbineConfig {
            high_power_fraction: self.high_power_fraction,
            ..turbine.clone()
        }
    }
}

/// Half-open time range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn of_frame(frame: &ScadaFrame) -> Option<Self> {
        Some(Self {
            start: frame.first_timestamp()?,
            end: frame.end_timestamp()?,
        })
    }

    fn union(self, other: Self) -> Self {
        Self {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

/// One transfer step applied to a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub method: TransferMethod,
    pub target_turbine: String,
    pub source_turbines: Vec<String>,
    pub epochs: usize,
    pub learning_rate: Option<f64>,
    pub seed: u64,
    pub tuning_window: TimeWindow,
    pub tuning_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub source_turbines: Vec<String>,
    pub training_window: TimeWindow,
    pub config: TrainConfig,
    /// Mean training loss per epoch of the from-scratch training run.
    #[serde(default)]
    pub loss_history: Vec<f64>,
    #[serde(default)]
    pub lineage: Vec<TransferRecord>,
}

impl ModelMetadata {
    /// End of the most recent data the model has seen (training or tuning).
    pub fn data_end(&self) -> DateTime<Utc> {
        self.lineage
            .iter()
            .map(|r| r.tuning_window.end)
            .fold(self.training_window.end, DateTime::max)
    }
}

/// A trained normal-behaviour model.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub pipeline: FeaturePipeline,
    pub network: Network,
    /// Decision bound on the anomaly score; a timestamp is flagged when its
    /// score is strictly greater.
    pub threshold: f64,
    pub metadata: ModelMetadata,
}

impl DetectorModel {
    pub fn new(
        pipeline: FeaturePipeline,
        network: Network,
        threshold: f64,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        if network.input_dim() != pipeline.n_features() || network.output_dim() != pipeline.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "pipeline yields {} features, network maps {} -> {}",
                pipeline.n_features(),
                network.input_dim(),
                network.output_dim()
            )));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidConfig("threshold must be finite".into()));
        }
        Ok(Self {
            pipeline,
            network,
            // scores are non-negative, so a negative bound and 0 only differ
            // on exact-zero scores
            threshold: threshold.max(0.0),
            metadata,
        })
    }

    pub fn scores(&self, frame: &ScadaFrame) -> Result<Vec<f64>> {
        anomaly_scores(self, frame)
    }

    pub fn detect(&self, frame: &ScadaFrame) -> Result<Vec<bool>> {
        detect(self, frame)
    }
}

/// A turbine's frame and labels, named for provenance.
#[derive(Debug, Clone, Copy)]
pub struct TurbineData<'a> {
    pub id: &'a str,
    pub frame: &'a ScadaFrame,
    pub labels: &'a LabelSeries,
}

impl<'a> TurbineData<'a> {
    pub fn new(id: &'a str, frame: &'a ScadaFrame, labels: &'a LabelSeries) -> Self {
        Self { id, frame, labels }
    }
}

/// Row-wise RMSE between `x` and its reconstruction.
pub fn reconstruction_scores(net: &Network, x: ArrayView2<f64>, par: Parallelism) -> Result<Vec<f64>> {
    let recon = net.forward_with(x, par)?;
    let n = x.ncols() as f64;
    let parts = exec::map_chunks(par, x.nrows(), ROW_CHUNK * 16, |r| {
        r.map(|i| {
            let sse: f64 = x
                .row(i)
                .iter()
                .zip(recon.row(i).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (sse / n).sqrt()
        })
        .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Anomaly score per timestamp: RMSE of the reconstruction residual over
/// the scaled features.
pub fn anomaly_scores(model: &DetectorModel, frame: &ScadaFrame) -> Result<Vec<f64>> {
    anomaly_scores_with(model, frame, Parallelism::default())
}

pub fn anomaly_scores_with(model: &DetectorModel, frame: &ScadaFrame, par: Parallelism) -> Result<Vec<f64>> {
    let x = model.pipeline.transform(frame)?;
    reconstruction_scores(&model.network, x.view(), par)
}

/// `score > threshold` per timestamp.
pub fn detect(model: &DetectorModel, frame: &ScadaFrame) -> Result<Vec<bool>> {
    Ok(apply_threshold(&anomaly_scores(model, frame)?, model.threshold))
}

/// Mean squared reconstruction error over the normal-labeled rows of a frame.
pub fn normal_reconstruction_mse(model: &DetectorModel, frame: &ScadaFrame, labels: &LabelSeries) -> Result<f64> {
    let normal = select_normal(frame, labels)?;
    let x = model.pipeline.transform(&normal)?;
    let y = model.network.forward(x.view())?;
    crate::neural::mse_loss(y.view(), x.view())
}

/// Trains on one turbine: pipeline and autoencoder on the normal rows,
/// threshold on the whole window against `labels`.
pub fn train_baseline(data: TurbineData<'_>, config: &TrainConfig) -> Result<DetectorModel> {
    train_pooled(&[data], config)
}

/// Trains one model on several turbines' data pooled in the given order.
pub fn train_multi_asset(data: &[TurbineData<'_>], config: &TrainConfig) -> Result<DetectorModel> {
    if data.len() < 2 {
        return Err(Error::InvalidConfig(
            "multi-asset training needs at least two turbines".into(),
        ));
    }
    train_pooled(data, config)
}

fn train_pooled(data: &[TurbineData<'_>], config: &TrainConfig) -> Result<DetectorModel> {
    config.validate()?;
    let first = data.first().ok_or(Error::EmptyInput)?;
    for d in data {
        if d.frame.schema() != first.frame.schema() {
            return Err(Error::SchemaMismatch(format!(
                "turbine {} declares different columns than {}",
                d.id, first.id
            )));
        }
        if d.labels.len() != d.frame.len() {
            return Err(Error::LengthMismatch {
                expected: d.frame.len(),
                found: d.labels.len(),
            });
        }
    }
    let normals: Vec<ScadaFrame> = data
        .iter()
        .filter(|d| d.labels.as_slice().contains(&Label::Normal))
        .map(|d| select_normal(d.frame, d.labels))
        .collect::<Result<_>>()?;
    if normals.is_empty() {
        return Err(Error::EmptyResult("no rows labeled normal in the training window".into()));
    }
    let normal_refs: Vec<&ScadaFrame> = normals.iter().collect();
    let pipeline = FeaturePipeline::fit_frames(&normal_refs)?;
    let x = pipeline.transform_frames(&normal_refs)?;
    let mut network = build_network(pipeline.n_features(), &config.hidden_sizes, config.seed)?;
    log::info!(
        "training {:?} on {} normal rows x {} features from {} turbine(s)",
        network.hidden_sizes(),
        x.nrows(),
        x.ncols(),
        data.len()
    );
    let loss_history = fit_autoencoder(
        &mut network,
        x.view(),
        &FitOptions {
            epochs: config.epochs,
            batch_size: config.batch_size,
            learning_rate: config.learning_rate,
            seed: shuffle_seed(config.seed),
        },
    )?;

    let full: Vec<&ScadaFrame> = data.iter().map(|d| d.frame).collect();
    let full_x = pipeline.transform_frames(&full)?;
    let scores = reconstruction_scores(&network, full_x.view(), Parallelism::default())?;
    let labels: LabelSeries = data
        .iter()
        .flat_map(|d| d.labels.as_slice().iter().copied())
        .collect();
    let threshold = fit_threshold(&scores, &labels)?;

    let training_window = data
        .iter()
        .filter_map(|d| TimeWindow::of_frame(d.frame))
        .reduce(TimeWindow::union)
        .ok_or_else(|| Error::EmptyResult("empty training frames".into()))?;
    let metadata = ModelMetadata {
        source_turbines: data.iter().map(|d| d.id.to_string()).collect(),
        training_window,
        config: config.clone(),
        loss_history,
        lineage: Vec::new(),
    };
    DetectorModel::new(pipeline, network, threshold, metadata)
}

/// Seed for mini-batch shuffling, decorrelated from the initialization seed.
pub(crate) fn shuffle_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}
