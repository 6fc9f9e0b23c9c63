//! Normal-behaviour anomaly detection for wind-turbine SCADA data.
//!
//! A [`DetectorModel`] bundles a fitted feature pipeline, a dense
//! autoencoder with an explicit encoder/decoder split, and a threshold on
//! the per-timestamp reconstruction RMSE (the anomaly score). Models are
//! trained on the normal-behaviour subset of a year of 10-minute SCADA
//! data and can be carried over to another turbine by refitting only the
//! threshold, fine-tuning the decoder, or fine-tuning the whole network.
//!
//! The [`synth`] module generates deterministic wind-farm data with
//! injectable faults so that the whole workflow runs without proprietary
//! data. Batch-parallel kernels run on rayon when the `parallel` feature
//! is enabled (the default) and fall back to plain loops otherwise; both
//! paths produce bit-identical results.

// Range checks are written as negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod experiment;
pub mod ingest;
pub mod neural;
pub mod preprocess;
pub mod synth;
pub mod transfer;

pub use detector::{
    anomaly_scores, detect, fit_threshold, load_model, save_model, train_baseline,
    train_multi_asset, DetectorModel, ModelMetadata, TrainConfig, TurbineData,
};
pub use error::{Error, Result};
pub use evaluate::{
    case_study_report, compare_models, criticality, evaluate_month, f_beta, ComparisonReport,
    ConfusionCounts, CriticalityTrace, MonthMetrics,
};
pub use exec::Parallelism;
pub use ingest::{
    derive_labels, load_csv, select_normal, slice_period, write_csv, ColumnRole, ColumnSchema,
    Label, LabelSeries, ScadaFrame, Schema, TurbineConfig, NORMAL_OPERATION,
};
pub use neural::{AdamState, DenseLayer, FreezeGroup, Gradients, Network};
pub use preprocess::{FeatureMatrix, FeaturePipeline};
pub use transfer::{transfer, TransferConfig, TransferMethod};
