//! The month-ahead transfer protocol over a set of turbines.
//!
//! Every target gets a baseline trained on its own training window. A
//! source model trained on the source turbine's training window is then
//! transferred to each target with every configured method and tuning
//! length; the tuning slice is the last `k` months of the training window.
//! All models are scored on the evaluation window that immediately follows.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, Months, Utc};
use serde::{Deserialize, Serialize};

use crate::detector::{train_baseline, DetectorModel, TrainConfig, TurbineData};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_month, MonthMetrics};
use crate::exec::{map_items, Parallelism};
use crate::ingest::{derive_labels, ScadaFrame, TurbineConfig};
use crate::transfer::{transfer, TransferConfig, TransferMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub train_start: DateTime<Utc>,
    #[serde(default = "default_train_months")]
    pub train_months: u32,
    #[serde(default = "default_tuning_months")]
    pub tuning_months: Vec<u32>,
    #[serde(default = "default_eval_months")]
    pub eval_months: u32,
    #[serde(default = "default_methods")]
    pub methods: Vec<TransferMethod>,
    pub source: String,
    /// Empty means every turbine except the source.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_transfer_epochs")]
    pub transfer_epochs: usize,
    #[serde(default)]
    pub transfer_seed: u64,
}

fn default_train_months() -> u32 {
    12
}
fn default_tuning_months() -> Vec<u32> {
    vec![1, 2, 3]
}
fn default_eval_months() -> u32 {
    1
}
fn default_methods() -> Vec<TransferMethod> {
    TransferMethod::ALL.to_vec()
}
fn default_transfer_epochs() -> usize {
    10
}

impl ProtocolConfig {
    pub fn new(train_start: DateTime<Utc>, source: impl Into<String>) -> Self {
        Self {
            train_start,
            train_months: default_train_months(),
            tuning_months: default_tuning_months(),
            eval_months: default_eval_months(),
            methods: default_methods(),
            source: source.into(),
            targets: Vec::new(),
            train: TrainConfig::default(),
            transfer_epochs: default_transfer_epochs(),
            transfer_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.train_months == 0 || self.eval_months == 0 {
            return Err(Error::InvalidConfig("training and evaluation windows need at least one month".into()));
        }
        if let Some(&k) = self.tuning_months.iter().find(|&&k| k == 0 || k > self.train_months) {
            return Err(Error::InvalidConfig(format!(
                "tuning length {k} must lie in 1..={} months",
                self.train_months
            )));
        }
        self.train_end()?;
        Ok(())
    }

    fn add_months(t: DateTime<Utc>, months: u32) -> Result<DateTime<Utc>> {
        t.checked_add_months(Months::new(months))
            .ok_or_else(|| Error::InvalidConfig("window end overflows".into()))
    }

    pub fn train_end(&self) -> Result<DateTime<Utc>> {
        Self::add_months(self.train_start, self.train_months)
    }

    /// `[train_end, train_end + eval_months)`.
    pub fn eval_window(&self) -> Result<(DateTime<Utc>, DateTime<Utc>)> {
        let end = self.train_end()?;
        Ok((end, Self::add_months(end, self.eval_months)?))
    }

    /// The last `months` months of the training window.
    pub fn tuning_window(&self, months: u32) -> Result<(DateTime<Utc>, DateTime<Utc>)> {
        let end = self.train_end()?;
        let start = end
            .checked_sub_months(Months::new(months))
            .ok_or_else(|| Error::InvalidConfig("tuning window underflows".into()))?;
        Ok((start, end))
    }
}

/// One turbine's configuration and full data span.
#[derive(Debug, Clone, Copy)]
pub struct TurbineInput<'a> {
    pub config: &'a TurbineConfig,
    pub frame: &'a ScadaFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub target: String,
    /// `baseline` or the transfer method name.
    pub model: String,
    /// Empty for baselines.
    pub tuning_months: Option<u32>,
    pub f_half: f64,
    pub precision: f64,
    pub recall: f64,
    /// F½ minus the target's baseline F½.
    pub delta_f_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub source: String,
    pub rows: Vec<ProtocolRow>,
}

impl ProtocolReport {
    pub fn baseline(&self, target: &str) -> Option<&ProtocolRow> {
        self.rows
            .iter()
            .find(|r| r.target == target && r.tuning_months.is_none())
    }

    pub fn transfers(&self) -> impl Iterator<Item = &ProtocolRow> {
        self.rows.iter().filter(|r| r.tuning_months.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Report plus the trained models, for follow-up analyses.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub report: ProtocolReport,
    pub source_model: DetectorModel,
    pub baselines: BTreeMap<String, DetectorModel>,
}

fn find<'a>(turbines: &'a [TurbineInput<'a>], id: &str) -> Result<TurbineInput<'a>> {
    turbines
        .iter()
        .find(|t| t.config.turbine_id == id)
        .copied()
        .ok_or_else(|| Error::InvalidConfig(format!("unknown turbine `{id}`")))
}

fn train_on_window(t: TurbineInput<'_>, cfg: &ProtocolConfig) -> Result<DetectorModel> {
    let frame = t.frame.slice_period(cfg.train_start, cfg.train_end()?);
    let labels = derive_labels(&frame, &cfg.train.labeling_config(t.config));
    train_baseline(TurbineData::new(&t.config.turbine_id, &frame, &labels), &cfg.train)
}

fn metrics_row(target: &str, model: &str, months: Option<u32>, m: MonthMetrics, baseline: f64) -> ProtocolRow {
    ProtocolRow {
        target: target.to_string(),
        model: model.to_string(),
        tuning_months: months,
        f_half: m.f_half,
        precision: m.precision,
        recall: m.recall,
        delta_f_half: m.f_half - baseline,
    }
}

fn run_target(
    t: TurbineInput<'_>,
    source: &DetectorModel,
    cfg: &ProtocolConfig,
) -> Result<(Vec<ProtocolRow>, DetectorModel)> {
    let id = t.config.turbine_id.as_str();
    let labeling = cfg.train.labeling_config(t.config);
    let (eval_start, eval_end) = cfg.eval_window()?;
    let eval = t.frame.slice_period(eval_start, eval_end);

    let baseline = train_on_window(t, cfg)?;
    let base = evaluate_month(&baseline, &eval, &labeling)?;
    log::info!("{id}: baseline F1/2 = {:.3}", base.f_half);
    let mut rows = vec![metrics_row(id, "baseline", None, base, base.f_half)];

    for &months in &cfg.tuning_months {
        let (start, end) = cfg.tuning_window(months)?;
        let tuning = t.frame.slice_period(start, end);
        let labels = derive_labels(&tuning, &labeling);
        for &method in &cfg.methods {
            let tc = TransferConfig {
                epochs: cfg.transfer_epochs,
                ..TransferConfig::new(method, cfg.transfer_seed)
            };
            let model = transfer(source, id, &tuning, &labels, &tc)?;
            let m = evaluate_month(&model, &eval, &labeling)?;
            log::info!("{id}: {method} with {months} month(s) F1/2 = {:.3}", m.f_half);
            rows.push(metrics_row(id, method.as_str(), Some(months), m, base.f_half));
        }
    }
    Ok((rows, baseline))
}

pub fn run_protocol(turbines: &[TurbineInput<'_>], cfg: &ProtocolConfig) -> Result<ProtocolRun> {
    run_protocol_with(turbines, cfg, Parallelism::default())
}

/// Runs the protocol, processing targets concurrently under `par`. Results
/// do not depend on `par`.
pub fn run_protocol_with(turbines: &[TurbineInput<'_>], cfg: &ProtocolConfig, par: Parallelism) -> Result<ProtocolRun> {
    cfg.validate()?;
    let source_input = find(turbines, &cfg.source)?;
    let targets: Vec<TurbineInput<'_>> = if cfg.targets.is_empty() {
        turbines
            .iter()
            .filter(|t| t.config.turbine_id != cfg.source)
            .copied()
            .collect()
    } else {
        cfg.targets.iter().map(|id| find(turbines, id)).collect::<Result<_>>()?
    };
    if targets.is_empty() {
        return Err(Error::InvalidConfig("no target turbines".into()));
    }

    let source_model = train_on_window(source_input, cfg)?;
    let results = map_items(par, &targets, |t| run_target(*t, &source_model, cfg));
    let mut rows = Vec::new();
    let mut baselines = BTreeMap::new();
    for (t, r) in targets.iter().zip(results) {
        let (r, model) = r?;
        rows.extend(r);
        baselines.insert(t.config.turbine_id.clone(), model);
    }
    Ok(ProtocolRun {
        report: ProtocolReport {
            source: cfg.source.clone(),
            rows,
        },
        source_model,
        baselines,
    })
}
