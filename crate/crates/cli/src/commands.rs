use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chrono::{DateTime, Months, NaiveDate, Utc};
use serde::Deserialize;

use scada_ae::evaluate::write_case_study_csv;
use scada_ae::experiment::{run_protocol, ProtocolConfig, TurbineInput};
use scada_ae::synth::{generate_farm, FarmSpec};
use scada_ae::{
    case_study_report, compare_models, derive_labels, load_csv, load_model, save_model, train_baseline,
    train_multi_asset, transfer, DetectorModel, ScadaFrame, Schema, TrainConfig, TransferConfig,
    TurbineConfig, TurbineData,
};

use crate::{Command, DataArgs, WindowArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { spec, out, seed } => synth(&spec, &out, seed),
        Command::Train {
            data,
            schema,
            config,
            multi,
            train_config,
            epochs,
            seed,
            window,
            out,
        } => train(&data, &schema, &config, multi, train_config.as_deref(), epochs, seed, &window, &out),
        Command::Transfer {
            model,
            target,
            method,
            months,
            tuning_end,
            epochs,
            learning_rate,
            seed,
            out,
        } => {
            let mut tc = TransferConfig::new(method, seed);
            if let Some(e) = epochs {
                tc.epochs = e;
            }
            tc.learning_rate = learning_rate;
            transfer_cmd(&model, &target, months, tuning_end.as_deref(), &tc, &out)
        }
        Command::Evaluate {
            models,
            eval,
            baseline,
            window,
            out,
            csv,
        } => evaluate(&models, &eval, baseline, &window, &out, csv),
        Command::CaseStudy {
            model,
            data,
            window,
            out,
        } => case_study(&model, &data, &window, &out),
        Command::Experiment { config, out } => experiment(&config, &out),
    }
}

/// `2024-01-01` (midnight UTC) or an RFC 3339 instant.
fn parse_instant(s: &str) -> Result<DateTime<Utc>> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc());
    }
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .with_context(|| format!("`{s}` is neither a date nor an RFC 3339 instant"))
}

fn slice(frame: ScadaFrame, window: &WindowArgs) -> Result<ScadaFrame> {
    if window.from.is_none() && window.to.is_none() {
        return Ok(frame);
    }
    let (Some(first), Some(end)) = (frame.first_timestamp(), frame.end_timestamp()) else {
        return Ok(frame);
    };
    let start = window.from.as_deref().map(parse_instant).transpose()?.unwrap_or(first);
    let stop = window.to.as_deref().map(parse_instant).transpose()?.unwrap_or(end);
    ensure!(start < stop, "--from must be before --to");
    let sliced = frame.slice_period(start, stop);
    ensure!(!sliced.is_empty(), "no rows in [{start}, {stop})");
    Ok(sliced)
}

fn load_turbine(data: &Path, schema: &Schema, config: &Path) -> Result<(ScadaFrame, TurbineConfig)> {
    let config = TurbineConfig::from_json_file(config)
        .with_context(|| format!("reading turbine config {}", config.display()))?;
    let frame = load_csv(data, schema).with_context(|| format!("loading {}", data.display()))?;
    log::info!("{}: {} rows from {}", config.turbine_id, frame.len(), data.display());
    Ok((frame, config))
}

fn load_schema(path: &Path) -> Result<Schema> {
    Schema::from_json_file(path).with_context(|| format!("reading schema {}", path.display()))
}

fn load_data(args: &DataArgs) -> Result<(ScadaFrame, TurbineConfig)> {
    let schema = load_schema(&args.schema)?;
    load_turbine(&args.data, &schema, &args.config)
}

fn model_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn synth(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: FarmSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let farm = generate_farm(&spec)?;
    let paths = farm.write_to_dir(out)?;
    log::info!("wrote {} turbine files to {}", paths.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    data: &[PathBuf],
    schema: &Path,
    configs: &[PathBuf],
    multi: bool,
    train_config: Option<&Path>,
    epochs: Option<usize>,
    seed: Option<u64>,
    window: &WindowArgs,
    out: &Path,
) -> Result<()> {
    ensure!(
        data.len() == configs.len(),
        "got {} --data but {} --config arguments",
        data.len(),
        configs.len()
    );
    if multi {
        ensure!(data.len() >= 2, "--multi needs at least two turbines");
    } else {
        ensure!(data.len() == 1, "training on several turbines requires --multi");
    }
    let mut cfg = match train_config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<TrainConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }

    let schema = load_schema(schema)?;
    let mut turbines = Vec::with_capacity(data.len());
    for (d, c) in data.iter().zip(configs) {
        let (frame, config) = load_turbine(d, &schema, c)?;
        let frame = slice(frame, window)?;
        let labels = derive_labels(&frame, &cfg.labeling_config(&config));
        turbines.push((config.turbine_id, frame, labels));
    }
    let inputs: Vec<TurbineData<'_>> = turbines
        .iter()
        .map(|(id, f, l)| TurbineData::new(id, f, l))
        .collect();
    let model = if multi {
        train_multi_asset(&inputs, &cfg)?
    } else {
        train_baseline(inputs[0], &cfg)?
    };
    save_model(&model, out)?;
    log::info!("saved model (threshold {:.6}) to {}", model.threshold, out.display());
    Ok(())
}

fn transfer_cmd(
    model_path: &Path,
    target: &DataArgs,
    months: u32,
    tuning_end: Option<&str>,
    tc: &TransferConfig,
    out: &Path,
) -> Result<()> {
    let source = load_model(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let (frame, config) = load_data(target)?;
    let end = match tuning_end {
        Some(s) => parse_instant(s)?,
        None => source.metadata.data_end(),
    };
    let start = end
        .checked_sub_months(Months::new(months))
        .context("tuning window start underflows")?;
    let tuning = frame.slice_period(start, end);
    ensure!(!tuning.is_empty(), "no target rows in the tuning window [{start}, {end})");
    let labels = derive_labels(&tuning, &source.metadata.config.labeling_config(&config));
    log::info!(
        "{} transfer to {} on [{start}, {end}): {} rows",
        tc.method,
        config.turbine_id,
        tuning.len()
    );
    let model = transfer(&source, &config.turbine_id, &tuning, &labels, tc)?;
    save_model(&model, out)?;
    log::info!("saved model (threshold {:.6}) to {}", model.threshold, out.display());
    Ok(())
}

fn evaluate(
    model_paths: &[PathBuf],
    eval: &DataArgs,
    baseline: Option<String>,
    window: &WindowArgs,
    out: &Path,
    csv: Option<PathBuf>,
) -> Result<()> {
    let mut models: Vec<(String, DetectorModel)> = Vec::with_capacity(model_paths.len());
    for p in model_paths {
        let id = model_id(p);
        if models.iter().any(|(other, _)| *other == id) {
            bail!("two models share the id `{id}`; ids are file stems and must be unique");
        }
        let m = load_model(p).with_context(|| format!("loading {}", p.display()))?;
        models.push((id, m));
    }
    let baseline_id = baseline.unwrap_or_else(|| models[0].0.clone());
    let reference = &models
        .iter()
        .find(|(id, _)| *id == baseline_id)
        .with_context(|| format!("no model with id `{baseline_id}`"))?
        .1;

    let (frame, config) = load_data(eval)?;
    let frame = if window.from.is_none() && window.to.is_none() {
        let start = reference.metadata.data_end();
        let end = start + Months::new(1);
        let f = frame.slice_period(start, end);
        ensure!(!f.is_empty(), "no rows in the default evaluation month [{start}, {end})");
        f
    } else {
        slice(frame, window)?
    };
    let labeling = reference.metadata.config.labeling_config(&config);
    let refs: Vec<(String, &DetectorModel)> = models.iter().map(|(id, m)| (id.clone(), m)).collect();
    let report = compare_models(&refs, &baseline_id, &frame, &labeling)?;
    for r in &report.rows {
        log::info!("{}: F1/2 {:.4} (delta {:+.4})", r.model_id, r.f_half, r.delta_f_half);
    }

    write_file(out, (report.to_json()? + "\n").as_bytes())?;
    let csv_path = csv.unwrap_or_else(|| out.with_extension("csv"));
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&csv_path, &buf)?;
    Ok(())
}

fn case_study(model_path: &Path, data: &DataArgs, window: &WindowArgs, out: &Path) -> Result<()> {
    let model = load_model(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let (frame, _) = load_data(data)?;
    let frame = slice(frame, window)?;
    let rows = case_study_report(&model, &frame)?;
    let peak = rows.iter().map(|r| r.criticality).max().unwrap_or(0);
    log::info!("{} rows, peak criticality {peak}", rows.len());
    let mut buf = Vec::new();
    write_case_study_csv(&rows, &mut buf)?;
    write_file(out, &buf)
}

/// Either a directory written by `synth`, or a farm spec generated in memory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    #[serde(default)]
    data_dir: Option<PathBuf>,
    #[serde(default)]
    farm: Option<FarmSpec>,
    protocol: ProtocolConfig,
}

/// Reads `<dir>/schema.json` and every `<id>.config.json` with its `<id>.csv`.
fn load_farm_dir(dir: &Path) -> Result<Vec<(TurbineConfig, ScadaFrame)>> {
    let schema = load_schema(&dir.join("schema.json"))?;
    let mut config_paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".config.json"))
        .collect();
    config_paths.sort();
    ensure!(!config_paths.is_empty(), "no *.config.json files in {}", dir.display());
    config_paths
        .iter()
        .map(|c| {
            let stem = c.file_name().unwrap_or_default().to_string_lossy();
            let id = stem.trim_end_matches(".config.json");
            let (frame, config) = load_turbine(&dir.join(format!("{id}.csv")), &schema, c)?;
            Ok((config, frame))
        })
        .collect()
}

fn experiment(config_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", config_path.display()))?;
    let turbines = match (&cfg.data_dir, &cfg.farm) {
        (Some(dir), None) => {
            let base = config_path.parent().unwrap_or(Path::new("."));
            load_farm_dir(&base.join(dir))?
        }
        (None, Some(spec)) => generate_farm(spec)?
            .turbines
            .into_iter()
            .map(|t| (t.config, t.frame))
            .collect(),
        _ => bail!("the experiment config needs exactly one of `data_dir` and `farm`"),
    };
    let inputs: Vec<TurbineInput<'_>> = turbines
        .iter()
        .map(|(config, frame)| TurbineInput { config, frame })
        .collect();
    let run = run_protocol(&inputs, &cfg.protocol)?;
    let report = &run.report;
    write_file(&out.join("protocol.json"), (report.to_json()? + "\n").as_bytes())?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&out.join("protocol.csv"), &buf)?;
    log::info!("wrote {} rows to {}", report.rows.len(), out.display());
    Ok(())
}
