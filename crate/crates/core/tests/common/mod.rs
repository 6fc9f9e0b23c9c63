#![allow(dead_code)]

use chrono::{DateTime, Months, Utc};
use scada_ae::synth::{generate_farm, FarmSpec, GeneratedFarm};
use scada_ae::{derive_labels, train_baseline, DetectorModel, LabelSeries, ScadaFrame, TrainConfig, TurbineData};

/// Two turbines, four months: three for training, one for evaluation.
pub fn farm() -> GeneratedFarm {
    generate_farm(&FarmSpec {
        n_turbines: 2,
        months: 4,
        seed: 21,
        ..FarmSpec::default()
    })
    .unwrap()
}

pub fn train_end(farm: &GeneratedFarm) -> DateTime<Utc> {
    farm.turbines[0].frame.first_timestamp().unwrap() + Months::new(3)
}

pub fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        hidden_sizes: vec![16, 6, 16],
        epochs: 6,
        seed,
        ..TrainConfig::default()
    }
}

pub fn training_slice(farm: &GeneratedFarm, k: usize) -> (ScadaFrame, LabelSeries) {
    let t = &farm.turbines[k];
    let f = t.frame.slice_period(t.frame.first_timestamp().unwrap(), train_end(farm));
    let l = derive_labels(&f, &t.config);
    (f, l)
}

pub fn eval_slice(farm: &GeneratedFarm, k: usize) -> ScadaFrame {
    let end = train_end(farm);
    farm.turbines[k].frame.slice_period(end, end + Months::new(1))
}

/// Last month of turbine `k`'s training window with its labels.
pub fn tuning_slice(farm: &GeneratedFarm, k: usize) -> (ScadaFrame, LabelSeries) {
    let t = &farm.turbines[k];
    let end = train_end(farm);
    let f = t.frame.slice_period(end - Months::new(1), end);
    let l = derive_labels(&f, &t.config);
    (f, l)
}

pub fn trained(farm: &GeneratedFarm, k: usize, seed: u64) -> DetectorModel {
    let (f, l) = training_slice(farm, k);
    train_baseline(
        TurbineData::new(&farm.turbines[k].config.turbine_id, &f, &l),
        &small_config(seed),
    )
    .unwrap()
}

pub fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}
