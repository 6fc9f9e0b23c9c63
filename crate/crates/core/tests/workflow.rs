mod common;

use common::*;
use scada_ae::neural::{build_network, fit_autoencoder_with, FitOptions};
use scada_ae::synth::{generate_farm_with, FarmSpec};
use scada_ae::{load_csv, write_csv, FeaturePipeline, Parallelism, Schema, TurbineConfig};

#[test]
fn generated_farm_round_trips_through_files() {
    let spec = FarmSpec {
        n_turbines: 2,
        months: 1,
        seed: 3,
        ..FarmSpec::default()
    };
    let farm = scada_ae::synth::generate_farm(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = farm.write_to_dir(dir.path()).unwrap();
    assert_eq!(paths.len(), 2);
    let schema = Schema::from_json_file(dir.path().join("schema.json")).unwrap();
    assert_eq!(&schema, farm.schema.as_ref());
    for (t, path) in farm.turbines.iter().zip(&paths) {
        let loaded = load_csv(path, &schema).unwrap();
        assert_eq!(loaded, t.frame);
        let config = TurbineConfig::from_json_file(dir.path().join(format!("{}.config.json", t.config.turbine_id))).unwrap();
        assert_eq!(config, t.config);
        // writing the loaded frame again is byte-identical
        let again = dir.path().join("again.csv");
        write_csv(&loaded, &again).unwrap();
        assert_eq!(std::fs::read(path).unwrap(), std::fs::read(&again).unwrap());
    }
}

#[test]
fn synthetic_pipeline_prunes_the_engineered_columns() {
    let farm = farm();
    let (f, l) = training_slice(&farm, 0);
    let normal = scada_ae::select_normal(&f, &l).unwrap();
    let p = FeaturePipeline::fit(&normal).unwrap();
    for dropped in ["energy_counter", "operating_hours", "power_setpoint", "brake_state", "heater_power"] {
        assert!(!p.kept_columns.iter().any(|c| c == dropped), "{dropped} kept");
    }
    assert!(p.feature_names.iter().any(|c| c == "wind_dir_sin"));
    assert!(p.feature_names.iter().any(|c| c == "wind_dir_cos"));
    assert_eq!(p.n_features(), 26);
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let spec = FarmSpec {
        n_turbines: 3,
        months: 1,
        seed: 8,
        ..FarmSpec::default()
    };
    let a = generate_farm_with(&spec, Parallelism::Sequential).unwrap();
    let b = generate_farm_with(&spec, Parallelism::default()).unwrap();
    for (x, y) in a.turbines.iter().zip(&b.turbines) {
        assert_eq!(bits(x.frame.values()), bits(y.frame.values()));
    }

    let p = FeaturePipeline::fit(&a.turbines[0].frame).unwrap();
    let x = p.transform(&a.turbines[0].frame).unwrap();
    let opts = FitOptions {
        epochs: 3,
        batch_size: 100,
        learning_rate: 0.001,
        seed: 9,
    };
    let mut n1 = build_network(x.ncols(), &[12, 5, 12], 2).unwrap();
    let mut n2 = n1.clone();
    let h1 = fit_autoencoder_with(&mut n1, x.view(), &opts, Parallelism::Sequential).unwrap();
    let h2 = fit_autoencoder_with(&mut n2, x.view(), &opts, Parallelism::default()).unwrap();
    assert_eq!(bits(&h1), bits(&h2));
    assert_eq!(bits(&n1.flatten_params()), bits(&n2.flatten_params()));
}
