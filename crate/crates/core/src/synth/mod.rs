//! Deterministic synthetic wind-farm SCADA data.
//!
//! A farm shares one wind field, wind direction and ambient temperature;
//! every turbine perturbs its wind, power curve and thermal coefficients by
//! a few percent (`turbine_variation`) and follows its own seeded schedule
//! of downtime, service and derated periods. Rows where the wind is below
//! cut-in or above cut-out are logged as `low wind` or `storm`, so idle
//! periods never count as normal operation.
//!
//! Output is a pure function of the [`FarmSpec`]: each turbine draws from
//! its own ChaCha stream, which makes per-turbine generation order- and
//! schedule-independent.

mod fault;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Months, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_items, Parallelism};
use crate::ingest::{write_csv, ColumnRole, ColumnSchema, ScadaFrame, Schema, TurbineConfig, GRID_SECONDS, NORMAL_OPERATION};

pub use fault::{inject_fault, FaultKind, FaultSpec};

pub const OP_LOW_WIND: &str = "low wind";
pub const OP_STORM: &str = "storm";
pub const OP_DOWNTIME: &str = "downtime";
pub const OP_SERVICE: &str = "service";
pub const OP_DERATED: &str = "derated";

/// Wind speed at which the synthetic power curve reaches rated power, m/s.
pub const RATED_WIND: f64 = 12.0;

const ROWS_PER_DAY: f64 = 144.0;
const DT_MINUTES: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FarmSpec {
    pub farm_id: String,
    pub n_turbines: usize,
    /// Auxiliary temperature columns on top of the 25 base columns.
    pub n_extra_sensors: usize,
    pub start: DateTime<Utc>,
    pub months: u32,
    pub seed: u64,
    /// Scale of the per-turbine parameter offsets (relative).
    pub turbine_variation: f64,
    pub cut_in: f64,
    pub cut_out: f64,
    pub rated_power: f64,
    /// Weibull scale of the farm wind, m/s.
    pub wind_scale: f64,
    /// Weibull shape of the farm wind.
    pub wind_shape: f64,
    /// Mean days between unplanned downtimes, per turbine.
    pub downtime_interval_days: f64,
    /// Mean days between service visits, per turbine.
    pub service_interval_days: f64,
    /// Mean days between derated periods, per turbine.
    pub derate_interval_days: f64,
}

impl Default for FarmSpec {
    fn default() -> Self {
        Self {
            farm_id: "synthetic".into(),
            n_turbines: 6,
            n_extra_sensors: 5,
            start: Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap(),
            months: 13,
            seed: 0,
            turbine_variation: 0.05,
            cut_in: 3.0,
            cut_out: 25.0,
            rated_power: 2000.0,
            wind_scale: 11.0,
            wind_shape: 2.3,
            downtime_interval_days: 60.0,
            service_interval_days: 90.0,
            derate_interval_days: 120.0,
        }
    }
}

impl FarmSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: FarmSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadSpec(m.to_string()));
        if self.n_turbines == 0 {
            return bad("n_turbines must be at least 1");
        }
        if self.months == 0 {
            return bad("months must be at least 1");
        }
        if self.start.timestamp() % GRID_SECONDS != 0 {
            return bad("start must lie on the 10-minute grid");
        }
        if !(self.turbine_variation >= 0.0 && self.turbine_variation.is_finite()) {
            return bad("turbine_variation must be a finite value >= 0");
        }
        if !(self.cut_in > 0.0 && self.cut_in < RATED_WIND && RATED_WIND < self.cut_out) {
            return bad("need 0 < cut_in < 12 m/s < cut_out");
        }
        if !(self.rated_power > 0.0 && self.rated_power.is_finite()) {
            return bad("rated_power must be positive");
        }
        if !(self.wind_scale > 0.0 && self.wind_shape > 0.0) {
            return bad("wind_scale and wind_shape must be positive");
        }
        for d in [
            self.downtime_interval_days,
            self.service_interval_days,
            self.derate_interval_days,
        ] {
            if !(d > 0.0) {
                return bad("event intervals must be positive (use a large value to disable)");
            }
        }
        if self.start.checked_add_months(Months::new(self.months)).is_none() {
            return bad("time span overflows");
        }
        Ok(())
    }

    pub fn turbine_id(&self, k: usize) -> String {
        format!("T{:02}", k + 1)
    }

    pub fn turbine_config(&self, k: usize) -> TurbineConfig {
        TurbineConfig {
            turbine_id: self.turbine_id(k),
            farm_id: self.farm_id.clone(),
            cut_in: self.cut_in,
            cut_out: self.cut_out,
            rated_power: self.rated_power,
            high_power_fraction: crate::ingest::schema_default_high_power_fraction(),
        }
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.start + Months::new(self.months)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedTurbine {
    pub config: TurbineConfig,
    pub frame: ScadaFrame,
}

#[derive(Debug, Clone)]
pub struct GeneratedFarm {
    pub schema: Arc<Schema>,
    pub turbines: Vec<GeneratedTurbine>,
}

impl GeneratedFarm {
    /// Writes `schema.json`, and `<id>.csv` plus `<id>.config.json` for
    /// every turbine. Returns the CSV paths.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let schema_path = dir.join("schema.json");
        std::fs::write(&schema_path, self.schema.to_json_pretty() + "\n")
            .map_err(|e| Error::io(&schema_path, e))?;
        let mut paths = Vec::with_capacity(self.turbines.len());
        for t in &self.turbines {
            let id = &t.config.turbine_id;
            let cfg_path = dir.join(format!("{id}.config.json"));
            let text = serde_json::to_string_pretty(&t.config)? + "\n";
            std::fs::write(&cfg_path, text).map_err(|e| Error::io(&cfg_path, e))?;
            let csv_path = dir.join(format!("{id}.csv"));
            write_csv(&t.frame, &csv_path)?;
            paths.push(csv_path);
        }
        Ok(paths)
    }
}

/// Column layout shared by all turbines of a generated farm.
pub fn farm_schema(n_extra_sensors: usize) -> Schema {
    use ColumnRole::*;
    let mut cols = vec![
        ColumnSchema::new("timestamp", Timestamp, ""),
        ColumnSchema::new("op_mode", Opmode, ""),
        ColumnSchema::new("power", Power, "kW"),
        ColumnSchema::new("wind_speed", Windspeed, "m/s"),
        ColumnSchema::new("wind_dir", Angle, "deg"),
        ColumnSchema::new("rotor_speed", Measurement, "rpm"),
        ColumnSchema::new("generator_speed", Measurement, "rpm"),
        ColumnSchema::new("pitch_angle", Measurement, "deg"),
        ColumnSchema::new("ambient_temp", Measurement, "degC"),
    ];
    for (name, _, _, _) in THERMAL {
        cols.push(ColumnSchema::new(*name, Measurement, "degC"));
    }
    cols.extend([
        ColumnSchema::new("reactive_power", Measurement, "kvar"),
        ColumnSchema::new("grid_voltage", Measurement, "V"),
        ColumnSchema::new("tower_vibration", Measurement, "mm/s"),
        ColumnSchema::new("heater_power", Measurement, "kW"),
        ColumnSchema::new("brake_state", Measurement, ""),
        ColumnSchema::new("energy_counter", Counter, "kWh"),
        ColumnSchema::new("operating_hours", Counter, "h"),
        ColumnSchema::new("power_setpoint", Setpoint, "kW"),
    ]);
    for j in 0..n_extra_sensors {
        cols.push(ColumnSchema::new(format!("aux_temp_{}", j + 1), Measurement, "degC"));
    }
    Schema::new(cols).expect("synthetic schema is valid")
}

/// Thermal sensors: (name, offset above ambient, gain at full load, time
/// constant of the load smoothing in minutes). Cooling water is
/// thermostat-controlled and follows ambient only weakly.
const THERMAL: &[(&str, f64, f64, f64)] = &[
    ("nacelle_temp", 8.0, 6.0, 120.0),
    ("main_bearing_temp", 10.0, 15.0, 90.0),
    ("gearbox_bearing_temp", 20.0, 35.0, 40.0),
    ("gearbox_oil_temp", 18.0, 30.0, 150.0),
    ("generator_bearing_temp", 15.0, 25.0, 60.0),
    ("generator_winding_temp", 25.0, 60.0, 30.0),
    ("converter_temp", 10.0, 20.0, 20.0),
    ("cooling_water_temp", 0.0, 10.0, 60.0),
    ("transformer_temp", 15.0, 30.0, 90.0),
    ("hydraulic_oil_temp", 20.0, 5.0, 180.0),
];

const COOLING_WATER_BASE: f64 = 28.0;
const COOLING_WATER_AMBIENT_GAIN: f64 = 0.3;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn smoothing_alpha(tau_minutes: f64) -> f64 {
    1.0 - (-DT_MINUTES / tau_minutes).exp()
}

/// Unit-variance AR(1) with coefficient `phi`.
struct Ar1 {
    phi: f64,
    innovation: f64,
    x: f64,
}

impl Ar1 {
    fn new(phi: f64, rng: &mut ChaCha8Rng) -> Self {
        Self {
            phi,
            innovation: (1.0 - phi * phi).sqrt(),
            x: normal(rng),
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.x = self.phi * self.x + self.innovation * normal(rng);
        self.x
    }
}

/// Farm-wide series shared by every turbine.
struct FarmSeries {
    timestamps: Vec<DateTime<Utc>>,
    wind: Vec<f64>,
    wind_dir: Vec<f64>,
    ambient: Vec<f64>,
    grid_voltage: Vec<f64>,
}

fn farm_series(spec: &FarmSpec) -> FarmSeries {
    let end = spec.end();
    let n = ((end - spec.start).num_seconds() / GRID_SECONDS) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    let mut g1 = Ar1::new(0.985, &mut rng);
    let mut g2 = Ar1::new(0.985, &mut rng);
    let mut amb = Ar1::new(0.995, &mut rng);
    let mut volt = Ar1::new(0.9, &mut rng);
    let mut dir = rng.random_range(0.0..360.0);
    let inv_shape = 1.0 / spec.wind_shape;

    let mut s = FarmSeries {
        timestamps: Vec::with_capacity(n),
        wind: Vec::with_capacity(n),
        wind_dir: Vec::with_capacity(n),
        ambient: Vec::with_capacity(n),
        grid_voltage: Vec::with_capacity(n),
    };
    for i in 0..n {
        let t = spec.start + Duration::seconds(GRID_SECONDS * i as i64);
        let day = t.timestamp() as f64 / 86_400.0;
        let season = (2.0 * std::f64::consts::PI * (day - 19.0) / 365.25).cos();
        let diurnal = (2.0 * std::f64::consts::PI * (day.fract() - 0.375)).sin();

        // (g1^2 + g2^2) / 2 is Exp(1) for unit-variance Gaussians, so the
        // power 1/k gives a Weibull(1, k) marginal.
        let (a, b) = (g1.next(&mut rng), g2.next(&mut rng));
        let scale = spec.wind_scale * (1.0 + 0.15 * season) * (1.0 + 0.05 * diurnal);
        s.wind.push(scale * ((a * a + b * b) / 2.0).powf(inv_shape));

        dir = (dir + 2.0 * normal(&mut rng)).rem_euclid(360.0);
        s.wind_dir.push(dir);
        s.ambient
            .push(8.0 - 9.0 * season + 3.0 * diurnal + 2.0 * amb.next(&mut rng));
        s.grid_voltage.push(690.0 + 2.0 * volt.next(&mut rng));
        s.timestamps.push(t);
    }
    s
}

/// Synthetic power curve: cubic between cut-in and rated wind, flat up to
/// cut-out, zero outside.
pub fn power_curve(wind: f64, cut_in: f64, cut_out: f64, rated_power: f64) -> f64 {
    if wind < cut_in || wind > cut_out {
        0.0
    } else if wind >= RATED_WIND {
        rated_power
    } else {
        rated_power * (wind.powi(3) - cut_in.powi(3)) / (RATED_WIND.powi(3) - cut_in.powi(3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    None,
    Downtime,
    Service,
    Derate(f64),
}

/// Per-turbine seeded schedule of downtime, service and derated periods.
fn event_schedule(spec: &FarmSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<Event> {
    let p_down = 1.0 / (spec.downtime_interval_days * ROWS_PER_DAY);
    let p_service = 1.0 / (spec.service_interval_days * ROWS_PER_DAY);
    let p_derate = 1.0 / (spec.derate_interval_days * ROWS_PER_DAY);
    let mut events = vec![Event::None; n];
    let mut i = 0;
    while i < n {
        let u: f64 = rng.random();
        let (event, len) = if u < p_down {
            (Event::Downtime, rng.random_range(6..=144))
        } else if u < p_down + p_service {
            (Event::Service, rng.random_range(24..=60))
        } else if u < p_down + p_service + p_derate {
            (Event::Derate(rng.random_range(0.3..0.5)), rng.random_range(72..=216))
        } else {
            i += 1;
            continue;
        };
        let stop = (i + len).min(n);
        events[i..stop].fill(event);
        i = stop;
    }
    events
}

/// Per-turbine multiplicative parameter offsets.
struct TurbineParams {
    wind: f64,
    power: f64,
    rotor: f64,
    thermal: Vec<(f64, f64)>,
    aux: Vec<(f64, f64, f64)>,
}

fn turbine_params(spec: &FarmSpec, rng: &mut ChaCha8Rng) -> TurbineParams {
    let v = spec.turbine_variation;
    let jitter = |rng: &mut ChaCha8Rng| 1.0 + v * normal(rng);
    TurbineParams {
        wind: jitter(rng),
        power: jitter(rng),
        rotor: jitter(rng),
        thermal: THERMAL.iter().map(|_| (jitter(rng), jitter(rng))).collect(),
        aux: (0..spec.n_extra_sensors)
            .map(|j| {
                let j = j as f64;
                (
                    (4.0 + 3.0 * j) * jitter(rng),
                    (6.0 + 4.0 * j) * jitter(rng),
                    20.0 + 25.0 * j,
                )
            })
            .collect(),
    }
}

#[allow(clippy::needless_range_loop)] // one index drives many parallel series
fn turbine_frame(spec: &FarmSpec, schema: &Arc<Schema>, farm: &FarmSeries, k: usize) -> Result<ScadaFrame> {
    let n = farm.timestamps.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(k as u64 + 1);
    let params = turbine_params(spec, &mut rng);
    let events = event_schedule(spec, n, &mut rng);
    let rated = spec.rated_power;
    let n_cols = schema.value_columns().count();

    let mut wind_noise = Ar1::new(0.9, &mut rng);
    let mut thermal_state = vec![0.0; THERMAL.len()];
    let mut aux_state = vec![0.0; params.aux.len()];
    let thermal_alpha: Vec<f64> = THERMAL.iter().map(|t| smoothing_alpha(t.3)).collect();
    let aux_alpha: Vec<f64> = params.aux.iter().map(|a| smoothing_alpha(a.2)).collect();
    let mut energy = 1.0e6 * (k as f64 + 1.0);
    let mut hours = 1.0e4 * (k as f64 + 1.0);
    let dir_offset = 5.0 * normal(&mut rng);

    let mut op_modes = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * n_cols);
    for i in 0..n {
        let wind = (farm.wind[i] * params.wind + 0.3 * wind_noise.next(&mut rng)).max(0.0);
        let ambient = farm.ambient[i] + 0.2 * normal(&mut rng);
        let op = match events[i] {
            Event::Downtime => OP_DOWNTIME,
            Event::Service => OP_SERVICE,
            _ if wind < spec.cut_in => OP_LOW_WIND,
            _ if wind > spec.cut_out => OP_STORM,
            Event::Derate(_) => OP_DERATED,
            Event::None => NORMAL_OPERATION,
        };
        let producing = op == NORMAL_OPERATION || op == OP_DERATED;
        let cap = match events[i] {
            Event::Derate(c) if producing => c,
            _ => 1.0,
        };

        let (power, rotor, pitch, brake) = if producing {
            let ideal = power_curve(wind, spec.cut_in, spec.cut_out, rated) * params.power;
            let p = (ideal * (1.0 + 0.02 * normal(&mut rng))).clamp(0.0, rated * cap);
            let rotor = (2.0 + 1.1 * wind).clamp(6.0, 15.5) * params.rotor * (1.0 + 0.01 * normal(&mut rng));
            let mut pitch = (2.2 * (wind - 11.5)).max(0.0) + 0.3 * normal(&mut rng);
            if cap < 1.0 {
                pitch += 10.0 * (1.0 - cap);
            }
            (p, rotor, pitch, 0.0)
        } else if op == OP_LOW_WIND {
            (0.0, (0.4 * wind + 0.05 * normal(&mut rng)).max(0.0), 85.0 + 0.5 * normal(&mut rng), 0.0)
        } else {
            let brake = if op == OP_DOWNTIME { 2.0 } else { 1.0 };
            (0.0, (0.02 * normal(&mut rng)).abs(), 88.0 + 0.5 * normal(&mut rng), brake)
        };
        let load = power / rated;
        let generator_speed = rotor * 97.0 * (1.0 + 0.002 * normal(&mut rng));

        op_modes.push(op.to_string());
        values.extend([
            power,
            wind,
            (farm.wind_dir[i] + dir_offset + 3.0 * normal(&mut rng)).rem_euclid(360.0),
            rotor,
            generator_speed,
            pitch,
            ambient,
        ]);
        for (j, (_, offset, gain, _)) in THERMAL.iter().enumerate() {
            thermal_state[j] += thermal_alpha[j] * (load - thermal_state[j]);
            let (po, pg) = params.thermal[j];
            let base = if THERMAL[j].0 == "cooling_water_temp" {
                COOLING_WATER_BASE * po + COOLING_WATER_AMBIENT_GAIN * ambient
            } else {
                ambient + offset * po
            };
            values.push(base + gain * pg * thermal_state[j] + 0.3 * normal(&mut rng));
        }
        let heater = if ambient < 2.0 && load < 0.05 {
            1.5 + 0.1 * normal(&mut rng)
        } else {
            0.0
        };
        energy += power / 6.0;
        if power > 0.0 {
            hours += 1.0 / 6.0;
        }
        let setpoint = match op {
            OP_DOWNTIME | OP_SERVICE => 0.0,
            _ => rated * cap,
        };
        values.extend([
            0.12 * power + 20.0 * normal(&mut rng),
            farm.grid_voltage[i] + 0.5 * normal(&mut rng),
            (0.02 + 0.25 * load + 0.004 * wind + 0.01 * normal(&mut rng)).max(0.0),
            heater,
            brake,
            energy,
            hours,
            setpoint,
        ]);
        for (j, (offset, gain, _)) in params.aux.iter().enumerate() {
            aux_state[j] += aux_alpha[j] * (load - aux_state[j]);
            values.push(ambient + offset + gain * aux_state[j] + 0.4 * normal(&mut rng));
        }
    }
    ScadaFrame::new(schema.clone(), farm.timestamps.clone(), op_modes, values)
}

/// Generates every turbine of the farm described by `spec`.
pub fn generate_farm(spec: &FarmSpec) -> Result<GeneratedFarm> {
    generate_farm_with(spec, Parallelism::default())
}

pub fn generate_farm_with(spec: &FarmSpec, par: Parallelism) -> Result<GeneratedFarm> {
    spec.validate()?;
    let schema = Arc::new(farm_schema(spec.n_extra_sensors));
    let farm = farm_series(spec);
    let ids: Vec<usize> = (0..spec.n_turbines).collect();
    let frames = map_items(par, &ids, |&k| turbine_frame(spec, &schema, &farm, k));
    let turbines = frames
        .into_iter()
        .enumerate()
        .map(|(k, f)| {
            f.map(|frame| GeneratedTurbine {
                config: spec.turbine_config(k),
                frame,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratedFarm { schema, turbines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::derive_labels;

    fn small(months: u32) -> FarmSpec {
        FarmSpec {
            n_turbines: 2,
            months,
            seed: 7,
            ..FarmSpec::default()
        }
    }

    #[test]
    fn schema_has_thirty_value_columns_by_default() {
        assert_eq!(farm_schema(5).value_columns().count(), 30);
        assert_eq!(farm_schema(0).value_columns().count(), 25);
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let spec = small(1);
        let a = generate_farm_with(&spec, Parallelism::Sequential).unwrap();
        let b = generate_farm_with(&spec, Parallelism::default()).unwrap();
        for (x, y) in a.turbines.iter().zip(&b.turbines) {
            assert_eq!(x.frame, y.frame);
            assert_eq!(x.config, y.config);
        }
        assert_ne!(a.turbines[0].frame.values(), a.turbines[1].frame.values());
        // 31 days of January
        assert_eq!(a.turbines[0].frame.len(), 31 * 144);
    }

    #[test]
    fn physical_invariants() {
        let spec = small(2);
        let farm = generate_farm(&spec).unwrap();
        for t in &farm.turbines {
            let f = &t.frame;
            let p = f.column("power").unwrap();
            let w = f.column("wind_speed").unwrap();
            for i in 0..f.len() {
                assert!(p[i] >= 0.0 && p[i] <= spec.rated_power);
                if w[i] < spec.cut_in || w[i] > spec.cut_out {
                    assert_eq!(p[i], 0.0);
                }
            }
            for name in ["energy_counter", "operating_hours"] {
                let c = f.column(name).unwrap();
                assert!(c.windows(2).all(|x| x[1] >= x[0]));
            }
            let energy = f.column("energy_counter").unwrap();
            assert!(energy.last() > energy.first());
            let dir = f.column("wind_dir").unwrap();
            assert!(dir.iter().all(|d| (0.0..360.0).contains(d)));
        }
    }

    #[test]
    fn mostly_normal_over_a_year() {
        let spec = FarmSpec {
            n_turbines: 3,
            months: 12,
            seed: 3,
            ..FarmSpec::default()
        };
        for t in generate_farm(&spec).unwrap().turbines {
            let labels = derive_labels(&t.frame, &t.config);
            let normal = labels.len() - labels.n_anomalous();
            assert!(normal as f64 >= 0.9 * labels.len() as f64, "{normal} of {}", labels.len());
            // but every kind of non-normal period still shows up
            let modes: std::collections::BTreeSet<&str> = t.frame.op_modes().iter().map(String::as_str).collect();
            assert!(modes.contains(OP_LOW_WIND));
        }
    }

    #[test]
    fn power_curve_shape() {
        assert_eq!(power_curve(2.9, 3.0, 25.0, 2000.0), 0.0);
        assert_eq!(power_curve(3.0, 3.0, 25.0, 2000.0), 0.0);
        assert_eq!(power_curve(12.0, 3.0, 25.0, 2000.0), 2000.0);
        assert_eq!(power_curve(25.5, 3.0, 25.0, 2000.0), 0.0);
        let mid = power_curve(8.0, 3.0, 25.0, 2000.0);
        assert!((mid - 2000.0 * (512.0 - 27.0) / (1728.0 - 27.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            FarmSpec { months: 0, ..FarmSpec::default() },
            FarmSpec { n_turbines: 0, ..FarmSpec::default() },
            FarmSpec { turbine_variation: -0.1, ..FarmSpec::default() },
            FarmSpec { cut_in: 30.0, ..FarmSpec::default() },
            FarmSpec { start: FarmSpec::default().start + Duration::seconds(5), ..FarmSpec::default() },
        ] {
            assert!(matches!(generate_farm(&spec), Err(Error::BadSpec(_))));
        }
    }

    #[test]
    fn spec_json_defaults() {
        let spec: FarmSpec = serde_json::from_str(r#"{"n_turbines": 2, "seed": 9}"#).unwrap();
        assert_eq!(spec.n_turbines, 2);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.months, 13);
    }
}
