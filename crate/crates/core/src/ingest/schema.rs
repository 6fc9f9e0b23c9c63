use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a column means to the rest of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Timestamp,
    Opmode,
    Power,
    Windspeed,
    Measurement,
    Counter,
    Setpoint,
    Angle,
}

impl ColumnRole {
    /// Roles stored in the numeric value matrix of a frame.
    pub fn is_value(self) -> bool {
        !matches!(self, ColumnRole::Timestamp | ColumnRole::Opmode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub role: ColumnRole,
    #[serde(default)]
    pub unit: String,
    /// For the op-mode column: raw tokens mapped to canonical tokens at load.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aliases: BTreeMap<String, String>,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, role: ColumnRole, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            role,
            unit: unit.into(),
            aliases: BTreeMap::new(),
        }
    }
}

/// A validated list of column declarations.
///
/// Exactly one column each for timestamp, op-mode, power and wind speed;
/// names are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ColumnSchema>", into = "Vec<ColumnSchema>")]
pub struct Schema {
    columns: Vec<ColumnSchema>,
}

impl TryFrom<Vec<ColumnSchema>> for Schema {
    type Error = Error;

    fn try_from(columns: Vec<ColumnSchema>) -> Result<Self> {
        Schema::new(columns)
    }
}

impl From<Schema> for Vec<ColumnSchema> {
    fn from(s: Schema) -> Self {
        s.columns
    }
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::BadSchema(format!("duplicate column `{}`", c.name)));
            }
        }
        for role in [
            ColumnRole::Timestamp,
            ColumnRole::Opmode,
            ColumnRole::Power,
            ColumnRole::Windspeed,
        ] {
            let n = columns.iter().filter(|c| c.role == role).count();
            if n != 1 {
                return Err(Error::BadSchema(format!(
                    "expected exactly one {role:?} column, found {n}"
                )));
            }
        }
        Ok(Self { columns })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.columns).expect("schema serializes")
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    fn single(&self, role: ColumnRole) -> &ColumnSchema {
        self.columns
            .iter()
            .find(|c| c.role == role)
            .expect("validated at construction")
    }

    pub fn timestamp_column(&self) -> &ColumnSchema {
        self.single(ColumnRole::Timestamp)
    }

    pub fn opmode_column(&self) -> &ColumnSchema {
        self.single(ColumnRole::Opmode)
    }

    pub fn power_column(&self) -> &ColumnSchema {
        self.single(ColumnRole::Power)
    }

    pub fn windspeed_column(&self) -> &ColumnSchema {
        self.single(ColumnRole::Windspeed)
    }

    /// Numeric columns in declaration order; these are the frame's matrix columns.
    pub fn value_columns(&self) -> impl Iterator<Item = &ColumnSchema> {
        self.columns.iter().filter(|c| c.role.is_value())
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Static description of one turbine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineConfig {
    pub turbine_id: String,
    #[serde(default)]
    pub farm_id: String,
    /// m/s
    pub cut_in: f64,
    /// m/s
    pub cut_out: f64,
    /// kW
    pub rated_power: f64,
    /// Power at or above this fraction of rated counts as "high".
    #[serde(default = "default_high_power_fraction")]
    pub high_power_fraction: f64,
}

pub(crate) fn default_high_power_fraction() -> f64 {
    0.5
}

impl TurbineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cut_in > 0.0 && self.cut_in < self.cut_out) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < cut_in < cut_out, got {} and {}",
                self.cut_in, self.cut_out
            )));
        }
        if !(self.rated_power > 0.0) {
            return Err(Error::InvalidConfig("rated_power must be positive".into()));
        }
        if !(self.high_power_fraction > 0.0 && self.high_power_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "high_power_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: TurbineConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}
