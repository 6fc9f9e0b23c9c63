//! Loading SCADA data, deriving normal/anomalous labels, slicing periods.

mod csv_io;
mod frame;
mod labels;
mod schema;

pub use csv_io::{format_timestamp, load_csv, parse_timestamp, read_csv, write_csv, write_csv_to};
pub use frame::{slice_period, ScadaFrame, GRID_SECONDS};
pub use labels::{derive_labels, label_row, select_normal, Label, LabelSeries, NORMAL_OPERATION};
pub use schema::{ColumnRole, ColumnSchema, Schema, TurbineConfig};

#[cfg(test)]
pub(crate) use frame::fixtures;

pub(crate) use schema::default_high_power_fraction as schema_default_high_power_fraction;
