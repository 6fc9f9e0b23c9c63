use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::frame::{on_grid, ScadaFrame};
use super::schema::Schema;
use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Parses `YYYY-MM-DDThh:mm:ssZ`, falling back to general RFC 3339.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .map(|n| n.and_utc())
        .ok()
        .or_else(|| {
            DateTime::parse_from_rfc3339(s)
                .ok()
                .map(|d| d.with_timezone(&Utc))
        })
}

fn parse_cell(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return Some(0.0);
    }
    let v: f64 = s.parse().ok()?;
    Some(if v.is_nan() { 0.0 } else { v })
}

/// Loads a SCADA CSV file against `schema`.
///
/// Rows are sorted by timestamp. Empty and NaN cells become 0.0. Columns
/// not named in the schema are ignored.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<ScadaFrame> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, Arc::new(schema.clone()), path)
}

pub fn read_csv<R: Read>(reader: R, schema: Arc<Schema>, source: &Path) -> Result<ScadaFrame> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].trim().is_empty()) => h.clone(),
        Ok(_) => return Err(Error::EmptyFile(PathBuf::from(source))),
        Err(e) => return Err(e.into()),
    };
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_idx = find(&schema.timestamp_column().name)?;
    let op_col = schema.opmode_column();
    let op_idx = find(&op_col.name)?;
    let value_cols: Vec<(String, usize)> = schema
        .value_columns()
        .map(|c| find(&c.name).map(|i| (c.name.clone(), i)))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(DateTime<Utc>, String, Vec<f64>)> = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let raw_ts = record.get(ts_idx).unwrap_or("");
        let t = parse_timestamp(raw_ts).ok_or_else(|| Error::BadTimestamp {
            row: row_no,
            value: raw_ts.to_string(),
            reason: "unparseable".into(),
        })?;
        if !on_grid(&t) {
            return Err(Error::BadTimestamp {
                row: row_no,
                value: raw_ts.to_string(),
                reason: "not on the 10-minute grid".into(),
            });
        }
        let raw_mode = record.get(op_idx).unwrap_or("").trim();
        let mode = op_col
            .aliases
            .get(raw_mode)
            .cloned()
            .unwrap_or_else(|| raw_mode.to_string());
        let mut values = Vec::with_capacity(value_cols.len());
        for (name, idx) in &value_cols {
            let raw = record.get(*idx).unwrap_or("");
            values.push(parse_cell(raw).ok_or_else(|| Error::BadValue {
                row: row_no,
                column: name.clone(),
                value: raw.to_string(),
            })?);
        }
        rows.push((t, mode, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(PathBuf::from(source)));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).position(|w| w[0].0 == w[1].0) {
        return Err(Error::BadTimestamp {
            row: w + 1,
            value: format_timestamp(&rows[w].0),
            reason: "duplicate timestamp".into(),
        });
    }
    let mut timestamps = Vec::with_capacity(rows.len());
    let mut modes = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * value_cols.len());
    for (t, m, v) in rows {
        timestamps.push(t);
        modes.push(m);
        values.extend(v);
    }
    ScadaFrame::new(schema, timestamps, modes, values)
}

/// Writes a frame in schema column order. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv_to<W: Write>(frame: &ScadaFrame, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = frame.schema();
    w.write_record(schema.columns().iter().map(|c| c.name.as_str()))?;
    let mut record: Vec<String> = Vec::with_capacity(schema.columns().len());
    for i in 0..frame.len() {
        record.clear();
        let row = frame.row(i);
        let mut j = 0;
        for c in schema.columns() {
            if c.role == super::ColumnRole::Timestamp {
                record.push(format_timestamp(&frame.timestamps()[i]));
            } else if c.role == super::ColumnRole::Opmode {
                record.push(frame.op_modes()[i].clone());
            } else {
                record.push(row[j].to_string());
                j += 1;
            }
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(frame: &ScadaFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(frame, std::io::BufWriter::new(file))
}
