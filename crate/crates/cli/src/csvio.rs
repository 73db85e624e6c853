//! Trajectory CSV files: `time,x,y,vx,vy` followed by optional columns,
//! every number written with 17 significant digits.

use std::io::{Read, Write};

use ermakov_core::CartesianState;

use crate::error::CliError;

pub const STATE_COLUMNS: [&str; 5] = ["time", "x", "y", "vx", "vy"];

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header and rows of numbers.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let failed = |e: csv::Error| CliError::Runtime(format!("writing CSV: {e}"));
    w.write_record(header).map_err(failed)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| format_value(v)))
            .map_err(failed)?;
    }
    w.flush()
        .map_err(|e| CliError::Runtime(format!("writing CSV: {e}")))
}

/// Reads the state columns of a trajectory CSV; extra columns are ignored.
pub fn read_states<R: Read>(input: R) -> Result<Vec<CartesianState>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |msg: String| CliError::Config(format!("trajectory CSV: {msg}"));
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let leading: Vec<&str> = header.iter().take(STATE_COLUMNS.len()).collect();
    if leading != STATE_COLUMNS {
        return Err(bad(format!(
            "header must start with {}, got {}",
            STATE_COLUMNS.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut states = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let mut v = [0.0; 5];
        for (k, slot) in v.iter_mut().enumerate() {
            let field = record.get(k).unwrap_or("");
            *slot = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: `{field}` is not a number", line + 1)))?;
        }
        states.push(CartesianState::new(v[0], v[1], v[2], v[3], v[4]));
    }
    if states.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(states)
}
