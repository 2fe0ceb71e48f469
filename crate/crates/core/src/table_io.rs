//! CSV and JSON encodings of a [`SweepTable`].
//!
//! Both encodings carry one flat record per row: the grid coordinates first
//! (`x_<axis>`, then `y_<axis>` for surfaces, `x` varying slowest), followed by
//! `beta,T,h,J,q,f,S,m,chi,C`. CSV numbers use 17 significant digits in
//! scientific notation, so every `f64` survives a round trip.

use std::io::{Read, Write};

use serde_json::{json, Map, Value};

use crate::model::{ModelParams, ThermoState};
use crate::sweep::{SweepRow, SweepTable};
use crate::thermo::ThermoPoint;

pub const VALUE_COLUMNS: [&str; 10] = ["beta", "T", "h", "J", "q", "f", "S", "m", "chi", "C"];

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

/// Formats a double with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header names of the coordinate columns.
pub fn coordinate_columns(table: &SweepTable) -> Vec<String> {
    table
        .metadata
        .grids
        .iter()
        .zip(["x", "y"])
        .map(|(g, prefix)| format!("{prefix}_{}", g.axis))
        .collect()
}

fn row_values(row: &SweepRow) -> [f64; 10] {
    let p = &row.point;
    [
        row.state.beta(),
        row.state.temperature(),
        row.params.field(),
        row.params.coupling(),
        f64::from(row.params.q()),
        p.f,
        p.s,
        p.m,
        p.chi,
        p.c,
    ]
}

pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<(), TableError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = coordinate_columns(table);
    header.extend(VALUE_COLUMNS.iter().map(|s| s.to_string()));
    writer.write_record(&header)?;
    for row in &table.rows {
        let mut record: Vec<String> = row.coords.iter().map(|&c| format_value(c)).collect();
        let values = row_values(row);
        for (name, v) in VALUE_COLUMNS.iter().zip(values) {
            record.push(if *name == "q" {
                row.params.q().to_string()
            } else {
                format_value(v)
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn row_from_fields(coords: Vec<f64>, fields: &[f64]) -> Result<SweepRow, TableError> {
    let [beta, _t, h, j, q, f, s, m, chi, c] = fields else {
        return Err(TableError::Malformed(format!(
            "expected 10 value columns, got {}",
            fields.len()
        )));
    };
    if q.fract() != 0.0 || *q < 0.0 {
        return Err(TableError::Malformed(format!("q = {q} is not an integer")));
    }
    Ok(SweepRow {
        coords,
        params: ModelParams::new(*q as u32, *j, *h)?,
        state: ThermoState::from_beta(*beta)?,
        point: ThermoPoint {
            f: *f,
            s: *s,
            m: *m,
            chi: *chi,
            c: *c,
        },
    })
}

/// Reads the rows written by [`write_csv`].
pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<SweepRow>, TableError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let n_coords = header
        .iter()
        .take_while(|h| h.starts_with("x_") || h.starts_with("y_"))
        .count();
    if header.iter().skip(n_coords).ne(VALUE_COLUMNS) {
        return Err(TableError::Malformed(format!(
            "unexpected header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| TableError::Malformed(format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (coords, fields) = values.split_at(n_coords);
        rows.push(row_from_fields(coords.to_vec(), fields)?);
    }
    Ok(rows)
}

pub fn to_json(table: &SweepTable) -> Value {
    let coord_names = coordinate_columns(table);
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, c) in coord_names.iter().zip(&row.coords) {
                obj.insert(name.clone(), json!(c));
            }
            for (name, v) in VALUE_COLUMNS.iter().zip(row_values(row)) {
                let value = if *name == "q" {
                    json!(row.params.q())
                } else {
                    json!(v)
                };
                obj.insert(name.to_string(), value);
            }
            Value::Object(obj)
        })
        .collect();
    json!({
        "metadata": {
            "params": table.metadata.params,
            "state": table.metadata.state,
            "grids": table.metadata.grids,
            "order": "row-major, x slowest",
        },
        "rows": rows,
    })
}

pub fn write_json<W: Write>(table: &SweepTable, mut out: W) -> Result<(), TableError> {
    serde_json::to_writer_pretty(&mut out, &to_json(table))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads the rows written by [`write_json`].
pub fn read_json_rows<R: Read>(input: R) -> Result<Vec<SweepRow>, TableError> {
    let doc: Value = serde_json::from_reader(input)?;
    let rows = doc
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| TableError::Malformed("missing rows array".into()))?;
    rows.iter()
        .map(|row| {
            let obj = row
                .as_object()
                .ok_or_else(|| TableError::Malformed("row is not an object".into()))?;
            let number = |key: &str| {
                obj.get(key)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| TableError::Malformed(format!("row lacks numeric {key}")))
            };
            let mut coords = Vec::new();
            for prefix in ["x_", "y_"] {
                if let Some((key, _)) = obj.iter().find(|(k, _)| k.starts_with(prefix)) {
                    coords.push(number(key)?);
                }
            }
            let fields = VALUE_COLUMNS
                .iter()
                .map(|k| number(k))
                .collect::<Result<Vec<_>, _>>()?;
            row_from_fields(coords, &fields)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{sweep_1d, sweep_2d, Axis, GridSpec};

    fn table() -> SweepTable {
        let p = ModelParams::new(5, -1.3, 0.2).unwrap();
        let s = ThermoState::from_beta(0.9).unwrap();
        sweep_2d(
            &p,
            s,
            &GridSpec::new(Axis::Beta, 0.1, 3.0, 3).unwrap(),
            &GridSpec::new(Axis::H, -2.0, 2.0, 4).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn csv_header_and_layout() {
        let mut buf = Vec::new();
        write_csv(&table(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x_beta,y_h,beta,T,h,J,q,f,S,m,chi,C");
        assert_eq!(text.lines().count(), 13);
        assert!(!text.contains('\r'));
        let first = text.lines().nth(1).unwrap();
        assert!(first.starts_with("1.0000000000000001e-1,-2.0000000000000000e0,"));
        assert!(first.contains(",5,"));
    }

    #[test]
    fn csv_and_json_agree_exactly() {
        let t = table();
        let mut csv_buf = Vec::new();
        write_csv(&t, &mut csv_buf).unwrap();
        let mut json_buf = Vec::new();
        write_json(&t, &mut json_buf).unwrap();
        let from_csv = read_csv_rows(csv_buf.as_slice()).unwrap();
        let from_json = read_json_rows(json_buf.as_slice()).unwrap();
        assert_eq!(from_csv, t.rows);
        assert_eq!(from_json, t.rows);
    }

    #[test]
    fn json_shape() {
        let p = ModelParams::new(3, 1.0, 0.5).unwrap();
        let s = ThermoState::from_beta(0.7).unwrap();
        let t = sweep_1d(&p, s, &GridSpec::new(Axis::T, 1.0, 2.0, 2).unwrap()).unwrap();
        let v = to_json(&t);
        assert_eq!(v["metadata"]["params"]["q"], 3);
        assert_eq!(v["metadata"]["grids"][0]["axis"], "T");
        assert_eq!(v["rows"][1]["x_T"], 2.0);
        assert_eq!(v["rows"][1]["beta"], 0.5);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_csv_rows("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_json_rows("{}".as_bytes()).is_err());
    }
}
