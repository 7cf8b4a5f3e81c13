//! CSV formats for inspection records and window sets.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use pavecast_core::records::{validate, FIELD_NAMES};
use pavecast_core::sequence::{Feature, FeatureLayout, WindowSample};
use pavecast_core::{InspectionRecord, Matrix, Provenance, RangeTable, RecordSet};

use crate::error::{Error, Result};

/// `v` rounded to `digits` significant digits, printed in the shortest form
/// that reads back as the rounded value.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{:.*e}", digits - 1, v).parse().expect("scientific literal");
    format!("{rounded}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Row {
            path: path.into(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn column_index(path: &Path, headers: &csv::StringRecord) -> Result<Vec<usize>> {
    FIELD_NAMES
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Error::MissingColumn {
                    path: path.into(),
                    column: (*name).into(),
                })
        })
        .collect()
}

fn cell<T: FromStr>(path: &Path, row: &csv::StringRecord, line: u64, idx: &[usize], field: usize) -> Result<T> {
    let raw = row.get(idx[field]).unwrap_or("").trim();
    raw.parse().map_err(|_| Error::Cell {
        path: path.into(),
        line,
        column: FIELD_NAMES[field].into(),
        value: raw.into(),
    })
}

/// Parses every row without checking invariants or duplicates. Returns the
/// records with the file line of each.
pub fn parse_records<R: Read>(path: &Path, reader: R) -> Result<(RecordSet, Vec<u64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let idx = column_index(path, &headers)?;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let c = |field| -> Result<f64> { cell(path, &row, line, &idx, field) };
        records.push(InspectionRecord {
            section_id: row.get(idx[0]).unwrap_or("").trim().to_string(),
            climatic_zone: cell(path, &row, line, &idx, 1)?,
            depth_in: c(2)?,
            drum: cell(path, &row, line, &idx, 3)?,
            speed_fpm: c(4)?,
            surface_type: cell(path, &row, line, &idx, 5)?,
            month: cell(path, &row, line, &idx, 6)?,
            skid_before: c(7)?,
            skid_after: c(8)?,
            macro_before_mm: c(9)?,
            macro_after_mm: c(10)?,
            skid_number: c(11)?,
            macro_mm: c(12)?,
        });
        lines.push(line);
    }
    Ok((RecordSet::new(records, Provenance::Loaded, None), lines))
}

pub fn read_records(path: &Path) -> Result<(RecordSet, Vec<u64>)> {
    parse_records(path, open(path)?)
}

/// Reads, rejects duplicate `(section_id, month)` keys and validates
/// against `ranges`.
pub fn load_records(path: &Path, ranges: &RangeTable) -> Result<RecordSet> {
    let (rs, lines) = read_records(path)?;
    if let Some(&(first, dup)) = rs.duplicate_keys().first() {
        let r = &rs.records[dup];
        return Err(Error::Duplicate {
            path: path.into(),
            section_id: r.section_id.clone(),
            month: r.month,
            first_line: lines[first],
            line: lines[dup],
        });
    }
    let report = validate(&rs, ranges);
    if !report.is_empty() {
        return Err(Error::Validation { report });
    }
    Ok(rs)
}

/// Writes records with floats at 9 significant digits.
pub fn write_records<W: Write>(writer: W, rs: &RecordSet) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FIELD_NAMES)?;
    let f = |v: f64| format_sig(v, 9);
    for r in &rs.records {
        w.write_record([
            r.section_id.clone(),
            r.climatic_zone.to_string(),
            f(r.depth_in),
            r.drum.to_string(),
            f(r.speed_fpm),
            r.surface_type.to_string(),
            r.month.to_string(),
            f(r.skid_before),
            f(r.skid_after),
            f(r.macro_before_mm),
            f(r.macro_after_mm),
            f(r.skid_number),
            f(r.macro_mm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_records(path: &Path, rs: &RecordSet) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(file, rs).map_err(|e| csv_error(path, e))
}

/// Shape of a window file as declared by its header.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowHeader {
    pub length: usize,
    pub features: Vec<Feature>,
    pub has_target: bool,
}

fn feature_column(t: usize, f: Feature) -> String {
    format!("t{t}_{}", f.name())
}

/// One row per sample: `section_id, target_month, padded`, the flattened
/// window as `t<row>_<feature>` columns, then `target`. Values are written
/// in shortest round-trip form.
pub fn write_windows<W: Write>(writer: W, samples: &[WindowSample], layout: &FeatureLayout, length: usize) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["section_id".to_string(), "target_month".into(), "padded".into()];
    for t in 0..length {
        header.extend(layout.features.iter().map(|&f| feature_column(t, f)));
    }
    header.push("target".into());
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.section_id.clone(), s.target_month.to_string(), s.padded.to_string()];
        row.extend(s.window.data().iter().map(|v| format!("{v}")));
        row.push(format!("{}", s.target));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_windows(path: &Path, samples: &[WindowSample], layout: &FeatureLayout, length: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_windows(file, samples, layout, length).map_err(|e| csv_error(path, e))
}

fn parse_header(path: &Path, headers: &csv::StringRecord) -> Result<(WindowHeader, HashMap<&'static str, usize>)> {
    let mut fixed = HashMap::new();
    for name in ["section_id", "target_month", "padded"] {
        let i = headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn {
            path: path.into(),
            column: name.into(),
        })?;
        fixed.insert(name, i);
    }
    if let Some(i) = headers.iter().position(|h| h.trim() == "target") {
        fixed.insert("target", i);
    }
    let mut features: Vec<Feature> = Vec::new();
    let mut length = 0;
    for h in headers.iter().map(str::trim) {
        let Some(rest) = h.strip_prefix('t') else { continue };
        let Some((t, name)) = rest.split_once('_') else { continue };
        let (Ok(t), Some(f)) = (t.parse::<usize>(), Feature::from_name(name)) else {
            continue;
        };
        length = length.max(t + 1);
        if t == 0 {
            features.push(f);
        }
    }
    let header = WindowHeader {
        length,
        features,
        has_target: fixed.contains_key("target"),
    };
    Ok((header, fixed))
}

/// Reads a window file. Rows without a `target` column get `NaN` targets.
pub fn read_windows(path: &Path) -> Result<(WindowHeader, Vec<WindowSample>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let (header, fixed) = parse_header(path, &headers)?;
    if header.length == 0 || header.features.is_empty() {
        return Err(Error::Format(format!("{}: no t<row>_<feature> columns", path.display())));
    }
    let mut cols = Vec::with_capacity(header.length * header.features.len());
    for t in 0..header.length {
        for &f in &header.features {
            let name = feature_column(t, f);
            let i = headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn {
                path: path.into(),
                column: name.clone(),
            })?;
            cols.push((name, i));
        }
    }
    let mut samples = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse = |name: &str, i: usize| -> Result<f64> {
            let raw = row.get(i).unwrap_or("").trim();
            raw.parse().map_err(|_| Error::Cell {
                path: path.into(),
                line,
                column: name.into(),
                value: raw.into(),
            })
        };
        let values = cols.iter().map(|(n, i)| parse(n, *i)).collect::<Result<Vec<f64>>>()?;
        let window = Matrix::new(header.length, header.features.len(), values).map_err(|e| Error::Row {
            path: path.into(),
            line,
            message: e.to_string(),
        })?;
        let month_raw = row.get(fixed["target_month"]).unwrap_or("").trim();
        let target_month = month_raw.parse().map_err(|_| Error::Cell {
            path: path.into(),
            line,
            column: "target_month".into(),
            value: month_raw.into(),
        })?;
        let padded_raw = row.get(fixed["padded"]).unwrap_or("").trim();
        let padded = padded_raw.parse().map_err(|_| Error::Cell {
            path: path.into(),
            line,
            column: "padded".into(),
            value: padded_raw.into(),
        })?;
        let target = match fixed.get("target") {
            Some(&i) => parse("target", i)?,
            None => f64::NAN,
        };
        samples.push(WindowSample {
            section_id: row.get(fixed["section_id"]).unwrap_or("").trim().to_string(),
            window,
            target_month,
            target,
            padded,
        });
    }
    Ok((header, samples))
}
