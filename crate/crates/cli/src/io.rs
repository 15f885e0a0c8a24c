//! CSV input and output. Numbers are parsed with `str::parse` (decimal point only) and
//! written in shortest round-trip form.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Rows of `x1..xd[,y]` read from a headed CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: Vec<Vec<f64>>,
    pub y: Option<Vec<f64>>,
}

fn expected_header(d: usize, with_y: bool) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    if with_y {
        h.push("y".into());
    }
    h
}

/// Reads `x1..xd,y` (`with_y`) or `x1..xd`. `dim` pins `d` when known.
pub fn read_table(path: &Path, with_y: bool, dim: Option<usize>) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_table(file, with_y, dim).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_table(reader: impl std::io::Read, with_y: bool, dim: Option<usize>) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::Input("no data rows".into()));
    }
    let d = header.len().saturating_sub(usize::from(with_y));
    let want = expected_header(d, with_y);
    if d == 0 || header != want {
        return Err(CliError::Input(format!("header must be {}, got {}", want.join(","), header.join(","))));
    }
    if let Some(dim) = dim {
        if dim != d {
            return Err(CliError::Input(format!("input has d={d} columns, expected d={dim}")));
        }
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::Input(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(header.len());
        for (field, name) in record.iter().zip(&header) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => return Err(CliError::Input(format!("line {line}: column {name}: invalid number {field:?}"))),
            }
        }
        if with_y {
            y.push(row.pop().expect("row has y"));
        }
        x.push(row);
    }
    if x.is_empty() {
        return Err(CliError::Input("no data rows".into()));
    }
    Ok(Table {
        x,
        y: with_y.then_some(y),
    })
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    let mut f = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    writeln!(f, "{text}").map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn num(v: f64) -> String {
    format!("{v:?}")
}
