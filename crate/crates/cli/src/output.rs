//! CSV and JSON emission.

use std::io;
use std::path::Path;

use serde_json::Value;

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

/// A CSV table with an optional footer table after a blank line.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn encode(t: &Table) -> io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// Writes `main`, then a blank line and `footer` if given.
pub fn write_csv(path: &Path, main: &Table, footer: Option<&Table>) -> io::Result<()> {
    let mut out = encode(main)?;
    if let Some(f) = footer {
        out.push(b'\n');
        out.extend(encode(f)?);
    }
    std::fs::write(path, out)
}

pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    s.push('\n');
    std::fs::write(path, s)
}
