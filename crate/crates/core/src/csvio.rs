//! Minimal CSV reading and writing shared by the artifact formats.
//!
//! Floats are written in shortest round-trip exponent form so every file
//! parses back to bit-identical values. `.` decimal separator, LF endings.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Shortest round-trip representation of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Make free text safe for a single CSV field.
pub fn sanitize(text: &str) -> String {
    text.replace([',', '\n', '\r'], ";")
}

pub fn write_row(out: &mut String, fields: &[String]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(f);
    }
    out.push('\n');
}

pub fn float_row(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v:e}");
    }
    s.push('\n');
    s
}

/// A parsed CSV table: header names and rows of raw fields, each row tagged
/// with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Table> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header_line) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .ok_or(Error::Parse {
                line: 1,
                message: "empty file: expected a header line".into(),
            })?;
        let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if fields.len() != header.len() {
                return Err(Error::Parse {
                    line: n,
                    message: format!("expected {} fields, found {}", header.len(), fields.len()),
                });
            }
            rows.push((n, fields));
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parse column `idx` of every row as floats.
    pub fn floats(&self, idx: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|(line, fields)| {
                fields[idx].parse::<f64>().map_err(|e| Error::Parse {
                    line: *line,
                    message: format!("field '{}' is not a number: {e}", fields[idx]),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_form_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0, 12345.678] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn empty_file_reports_line_one() {
        match Table::parse("").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn ragged_row_reports_line() {
        match Table::parse("a,b\n1,2\n3\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }
}
