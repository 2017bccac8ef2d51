//! Deterministic serialization: JSON and CSV writers that print every float
//! with 17 significant digits so identical runs produce identical bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridField;

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a value as JSON with fixed-width floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Usage(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Usage(format!("non-utf8 json: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = to_json_string(value)?;
    std::fs::write(path, body)?;
    Ok(())
}

/// Writes a node field as CSV: coordinates then the listed value columns.
pub fn write_field_csv(path: &Path, names: &[&str], fields: &[&GridField]) -> Result<()> {
    if fields.is_empty() {
        return Err(Error::Usage("need at least one field".into()));
    }
    let grid = &fields[0].grid;
    for f in fields {
        if f.grid != *grid {
            return Err(Error::Usage("csv fields must share a grid".into()));
        }
    }
    let dim = grid.dim();
    let mut out = String::new();
    for d in 0..dim {
        out.push_str(&format!("x{}", d + 1));
        out.push(',');
    }
    out.push_str(&names.join(","));
    out.push('\n');
    for lin in 0..grid.len() {
        let p = grid.point(lin);
        for d in 0..dim {
            out.push_str(&fmt_float(p[d]));
            out.push(',');
        }
        let mut first = true;
        for f in fields {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_float(f.values[lin]));
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a table of rows as CSV with the given header.
pub fn write_rows_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_float(*v));
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Append-only wall-clock log, written to its own file because timings are
/// never byte-reproducible.
#[derive(Debug, Default)]
pub struct Timings {
    entries: Vec<(String, f64)>,
}

impl Timings {
    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.entries.push((stage.to_string(), seconds));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (stage, secs) in &self.entries {
            out.push_str(&format!("{stage}: {secs:.3} s\n"));
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn float_format_is_17_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.5e-8), "-2.4999999999999999e-8");
    }

    #[test]
    fn json_floats_are_fixed_width() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            n: usize,
        }
        let s = S { a: 0.5, b: vec![1.0, 2.0], n: 3 };
        let text = to_json_string(&s).unwrap();
        assert!(text.contains("5.0000000000000000e-1"), "{text}");
        assert!(text.contains("\"n\":3"), "{text}");
        let reparsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(reparsed["n"], 3);
    }

    #[test]
    fn field_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::over_box(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap();
        let f = GridField::from_fn(&grid, |p| p[0] + p[1]);
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &["u"], &[&f]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,u");
        assert_eq!(text.lines().count(), 5);
    }
}
