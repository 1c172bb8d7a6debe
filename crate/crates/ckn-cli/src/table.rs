//! Curve tables: the one CSV shape every branch-like output uses.

use ckn::continuation::CurvePoint;
use ckn::{Error, Result};
use std::path::Path;

pub const CURVE_HEADER: &str = "mu,Lambda,J,tau,nu,symmetric";

#[derive(Debug, Clone, Default)]
pub struct CurveTable {
    pub rows: Vec<CurvePoint>,
}

impl CurveTable {
    pub fn new(rows: Vec<CurvePoint>) -> Result<Self> {
        for w in rows.windows(2) {
            if !(w[1].mu > w[0].mu) {
                return Err(Error::InvalidParameter(format!(
                    "curve table mu not strictly increasing: {} then {}",
                    w[0].mu, w[1].mu
                )));
            }
        }
        Ok(Self { rows })
    }
}

/// 17 significant decimal digits round-trips any f64 exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_curve(table: &CurveTable) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(r.mu),
            format_float(r.lambda),
            format_float(r.j),
            format_float(r.tau),
            format_float(r.nu),
            r.symmetric
        ));
    }
    out
}

#[allow(dead_code)] // kept as the canonical file-writing entry point
pub fn write_curve(table: &CurveTable, path: &Path) -> Result<()> {
    write_text(&render_curve(table), path)
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    std::fs::write(path, text.as_bytes()).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(mu: f64) -> CurvePoint {
        CurvePoint { mu, lambda: mu, j: 2.0 * mu, tau: 0.5, nu: 0.9, symmetric: true }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_curve(&CurveTable::default(), &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"mu,Lambda,J,tau,nu,symmetric\n");
    }

    #[test]
    fn rejects_non_monotone_mu() {
        assert!(CurveTable::new(vec![point(2.0), point(1.0)]).is_err());
        assert!(CurveTable::new(vec![point(1.0), point(1.0)]).is_err());
        assert!(CurveTable::new(vec![point(1.0), point(2.0)]).is_ok());
    }

    #[test]
    fn decimal_text_round_trips() {
        let table = CurveTable::new(vec![point(1.0 / 3.0), point(std::f64::consts::PI)]).unwrap();
        let text = render_curve(&table);
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
        for (line, row) in text.lines().skip(1).zip(&table.rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 6);
            assert_eq!(fields[0].parse::<f64>().unwrap(), row.mu);
            assert_eq!(fields[2].parse::<f64>().unwrap(), row.j);
            // Bitwise-stable formatting.
            assert_eq!(format_float(fields[0].parse::<f64>().unwrap()), fields[0]);
        }
    }
}
