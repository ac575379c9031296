//! Time-series CSV of diagnostic rows.
//!
//! Floats use 17 significant digits in scientific notation so that values
//! survive a parse/emit cycle bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::DiagnosticRow;

pub const HEADER: &str = "t,H,dH_rel,K,Khat,errK,errMK,errI,errMI";

fn row_values(r: &DiagnosticRow) -> [f64; 9] {
    [
        r.t,
        r.energy,
        r.dh_rel,
        r.momentum,
        r.modified_momentum,
        r.err_k,
        r.err_mk,
        r.err_i,
        r.err_mi,
    ]
}

pub fn format_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::with_capacity(HEADER.len() + 1 + rows.len() * 200);
    out.push_str(HEADER);
    for row in rows {
        out.push('\n');
        for (i, v) in row_values(row).iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
    }
    out.push('\n');
    out
}

pub fn emit_csv(rows: &[DiagnosticRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows to write".into()));
    }
    std::fs::write(path, format_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        Some(h) => return Err(Error::Parse(format!("unexpected CSV header '{h}'"))),
        None => return Err(Error::Parse("empty CSV".into())),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let values = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse(format!("CSV line {}: {e}", i + 2)))?;
            let [t, energy, dh_rel, momentum, modified_momentum, err_k, err_mk, err_i, err_mi] =
                values[..]
            else {
                return Err(Error::Parse(format!(
                    "CSV line {}: expected 9 fields, got {}",
                    i + 2,
                    values.len()
                )));
            };
            Ok(DiagnosticRow {
                t,
                energy,
                dh_rel,
                momentum,
                modified_momentum,
                err_k,
                err_mk,
                err_i,
                err_mi,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticRow>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(t: f64, x: f64) -> DiagnosticRow {
        DiagnosticRow {
            t,
            energy: x,
            dh_rel: -x * 1e-12,
            momentum: 1.0 / 3.0,
            modified_momentum: f64::NAN,
            err_k: 0.0,
            err_mk: -0.0,
            err_i: 1e-300,
            err_mi: f64::INFINITY,
        }
    }

    #[test]
    fn layout() {
        let text = format_csv(&[row(0.0, 1.5)]);
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n') && !text.ends_with("\n\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().next().unwrap(), HEADER);
        assert!(text.contains("1.5000000000000000e0"));
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let rows = vec![row(0.0, 0.1), row(0.05, std::f64::consts::PI), row(1e4, -7.25e-19)];
        let text = format_csv(&rows);
        let again = format_csv(&parse_csv(&text).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![row(0.0, 2.0)];
        emit_csv(&rows, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back[0].energy, 2.0);
        assert!(back[0].modified_momentum.is_nan());
        assert!(emit_csv(&[], &path).is_err());
        assert!(matches!(
            emit_csv(&rows, &dir.path().join("missing/rows.csv")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn malformed_input() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n").is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,2,3\n")).is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,2,3,4,5,6,7,8,x\n")).is_err());
    }

    proptest! {
        #[test]
        fn floats_survive_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let r = row(x, x);
            let back = parse_csv(&format_csv(&[r])).unwrap();
            prop_assert_eq!(back[0].t.to_bits(), x.to_bits());
            prop_assert_eq!(back[0].energy.to_bits(), x.to_bits());
        }
    }
}
