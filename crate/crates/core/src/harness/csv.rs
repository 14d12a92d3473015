//! CSV persistence for sweep results.
//!
//! Fixed schema, LF line endings, UTF-8; reals as 17-significant-digit
//! decimal strings (so files round-trip bit for bit and diff cleanly across
//! runs), `inf` / `nan` as literal sentinels.  Rows appear as produced by
//! [`evaluate_sweep`](super::evaluate_sweep): `two-step` rows ascending in
//! fraction, then `separate`, then `glrt`.

use std::path::Path;

use crate::serialize::{fmt_real, parse_real_str};
use crate::{Error, Result};

use super::{SweepResult, SweepRow};

pub const CSV_HEADER: &str =
    "fraction_target,lambda,realized_fraction,K,mse,mse_normalized,p_detect,scheme";

/// The exact bytes [`write_csv`] persists.
pub fn csv_string(result: &SweepResult) -> String {
    let mut out = String::with_capacity(64 + 160 * result.rows.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&fmt_real(row.fraction_target));
        out.push(',');
        out.push_str(&fmt_real(row.lambda));
        out.push(',');
        out.push_str(&fmt_real(row.realized_fraction));
        out.push(',');
        out.push_str(&row.k.to_string());
        out.push(',');
        out.push_str(&fmt_real(row.mse));
        out.push(',');
        out.push_str(&fmt_real(row.mse_normalized));
        out.push(',');
        out.push_str(&fmt_real(row.p_detect));
        out.push(',');
        out.push_str(&row.scheme);
        out.push('\n');
    }
    out
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(result)).map_err(|e| {
        Error::from(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Parses what [`write_csv`] wrote.  The header must match the schema
/// exactly; every data line must have all eight fields.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse("empty CSV"))?;
    if header != CSV_HEADER {
        return Err(Error::parse(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(format!(
                "row {}: expected 8 fields, got {}",
                i + 1,
                fields.len()
            )));
        }
        let real = |s: &str| parse_real_str::<f64>(s);
        rows.push(SweepRow {
            fraction_target: real(fields[0])?,
            lambda: real(fields[1])?,
            realized_fraction: real(fields[2])?,
            k: fields[3]
                .parse::<usize>()
                .map_err(|_| Error::parse(format!("row {}: bad K {:?}", i + 1, fields[3])))?,
            mse: real(fields[4])?,
            mse_normalized: real(fields[5])?,
            p_detect: real(fields[6])?,
            scheme: fields[7].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_rows() -> SweepResult {
        // All values dyadic, so the expected digit strings below are exact.
        SweepResult {
            rows: vec![
                SweepRow {
                    fraction_target: 0.5,
                    lambda: 0.25,
                    realized_fraction: 0.5078125,
                    k: 130,
                    mse: 0.625,
                    mse_normalized: 0.625 / 4096.0,
                    p_detect: 0.75,
                    scheme: "two-step".to_string(),
                },
                SweepRow {
                    fraction_target: 1.0,
                    lambda: f64::INFINITY,
                    realized_fraction: 1.0,
                    k: 256,
                    mse: 0.125,
                    mse_normalized: 0.125 / 4096.0,
                    p_detect: 0.75,
                    scheme: "separate".to_string(),
                },
            ],
            normalization: 4096.0,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn format_is_frozen() {
        // Byte-level golden: any change here is a file-format break.
        let expect = "fraction_target,lambda,realized_fraction,K,mse,mse_normalized,p_detect,scheme\n\
                      5.0000000000000000e-1,2.5000000000000000e-1,5.0781250000000000e-1,130,6.2500000000000000e-1,1.5258789062500000e-4,7.5000000000000000e-1,two-step\n\
                      1.0000000000000000e0,inf,1.0000000000000000e0,256,1.2500000000000000e-1,3.0517578125000000e-5,7.5000000000000000e-1,separate\n";
        assert_eq!(csv_string(&sample_rows()), expect);
    }

    #[test]
    fn round_trip_is_exact() {
        let result = sample_rows();
        let rows = parse_csv(&csv_string(&result)).unwrap();
        assert_eq!(rows, result.rows);
    }

    #[test]
    fn empty_sweep_writes_header_only() {
        let result = SweepResult { rows: Vec::new(), normalization: 1.0, warnings: Vec::new() };
        let text = csv_string(&result);
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        assert_eq!(parse_csv(&text).unwrap(), Vec::new());
    }

    #[test]
    fn file_round_trip_and_path_in_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let result = sample_rows();
        write_csv(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, csv_string(&result));

        let bad = dir.path().join("missing-dir").join("rows.csv");
        let err = write_csv(&result, &bad).unwrap_err();
        assert!(format!("{err}").contains("missing-dir"), "{err}");
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("wrong,header\n").is_err());
        let text = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(parse_csv(&text).is_err());
        let text = format!("{CSV_HEADER}\n1,2,3,x,5,6,7,s\n");
        assert!(parse_csv(&text).is_err());
    }
}
