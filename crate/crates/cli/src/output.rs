//! Number formatting and result files.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliResult;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: fixed notation for moderate exponents, scientific otherwise,
/// trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn cell(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// Builds a CSV document from a header and rows of preformatted cells.
pub fn csv_document(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::CliError::Precondition(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    command: &'a str,
    config: &'a str,
    seed: u64,
    version: &'a str,
    created_unix_seconds: u64,
}

/// Writes `text` to `out` (stdout when `None`); a file output gets a
/// `<out>.meta.json` sidecar holding the run metadata and timestamp.
pub fn emit(text: &str, out: Option<&Path>, command: &str, config: &Path, seed: u64) -> CliResult<()> {
    match out {
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
        Some(path) => {
            std::fs::write(path, text)?;
            let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let meta = Meta {
                command,
                config: &config.display().to_string(),
                seed,
                version: env!("CARGO_PKG_VERSION"),
                created_unix_seconds: created,
            };
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".meta.json");
            std::fs::write(sidecar, serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_g(0.375), "0.375");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_g(5.0), "5");
        assert_eq!(fmt_g(-12.5), "-12.5");
        assert_eq!(fmt_g(1e-7), "1e-07");
        assert_eq!(fmt_g(1.23456789012345e-7), "1.23456789012e-07");
        assert_eq!(fmt_g(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.0), "0");
    }

    #[test]
    fn csv_rows() {
        let doc = csv_document(&["a", "b"], &[vec!["1".into(), cell(None)]]).unwrap();
        assert_eq!(doc, "a,b\n1,\n");
    }
}
