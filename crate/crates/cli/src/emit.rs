use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bubble_core::RadialField;
use serde::Serialize;

use crate::error::CliError;
use crate::report::{RateRow, Report};

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let mut f = fs::File::create(path).map_err(io(path))?;
    f.write_all(bytes).map_err(io(path))?;
    Ok(path.to_path_buf())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("report types serialize");
    s.push(b'\n');
    s
}

pub fn curve_csv(field: &RadialField) -> String {
    let mut s = String::from("r,value\n");
    for (r, v) in field.nodes().iter().zip(field.values()) {
        s.push_str(&float(*r));
        s.push(',');
        s.push_str(&float(*v));
        s.push('\n');
    }
    s
}

pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("eps,deviation,hyp_product,a_decay_slope\n");
    for r in rows {
        let cells = [r.eps, r.deviation, r.hyp_product, r.a_decay_slope].map(float);
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes `report.json`, one CSV per curve, `rates.csv` when present and
/// `timings.json`. Wall-clock data stays out of the report so that reports are
/// reproducible byte for byte.
pub fn emit<T: Serialize>(
    dir: &Path,
    report: &Report,
    curves: &[(String, RadialField)],
    rates: Option<&[RateRow]>,
    timings: &T,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = vec![write(&dir.join("report.json"), &json_bytes(report))?];
    for (name, field) in curves {
        files.push(write(&dir.join(format!("{name}.csv")), curve_csv(field).as_bytes())?);
    }
    if let Some(rows) = rates {
        files.push(write(&dir.join("rates.csv"), rates_csv(rows).as_bytes())?);
    }
    files.push(write(&dir.join("timings.json"), &json_bytes(timings))?);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bubble_core::{make_grid, GridScheme};
    use std::sync::Arc;

    #[test]
    fn seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(1.0).parse::<f64>().unwrap(), 1.0);
        let x = std::f64::consts::PI;
        assert_eq!(float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let g = Arc::new(make_grid(1.0, 2, GridScheme::Uniform).unwrap());
        let f = RadialField::from_fn(g, |r| r * r, None);
        let text = curve_csv(&f);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "r,value");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "5.0000000000000000e-1,2.5000000000000000e-1");
        let rows = rates_csv(&[RateRow {
            eps: 0.1,
            deviation: 0.01,
            hyp_product: 3.0,
            a_decay_slope: -4.0,
        }]);
        assert!(rows.starts_with("eps,deviation,hyp_product,a_decay_slope\n"));
        assert_eq!(rows.lines().count(), 2);
    }
}
