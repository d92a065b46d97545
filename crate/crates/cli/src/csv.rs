//! Rocking-curve and bench CSV files.

use std::fmt;

use refdiff_core::curve::{CurveRow, RockingCurve};

/// Scientific notation with 15 significant digits and a signed two-digit
/// exponent, e.g. `1.23456789012345E-01`.
pub fn format_sci(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.14E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}E{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn rod_label(rod: (i32, i32)) -> String {
    format!("eta_{}_{}", rod.0, rod.1)
}

pub fn write_curve(curve: &RockingCurve) -> String {
    let mut out = String::from("theta0,theta1");
    for &rod in &curve.rods {
        out.push(',');
        out.push_str(&rod_label(rod));
    }
    out.push('\n');
    for row in &curve.rows {
        out.push_str(&format_sci(row.theta0));
        out.push(',');
        out.push_str(&format_sci(row.theta1));
        for &e in &row.eta {
            out.push(',');
            out.push_str(&format_sci(e));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CurveParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "curve csv line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CurveParseError {}

fn parse_error(line: usize, message: impl Into<String>) -> CurveParseError {
    CurveParseError { line, message: message.into() }
}

fn parse_rod(label: &str) -> Option<(i32, i32)> {
    let rest = label.strip_prefix("eta_")?;
    let (m1, m2) = rest.split_once('_')?;
    Some((m1.parse().ok()?, m2.parse().ok()?))
}

/// Inverse of [`write_curve`]. Requires a trailing newline so a file cut off
/// mid-row is rejected.
pub fn parse_curve(text: &str) -> Result<RockingCurve, CurveParseError> {
    if !text.ends_with('\n') {
        return Err(parse_error(text.lines().count().max(1), "file does not end with a newline"));
    }
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "theta0" || cols[1] != "theta1" {
        return Err(parse_error(1, "header must start with theta0,theta1 and name at least one rod"));
    }
    let rods = cols[2..]
        .iter()
        .map(|c| parse_rod(c).ok_or_else(|| parse_error(1, format!("bad rod column '{c}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| parse_error(i + 1, format!("bad number '{v}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != cols.len() {
            return Err(parse_error(i + 1, format!("expected {} fields, found {}", cols.len(), values.len())));
        }
        rows.push(CurveRow { theta0: values[0], theta1: values[1], eta: values[2..].to_vec() });
    }
    if rows.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }
    Ok(RockingCurve { rods, rows, metadata: None })
}
