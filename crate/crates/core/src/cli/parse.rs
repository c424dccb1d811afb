//! Parsers for command-line values: size lists, real grids and windows.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Upper bound on the number of points a single list or grid may expand to.
pub const MAX_POINTS: usize = 10_000_000;

fn parse_err(what: &str, text: &str, reason: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what} {text:?}: {reason}"))
}

/// A real number, optionally written as a multiple of π: `1.5`, `pi`,
/// `0.25pi`, `-2pi`.
pub fn parse_real(text: &str) -> Result<f64> {
    let s = text.trim();
    let value = if let Some(factor) = s.strip_suffix("pi") {
        let factor = factor.trim();
        let scale = match factor {
            "" | "+" => 1.0,
            "-" => -1.0,
            f => f.parse::<f64>().map_err(|e| parse_err("number", text, e))?,
        };
        scale * PI
    } else {
        s.parse::<f64>().map_err(|e| parse_err("number", text, e))?
    };
    if !value.is_finite() {
        return Err(parse_err("number", text, "not finite"));
    }
    Ok(value)
}

fn parse_count(text: &str) -> Result<usize> {
    text.trim().parse::<usize>().map_err(|e| parse_err("integer", text, e))
}

/// Comma-separated positive integers; an item may be a range `lo:hi:step`
/// (inclusive of `hi` when it lies on the grid). Order is preserved.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    if text.trim().is_empty() {
        return Err(parse_err("list", text, "empty"));
    }
    let mut out = Vec::new();
    for item in text.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_count(single)?),
            [lo, hi, step] => {
                let (lo, hi, step) = (parse_count(lo)?, parse_count(hi)?, parse_count(step)?);
                if step == 0 {
                    return Err(parse_err("range", item, "step must be positive"));
                }
                if lo > hi {
                    return Err(parse_err("range", item, "start exceeds end"));
                }
                let intervals = (hi - lo) / step;
                if intervals >= MAX_POINTS || out.len() + intervals + 1 > MAX_POINTS {
                    return Err(parse_err("list", text, format!("more than {MAX_POINTS} entries")));
                }
                out.extend((0..=intervals).map(|i| lo + i * step));
            }
            _ => return Err(parse_err("list item", item, "expected N or lo:hi:step")),
        }
        if out.len() > MAX_POINTS {
            return Err(parse_err("list", text, format!("more than {MAX_POINTS} entries")));
        }
    }
    if out.contains(&0) {
        return Err(parse_err("list", text, "entries must be positive"));
    }
    Ok(out)
}

/// A uniform grid `lo:hi:step` (`hi` included when it lies on the grid up
/// to rounding) or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_real(single)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse_real(lo)?, parse_real(hi)?, parse_real(step)?);
            if step <= 0.0 {
                return Err(parse_err("grid", text, "step must be positive"));
            }
            if lo > hi {
                return Err(parse_err("grid", text, "start exceeds end"));
            }
            let intervals = ((hi - lo) / step + 1e-9).floor();
            if !intervals.is_finite() || intervals >= MAX_POINTS as f64 {
                return Err(parse_err("grid", text, format!("more than {MAX_POINTS} points")));
            }
            let count = intervals as usize + 1;
            Ok((0..count).map(|i| (lo + step * i as f64).min(hi)).collect())
        }
        _ => Err(parse_err("grid", text, "expected lo:hi:step")),
    }
}

/// A time window `lo:hi` with lo < hi.
pub fn parse_window(text: &str) -> Result<(f64, f64)> {
    match text.split(':').collect::<Vec<_>>().as_slice() {
        [lo, hi] => {
            let (lo, hi) = (parse_real(lo)?, parse_real(hi)?);
            if lo >= hi {
                return Err(parse_err("window", text, "start must be below end"));
            }
            Ok((lo, hi))
        }
        _ => Err(parse_err("window", text, "expected lo:hi")),
    }
}
