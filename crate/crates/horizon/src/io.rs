//! Serialization helpers: CSV emission for plot-ready data and JSON
//! envelopes for harness round-tripping.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;
use crate::seq::{LineEnsemble, Window};

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidConfig(format!("io error: {e}"))
}

/// Two-column CSV `index,value`.
pub fn window_to_csv<W: Write>(w: &Window, out: &mut W) -> Result<()> {
    writeln!(out, "index,value").map_err(io_err)?;
    for (i, v) in w.iter() {
        writeln!(out, "{i},{v:.17e}").map_err(io_err)?;
    }
    Ok(())
}

/// Two-column CSV `x,value` over the knot grid.
pub fn path_to_csv<W: Write>(p: &PiecewiseLinearPath, out: &mut W) -> Result<()> {
    writeln!(out, "x,value").map_err(io_err)?;
    for j in 0..p.num_knots() {
        writeln!(out, "{:.17e},{:.17e}", p.knot_x(j), p.knots()[j]).map_err(io_err)?;
    }
    Ok(())
}

/// Long-format CSV `line,index,value` for a discrete ensemble.
pub fn ensemble_to_csv<W: Write>(ens: &LineEnsemble, out: &mut W) -> Result<()> {
    writeln!(out, "line,index,value").map_err(io_err)?;
    for (l, line) in ens.lines().iter().enumerate() {
        for (i, v) in line.iter() {
            writeln!(out, "{l},{i},{v:.17e}").map_err(io_err)?;
        }
    }
    Ok(())
}

/// Long-format CSV `label,x,value` for a family of paths.
pub fn paths_to_csv<W: Write>(
    labeled: &[(f64, &PiecewiseLinearPath)],
    label_name: &str,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "{label_name},x,value").map_err(io_err)?;
    for (label, p) in labeled {
        for j in 0..p.num_knots() {
            writeln!(out, "{label:.17e},{:.17e},{:.17e}", p.knot_x(j), p.knots()[j])
                .map_err(io_err)?;
        }
    }
    Ok(())
}

/// JSON envelope round-trip.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(format!("json: {e}")))
}

pub fn window_from_json(s: &str) -> Result<Window> {
    serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("json: {e}")))
}

pub fn path_from_json(s: &str) -> Result<PiecewiseLinearPath> {
    serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("json: {e}")))
}

/// Stable 64-bit FNV-1a over the canonical JSON of a configuration, used to
/// tag samples and reports.
pub fn config_hash<T: Serialize>(value: &T) -> u64 {
    let s = serde_json::to_string(value).unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
