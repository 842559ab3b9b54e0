//! Artifact writers: arc and jump-log CSVs, distance-trace CSVs, and JSON
//! documents. All numeric output uses round-trip decimal formatting, and
//! re-running with identical configuration and seed reproduces files
//! byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::hybrid::HybridArc;
use crate::omega::DistanceTrace;

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Arc CSV: `t, j, q, tau, u_tilde[...], y[...], x[...]` at the recorded
/// stride. `xs` must align with `arc.samples`.
pub fn write_arc_csv(path: &Path, arc: &HybridArc, xs: &[DVector<f64>]) -> Result<()> {
    ensure_parent(path)?;
    let mut out = String::new();
    let m = arc.samples.first().map_or(0, |s| s.load.len());
    let n = arc.samples.first().map_or(0, |s| s.y.len());
    out.push_str("t,j,q,tau");
    for i in 0..m {
        let _ = write!(out, ",u{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",y{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for (s, x) in arc.samples.iter().zip(xs) {
        let _ = write!(out, "{},{},{},{}", s.t, s.j, s.mode, s.timer);
        for v in s.load.iter() {
            let _ = write!(out, ",{v}");
        }
        for v in s.y.iter() {
            let _ = write!(out, ",{v}");
        }
        for v in x.iter() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Jump-log CSV: `t, j, q_before, q_after`.
pub fn write_jump_csv(path: &Path, arc: &HybridArc) -> Result<()> {
    ensure_parent(path)?;
    let mut out = String::from("t,j,q_before,q_after\n");
    for r in &arc.jumps {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.j, r.mode_before, r.mode_after);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Distance-trace CSV: `t, j, dist`.
pub fn write_distance_csv(path: &Path, trace: &DistanceTrace) -> Result<()> {
    ensure_parent(path)?;
    let mut out = String::from("t,j,dist\n");
    for (t, j, d) in &trace.entries {
        let _ = writeln!(out, "{t},{j},{d}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Margin-trace CSV: `t, j, margin`.
pub fn write_margin_csv(path: &Path, margins: &[(f64, u64, f64)]) -> Result<()> {
    ensure_parent(path)?;
    let mut out = String::from("t,j,margin\n");
    for (t, j, m) in margins {
        let _ = writeln!(out, "{t},{j},{m}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Pretty-printed JSON artifact.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
