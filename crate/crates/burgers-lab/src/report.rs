//! Artifact writers: deterministic CSV series and JSON reports.
//!
//! Floats are printed with 17 significant digits, so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::lattice::RunRecord;
use crate::pde::PdeRunRecord;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Write `content` to `dir/name`, creating directories as needed.
pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

/// Generic CSV from rows of floats.
pub fn csv_from_rows(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v:.17e}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Lattice snapshots as `(t, n, F)` rows.
pub fn lattice_snapshots_csv(rec: &RunRecord) -> String {
    let mut out = String::from("t,n,F\n");
    for s in &rec.snapshots {
        for (i, &v) in s.values.iter().enumerate() {
            let _ = writeln!(out, "{:.17e},{},{:.17e}", s.t, s.n_lo + i as i64, v);
        }
    }
    out
}

/// PDE snapshots as `(t, x, f)` rows.
pub fn pde_snapshots_csv(rec: &PdeRunRecord) -> String {
    let mut out = String::from("t,x,f\n");
    for s in &rec.snapshots {
        for (i, &v) in s.values.iter().enumerate() {
            let x = rec.meta.x_lo + rec.meta.dx * i as f64;
            let _ = writeln!(out, "{:.17e},{x:.17e},{v:.17e}", s.t);
        }
    }
    out
}

/// Shift trace as `(t, d, t*d')` rows; the derivative column uses the
/// wide-stencil trace derivative and is empty at the ends.
pub fn shift_trace_csv(trace: &crate::asymptotics::ShiftTrace, spacing: usize) -> String {
    let deriv = trace.derivative(spacing);
    let mut out = String::from("t,d,t_times_d_prime\n");
    for (t, d) in trace.times.iter().zip(&trace.d_values) {
        let dp = deriv
            .iter()
            .find(|(tt, _)| (tt - t).abs() < 1e-9)
            .map(|(_, v)| format!("{:.17e}", v * t));
        match dp {
            Some(s) => {
                let _ = writeln!(out, "{t:.17e},{d:.17e},{s}");
            }
            None => {
                let _ = writeln!(out, "{t:.17e},{d:.17e},");
            }
        }
    }
    out
}

/// Parse a lattice snapshots CSV back into a run record skeleton
/// (used by the shift-fit command to consume stored runs).
pub fn lattice_record_from_csv(
    csv: &str,
    meta: crate::lattice::RunMeta,
) -> Result<RunRecord> {
    use crate::error::Error;
    use crate::lattice::{LatticeState, Snapshot};
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for (lineno, line) in csv.lines().enumerate() {
        if lineno == 0 && line.starts_with('t') {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let parse_err = |e: std::num::ParseFloatError| Error::config(format!("snapshots csv: {e}"));
        let t: f64 = it
            .next()
            .ok_or_else(|| Error::config("snapshots csv: missing t"))?
            .parse()
            .map_err(parse_err)?;
        let n: i64 = it
            .next()
            .ok_or_else(|| Error::config("snapshots csv: missing n"))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::config(format!("snapshots csv: {e}")))?;
        let v: f64 = it
            .next()
            .ok_or_else(|| Error::config("snapshots csv: missing F"))?
            .parse()
            .map_err(parse_err)?;
        match snapshots.last_mut() {
            Some(s) if (s.t - t).abs() < 1e-12 => {
                s.values.push(v);
            }
            _ => snapshots.push(Snapshot { t, n_lo: n, values: vec![v] }),
        }
    }
    if snapshots.is_empty() {
        return Err(Error::config("snapshots csv: no rows"));
    }
    let last = snapshots.last().unwrap();
    let final_state = LatticeState::from_parts(
        last.t,
        last.n_lo,
        last.values.clone(),
        meta.alpha,
        meta.beta,
        meta.monotone,
    );
    Ok(RunRecord { meta, snapshots, final_state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::linear_2my;
    use crate::lattice::{run_lattice, InitialData, SnapshotPlan};

    #[test]
    fn snapshot_csv_round_trip() {
        let phi = linear_2my();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            5.0,
            0.1,
            &SnapshotPlan::Times(vec![2.0, 5.0]),
            (-20, 20),
        )
        .unwrap();
        let csv = lattice_snapshots_csv(&rec);
        let back = lattice_record_from_csv(&csv, rec.meta.clone()).unwrap();
        assert_eq!(back.snapshots.len(), rec.snapshots.len());
        for (a, b) in back.snapshots.iter().zip(&rec.snapshots) {
            assert_eq!(a.n_lo, b.n_lo);
            assert_eq!(a.values.len(), b.values.len());
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.to_bits(), y.to_bits(), "lossless float round trip");
            }
        }
    }

    #[test]
    fn csv_formatting_is_stable() {
        let a = csv_from_rows("x,y", &[vec![1.0, 2.5], vec![0.1, -3.0]]);
        let b = csv_from_rows("x,y", &[vec![1.0, 2.5], vec![0.1, -3.0]]);
        assert_eq!(a, b);
        assert!(a.starts_with("x,y\n1.00000000000000000e0,2.50000000000000000e0\n"));
    }
}
