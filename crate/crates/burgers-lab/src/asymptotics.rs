//! Long-time front asymptotics: the implicit shift functional defined by a
//! potential-weighted balance up to the front window, its logarithmic growth
//! law in the degenerate case, the pointwise rate diagnostic, a-priori
//! front-flatness checks, and the conserved balance offsets that pin the
//! limiting translation for summable data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::{FluxFunction, PhiTable};
use crate::lattice::{LatticeState, RunRecord};
use crate::numerics::{brent, expand_bracket, linear_fit_ln, loglog_trend_slope};
use crate::pde::GridState;
use crate::wavetrain::WaveTrainProfile;

/// Time series of the front shift for one window coefficient.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftTrace {
    /// Window coefficient `A` in `N(t) = floor(C t + A sqrt(t))`.
    pub a_window: f64,
    pub times: Vec<f64>,
    pub d_values: Vec<f64>,
}

impl ShiftTrace {
    /// Centered numeric derivative with at least `spacing` samples on each
    /// side (wide stencils suppress the root-solver noise in the trace).
    pub fn derivative(&self, spacing: usize) -> Vec<(f64, f64)> {
        let s = spacing.max(1);
        let n = self.times.len();
        let mut out = Vec::new();
        for i in s..n.saturating_sub(s) {
            let dt = self.times[i + s] - self.times[i - s];
            if dt > 0.0 {
                out.push((self.times[i], (self.d_values[i + s] - self.d_values[i - s]) / dt));
            }
        }
        out
    }

    /// Largest jump between consecutive shift samples relative to the median
    /// jump; a smooth trace stays well below 10.
    pub fn max_jump_over_median(&self) -> f64 {
        let mut jumps: Vec<f64> =
            self.d_values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        if jumps.len() < 3 {
            return 0.0;
        }
        jumps.sort_by(f64::total_cmp);
        let median = jumps[jumps.len() / 2];
        if median == 0.0 {
            return 0.0;
        }
        jumps.last().unwrap() / median
    }
}

/// Least-squares fit `d(t) ~ gamma_hat ln t + const_hat`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogFit {
    pub gamma_hat: f64,
    pub const_hat: f64,
    pub window: (f64, f64),
    pub rms: f64,
    pub samples: usize,
}

/// The balance residual whose root in `d` defines the front shift: potential
/// differences between the solution and the shifted profile, summed up to the
/// front window plus the fractional-cell correction.
fn shift_balance(
    state: &LatticeState,
    profile: &WaveTrainProfile,
    table: &PhiTable,
    a_window: f64,
    d: f64,
) -> f64 {
    let c = profile.speed;
    let t = state.t;
    let edge = c * t + a_window * t.sqrt();
    let n_cap = edge.floor() as i64;
    let kappa = edge - n_cap as f64;

    let mut sum = 0.0;
    let mut tiny_streak = 0;
    let k_floor = state.n_lo - 10_000;
    let mut k = n_cap;
    while k >= k_floor {
        let term = table.eval(state.get(k)) - table.eval(profile.eval(k as f64 - c * t + d));
        sum += term;
        if (k as f64) <= c * t && term.abs() < 1e-14 {
            tiny_streak += 1;
            if tiny_streak >= 5 {
                break;
            }
        } else {
            tiny_streak = 0;
        }
        k -= 1;
    }
    let frac = table.eval(state.get(n_cap + 1))
        - table.eval(profile.eval((n_cap + 1) as f64 - c * t + d));
    sum + kappa * frac
}

/// Front shift of a monotone state: the unique root `d` of the
/// potential-weighted balance. Requires the window coefficient `A > 2 sqrt C`.
pub fn front_shift(
    state: &LatticeState,
    profile: &WaveTrainProfile,
    table: &PhiTable,
    a_window: f64,
) -> Result<f64> {
    let c = profile.speed;
    if !(a_window > 2.0 * c.sqrt()) {
        return Err(Error::config(format!(
            "front_shift: window coefficient {a_window} must exceed 2 sqrt(C) = {}",
            2.0 * c.sqrt()
        )));
    }
    if !state.monotone_expected() {
        return Err(Error::config("front_shift: state is not monotone"));
    }
    let f = |d: f64| shift_balance(state, profile, table, a_window, d);
    let (a, b) = expand_bracket(&f, -2.0, 2.0, -1e4, 1e4)?;
    if a == b {
        return Ok(a);
    }
    brent(f, a, b, 1e-11)
}

/// Front-shift series over the snapshots of a run with `t >= t_min`.
pub fn shift_trace(
    record: &RunRecord,
    profile: &WaveTrainProfile,
    phi: &FluxFunction,
    a_window: f64,
    t_min: f64,
) -> Result<ShiftTrace> {
    let table = PhiTable::new(phi)?;
    let mut times = Vec::new();
    let mut d_values = Vec::new();
    for (i, s) in record.snapshots.iter().enumerate() {
        if s.t < t_min || s.t <= 0.0 {
            continue;
        }
        let st = record.state_at(i);
        let d = front_shift(&st, profile, &table, a_window)?;
        times.push(s.t);
        d_values.push(d);
    }
    if times.is_empty() {
        return Err(Error::config("shift_trace: no snapshots past t_min"));
    }
    Ok(ShiftTrace { a_window, times, d_values })
}

/// Fit the logarithmic law over the window (default `[t_end/10, t_end]`).
/// Needs at least 50 samples spanning a decade.
pub fn fit_log_shift(trace: &ShiftTrace, window: Option<(f64, f64)>) -> Result<LogFit> {
    let t_end = *trace.times.last().ok_or_else(|| Error::config("fit_log_shift: empty trace"))?;
    let (lo, hi) = window.unwrap_or((t_end / 10.0, t_end));
    let mut ts = Vec::new();
    let mut ds = Vec::new();
    for (t, d) in trace.times.iter().zip(&trace.d_values) {
        if *t >= lo && *t <= hi {
            ts.push(*t);
            ds.push(*d);
        }
    }
    if ts.len() < 50 {
        return Err(Error::config(format!(
            "fit_log_shift: {} samples in the window, need at least 50",
            ts.len()
        )));
    }
    let span = ts.last().unwrap() / ts.first().unwrap();
    if span < 10.0 {
        return Err(Error::config(format!(
            "fit_log_shift: window spans a factor {span:.2}, need a decade"
        )));
    }
    let (gamma_hat, const_hat, rms) = linear_fit_ln(&ts, &ds);
    Ok(LogFit { gamma_hat, const_hat, window: (lo, hi), rms, samples: ts.len() })
}

/// One point of the shift-rate diagnostic: the numeric `d'(t)` against the
/// closed-form combination of front values.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagnosticPoint {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Closed-form side of the rate diagnostic at one state: front-cell
/// differences against the shifted profile plus the window drift and the
/// quadratic tail terms.
pub fn shift_rate_rhs(
    state: &LatticeState,
    profile: &WaveTrainProfile,
    phi: &FluxFunction,
    a_window: f64,
    d: f64,
) -> f64 {
    let c = profile.speed;
    let t = state.t;
    let edge = c * t + a_window * t.sqrt();
    let n_cap = edge.floor() as i64;
    let kappa = edge - n_cap as f64;
    let f0 = state.get(n_cap);
    let f1 = state.get(n_cap + 1);
    let w0 = profile.eval(n_cap as f64 - c * t + d);
    let w1 = profile.eval((n_cap + 1) as f64 - c * t + d);
    let dp1 = phi.deriv(1.0);
    let sq = t.sqrt();
    c * (1.0 - kappa) * (f1 - f0) - c * (1.0 - kappa) * (w1 - w0)
        + a_window * (1.0 - w1) / (2.0 * sq)
        + 0.5 * dp1 * (1.0 - w1) * (1.0 - w1)
        - (a_window * (1.0 - f1) / (2.0 * sq) + 0.5 * dp1 * (1.0 - f1) * (1.0 - f1))
}

/// Compare the numeric shift rate with its closed-form expression along a
/// trace. Valid in the right-degenerate setting for `t >= A^2`.
pub fn shift_rate_diagnostic(
    record: &RunRecord,
    trace: &ShiftTrace,
    profile: &WaveTrainProfile,
    phi: &FluxFunction,
    spacing: usize,
) -> Result<Vec<DiagnosticPoint>> {
    let c = profile.speed;
    if (phi.eval(1.0) - c).abs() > 1e-9 {
        return Err(Error::config(
            "shift_rate_diagnostic: needs the right-degenerate setting phi(1) = C",
        ));
    }
    let mut out = Vec::new();
    for (t, lhs) in trace.derivative(spacing) {
        if t < trace.a_window * trace.a_window {
            continue;
        }
        let idx = record
            .nearest_snapshot(t)
            .ok_or_else(|| Error::config("shift_rate_diagnostic: record has no snapshots"))?;
        let state = record.state_at(idx);
        if (state.t - t).abs() > 1e-6 * t.max(1.0) {
            continue;
        }
        let ti = trace.times.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
        let d = trace.d_values[ti];
        let rhs = shift_rate_rhs(&state, profile, phi, trace.a_window, d);
        out.push(DiagnosticPoint { t, lhs, rhs, gap: lhs - rhs });
    }
    if out.is_empty() {
        return Err(Error::config("shift_rate_diagnostic: no usable trace points"));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Front-flatness (a priori difference) checks
// ---------------------------------------------------------------------------

/// Which field plays the small solution near the front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrontField {
    /// The solution itself (data decaying to zero).
    Value,
    /// The gap to the upper level, `beta - F` (shock data near the front).
    GapToUpper,
}

impl FrontField {
    fn eval(&self, f: f64, beta: f64) -> f64 {
        match self {
            FrontField::Value => f,
            FrontField::GapToUpper => beta - f,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrontRegion {
    pub a1: f64,
    pub a2: f64,
    /// Widens the region to `a2 + sigma0 sqrt(C t)`; zero keeps it fixed.
    pub sigma0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontFlatnessReport {
    pub gamma_used: f64,
    pub gamma_measured: f64,
    pub sup_normalized: f64,
    pub per_time: Vec<(f64, f64)>,
    pub trend_slope: f64,
    pub min_difference: f64,
    /// `(n, t, |field|)` entries where the smallness hypothesis failed.
    pub hypothesis_violations: Vec<(i64, f64, f64)>,
}

impl FrontFlatnessReport {
    pub fn aborted(&self) -> bool {
        !self.hypothesis_violations.is_empty()
    }
}

fn flatness_check(
    record: &RunRecord,
    region: &FrontRegion,
    gamma: Option<f64>,
    field: FrontField,
    c_front: f64,
    t_min: f64,
    xbar_weighted: bool,
) -> Result<FrontFlatnessReport> {
    if !(region.a1 > 0.0 && region.a1 < region.a2) || !(c_front > 0.0) {
        return Err(Error::config("front flatness: bad region or speed"));
    }
    let beta = record.meta.beta;
    let snaps: Vec<usize> = (0..record.snapshots.len())
        .filter(|&i| record.snapshots[i].t >= t_min && record.snapshots[i].t > 0.0)
        .collect();
    if snaps.is_empty() {
        return Err(Error::config("front flatness: no snapshots past t_min"));
    }
    // pass 1: measure the smallest valid gamma over the region
    let mut gamma_measured = 0.0f64;
    for &i in &snaps {
        let s = &record.snapshots[i];
        let sq = (c_front * s.t).sqrt();
        let hi_edge = region.a2 + region.sigma0 * sq;
        let mut seen = false;
        for (j, &v) in s.values.iter().enumerate() {
            let n = s.n_lo + j as i64;
            let xbar = (n as f64 - c_front * s.t) / sq;
            if xbar <= region.a1 || xbar >= hi_edge {
                continue;
            }
            seen = true;
            let u = field.eval(v, beta).abs();
            let cap = if xbar_weighted { u * sq / xbar } else { u * sq };
            gamma_measured = gamma_measured.max(cap);
        }
        if !seen {
            return Err(Error::config(format!(
                "front flatness: region empty at t = {}",
                s.t
            )));
        }
    }
    let gamma_used = gamma.unwrap_or(gamma_measured);
    let mut violations = Vec::new();
    let mut per_time = Vec::new();
    let mut sup_normalized = 0.0f64;
    let mut min_difference = f64::INFINITY;
    for &i in &snaps {
        let s = &record.snapshots[i];
        let t = s.t;
        let sq = (c_front * t).sqrt();
        let hi_edge = region.a2 + region.sigma0 * sq;
        let mut sup_t = 0.0f64;
        for (j, &v) in s.values.iter().enumerate() {
            let n = s.n_lo + j as i64;
            let xbar = (n as f64 - c_front * t) / sq;
            if xbar <= region.a1 || xbar >= hi_edge {
                continue;
            }
            let u = field.eval(v, beta).abs();
            let bound = if xbar_weighted { gamma_used * xbar / sq } else { gamma_used / sq };
            if u > bound * (1.0 + 1e-12) {
                violations.push((n, t, u));
                continue;
            }
            let df = if j == 0 { 0.0 } else { v - s.values[j - 1] };
            min_difference = min_difference.min(df);
            let norm = if xbar_weighted {
                df * c_front * t / (gamma_used * xbar)
            } else {
                df * c_front * t / gamma_used
            };
            sup_t = sup_t.max(norm);
        }
        per_time.push((t, sup_t));
        sup_normalized = sup_normalized.max(sup_t);
    }
    if !violations.is_empty() {
        return Ok(FrontFlatnessReport {
            gamma_used,
            gamma_measured,
            sup_normalized: f64::NAN,
            per_time: vec![],
            trend_slope: f64::NAN,
            min_difference,
            hypothesis_violations: violations,
        });
    }
    let ts: Vec<f64> = per_time.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = per_time.iter().map(|p| p.1).collect();
    Ok(FrontFlatnessReport {
        gamma_used,
        gamma_measured,
        sup_normalized,
        per_time,
        trend_slope: loglog_trend_slope(&ts, &vs),
        min_difference,
        hypothesis_violations: violations,
    })
}

/// Similarity-weighted front-flatness check: under the hypothesis
/// `|u| <= Gamma xbar / sqrt(C t)` on the region, the lattice difference obeys
/// `0 <= dF <= B Gamma xbar / (C t)`; the report carries the realized `B` and
/// its growth trend.
pub fn difference_decay_check(
    record: &RunRecord,
    region: &FrontRegion,
    gamma: Option<f64>,
    field: FrontField,
    c_front: f64,
    t_min: f64,
) -> Result<FrontFlatnessReport> {
    flatness_check(record, region, gamma, field, c_front, t_min, true)
}

/// Uniform variant: hypothesis `|u| <= Gamma / sqrt(C t)` and normalization
/// `dF C t / Gamma`. In strict mode the effective flux slope at the small
/// level must be nonnegative.
#[allow(clippy::too_many_arguments)]
pub fn difference_decay_check_uniform(
    record: &RunRecord,
    region: &FrontRegion,
    gamma: Option<f64>,
    field: FrontField,
    c_front: f64,
    t_min: f64,
    strict: bool,
    phi: &FluxFunction,
) -> Result<FrontFlatnessReport> {
    if strict {
        let eff_slope = match field {
            FrontField::Value => phi.deriv(0.0),
            FrontField::GapToUpper => -phi.deriv(1.0),
        };
        if eff_slope < 0.0 {
            return Err(Error::config(format!(
                "uniform front flatness (strict): effective flux slope {eff_slope} at the small \
                 level is negative; rerun with strict = false for an exploratory check"
            )));
        }
    }
    flatness_check(record, region, gamma, field, c_front, t_min, false)
}

// ---------------------------------------------------------------------------
// Balance offsets for summable data
// ---------------------------------------------------------------------------

/// Lattice offset: the root `D` of
/// `sum_n [Phi(profile(n - C t + D)) - Phi(F(n, t))] = 0`.
/// Summable (exponential-tail) profiles only; an algebraic tail makes the sum
/// diverge and is reported as a configuration error.
pub fn balance_offset_lattice(
    state: &LatticeState,
    profile: &WaveTrainProfile,
    table: &PhiTable,
) -> Result<f64> {
    let c = profile.speed;
    let t = state.t;
    let residual = |d: f64| -> (f64, bool) {
        let mut sum = 0.0;
        let mut cauchy = true;
        // expand right until the profile term is negligible
        let mut k = state.n_hi();
        let mut steps = 0;
        loop {
            let term = table.eval(profile.eval(k as f64 - c * t + d)) - table.eval(state.get(k));
            sum += term;
            if term.abs() < 1e-14 {
                break;
            }
            k += 1;
            steps += 1;
            if steps > 200_000 {
                cauchy = false;
                break;
            }
        }
        let mut streak = 0;
        let mut k = state.n_hi();
        while k > state.n_lo - 10_000 {
            k -= 1;
            let term = table.eval(profile.eval(k as f64 - c * t + d)) - table.eval(state.get(k));
            sum += term;
            // terms also vanish near the right edge; only the left tail ends the scan
            if (k as f64) < c * t && term.abs() < 1e-14 {
                streak += 1;
                if streak >= 5 {
                    break;
                }
            } else {
                streak = 0;
            }
        }
        (sum, cauchy)
    };
    let probe = residual(0.0);
    if !probe.1 {
        return Err(Error::config(
            "balance_offset_lattice: partial sums are not Cauchy (non-summable profile tail)",
        ));
    }
    let f = |d: f64| residual(d).0;
    let (a, b) = expand_bracket(&f, -2.0, 2.0, -1e4, 1e4)?;
    if a == b {
        return Ok(a);
    }
    brent(f, a, b, 1e-10)
}

/// Continuous offset: the root `d` of
/// `int (f(x, t) - profile(x - C t + d)) dx = 0`, trapezoid on the grid with
/// analytic exponential tail corrections beyond it.
pub fn balance_offset_continuous(state: &GridState, profile: &WaveTrainProfile) -> Result<f64> {
    let c = profile.speed;
    let t = state.t;
    let (mu, amp_r) = match profile.right_tail {
        crate::wavetrain::RightTail::Exponential { rate, amplitude } => (rate, amplitude),
        crate::wavetrain::RightTail::Algebraic { .. } => {
            return Err(Error::config(
                "balance_offset_continuous: algebraic profile tail is not integrable",
            ))
        }
    };
    let f = |d: f64| -> f64 {
        let mut sum = 0.0;
        let n = state.values.len();
        for (i, &v) in state.values.iter().enumerate() {
            let x = state.x_at(i);
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            sum += w * (v - profile.eval(x - c * t + d)) * state.dx;
        }
        // tails: f equals the fills, the profile decays exponentially
        let xi_lo = state.x_lo - c * t + d;
        let left = -(profile.left_tail.amplitude / profile.left_tail.rate)
            * (profile.left_tail.rate * xi_lo).exp();
        let xi_hi = state.x_hi() - c * t + d;
        let right = (amp_r / mu) * (-mu * xi_hi).exp();
        sum + left + right
    };
    let (a, b) = expand_bracket(&f, -2.0, 2.0, -1e4, 1e4)?;
    if a == b {
        return Ok(a);
    }
    brent(f, a, b, 1e-9)
}

/// Windowed mass-balance shift for PDE runs: the root `d` of
/// `int_{-inf}^{C t + A sqrt t} (f - profile(x - C t + d)) dx = 0`.
pub fn front_shift_continuous(
    state: &GridState,
    profile: &WaveTrainProfile,
    a_window: f64,
) -> Result<f64> {
    let c = profile.speed;
    if !(a_window > 2.0 * c.sqrt()) {
        return Err(Error::config("front_shift_continuous: window coefficient too small"));
    }
    let t = state.t;
    let cap = c * t + a_window * t.sqrt();
    let f = |d: f64| -> f64 {
        let mut sum = 0.0;
        let mut x = state.x_lo;
        while x <= cap.min(state.x_hi()) {
            sum += (state.eval(x) - profile.eval(x - c * t + d)) * state.dx;
            x += state.dx;
        }
        let xi_lo = state.x_lo - c * t + d;
        sum - (profile.left_tail.amplitude / profile.left_tail.rate)
            * (profile.left_tail.rate * xi_lo).exp()
    };
    let (a, b) = expand_bracket(&f, -2.0, 2.0, -1e4, 1e4)?;
    if a == b {
        return Ok(a);
    }
    brent(f, a, b, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{degenerate_quadratic, linear_2my, wave_speed, Model, PhiTable};
    use crate::lattice::{init_lattice, run_lattice, InitialData, SnapshotPlan};
    use crate::wavetrain::{solve_wavetrain_continuous, solve_wavetrain_lattice};
    use std::sync::Arc;

    fn profile_2my() -> Arc<WaveTrainProfile> {
        Arc::new(solve_wavetrain_lattice(&linear_2my(), (0.0, 1.0)).unwrap())
    }

    #[test]
    fn front_shift_recovers_exact_translation() {
        let phi = linear_2my();
        let p = profile_2my();
        let table = PhiTable::new(&phi).unwrap();
        let c = p.speed;
        let st = init_lattice(
            &InitialData::WaveTrainShifted { profile: p.clone(), d: 1.7 },
            (-40, 40),
        )
        .unwrap();
        for a_window in [3.0 * c.sqrt(), 4.0 * c.sqrt()] {
            let d = front_shift(&st, &p, &table, a_window).unwrap();
            assert!((d - 1.7).abs() < 1e-8, "A={a_window}: d={d}");
        }
        // window coefficient below 2 sqrt(C) is rejected
        assert!(front_shift(&st, &p, &table, 1.0).is_err());
    }

    #[test]
    fn shift_balance_strictly_increasing_in_d() {
        let phi = linear_2my();
        let p = profile_2my();
        let table = PhiTable::new(&phi).unwrap();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            20.0,
            0.1,
            &SnapshotPlan::Times(vec![20.0]),
            (-40, 60),
        )
        .unwrap();
        let st = rec.state_at(0);
        let a_window = 4.0;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=10 {
            let d = -3.0 + 0.6 * i as f64;
            let s = shift_balance(&st, &p, &table, a_window, d);
            assert!(s > prev, "balance not increasing at d = {d}");
            prev = s;
        }
    }

    #[test]
    fn nondegenerate_trace_is_smooth_and_flat() {
        let phi = linear_2my();
        let p = profile_2my();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            300.0,
            0.1,
            &SnapshotPlan::LogSpaced { t_min: 10.0, count: 60 },
            (-40, 80),
        )
        .unwrap();
        let c = p.speed;
        let trace = shift_trace(&rec, &p, &phi, 4.0 * c.sqrt(), 10.0).unwrap();
        assert!(trace.times.len() >= 55);
        // the shift settles: late drift much smaller than early drift
        let n = trace.d_values.len();
        let early = (trace.d_values[5] - trace.d_values[0]).abs();
        let late = (trace.d_values[n - 1] - trace.d_values[n - 6]).abs();
        assert!(late < early, "late {late} vs early {early}");
    }

    #[test]
    fn window_coefficient_dependence_fades() {
        let phi = linear_2my();
        let p = profile_2my();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            400.0,
            0.1,
            &SnapshotPlan::Times(vec![40.0, 400.0]),
            (-40, 90),
        )
        .unwrap();
        let table = PhiTable::new(&phi).unwrap();
        let c = p.speed;
        let gap_at = |idx: usize| {
            let st = rec.state_at(idx);
            let d1 = front_shift(&st, &p, &table, 3.0 * c.sqrt()).unwrap();
            let d2 = front_shift(&st, &p, &table, 4.0 * c.sqrt()).unwrap();
            (d1 - d2).abs()
        };
        let early = gap_at(0);
        let late = gap_at(1);
        assert!(late < early, "window dependence must decay: {late} vs {early}");
    }

    #[test]
    fn fit_log_shift_exact_synthetic() {
        let times: Vec<f64> = (0..80).map(|i| 10.0 * 1.09f64.powi(i)).collect();
        let d_values: Vec<f64> = times.iter().map(|t| 1.0 * t.ln() + 2.7).collect();
        let t_end = *times.last().unwrap();
        let trace = ShiftTrace { a_window: 4.0, times, d_values };
        let fit = fit_log_shift(&trace, Some((10.0, t_end))).unwrap();
        assert!((fit.gamma_hat - 1.0).abs() < 1e-10);
        assert!((fit.const_hat - 2.7).abs() < 1e-10);
        assert!(fit.rms < 1e-12);
        // too-short window is rejected
        let short = ShiftTrace {
            a_window: 4.0,
            times: (0..60).map(|i| 100.0 + i as f64).collect(),
            d_values: vec![0.0; 60],
        };
        assert!(fit_log_shift(&short, None).is_err());
    }

    #[test]
    fn diagnostic_vanishes_on_exact_profile() {
        let phi = degenerate_quadratic();
        let p = solve_wavetrain_lattice(&phi, (0.0, 1.0)).unwrap();
        let table = PhiTable::new(&phi).unwrap();
        let c = p.speed;
        let a_window = 4.0 * c.sqrt();
        // synthetic snapshots of the exact traveling wave
        let mut times = Vec::new();
        let mut d_values = Vec::new();
        let mut snaps = Vec::new();
        for k in 0..30 {
            let t = 20.0 + k as f64;
            let n_lo = (c * t) as i64 - 80;
            let n_hi = (c * t + a_window * t.sqrt()) as i64 + 40;
            let values: Vec<f64> = (n_lo..=n_hi).map(|n| p.eval(n as f64 - c * t)).collect();
            let st = LatticeState::from_parts(t, n_lo, values.clone(), 0.0, 1.0, true);
            let d = front_shift(&st, &p, &table, a_window).unwrap();
            times.push(t);
            d_values.push(d);
            snaps.push(crate::lattice::Snapshot { t, n_lo, values });
        }
        assert!(d_values.iter().all(|d| d.abs() < 1e-8), "shift of the pure wave is zero");
        let final_state = {
            let t = 49.0;
            let n_lo = (c * t) as i64 - 80;
            let values: Vec<f64> =
                (n_lo..=n_lo + 160).map(|n| p.eval(n as f64 - c * t)).collect();
            LatticeState::from_parts(t, n_lo, values, 0.0, 1.0, true)
        };
        let rec = RunRecord {
            meta: crate::lattice::RunMeta {
                flux_label: phi.label().to_string(),
                alpha: 0.0,
                beta: 1.0,
                t0: 20.0,
                t_end: 49.0,
                dt: 0.1,
                monotone: true,
                window_history: vec![],
            },
            snapshots: snaps,
            final_state,
        };
        let trace = ShiftTrace { a_window, times, d_values };
        let points = shift_rate_diagnostic(&rec, &trace, &p, &phi, 3).unwrap();
        for pt in points {
            assert!(pt.lhs.abs() < 1e-8, "lhs {:.3e}", pt.lhs);
            assert!(pt.rhs.abs() < 1e-10, "rhs {:.3e}", pt.rhs);
        }
    }

    #[test]
    fn diagnostic_on_degenerate_run() {
        let phi = degenerate_quadratic();
        let p = solve_wavetrain_lattice(&phi, (0.0, 1.0)).unwrap();
        let c = p.speed;
        let times: Vec<f64> = (0..40).map(|i| 300.0 + 10.0 * i as f64).collect();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            690.0,
            0.1,
            &SnapshotPlan::Times(times),
            (-50, 100),
        )
        .unwrap();
        let a_window = 4.0 * c.sqrt();
        let trace = shift_trace(&rec, &p, &phi, a_window, 0.0).unwrap();
        let points = shift_rate_diagnostic(&rec, &trace, &p, &phi, 5).unwrap();
        assert!(points.len() >= 20);
        // the scaled gap stays bounded over the window
        for pt in &points {
            assert!((pt.gap * pt.t).abs() < 2.0, "gap*t = {} at t = {}", pt.gap * pt.t, pt.t);
        }
        // widening the front window drives the closed form toward the
        // theoretical rate Gamma0 / t (endpoint comparison; the middle sits
        // inside the O(1/sqrt(t)) noise of the expansion)
        let table = PhiTable::new(&phi).unwrap();
        let rec2 = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            2000.0,
            0.1,
            &SnapshotPlan::Times(vec![2000.0]),
            (-50, 100),
        )
        .unwrap();
        let st = rec2.state_at(0);
        let gamma0 = 1.0; // C/(2 phi'(1)) for this flux
        let theory = gamma0 / st.t;
        let err_at = |a: f64| {
            let d = front_shift(&st, &p, &table, a).unwrap();
            (shift_rate_rhs(&st, &p, &phi, a, d) - theory).abs()
        };
        let narrow = err_at(3.0 * c.sqrt());
        let wide = err_at(6.0 * c.sqrt());
        assert!(wide < narrow, "rhs error must shrink with A: {wide} vs {narrow}");
    }

    #[test]
    fn pde_front_shift_settles_nondegenerate() {
        use crate::pde::{run_pde, PdeInitialData};
        let phi = linear_2my();
        let p = solve_wavetrain_continuous(&phi, 1.0, (0.0, 1.0)).unwrap();
        let c = p.speed;
        let rec = run_pde(
            &PdeInitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            (-30.0, 1.5 * 120.0 + 60.0),
            0.1,
            1.0,
            120.0,
            None,
            &[30.0, 60.0, 120.0],
        )
        .unwrap();
        let mut shifts = Vec::new();
        for i in 0..rec.snapshots.len() {
            let st = rec.state_at(i);
            shifts.push(front_shift_continuous(&st, &p, 4.0 * c.sqrt()).unwrap());
        }
        // the continuous shift settles: consecutive changes shrink
        let d1 = (shifts[1] - shifts[0]).abs();
        let d2 = (shifts[2] - shifts[1]).abs();
        assert!(d2 < d1, "shift drift must shrink: {d2} vs {d1} (shifts {shifts:?})");
        assert!(d2 < 0.05, "late drift {d2}");
    }

    #[test]
    fn diagnostic_needs_degenerate_flux() {
        let phi = linear_2my();
        let p = profile_2my();
        let trace = ShiftTrace { a_window: 4.0, times: vec![20.0], d_values: vec![0.0] };
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            1.0,
            0.1,
            &SnapshotPlan::None,
            (-20, 20),
        )
        .unwrap();
        assert!(shift_rate_diagnostic(&rec, &trace, &p, &phi, 1).is_err());
    }

    fn synthetic_record(t: f64, c: f64, values_at: impl Fn(f64) -> f64) -> RunRecord {
        let n_lo = (c * t) as i64 - 20;
        let n_hi = (c * t + 4.0 * (c * t).sqrt()) as i64 + 20;
        let values: Vec<f64> =
            (n_lo..=n_hi).map(|n| values_at((n as f64 - c * t) / (c * t).sqrt())).collect();
        let final_state = LatticeState::from_parts(t, n_lo, values.clone(), 0.0, 1.0, false);
        RunRecord {
            meta: crate::lattice::RunMeta {
                flux_label: "synthetic".into(),
                alpha: 0.0,
                beta: 1.0,
                t0: t,
                t_end: t,
                dt: 0.1,
                monotone: false,
                window_history: vec![],
            },
            snapshots: vec![crate::lattice::Snapshot { t, n_lo, values }],
            final_state,
        }
    }

    #[test]
    fn flatness_normalization_arithmetic() {
        let c = 1.0f64;
        let t = 10_000.0f64;
        let gamma = 0.5;
        // dF = 2 Gamma xbar / (C t) exactly: F = Gamma (xbar^2 - 1) / sqrt(C t)
        let sq = (c * t).sqrt();
        let rec = synthetic_record(t, c, |xbar| gamma * (xbar * xbar - 1.0) / sq);
        let region = FrontRegion { a1: 1.0, a2: 1.6, sigma0: 0.0 };
        let rep =
            difference_decay_check(&rec, &region, Some(gamma), FrontField::Value, c, 1.0).unwrap();
        assert!(!rep.aborted(), "violations: {:?}", &rep.hypothesis_violations);
        assert!((rep.sup_normalized - 2.0).abs() < 0.01, "{}", rep.sup_normalized);

        // uniform variant: dF = Gamma / (C t) exactly
        let rec2 = synthetic_record(t, c, |xbar| gamma * (xbar - 1.0) / sq);
        let region2 = FrontRegion { a1: 1.0, a2: 2.0, sigma0: 0.0 };
        let rep2 = difference_decay_check_uniform(
            &rec2,
            &region2,
            Some(gamma),
            FrontField::Value,
            c,
            1.0,
            false,
            &linear_2my(),
        )
        .unwrap();
        assert!((rep2.sup_normalized - 1.0).abs() < 0.01, "{}", rep2.sup_normalized);
    }

    #[test]
    fn flatness_zero_field() {
        // constant state at the upper level: gap field is identically zero
        let rec = synthetic_record(100.0, 1.0, |_| 1.0);
        let region = FrontRegion { a1: 1.0, a2: 3.0, sigma0: 0.0 };
        let rep =
            difference_decay_check(&rec, &region, Some(1.0), FrontField::GapToUpper, 1.0, 1.0)
                .unwrap();
        assert!(!rep.aborted());
        assert_eq!(rep.sup_normalized, 0.0);
        // an order-one field aborts with a hypothesis report
        let bad = synthetic_record(100.0, 1.0, |_| 0.42);
        let rep2 =
            difference_decay_check(&bad, &region, Some(1.0), FrontField::Value, 1.0, 1.0).unwrap();
        assert!(rep2.aborted());
    }

    #[test]
    fn strict_mode_gate() {
        let phi = linear_2my();
        let rec = synthetic_record(100.0, 1.0, |_| 1.0);
        let region = FrontRegion { a1: 1.0, a2: 3.0, sigma0: 0.0 };
        // phi'(0) = -1 < 0: strict Value mode must be rejected
        let err = difference_decay_check_uniform(
            &rec,
            &region,
            Some(1.0),
            FrontField::Value,
            1.0,
            1.0,
            true,
            &phi,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        // the gap field has effective slope -phi'(1) = 1 >= 0
        assert!(difference_decay_check_uniform(
            &rec,
            &region,
            Some(1.0),
            FrontField::GapToUpper,
            1.0,
            1.0,
            true,
            &phi,
        )
        .is_ok());
    }

    #[test]
    fn balance_offset_recovers_shift() {
        let phi = linear_2my();
        let p = profile_2my();
        let table = PhiTable::new(&phi).unwrap();
        let st = init_lattice(
            &InitialData::WaveTrainShifted { profile: p.clone(), d: 0.8 },
            (-40, 40),
        )
        .unwrap();
        let d0 = balance_offset_lattice(&st, &p, &table).unwrap();
        assert!((d0 - 0.8).abs() < 1e-8, "D0 = {d0}");
    }

    #[test]
    fn balance_offset_rejects_algebraic_tail() {
        let phi = degenerate_quadratic();
        let p = solve_wavetrain_lattice(&phi, (0.0, 1.0)).unwrap();
        let table = PhiTable::new(&phi).unwrap();
        let st = init_lattice(&InitialData::Step { alpha: 0.0, beta: 1.0 }, (-30, 30)).unwrap();
        let err = balance_offset_lattice(&st, &p, &table).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn balance_offset_drifts_slowly() {
        // solve at t = 0 from step data, then re-solve at t = 50
        let phi = linear_2my();
        let p = profile_2my();
        let table = PhiTable::new(&phi).unwrap();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            50.0,
            0.05,
            &SnapshotPlan::Times(vec![0.0, 50.0]),
            (-40, 50),
        )
        .unwrap();
        let d_initial = balance_offset_lattice(&rec.state_at(0), &p, &table).unwrap();
        let d_late = balance_offset_lattice(&rec.state_at(1), &p, &table).unwrap();
        assert!((d_initial - d_late).abs() <= 0.05, "offset drifted: {d_initial} -> {d_late}");
    }

    #[test]
    fn continuous_offset_recovers_shift() {
        let phi = linear_2my();
        let p = solve_wavetrain_continuous(&phi, 1.0, (0.0, 1.0)).unwrap();
        let n = 1801;
        let dx = 0.05;
        let x_lo = -45.0;
        let values: Vec<f64> = (0..n).map(|i| p.eval(x_lo + i as f64 * dx + 1.25)).collect();
        let st = GridState { t: 0.0, x_lo, dx, values, alpha: 0.0, beta: 1.0, epsilon: 1.0 };
        let d0 = balance_offset_continuous(&st, &p).unwrap();
        assert!((d0 - 1.25).abs() < 1e-8, "d0 = {d0}");
        let c = wave_speed(Model::Continuous, &phi).unwrap();
        let dw = front_shift_continuous(&st, &p, 4.0 * c.sqrt()).unwrap();
        assert!((dw - 1.25).abs() < 1e-6, "windowed d = {dw}");
    }
}
