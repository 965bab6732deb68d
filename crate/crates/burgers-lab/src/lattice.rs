//! Explicit time integration of the lattice equation
//! `dF(n)/dt = phi(F(n)) (F(n-1) - F(n))` on a moving integer window.
//!
//! The window tracks the shock: cells behind the front that have flattened
//! onto `alpha` are dropped (behind a guard band), cells ahead are appended
//! with the `beta` fill before the front can feel the edge. Monotonicity and
//! boundedness are checked after every step and violations are reported, not
//! clipped, so integrator defects cannot hide.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxFunction;
use crate::wavetrain::WaveTrainProfile;

/// Margin the window must maintain at both edges.
const EDGE_MARGIN: f64 = 1e-10;
/// Extend once an edge is within a factor 10 of violating the margin.
const EXTEND_AT: f64 = EDGE_MARGIN / 10.0;
/// Cells this close to `alpha` may be dropped behind the guard band.
const DROP_BELOW: f64 = 1e-14;
const GUARD_CELLS: usize = 128;
const EXTEND_CELLS: usize = 64;
/// Tolerance for boundedness and monotonicity invariants.
const INVARIANT_TOL: f64 = 1e-12;

/// Lattice solution values on a contiguous window `[n_lo, n_hi]`.
#[derive(Debug, Clone)]
pub struct LatticeState {
    pub t: f64,
    pub n_lo: i64,
    pub values: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    monotone_expected: bool,
}

impl LatticeState {
    pub fn n_hi(&self) -> i64 {
        self.n_lo + self.values.len() as i64 - 1
    }

    /// Solution value at site `n`, with boundary fills outside the window.
    pub fn get(&self, n: i64) -> f64 {
        if n < self.n_lo {
            self.alpha
        } else if n > self.n_hi() {
            self.beta
        } else {
            self.values[(n - self.n_lo) as usize]
        }
    }

    pub fn monotone_expected(&self) -> bool {
        self.monotone_expected
    }

    /// Construct a state directly (used by analysis code and tests); the
    /// invariants are the caller's responsibility until the next step checks
    /// them.
    pub fn from_parts(
        t: f64,
        n_lo: i64,
        values: Vec<f64>,
        alpha: f64,
        beta: f64,
        monotone_expected: bool,
    ) -> Self {
        Self { t, n_lo, values, alpha, beta, monotone_expected }
    }

    /// Bounds, window margins, and (when expected) monotonicity.
    pub fn check_invariants(&self) -> Result<()> {
        let (a, b) = (self.alpha, self.beta);
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::numeric(format!(
                    "lattice state at t = {}: non-finite value at n = {}",
                    self.t,
                    self.n_lo + i as i64
                )));
            }
            if v < a - INVARIANT_TOL || v > b + INVARIANT_TOL {
                return Err(Error::numeric(format!(
                    "lattice state at t = {}: F({}) = {v} outside [{a}, {b}]",
                    self.t,
                    self.n_lo + i as i64
                )));
            }
        }
        if self.monotone_expected {
            for i in 1..self.values.len() {
                if self.values[i] - self.values[i - 1] < -INVARIANT_TOL {
                    return Err(Error::numeric(format!(
                        "lattice state at t = {}: monotonicity violated at n = {}",
                        self.t,
                        self.n_lo + i as i64
                    )));
                }
            }
        }
        if self.values[0] - a >= EDGE_MARGIN {
            return Err(Error::numeric(format!(
                "lattice state at t = {}: left margin {:.3e} exceeds {EDGE_MARGIN:.0e}",
                self.t,
                self.values[0] - a
            )));
        }
        if b - *self.values.last().unwrap() >= EDGE_MARGIN {
            return Err(Error::numeric(format!(
                "lattice state at t = {}: right margin {:.3e} exceeds {EDGE_MARGIN:.0e}",
                self.t,
                b - self.values.last().unwrap()
            )));
        }
        Ok(())
    }
}

/// Cauchy data classes for the lattice run.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// `F = alpha` for `n <= 0`, `beta` for `n > 0`.
    Step { alpha: f64, beta: f64 },
    /// `F(n) = profile(n + d)`: the exact traveling wave shifted by `d`.
    WaveTrainShifted { profile: Arc<WaveTrainProfile>, d: f64 },
    /// Explicit table with boundary fills.
    Custom { n_lo: i64, values: Vec<f64>, alpha: f64, beta: f64, expect_monotone: bool },
}

impl InitialData {
    pub fn levels(&self) -> (f64, f64) {
        match self {
            InitialData::Step { alpha, beta } => (*alpha, *beta),
            InitialData::WaveTrainShifted { profile, .. } => profile.overfall,
            InitialData::Custom { alpha, beta, .. } => (*alpha, *beta),
        }
    }
}

/// Build the initial window. The hint is widened if the margins need more
/// room; data whose tails cannot reach the margins within a sane window (for
/// example an algebraically tailed profile, which is not summable against
/// `beta`) is rejected.
pub fn init_lattice(data: &InitialData, window_hint: (i64, i64)) -> Result<LatticeState> {
    let (alpha, beta) = data.levels();
    if !(alpha < beta) {
        return Err(Error::config("init_lattice: need alpha < beta"));
    }
    let (mut lo, mut hi) = window_hint;
    if lo >= hi {
        return Err(Error::config("init_lattice: empty window hint"));
    }
    match data {
        InitialData::Step { .. } => {
            lo = lo.min(-1);
            hi = hi.max(1);
            let values = (lo..=hi).map(|n| if n <= 0 { alpha } else { beta }).collect::<Vec<_>>();
            let state =
                LatticeState { t: 0.0, n_lo: lo, values, alpha, beta, monotone_expected: true };
            state.check_invariants()?;
            Ok(state)
        }
        InitialData::WaveTrainShifted { profile, d } => {
            const WIDEN_CAP: i64 = 10_000_000;
            let need = 0.5 * EDGE_MARGIN;
            let mut grown = 0i64;
            while profile.eval(lo as f64 + d) - alpha > need {
                lo -= EXTEND_CELLS as i64;
                grown += EXTEND_CELLS as i64;
                if grown > WIDEN_CAP {
                    return Err(Error::config(
                        "init_lattice: profile left tail cannot meet the window margin",
                    ));
                }
            }
            grown = 0;
            while beta - profile.eval(hi as f64 + d) > need {
                hi += EXTEND_CELLS as i64;
                grown += EXTEND_CELLS as i64;
                if grown > WIDEN_CAP {
                    return Err(Error::config(
                        "init_lattice: profile right tail cannot meet the window margin \
                         (algebraic tails are not summable initial data)",
                    ));
                }
            }
            let values = (lo..=hi).map(|n| profile.eval(n as f64 + d)).collect();
            let state =
                LatticeState { t: 0.0, n_lo: lo, values, alpha, beta, monotone_expected: true };
            state.check_invariants()?;
            Ok(state)
        }
        InitialData::Custom { n_lo, values, alpha, beta, expect_monotone } => {
            for (i, &v) in values.iter().enumerate() {
                if v < alpha - INVARIANT_TOL || v > beta + INVARIANT_TOL {
                    return Err(Error::config(format!(
                        "init_lattice: custom data F({}) = {v} outside [{alpha}, {beta}]",
                        n_lo + i as i64
                    )));
                }
            }
            if *expect_monotone {
                for i in 1..values.len() {
                    if values[i] - values[i - 1] < -INVARIANT_TOL {
                        return Err(Error::config(format!(
                            "init_lattice: custom data not monotone at n = {}",
                            n_lo + i as i64
                        )));
                    }
                }
            }
            // pad with exact fills to satisfy the margins
            let pad_lo = (*n_lo).min(window_hint.0);
            let pad_hi = (n_lo + values.len() as i64 - 1).max(window_hint.1);
            let mut padded = Vec::with_capacity((pad_hi - pad_lo + 1) as usize);
            for n in pad_lo..=pad_hi {
                if n < *n_lo {
                    padded.push(*alpha);
                } else if n >= n_lo + values.len() as i64 {
                    padded.push(*beta);
                } else {
                    padded.push(values[(n - n_lo) as usize]);
                }
            }
            let state = LatticeState {
                t: 0.0,
                n_lo: pad_lo,
                values: padded,
                alpha: *alpha,
                beta: *beta,
                monotone_expected: *expect_monotone,
            };
            state.check_invariants()?;
            Ok(state)
        }
    }
}

/// Fixed integrator step: `min(dt_max, 0.2 / max phi)`. The right-hand side
/// has Lipschitz constant of order `max phi`, so this keeps the explicit
/// fourth-order step well inside its stability region.
pub fn lattice_dt(phi: &FluxFunction, dt_max: f64) -> f64 {
    dt_max.min(0.2 / phi.max_on_unit())
}

fn rhs_into(phi: &FluxFunction, alpha: f64, values: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let mut left = alpha;
    for &v in values {
        out.push(phi.eval(v) * (left - v));
        left = v;
    }
}

/// Scratch buffers reused across steps of one run.
#[derive(Default)]
struct Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

fn rk4_step(state: &mut LatticeState, phi: &FluxFunction, dt: f64, s: &mut Scratch) {
    let n = state.values.len();
    let alpha = state.alpha;
    rhs_into(phi, alpha, &state.values, &mut s.k1);
    s.tmp.clear();
    s.tmp.extend((0..n).map(|i| state.values[i] + 0.5 * dt * s.k1[i]));
    rhs_into(phi, alpha, &s.tmp, &mut s.k2);
    s.tmp.clear();
    s.tmp.extend((0..n).map(|i| state.values[i] + 0.5 * dt * s.k2[i]));
    rhs_into(phi, alpha, &s.tmp, &mut s.k3);
    s.tmp.clear();
    s.tmp.extend((0..n).map(|i| state.values[i] + dt * s.k3[i]));
    rhs_into(phi, alpha, &s.tmp, &mut s.k4);
    for i in 0..n {
        state.values[i] += dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
    state.t += dt;
}

fn manage_window(state: &mut LatticeState) {
    // extend right before the front reaches the edge
    while state.beta - *state.values.last().unwrap() > EXTEND_AT
        && state.values.len() <= 4_000_000
    {
        state.values.extend(std::iter::repeat_n(state.beta, EXTEND_CELLS));
    }
    // drop flat cells behind the guard band
    let mut flat = 0;
    for &v in &state.values {
        if v - state.alpha < DROP_BELOW {
            flat += 1;
        } else {
            break;
        }
    }
    if flat > GUARD_CELLS + 256 {
        let drop = flat - GUARD_CELLS;
        state.values.drain(..drop);
        state.n_lo += drop as i64;
    }
}

/// Advance by one integrator step of size at most `dt_max`.
pub fn step_lattice(state: &mut LatticeState, phi: &FluxFunction, dt_max: f64) -> Result<()> {
    if !(dt_max > 1e-15) {
        return Err(Error::numeric("step_lattice: step size underflow"));
    }
    let dt = lattice_dt(phi, dt_max);
    let mut scratch = Scratch::default();
    rk4_step(state, phi, dt, &mut scratch);
    manage_window(state);
    state.check_invariants()
}

/// When snapshots are taken during a run.
#[derive(Debug, Clone)]
pub enum SnapshotPlan {
    None,
    Times(Vec<f64>),
    Uniform { dt: f64 },
    LogSpaced { t_min: f64, count: usize },
}

impl SnapshotPlan {
    fn resolve(&self, t0: f64, t_end: f64) -> Vec<f64> {
        let mut ts = match self {
            SnapshotPlan::None => vec![],
            SnapshotPlan::Times(v) => v.clone(),
            SnapshotPlan::Uniform { dt } => {
                let mut ts = vec![];
                let mut k = 1u64;
                loop {
                    let t = t0 + k as f64 * dt;
                    if t > t_end + 1e-9 {
                        break;
                    }
                    ts.push(t.min(t_end));
                    k += 1;
                }
                ts
            }
            SnapshotPlan::LogSpaced { t_min, count } => {
                let lo = t_min.max(t0.max(1e-9));
                let n = (*count).max(2);
                (0..n).map(|i| lo * (t_end / lo).powf(i as f64 / (n - 1) as f64)).collect()
            }
        };
        ts.retain(|&t| t >= t0 - 1e-12 && t <= t_end + 1e-12);
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        ts
    }
}

/// One stored state of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub n_lo: i64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSpan {
    pub t: f64,
    pub n_lo: i64,
    pub n_hi: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub flux_label: String,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub monotone: bool,
    pub window_history: Vec<WindowSpan>,
}

/// Snapshots plus metadata from one lattice run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub snapshots: Vec<Snapshot>,
    pub final_state: LatticeState,
}

impl RunRecord {
    /// Reconstruct a full state from snapshot `idx`.
    pub fn state_at(&self, idx: usize) -> LatticeState {
        let s = &self.snapshots[idx];
        LatticeState {
            t: s.t,
            n_lo: s.n_lo,
            values: s.values.clone(),
            alpha: self.meta.alpha,
            beta: self.meta.beta,
            monotone_expected: self.meta.monotone,
        }
    }

    /// Index of the snapshot closest to time `t`.
    pub fn nearest_snapshot(&self, t: f64) -> Option<usize> {
        if self.snapshots.is_empty() {
            return None;
        }
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, s) in self.snapshots.iter().enumerate() {
            let d = (s.t - t).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        Some(best)
    }
}

/// Batch driver: integrate from `t0` to `t_end`, recording snapshots at the
/// planned times. Deterministic for a fixed configuration.
pub fn run_lattice(
    data: &InitialData,
    phi: &FluxFunction,
    t0: f64,
    t_end: f64,
    dt_max: f64,
    plan: &SnapshotPlan,
    window_hint: (i64, i64),
) -> Result<RunRecord> {
    if t0 > t_end {
        return Err(Error::config("run_lattice: t0 must not exceed t_end"));
    }
    let mut state = init_lattice(data, window_hint)?;
    state.t = t0;
    let dt = lattice_dt(phi, dt_max);
    let times = plan.resolve(t0, t_end);
    let mut snapshots = Vec::with_capacity(times.len());
    let mut window_history = Vec::with_capacity(times.len() + 1);
    window_history.push(WindowSpan { t: t0, n_lo: state.n_lo, n_hi: state.n_hi() });
    let mut scratch = Scratch::default();
    let mut next = 0usize;

    while next < times.len() && times[next] <= t0 + 1e-12 {
        snapshots.push(Snapshot { t: state.t, n_lo: state.n_lo, values: state.values.clone() });
        next += 1;
    }
    while state.t < t_end - 1e-12 {
        let target = if next < times.len() { times[next].min(t_end) } else { t_end };
        let dt_step = dt.min(target - state.t);
        if dt_step < 1e-15 {
            return Err(Error::numeric("run_lattice: step size underflow"));
        }
        rk4_step(&mut state, phi, dt_step, &mut scratch);
        manage_window(&mut state);
        state.check_invariants()?;
        if next < times.len() && state.t >= times[next] - 1e-9 {
            snapshots.push(Snapshot { t: state.t, n_lo: state.n_lo, values: state.values.clone() });
            window_history.push(WindowSpan { t: state.t, n_lo: state.n_lo, n_hi: state.n_hi() });
            next += 1;
        }
    }
    window_history.push(WindowSpan { t: state.t, n_lo: state.n_lo, n_hi: state.n_hi() });
    Ok(RunRecord {
        meta: RunMeta {
            flux_label: phi.label().to_string(),
            alpha: state.alpha,
            beta: state.beta,
            t0,
            t_end,
            dt,
            monotone: state.monotone_expected,
            window_history,
        },
        snapshots,
        final_state: state,
    })
}

/// Sup distance over the window plus the bound on what the tails outside the
/// window can contribute.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupDistance {
    pub sup: f64,
    pub slack: f64,
}

/// `sup_n |F(n, t) - profile(n - C t + shift)|` over the window; outside the
/// window both the state (by the margin invariant) and the profile (by
/// monotonicity) are pinned to the levels, so the tail contribution is
/// bounded by the reported slack.
pub fn sup_distance_to_profile(
    state: &LatticeState,
    profile: &WaveTrainProfile,
    shift: f64,
) -> SupDistance {
    let c = profile.speed;
    let mut sup = 0.0f64;
    for (i, &v) in state.values.iter().enumerate() {
        let n = state.n_lo + i as i64;
        let xi = n as f64 - c * state.t + shift;
        sup = sup.max((v - profile.eval(xi)).abs());
    }
    let left = (state.values[0] - state.alpha)
        + (profile.eval(state.n_lo as f64 - 1.0 - c * state.t + shift) - state.alpha);
    let right = (state.beta - state.values.last().unwrap())
        + (state.beta - profile.eval(state.n_hi() as f64 + 1.0 - c * state.t + shift));
    SupDistance { sup, slack: left.max(right) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::linear_2my;
    use crate::wavetrain::solve_wavetrain_lattice;

    fn profile_2my() -> Arc<WaveTrainProfile> {
        Arc::new(solve_wavetrain_lattice(&linear_2my(), (0.0, 1.0)).unwrap())
    }

    #[test]
    fn init_step_function() {
        let st = init_lattice(&InitialData::Step { alpha: 0.0, beta: 1.0 }, (-40, 40)).unwrap();
        assert_eq!(st.get(0), 0.0);
        assert_eq!(st.get(1), 1.0);
        assert_eq!(st.get(-100), 0.0);
        assert_eq!(st.get(100), 1.0);
        st.check_invariants().unwrap();
    }

    #[test]
    fn init_shifted_profile() {
        let p = profile_2my();
        let st =
            init_lattice(&InitialData::WaveTrainShifted { profile: p.clone(), d: 3.0 }, (-30, 30))
                .unwrap();
        for n in st.n_lo..=st.n_hi() {
            assert_eq!(st.get(n), p.eval(n as f64 + 3.0));
        }
        for n in st.n_lo..st.n_hi() {
            assert!(st.get(n + 1) >= st.get(n));
        }
    }

    #[test]
    fn init_custom_rejects_nonmonotone() {
        let data = InitialData::Custom {
            n_lo: 0,
            values: vec![0.7, 0.3],
            alpha: 0.0,
            beta: 1.0,
            expect_monotone: true,
        };
        let err = init_lattice(&data, (-20, 20)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn constant_state_is_fixed_point() {
        let phi = linear_2my();
        let mut st = LatticeState::from_parts(0.0, -5, vec![0.4; 11], 0.4, 0.4 + 1e-15, true);
        let before = st.values.clone();
        let dt = lattice_dt(&phi, 0.05);
        let mut scratch = Scratch::default();
        rk4_step(&mut st, &phi, dt, &mut scratch);
        for (a, b) in before.iter().zip(&st.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn traveling_wave_advects_at_speed_c() {
        let p = profile_2my();
        let phi = linear_2my();
        let d = 2.0;
        let rec = run_lattice(
            &InitialData::WaveTrainShifted { profile: p.clone(), d },
            &phi,
            0.0,
            10.0,
            0.025,
            &SnapshotPlan::None,
            (-40, 40),
        )
        .unwrap();
        let dist = sup_distance_to_profile(&rec.final_state, &p, d);
        assert!(dist.sup <= 1e-5, "advection error {}", dist.sup);
        assert!(dist.slack < 1e-7);
    }

    #[test]
    fn step_data_stays_monotone() {
        let phi = linear_2my();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            20.0,
            0.1,
            &SnapshotPlan::Times(vec![5.0, 10.0, 20.0]),
            (-40, 60),
        )
        .unwrap();
        for s in &rec.snapshots {
            for w in s.values.windows(2) {
                assert!(w[1] - w[0] >= -1e-12);
            }
        }
        assert_eq!(rec.snapshots.len(), 3);
    }

    #[test]
    fn empty_horizon_returns_initial_state() {
        let phi = linear_2my();
        let rec = run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            0.0,
            0.1,
            &SnapshotPlan::None,
            (-20, 20),
        )
        .unwrap();
        assert!(rec.snapshots.is_empty());
        assert_eq!(rec.final_state.t, 0.0);
        assert_eq!(rec.final_state.get(1), 1.0);
    }

    #[test]
    fn comparison_principle_between_ordered_states() {
        let p = profile_2my();
        let phi = linear_2my();
        let run = |d: f64| {
            run_lattice(
                &InitialData::WaveTrainShifted { profile: p.clone(), d },
                &phi,
                0.0,
                5.0,
                0.05,
                &SnapshotPlan::None,
                (-40, 40),
            )
            .unwrap()
            .final_state
        };
        let upper = run(2.0);
        let lower = run(0.0);
        let lo = upper.n_lo.min(lower.n_lo);
        let hi = upper.n_hi().max(lower.n_hi());
        for n in lo..=hi {
            assert!(
                upper.get(n) >= lower.get(n) - 1e-10,
                "ordering lost at n = {n}: {} vs {}",
                upper.get(n),
                lower.get(n)
            );
        }
    }

    #[test]
    fn sup_distance_examples() {
        let p = profile_2my();
        let st =
            init_lattice(&InitialData::WaveTrainShifted { profile: p.clone(), d: 0.0 }, (-30, 30))
                .unwrap();
        let d0 = sup_distance_to_profile(&st, &p, 0.0);
        assert!(d0.sup <= 1e-6, "self distance {}", d0.sup);

        let st5 =
            init_lattice(&InitialData::WaveTrainShifted { profile: p.clone(), d: 0.5 }, (-30, 30))
                .unwrap();
        let d5 = sup_distance_to_profile(&st5, &p, 0.0);
        let bound = 0.5 * p.max_deriv();
        assert!(d5.sup <= bound * 1.05, "{} vs {}", d5.sup, bound);
        assert!(d5.sup >= bound * 0.5);

        let flat = LatticeState::from_parts(0.0, -10, vec![0.0; 21], 0.0, 1.0, true);
        let df = sup_distance_to_profile(&flat, &p, 0.0);
        assert!(df.sup > 0.9);
    }

    #[test]
    fn determinism_identical_runs() {
        let phi = linear_2my();
        let mk = || {
            run_lattice(
                &InitialData::Step { alpha: 0.0, beta: 1.0 },
                &phi,
                0.0,
                7.0,
                0.1,
                &SnapshotPlan::Uniform { dt: 1.0 },
                (-30, 40),
            )
            .unwrap()
        };
        let a = mk();
        let b = mk();
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(sa.n_lo, sb.n_lo);
            assert_eq!(sa.values.len(), sb.values.len());
            for (x, y) in sa.values.iter().zip(&sb.values) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
