//! Numeric embodiments of the two appendix-style integral inequalities:
//! the weighted-logarithm bound
//! `int_0^a psi(x) ln_+(b/(a-x)) dx <= A_psi (1 + ln_+(b/a))`
//! and the geometric Gronwall iteration
//! `v(t) <= A + int_alpha^1 h(rho) v(rho t) drho  =>  v <= A_1 + M t^{-m}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, brent, ln_plus};

/// Weight `h` on `[alpha, 1]` for the Gronwall problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Const { value: f64 },
    /// `c0 + c1 rho + c2 rho^2 + ...`
    Poly { coeffs: Vec<f64> },
}

impl WeightSpec {
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            WeightSpec::Const { value } => *value,
            WeightSpec::Poly { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * rho + c)
            }
        }
    }
}

/// The Gronwall-type functional inequality data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GronwallProblem {
    pub a: f64,
    pub alpha: f64,
    pub h: WeightSpec,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GronwallSolution {
    /// Fixed-point level `A / (1 - int h)`.
    pub a1: f64,
    /// Decay exponent: the root of `int_alpha^1 h(rho) rho^{-m} drho = 1`.
    pub m: f64,
    pub h_mass: f64,
}

fn h_integral(p: &GronwallProblem, m: f64) -> Result<f64> {
    adaptive_simpson(|rho| p.h.eval(rho) / rho.powf(m), p.alpha, 1.0, 1e-12)
}

/// Closed-form limit level and the decay exponent.
pub fn gronwall_solve(p: &GronwallProblem) -> Result<GronwallSolution> {
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(Error::config("gronwall_solve: alpha must lie in (0, 1)"));
    }
    let mass = h_integral(p, 0.0)?;
    if !(mass > 0.0) {
        return Err(Error::config("gronwall_solve: need 0 < int h (weight vanishes)"));
    }
    if !(mass < 1.0) {
        return Err(Error::config(format!(
            "gronwall_solve: int h = {mass} must be below 1"
        )));
    }
    for i in 0..=64 {
        let rho = p.alpha + (1.0 - p.alpha) * i as f64 / 64.0;
        if p.h.eval(rho) < 0.0 {
            return Err(Error::config("gronwall_solve: weight must be nonnegative"));
        }
    }
    let a1 = p.a / (1.0 - mass);
    // I(m) is continuous and increasing with I(0) < 1; expand until it crosses
    let f = |m: f64| h_integral(p, m).unwrap_or(f64::NAN) - 1.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 200.0 {
            return Err(Error::numeric(
                "gronwall_solve: no exponent below m = 200 (weight concentrated at rho = 1)",
            ));
        }
    }
    let m = brent(f, 0.0, hi, 1e-12)?;
    Ok(GronwallSolution { a1, m, h_mass: mass })
}

/// Starting function for the iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    Constant { value: f64 },
    /// The fixed-point level `A_1`.
    Limit,
    /// `A_1 + t^{-m}`: invariant under the map since `I(m) = 1`.
    LimitPlusDecay,
    /// `factor * A_1`.
    ScaledLimit { factor: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallIterationReport {
    pub solution: GronwallSolution,
    /// Calibrated decay amplitude from the initial window `[t0, t0/alpha]`.
    pub big_m: f64,
    pub iterations: usize,
    /// Largest excess of any iterate over `A_1 + M t^{-m}` past `t0`.
    pub max_excess: f64,
    /// Sup change of the first application of the map (invariance probe).
    pub first_step_change: f64,
    /// Whether the per-node values decreased monotonically across iterates.
    pub monotone_decreasing: bool,
}

/// Iterate `(Tv)(t) = A + int h(rho) v(rho t) drho` on a geometric grid until
/// stabilization, calibrate `M` on the initial window, and verify every
/// iterate stays below `A_1 + M t^{-m}` out to the horizon.
pub fn gronwall_iterate(
    p: &GronwallProblem,
    seed: SeedSpec,
    horizon: f64,
    max_iter: usize,
) -> Result<GronwallIterationReport> {
    let sol = gronwall_solve(p)?;
    if !(horizon > p.t0 / p.alpha) {
        return Err(Error::config("gronwall_iterate: horizon must exceed t0/alpha"));
    }
    // Geometric grid with 256 nodes per 1/alpha segment. The rho quadrature
    // below uses exactly these ratios, so every sample rho * t_k lands on a
    // stored node and the map needs no interpolation at all.
    let per_segment = 256usize;
    let ratio = (1.0 / p.alpha).powf(1.0 / per_segment as f64);
    let mut ts = vec![p.alpha * p.t0];
    while *ts.last().unwrap() < horizon {
        let t = ts.last().unwrap() * ratio;
        ts.push(t);
    }
    let seed_val = |t: f64| -> f64 {
        match seed {
            SeedSpec::Constant { value } => value,
            SeedSpec::Limit => sol.a1,
            SeedSpec::LimitPlusDecay => sol.a1 + t.powf(-sol.m),
            SeedSpec::ScaledLimit { factor } => factor * sol.a1,
        }
    };
    let mut v: Vec<f64> = ts.iter().map(|&t| seed_val(t)).collect();
    // int_alpha^1 h(rho) v(rho t_k) drho = int_{ln alpha}^0 h(e^u) e^u v(t_{k-j}) du
    let du = (1.0 / p.alpha).ln() / per_segment as f64;
    let rho_j: Vec<f64> = (0..=per_segment).map(|j| (-(j as f64) * du).exp()).collect();
    let apply = |v: &[f64], k: usize| -> f64 {
        let mut samples = Vec::with_capacity(per_segment + 1);
        for (j, &rho) in rho_j.iter().enumerate() {
            samples.push(p.h.eval(rho) * rho * v[k - j]);
        }
        p.a + crate::numerics::composite_simpson(&samples, du)
    };
    let mut first_step_change = 0.0f64;
    let mut monotone_decreasing = true;
    let mut iterations = 0usize;
    for iter in 0..max_iter {
        let mut next = v.clone();
        let mut change = 0.0f64;
        for (k, &t) in ts.iter().enumerate() {
            if t < p.t0 || k < per_segment {
                continue; // initial segment is data, not updated
            }
            let nv = apply(&v, k);
            change = change.max((nv - v[k]).abs());
            if nv > v[k] + 1e-12 {
                monotone_decreasing = false;
            }
            next[k] = nv;
        }
        if iter == 0 {
            first_step_change = change;
        }
        v = next;
        iterations = iter + 1;
        if change < 1e-13 {
            break;
        }
        if change.is_nan() || change > 1e12 {
            return Err(Error::internal("gronwall_iterate: iteration diverged"));
        }
    }
    // calibrate M on the initial window, exactly as the proof does
    let mut big_m = 0.0f64;
    for (j, &t) in ts.iter().enumerate() {
        if t >= p.t0 && t <= p.t0 / p.alpha {
            big_m = big_m.max((v[j] - sol.a1) * t.powf(sol.m));
        }
    }
    // seed values on the data segment participate too
    for &t in &ts {
        if t < p.t0 {
            big_m = big_m.max((seed_val(t) - sol.a1) * t.powf(sol.m));
        }
    }
    let mut max_excess = f64::NEG_INFINITY;
    for (j, &t) in ts.iter().enumerate() {
        if t >= p.t0 {
            max_excess = max_excess.max(v[j] - (sol.a1 + big_m * t.powf(-sol.m)));
        }
    }
    Ok(GronwallIterationReport {
        solution: sol,
        big_m,
        iterations,
        max_excess,
        first_step_change,
        monotone_decreasing,
    })
}

// ---------------------------------------------------------------------------
// Weighted-log integral bound
// ---------------------------------------------------------------------------

/// Nonnegative integrable weights with an `O(1/x)` envelope.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiSpec {
    Zero,
    /// `exp(-x)`
    ExpNeg,
    /// `min(1, 1/x)`
    MinOneOverX,
}

impl PsiSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PsiSpec::Zero => 0.0,
            PsiSpec::ExpNeg => (-x).exp(),
            PsiSpec::MinOneOverX => {
                if x <= 1.0 {
                    1.0
                } else {
                    1.0 / x
                }
            }
        }
    }

    /// Declared envelope constant: `sup_x x psi(x)`.
    pub fn envelope(&self) -> f64 {
        match self {
            PsiSpec::Zero => 0.0,
            PsiSpec::ExpNeg => 1.0 / std::f64::consts::E,
            PsiSpec::MinOneOverX => 1.0,
        }
    }
}

/// `int_0^a psi(x) ln_+(b/(a-x)) dx`, with the logarithmic endpoint handled
/// by the substitution `x = a - exp(-s)`.
pub fn log_weight_integral(psi: &PsiSpec, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::config("log_weight_integral: need a, b > 0"));
    }
    // integrand vanishes for a - x >= b
    let cut = (a - b).max(0.0);
    let s_lo = -(a - cut).ln();
    let s_hi = s_lo + 80.0;
    // split where the weight has a kink (min(1, 1/x) switches at x = 1)
    let mut cuts = vec![s_lo];
    if matches!(psi, PsiSpec::MinOneOverX) && cut < 1.0 && a > 1.0 {
        let s_kink = -(a - 1.0).ln();
        if s_kink > s_lo && s_kink < s_hi {
            cuts.push(s_kink);
        }
    }
    cuts.push(s_hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(
            |s| {
                let gap = (-s).exp();
                psi.eval(a - gap) * (b.ln() + s) * gap
            },
            w[0],
            w[1],
            1e-11,
        )?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct LogBoundPoint {
    pub a: f64,
    pub b: f64,
    pub lhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogBoundReport {
    pub a_psi: f64,
    pub points: Vec<LogBoundPoint>,
}

/// Fit the smallest constant `A_psi` with
/// `lhs(a, b) <= A_psi (1 + ln_+(b/a))` over the grid.
pub fn log_weight_bound_check(psi: &PsiSpec, grid: &[(f64, f64)]) -> Result<LogBoundReport> {
    let mut points = Vec::with_capacity(grid.len());
    let mut a_psi = 0.0f64;
    for &(a, b) in grid {
        let lhs = log_weight_integral(psi, a, b)?;
        let ratio = lhs / (1.0 + ln_plus(b / a));
        a_psi = a_psi.max(ratio);
        points.push(LogBoundPoint { a, b, lhs, ratio });
    }
    Ok(LogBoundReport { a_psi, points })
}

/// Standard `(a, b)` grids spanning `[1e-2, 1e2]^2`; the offset variant is
/// disjoint from the base one for the stability check.
pub fn log_bound_grid(offset: bool) -> Vec<(f64, f64)> {
    let base: Vec<f64> = if offset {
        (0..9).map(|i| 0.015 * 10.0f64.powf(i as f64 / 2.0)).collect()
    } else {
        (0..9).map(|i| 0.01 * 10.0f64.powf(i as f64 / 2.0)).collect()
    };
    let mut grid = Vec::new();
    for &a in &base {
        for &b in &base {
            grid.push((a, b));
        }
    }
    grid
}
