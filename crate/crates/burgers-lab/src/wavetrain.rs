//! Traveling-wave (wave-train) profiles for the viscous PDE and the lattice
//! equation, connecting the overfall levels `alpha` (left) and `beta` (right).
//!
//! The continuous profile solves `eps f' = int_alpha^f (phi(y) - C) dy`; the
//! lattice profile solves the forward delay equation
//! `C F'(xi) = phi(F(xi)) (F(xi) - F(xi - 1))`, built by the method of steps
//! from an exponential left-tail seed. Profiles are tabulated on a uniform
//! grid, anchored so the midpoint value sits at `xi = 0`, and carry tail
//! formulas for evaluation beyond the table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{
    check_shock_profile, shock_condition_lattice_overfall, wave_speed, wave_speed_lattice_overfall,
    FluxFunction, Model,
};
use crate::numerics::{brent, expand_bracket, hermite_eval, Antiderivative};

/// Exponential tail `value - alpha ~ amplitude * exp(rate * xi)` (left) in
/// anchored coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailExp {
    pub rate: f64,
    pub amplitude: f64,
}

/// Right-tail behavior: exponential approach for non-degenerate right
/// endpoints, algebraic `beta - value ~ coeff / (xi - offset)` when
/// `phi(beta) = C`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RightTail {
    Exponential { rate: f64, amplitude: f64 },
    Algebraic { coeff: f64, offset: f64 },
}

/// A tabulated monotone traveling-wave profile.
#[derive(Debug, Clone)]
pub struct WaveTrainProfile {
    pub model: Model,
    pub speed: f64,
    pub overfall: (f64, f64),
    /// Anchored coordinate of the first table node; the anchor `xi = 0`
    /// carries the midpoint value `(alpha + beta) / 2`.
    xi0: f64,
    h: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
    pub left_tail: TailExp,
    pub right_tail: RightTail,
}

/// Options for the lattice delay-equation solve.
#[derive(Debug, Clone, Copy)]
pub struct LatticeSolveOptions {
    /// Fixed integration step; `1/h` must be an integer so the unit delay
    /// lands exactly on table nodes.
    pub h: f64,
    /// Left-tail seeding depth: the table starts at `value = alpha + seed`.
    pub seed_depth: f64,
    /// Stop when `beta - value` drops below this (non-degenerate right end).
    pub right_stop: f64,
    /// Switch to the algebraic tail formula at this distance from `beta`
    /// when the right endpoint is degenerate.
    pub algebraic_switch: f64,
    /// Hard cap on the table span in `xi`.
    pub max_span: f64,
}

impl Default for LatticeSolveOptions {
    fn default() -> Self {
        Self { h: 1.0 / 64.0, seed_depth: 1e-9, right_stop: 1e-8, algebraic_switch: 1e-4, max_span: 5e4 }
    }
}

/// Options for the continuous profile solve.
#[derive(Debug, Clone, Copy)]
pub struct ContinuousSolveOptions {
    pub h: f64,
    pub seed_depth: f64,
    pub right_stop: f64,
    pub algebraic_switch: f64,
    pub max_span: f64,
}

impl Default for ContinuousSolveOptions {
    fn default() -> Self {
        Self { h: 1.0 / 128.0, seed_depth: 1e-9, right_stop: 1e-8, algebraic_switch: 1e-4, max_span: 5e4 }
    }
}

const DEGENERACY_TOL: f64 = 1e-9;

/// Positive root of `C lambda = phi_alpha (1 - exp(-lambda))`, the left-tail
/// rate of the lattice profile. Exists iff `phi_alpha > C`.
pub fn lattice_left_rate(c: f64, phi_alpha: f64) -> Result<f64> {
    if !(phi_alpha > c) {
        return Err(Error::config(format!(
            "no positive left-tail rate: phi(alpha) = {phi_alpha} <= C = {c}"
        )));
    }
    let g = |l: f64| c * l - phi_alpha * (-libm::expm1(-l));
    // g(0) = 0, g'(0) = C - phi_alpha < 0, g -> +inf
    let mut hi = 1.0;
    while g(hi) < 0.0 && hi < 1e4 {
        hi *= 2.0;
    }
    let lo = 2.0 * (phi_alpha - c) / phi_alpha * 1e-3;
    brent(g, lo.min(hi * 0.5), hi, 1e-13)
}

/// Positive root of `C mu = phi_beta (exp(mu) - 1)`, the right-tail rate.
/// Exists iff `phi_beta < C`.
pub fn lattice_right_rate(c: f64, phi_beta: f64) -> Result<f64> {
    if !(phi_beta < c) {
        return Err(Error::config(format!(
            "no positive right-tail rate: phi(beta) = {phi_beta} >= C = {c}"
        )));
    }
    let g = |m: f64| c * m - phi_beta * libm::expm1(m);
    let est = 2.0 * (c - phi_beta) / phi_beta;
    let (lo, hi) = expand_bracket(&g, (est * 0.1).max(1e-14), (est * 4.0).max(1e-12), 1e-16, 1e4)?;
    if lo == hi {
        return Ok(lo);
    }
    brent(g, lo, hi, 1e-15)
}

struct RawTable {
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl WaveTrainProfile {
    fn finish(
        model: Model,
        speed: f64,
        overfall: (f64, f64),
        h: f64,
        table: RawTable,
        left_rate: f64,
        right_tail_kind: RightTailKind,
    ) -> Result<Self> {
        let (alpha, beta) = overfall;
        let RawTable { values, derivs } = table;
        let n = values.len();
        if n < 8 {
            return Err(Error::numeric("wavetrain: table too short"));
        }
        for w in values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::numeric("wavetrain: profile not strictly increasing"));
            }
        }
        let mid = 0.5 * (alpha + beta);
        let ia = values
            .iter()
            .position(|&v| v >= mid)
            .ok_or_else(|| Error::numeric("wavetrain: table never reaches the midpoint"))?;
        let xi_a = if ia == 0 {
            0.0
        } else {
            let x0 = (ia - 1) as f64 * h;
            brent(
                |x| {
                    hermite_eval(0.0, h, &values, &derivs, x) - mid
                },
                x0,
                x0 + h,
                1e-12,
            )?
        };
        let xi0 = -xi_a;
        let left_amp = (values[0] - alpha) * (-left_rate * xi0).exp();
        let xi_end = xi0 + (n - 1) as f64 * h;
        let gap_end = beta - values[n - 1];
        let right_tail = match right_tail_kind {
            RightTailKind::Exponential { rate } => RightTail::Exponential {
                rate,
                amplitude: gap_end * (rate * xi_end).exp(),
            },
            RightTailKind::Algebraic { coeff } => RightTail::Algebraic {
                coeff,
                offset: xi_end - coeff / gap_end,
            },
        };
        Ok(Self {
            model,
            speed,
            overfall,
            xi0,
            h,
            values,
            derivs,
            left_tail: TailExp { rate: left_rate, amplitude: left_amp },
            right_tail,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn xi_min(&self) -> f64 {
        self.xi0
    }

    pub fn xi_max(&self) -> f64 {
        self.xi0 + (self.values.len() - 1) as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Table values together with their anchored coordinates.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.xi0 + i as f64 * self.h, v))
    }

    /// Evaluate the profile anywhere: Hermite interpolation inside the table,
    /// tail formulas outside, clamped to `[alpha, beta]`.
    pub fn eval(&self, xi: f64) -> f64 {
        let (alpha, beta) = self.overfall;
        if xi < self.xi0 {
            let v = alpha + self.left_tail.amplitude * (self.left_tail.rate * xi).exp();
            return v.min(beta);
        }
        if xi > self.xi_max() {
            let v = match self.right_tail {
                RightTail::Exponential { rate, amplitude } => beta - amplitude * (-rate * xi).exp(),
                RightTail::Algebraic { coeff, offset } => {
                    let d = xi - offset;
                    if d <= 0.0 {
                        return *self.values.last().unwrap();
                    }
                    beta - coeff / d
                }
            };
            return v.clamp(alpha, beta);
        }
        hermite_eval(self.xi0, self.h, &self.values, &self.derivs, xi).clamp(alpha, beta)
    }

    /// Profile slope from the stored derivative table (interior only).
    pub fn deriv(&self, xi: f64) -> f64 {
        if xi < self.xi0 {
            return self.left_tail.rate
                * self.left_tail.amplitude
                * (self.left_tail.rate * xi).exp();
        }
        if xi > self.xi_max() {
            return match self.right_tail {
                RightTail::Exponential { rate, amplitude } => {
                    rate * amplitude * (-rate * xi).exp()
                }
                RightTail::Algebraic { coeff, offset } => {
                    let d = xi - offset;
                    if d <= 0.0 {
                        0.0
                    } else {
                        coeff / (d * d)
                    }
                }
            };
        }
        hermite_eval(self.xi0, self.h, &self.derivs, &vec![0.0; self.derivs.len()], xi)
    }

    pub fn max_deriv(&self) -> f64 {
        self.derivs.iter().cloned().fold(0.0, f64::max)
    }

    /// Defining-equation residual for lattice profiles, measured with a
    /// five-point derivative stencil on the table (independent of the
    /// integrator's own right-hand side). Scanned at least one delay unit
    /// from the left table edge.
    pub fn max_residual_lattice(&self, phi: &FluxFunction) -> f64 {
        let per = (1.0 / self.h).round() as usize;
        let n = self.values.len();
        let mut worst = 0.0f64;
        for i in (per + 2)..n.saturating_sub(2) {
            let fd = (self.values[i - 2] - 8.0 * self.values[i - 1] + 8.0 * self.values[i + 1]
                - self.values[i + 2])
                / (12.0 * self.h);
            let r = self.speed * fd
                - phi.eval(self.values[i]) * (self.values[i] - self.values[i - per]);
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Defining-equation residual for continuous profiles:
    /// `eps f' - int_alpha^f (phi - C)`, five-point stencil for `f'`.
    pub fn max_residual_continuous(&self, phi: &FluxFunction, epsilon: f64) -> Result<f64> {
        let (alpha, _) = self.overfall;
        let c = self.speed;
        let anti = Antiderivative::build(|y| phi.eval(y) - c, alpha, self.overfall.1, 4097)?;
        let n = self.values.len();
        let mut worst = 0.0f64;
        for i in 2..n - 2 {
            let fd = (self.values[i - 2] - 8.0 * self.values[i - 1] + 8.0 * self.values[i + 1]
                - self.values[i + 2])
                / (12.0 * self.h);
            let r = epsilon * fd - anti.eval(self.values[i]);
            worst = worst.max(r.abs());
        }
        Ok(worst)
    }

    /// Export the table as CSV rows `(xi, value)` plus a JSON sidecar with
    /// speed, overfall, tails, and grid metadata.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 32);
        out.push_str("xi,value\n");
        for (xi, v) in self.nodes() {
            out.push_str(&format!("{xi:.17e},{v:.17e}\n"));
        }
        out
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            model: self.model,
            speed: self.speed,
            overfall: self.overfall,
            xi0: self.xi0,
            h: self.h,
            left_tail: self.left_tail,
            right_tail: self.right_tail,
        }
    }

    /// Rebuild a profile from exported CSV text and its sidecar. Derivatives
    /// are reconstructed with monotone slopes, so interpolation error can be
    /// slightly larger than for a freshly solved profile.
    pub fn from_csv(csv: &str, sidecar: &ProfileSidecar) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in csv.lines().enumerate() {
            if i == 0 && line.starts_with("xi") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let _xi: f64 = it
                .next()
                .ok_or_else(|| Error::config("profile csv: missing xi column"))?
                .trim()
                .parse()
                .map_err(|e| Error::config(format!("profile csv: {e}")))?;
            let v: f64 = it
                .next()
                .ok_or_else(|| Error::config("profile csv: missing value column"))?
                .trim()
                .parse()
                .map_err(|e| Error::config(format!("profile csv: {e}")))?;
            values.push(v);
        }
        if values.len() < 8 {
            return Err(Error::config("profile csv: too few rows"));
        }
        let derivs = crate::numerics::interp::monotone_slopes(&values, sidecar.h);
        Ok(Self {
            model: sidecar.model,
            speed: sidecar.speed,
            overfall: sidecar.overfall,
            xi0: sidecar.xi0,
            h: sidecar.h,
            values,
            derivs,
            left_tail: sidecar.left_tail,
            right_tail: sidecar.right_tail,
        })
    }
}

/// JSON sidecar stored next to a profile CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub model: Model,
    pub speed: f64,
    pub overfall: (f64, f64),
    pub xi0: f64,
    pub h: f64,
    pub left_tail: TailExp,
    pub right_tail: RightTail,
}

enum RightTailKind {
    Exponential { rate: f64 },
    Algebraic { coeff: f64 },
}

/// Solve the continuous profile equation `eps f' = int_alpha^f (phi - C)` for
/// the `(alpha, beta)` overfall. Requires the strict shock-profile condition.
pub fn solve_wavetrain_continuous(
    phi: &FluxFunction,
    epsilon: f64,
    overfall: (f64, f64),
) -> Result<WaveTrainProfile> {
    solve_wavetrain_continuous_with(phi, epsilon, overfall, ContinuousSolveOptions::default())
}

pub fn solve_wavetrain_continuous_with(
    phi: &FluxFunction,
    epsilon: f64,
    overfall: (f64, f64),
    opt: ContinuousSolveOptions,
) -> Result<WaveTrainProfile> {
    let (alpha, beta) = overfall;
    if !(epsilon > 0.0) {
        return Err(Error::config("solve_wavetrain_continuous: epsilon must be positive"));
    }
    if (alpha, beta) != (0.0, 1.0) {
        return Err(Error::config(
            "solve_wavetrain_continuous: only the (0, 1) overfall is supported",
        ));
    }
    let c = wave_speed(Model::Continuous, phi)?;
    let shock = check_shock_profile(Model::Continuous, phi, 512)?;
    if !shock.holds {
        return Err(Error::config(format!(
            "shock profile condition fails (worst margin {:.3e} at u = {:.3})",
            shock.worst_margin, shock.worst_u
        )));
    }
    let left_slope = phi.eval(alpha) - c;
    if !(left_slope > DEGENERACY_TOL) {
        return Err(Error::config(
            "solve_wavetrain_continuous: left-degenerate profiles (phi(alpha) = C) are not \
             constructible by exponential seeding",
        ));
    }
    let lambda = left_slope / epsilon;
    let right_degenerate = (c - phi.eval(beta)).abs() <= DEGENERACY_TOL;
    let stop_gap = if right_degenerate { opt.algebraic_switch } else { opt.right_stop };

    let anti = Antiderivative::build(|y| phi.eval(y) - c, alpha, beta, 4097)?;
    let rhs = |f: f64| anti.eval(f.clamp(alpha, beta)) / epsilon;

    let h = opt.h;
    let max_steps = (opt.max_span / h) as usize;
    let mut values = Vec::with_capacity(4096);
    let mut derivs = Vec::with_capacity(4096);
    let mut v = alpha + opt.seed_depth;
    values.push(v);
    derivs.push(rhs(v));
    for _ in 0..max_steps {
        let k1 = rhs(v);
        let k2 = rhs(v + 0.5 * h * k1);
        let k3 = rhs(v + 0.5 * h * k2);
        let k4 = rhs(v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !v.is_finite() {
            return Err(Error::numeric("solve_wavetrain_continuous: divergence"));
        }
        values.push(v);
        derivs.push(rhs(v));
        if beta - v <= stop_gap {
            break;
        }
    }
    let tail = if right_degenerate {
        RightTailKind::Algebraic { coeff: epsilon / phi.deriv(beta) * 2.0 }
    } else {
        RightTailKind::Exponential { rate: (c - phi.eval(beta)) / epsilon }
    };
    WaveTrainProfile::finish(
        Model::Continuous,
        c,
        overfall,
        h,
        RawTable { values, derivs },
        lambda,
        tail,
    )
}

/// Solve the lattice delay equation `C F'(xi) = phi(F(xi))(F(xi) - F(xi-1))`
/// for the `(alpha, beta)` overfall by the method of steps.
pub fn solve_wavetrain_lattice(phi: &FluxFunction, overfall: (f64, f64)) -> Result<WaveTrainProfile> {
    solve_wavetrain_lattice_with(phi, overfall, LatticeSolveOptions::default())
}

pub fn solve_wavetrain_lattice_with(
    phi: &FluxFunction,
    overfall: (f64, f64),
    opt: LatticeSolveOptions,
) -> Result<WaveTrainProfile> {
    let (alpha, beta) = overfall;
    if !(alpha < beta) {
        return Err(Error::config("solve_wavetrain_lattice: need alpha < beta"));
    }
    if alpha < 0.0 && !phi.has_negative_extension() {
        return Err(Error::config(
            "solve_wavetrain_lattice: overfall below zero requires a negative extension of phi",
        ));
    }
    if alpha < phi.domain_lo() {
        return Err(Error::config(format!(
            "solve_wavetrain_lattice: alpha = {alpha} below flux domain {}",
            phi.domain_lo()
        )));
    }
    let per = (1.0 / opt.h).round();
    if (per * opt.h - 1.0).abs() > 1e-12 || per < 4.0 {
        return Err(Error::config("solve_wavetrain_lattice: 1/h must be an integer >= 4"));
    }
    let per = per as usize;

    let c = if (alpha, beta) == (0.0, 1.0) {
        wave_speed(Model::Lattice, phi)?
    } else {
        wave_speed_lattice_overfall(phi, alpha, beta)?
    };
    let shock_ok = if (alpha, beta) == (0.0, 1.0) {
        check_shock_profile(Model::Lattice, phi, 512)?.holds
    } else {
        shock_condition_lattice_overfall(phi, alpha, beta, 512)?
    };
    if !shock_ok {
        return Err(Error::config(format!(
            "shock profile condition fails for overfall ({alpha}, {beta})"
        )));
    }
    let lambda = lattice_left_rate(c, phi.eval(alpha))?;
    let right_degenerate = (c - phi.eval(beta)).abs() <= DEGENERACY_TOL;
    let stop_gap = if right_degenerate { opt.algebraic_switch } else { opt.right_stop };

    let h = opt.h;
    let seed = opt.seed_depth * (beta - alpha);
    let max_steps = (opt.max_span / h) as usize;
    let mut values: Vec<f64> = Vec::with_capacity(8192);
    let mut derivs: Vec<f64> = Vec::with_capacity(8192);

    // Local coordinates: node i sits at xi = i * h, seed history below 0.
    let hist = |values: &[f64], derivs: &[f64], xi: f64| -> f64 {
        if xi < 0.0 {
            alpha + seed * (lambda * xi).exp()
        } else {
            hermite_eval(0.0, h, values, derivs, xi)
        }
    };
    let rhs = |values: &[f64], derivs: &[f64], xi: f64, f: f64| -> f64 {
        let delayed = hist(values, derivs, xi - 1.0);
        phi.eval(f) * (f - delayed) / c
    };

    let mut v = alpha + seed;
    values.push(v);
    derivs.push(rhs(&values, &derivs, 0.0, v));
    for i in 0..max_steps {
        let xi = i as f64 * h;
        let k1 = rhs(&values, &derivs, xi, v);
        let k2 = rhs(&values, &derivs, xi + 0.5 * h, v + 0.5 * h * k1);
        let k3 = rhs(&values, &derivs, xi + 0.5 * h, v + 0.5 * h * k2);
        let k4 = rhs(&values, &derivs, xi + h, v + h * k3);
        let next = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::numeric("solve_wavetrain_lattice: divergence"));
        }
        if next <= v {
            return Err(Error::numeric(
                "solve_wavetrain_lattice: monotonicity lost during integration",
            ));
        }
        v = next;
        let xin = (i + 1) as f64 * h;
        // the delayed argument xin - 1 lies well inside the existing table,
        // so the derivative at the new node can use the pre-push slices
        let d = rhs(&values, &derivs, xin, v);
        values.push(v);
        derivs.push(d);
        if beta - v <= stop_gap {
            break;
        }
    }
    let _ = per;
    let tail = if right_degenerate {
        RightTailKind::Algebraic { coeff: c / phi.deriv(beta) }
    } else {
        RightTailKind::Exponential { rate: lattice_right_rate(c, phi.eval(beta))? }
    };
    WaveTrainProfile::finish(Model::Lattice, c, overfall, h, RawTable { values, derivs }, lambda, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{degenerate_quadratic, linear_2my, unit_flux};

    fn logistic(xi: f64) -> f64 {
        1.0 / (1.0 + (-xi / 2.0).exp())
    }

    #[test]
    fn continuous_profile_matches_logistic() {
        let f = linear_2my();
        let p = solve_wavetrain_continuous(&f, 1.0, (0.0, 1.0)).unwrap();
        assert!((p.speed - 1.5).abs() < 1e-10);
        let mut worst = 0.0f64;
        for (xi, v) in p.nodes() {
            worst = worst.max((v - logistic(xi)).abs());
        }
        assert!(worst <= 1e-6, "max logistic error {worst}");
        // anchor normalization
        assert!((p.eval(0.0) - 0.5).abs() < 1e-10);
        // residual invariant
        let r = p.max_residual_continuous(&f, 1.0).unwrap();
        assert!(r <= 1e-9, "continuous residual {r}");
    }

    #[test]
    fn continuous_profile_epsilon_scaling() {
        let f = linear_2my();
        let p1 = solve_wavetrain_continuous(&f, 1.0, (0.0, 1.0)).unwrap();
        let p2 = solve_wavetrain_continuous(&f, 2.0, (0.0, 1.0)).unwrap();
        for k in 0..10 {
            let xi = -8.0 + 2.0 * k as f64;
            let a = p2.eval(xi);
            let b = p1.eval(xi / 2.0);
            assert!((a - b).abs() < 1e-6, "xi={xi}: {a} vs {b}");
        }
    }

    #[test]
    fn continuous_rejects_constant_flux() {
        let err = solve_wavetrain_continuous(&unit_flux(), 1.0, (0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn eval_profile_examples() {
        let f = linear_2my();
        let p = solve_wavetrain_continuous(&f, 1.0, (0.0, 1.0)).unwrap();
        assert!((p.eval(0.0) - 0.5).abs() < 1e-10);
        let expect = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((p.eval(2.0) - expect).abs() < 1e-6);
        assert_eq!(p.eval(p.xi_max() + 1e6), 1.0);
        assert!(p.eval(p.xi_min() - 1e3) < 1e-100);
    }

    #[test]
    fn lattice_profile_nondegenerate() {
        let f = linear_2my();
        let p = solve_wavetrain_lattice(&f, (0.0, 1.0)).unwrap();
        let c = 1.0 / std::f64::consts::LN_2;
        assert!((p.speed - c).abs() < 1e-10);
        let r = p.max_residual_lattice(&f);
        assert!(r <= 1e-7, "lattice residual {r}");
        // left-tail rate solves C*l = phi(0)(1 - exp(-l)); bisection oracle
        let g = |l: f64| c * l - 2.0 * (1.0 - (-l as f64).exp());
        let (mut a, mut b) = (0.1, 3.0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if g(m).signum() == g(a).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        assert!((p.left_tail.rate - 0.5 * (a + b)).abs() < 1e-9);
        // right-tail rate solves C*m = phi(1)(exp(m) - 1)
        match p.right_tail {
            RightTail::Exponential { rate, .. } => {
                let gr = |m: f64| c * m - (m.exp() - 1.0);
                let (mut a, mut b) = (0.1, 2.0);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if gr(mid).signum() == gr(a).signum() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                assert!((rate - 0.5 * (a + b)).abs() < 1e-9);
            }
            _ => panic!("nondegenerate flux must have an exponential right tail"),
        }
        // linearization check: 1 - F(xi) ~ amp * exp(-mu xi) deep in the tail
        let xi = p.xi_max() - 2.0;
        if let RightTail::Exponential { rate, amplitude } = p.right_tail {
            let predicted = amplitude * (-rate * xi).exp();
            let actual = 1.0 - p.eval(xi);
            assert!((predicted - actual).abs() / actual < 0.05, "{predicted} vs {actual}");
        }
    }

    #[test]
    fn lattice_profile_degenerate_algebraic_tail() {
        let f = degenerate_quadratic();
        let p = solve_wavetrain_lattice(&f, (0.0, 1.0)).unwrap();
        assert!((p.speed - 1.0).abs() < 1e-8);
        let r = p.max_residual_lattice(&f);
        assert!(r <= 1e-7, "degenerate lattice residual {r}");
        // algebraic tail 1 - F(xi) ~ C / (phi'(1) xi) within 20% at large xi
        let coeff = p.speed / f.deriv(1.0);
        for &xi in &[50.0, 100.0, 200.0] {
            let gap = 1.0 - p.eval(xi);
            let asym = coeff / xi;
            let rel = (gap - asym).abs() / asym;
            assert!(rel < 0.2, "xi={xi}: gap={gap:.6e} asym={asym:.6e} rel={rel:.3}");
        }
        match p.right_tail {
            RightTail::Algebraic { coeff: c2, .. } => {
                assert!((c2 - coeff).abs() < 1e-12)
            }
            _ => panic!("degenerate flux must have an algebraic right tail"),
        }
    }

    #[test]
    fn lattice_rejects_missing_seed_root() {
        // overfall (0,1) on the left-degenerate flux has phi(0) = C
        let f = crate::flux::left_degenerate();
        let err = solve_wavetrain_lattice(&f, (0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn translation_gauge_fixed_by_anchor() {
        let f = linear_2my();
        let p1 = solve_wavetrain_lattice(&f, (0.0, 1.0)).unwrap();
        let p2 = solve_wavetrain_lattice_with(
            &f,
            (0.0, 1.0),
            LatticeSolveOptions { seed_depth: 4e-9, ..Default::default() },
        )
        .unwrap();
        let mut worst = 0.0f64;
        let mut xi = p1.xi_min().max(p2.xi_min()) + 0.5;
        let hi = p1.xi_max().min(p2.xi_max()) - 0.5;
        while xi < hi {
            worst = worst.max((p1.eval(xi) - p2.eval(xi)).abs());
            xi += 0.37;
        }
        assert!(worst < 1e-7, "anchored profiles differ by {worst}");
    }

    #[test]
    fn strict_monotonicity_of_samples() {
        let p = solve_wavetrain_lattice(&linear_2my(), (0.0, 1.0)).unwrap();
        let vals: Vec<f64> = p.nodes().map(|(_, v)| v).collect();
        for w in vals.windows(2) {
            assert!(w[1] - w[0] > 0.0);
        }
    }

    #[test]
    fn sigma_overfall_profile_with_extension() {
        let f = degenerate_quadratic();
        let sigma = 1e-4;
        let p = solve_wavetrain_lattice_with(
            &f,
            (-sigma, 1.0),
            LatticeSolveOptions { max_span: 300.0, ..Default::default() },
        )
        .unwrap();
        assert!(p.speed > 1.0, "sigma overfall speeds up the train: {}", p.speed);
        assert!(p.eval(p.xi_min() - 50.0) >= -sigma);
        assert!((p.eval(0.0) - 0.5 * (1.0 - sigma)).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let f = linear_2my();
        let p = solve_wavetrain_lattice(&f, (0.0, 1.0)).unwrap();
        let csv = p.to_csv();
        let sc = p.sidecar();
        let back = WaveTrainProfile::from_csv(&csv, &sc).unwrap();
        for &xi in &[-5.0, -1.0, 0.0, 2.5, 8.0] {
            assert!((back.eval(xi) - p.eval(xi)).abs() < 1e-9, "xi={xi}");
        }
    }
}
