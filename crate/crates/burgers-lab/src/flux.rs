//! The flux function `phi` and everything derived from it pointwise: wave
//! speeds, shock-profile checks, the potential `Phi(F) = int_F^1 dy/phi`, the
//! inverse `phi^{-1}` on a declared monotone branch, and the classification of
//! endpoint degeneracy with the logarithmic front-shift coefficient tables.
//!
//! A flux is a positive, piecewise twice continuously differentiable function
//! on `[0, 1]`, stored as closed-form pieces (polynomial or rational in
//! `u = 1 - y`) so endpoint derivatives are exact. An optional strictly
//! decreasing extension to small negative arguments supports barrier
//! constructions with overfall `(-sigma, 1)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, brent, Antiderivative};

/// Which evolution model a quantity refers to: the viscous PDE or the
/// difference-differential lattice equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Continuous,
    Lattice,
}

/// Closed form of one flux piece, as a polynomial (or ratio of polynomials)
/// in `u = 1 - y`. The variable choice keeps the right-endpoint expansion,
/// which governs degenerate tails, explicit in the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceForm {
    /// `c0 + c1 u + c2 u^2 + ...`
    Poly(Vec<f64>),
    /// `N(u) / D(u)` with both polynomials in `u`.
    Rational { num: Vec<f64>, den: Vec<f64> },
}

fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * u + ck)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, &ck)| k as f64 * ck).collect()
}

impl PieceForm {
    /// Value and first two derivatives with respect to `u`.
    fn eval_u(&self, u: f64) -> (f64, f64, f64) {
        match self {
            PieceForm::Poly(c) => {
                let d1 = poly_deriv(c);
                let d2 = poly_deriv(&d1);
                (poly_eval(c, u), poly_eval(&d1, u), poly_eval(&d2, u))
            }
            PieceForm::Rational { num, den } => {
                let n = poly_eval(num, u);
                let n1 = poly_eval(&poly_deriv(num), u);
                let n2 = poly_eval(&poly_deriv(&poly_deriv(num)), u);
                let d = poly_eval(den, u);
                let d1 = poly_eval(&poly_deriv(den), u);
                let d2 = poly_eval(&poly_deriv(&poly_deriv(den)), u);
                let v = n / d;
                let v1 = (n1 - v * d1) / d;
                let v2 = (n2 - 2.0 * v1 * d1 - v * d2) / d;
                (v, v1, v2)
            }
        }
    }
}

/// One piece of the flux on `[lo, hi]` (in the `y` variable).
#[derive(Debug, Clone, PartialEq)]
pub struct FluxPiece {
    pub lo: f64,
    pub hi: f64,
    pub form: PieceForm,
}

impl FluxPiece {
    pub fn poly(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        Self { lo, hi, form: PieceForm::Poly(coeffs) }
    }

    fn eval(&self, y: f64) -> (f64, f64, f64) {
        let (v, vu, vuu) = self.form.eval_u(1.0 - y);
        // d/dy = -d/du
        (v, -vu, vuu)
    }
}

/// A validated flux function.
#[derive(Debug, Clone)]
pub struct FluxFunction {
    label: String,
    pieces: Vec<FluxPiece>,
    negative_extension: Option<FluxPiece>,
    max_unit: f64,
    min_unit: f64,
}

const VALIDATION_GRID: usize = 2048;

impl FluxFunction {
    /// Build and validate a flux from its pieces.
    ///
    /// Checks: the pieces cover `[0, 1]` without gaps, adjacent pieces agree in
    /// value at junctions, `phi > 0` on a dense grid, and the optional negative
    /// extension is strictly decreasing and continuous at 0.
    pub fn new(
        label: impl Into<String>,
        pieces: Vec<FluxPiece>,
        negative_extension: Option<FluxPiece>,
    ) -> Result<Self> {
        let label = label.into();
        if pieces.is_empty() {
            return Err(Error::config("flux: no pieces"));
        }
        let mut sorted = pieces;
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if (sorted[0].lo).abs() > 1e-12 || (sorted.last().unwrap().hi - 1.0).abs() > 1e-12 {
            return Err(Error::config("flux: pieces must cover [0, 1]"));
        }
        for w in sorted.windows(2) {
            if (w[0].hi - w[1].lo).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "flux: gap or overlap between pieces at y = {}",
                    w[0].hi
                )));
            }
            let (va, _, _) = w[0].eval(w[0].hi);
            let (vb, _, _) = w[1].eval(w[1].lo);
            if (va - vb).abs() > 1e-9 * va.abs().max(1.0) {
                return Err(Error::config(format!(
                    "flux: pieces disagree at junction y = {} ({va} vs {vb})",
                    w[0].hi
                )));
            }
        }
        let mut max_unit = f64::NEG_INFINITY;
        let mut min_unit = f64::INFINITY;
        for piece in &sorted {
            let lo = piece.lo.max(0.0);
            let hi = piece.hi.min(1.0);
            for i in 0..=VALIDATION_GRID {
                let y = lo + (hi - lo) * i as f64 / VALIDATION_GRID as f64;
                let (v, _, _) = piece.eval(y);
                if !(v > 0.0) {
                    return Err(Error::config(format!(
                        "flux '{label}': phi({y}) = {v} is not positive"
                    )));
                }
                max_unit = max_unit.max(v);
                min_unit = min_unit.min(v);
            }
        }
        if let Some(ext) = &negative_extension {
            if !(ext.lo < 0.0) || ext.hi.abs() > 1e-12 {
                return Err(Error::config("flux: negative extension must span [-sigma_max, 0]"));
            }
            let first = &sorted[0];
            let (v0, _, _) = first.eval(0.0);
            let (ve, _, _) = ext.eval(0.0);
            if (v0 - ve).abs() > 1e-9 * v0.abs().max(1.0) {
                return Err(Error::config("flux: negative extension does not match phi(0)"));
            }
            for i in 1..VALIDATION_GRID {
                let y = ext.lo + (0.0 - ext.lo) * i as f64 / VALIDATION_GRID as f64;
                let (_, dv, _) = ext.eval(y);
                if !(dv < 0.0) {
                    return Err(Error::config(
                        "flux: negative extension must be strictly decreasing",
                    ));
                }
            }
        }
        Ok(Self { label, pieces: sorted, negative_extension, max_unit, min_unit })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Lower end of the evaluable domain: `-sigma_max` with an extension,
    /// otherwise 0.
    pub fn domain_lo(&self) -> f64 {
        self.negative_extension.as_ref().map_or(0.0, |p| p.lo)
    }

    pub fn has_negative_extension(&self) -> bool {
        self.negative_extension.is_some()
    }

    /// Maximum of `phi` over `[0, 1]` (dense-grid value from construction).
    pub fn max_on_unit(&self) -> f64 {
        self.max_unit
    }

    pub fn min_on_unit(&self) -> f64 {
        self.min_unit
    }

    fn piece_for(&self, y: f64) -> &FluxPiece {
        if y < 0.0 {
            if let Some(ext) = &self.negative_extension {
                if y >= ext.lo {
                    return ext;
                }
                return ext; // clamped below; eval clamps the argument
            }
            return &self.pieces[0];
        }
        for p in &self.pieces {
            if y < p.hi {
                return p;
            }
        }
        self.pieces.last().unwrap()
    }

    fn eval_all(&self, y: f64) -> (f64, f64, f64) {
        let y = y.clamp(self.domain_lo(), 1.0);
        self.piece_for(y).eval(y)
    }

    /// `phi(y)`, with `y` clamped into the evaluable domain.
    pub fn eval(&self, y: f64) -> f64 {
        self.eval_all(y).0
    }

    /// `phi'(y)`.
    pub fn deriv(&self, y: f64) -> f64 {
        self.eval_all(y).1
    }

    /// `phi''(y)`.
    pub fn deriv2(&self, y: f64) -> f64 {
        self.eval_all(y).2
    }

    /// Integrate `f(y)` (a pointwise transform of this flux's `y` variable)
    /// over `[a, b]`, splitting at piece junctions so the adaptive rule only
    /// ever sees smooth integrands.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut cuts = vec![lo];
        for p in &self.pieces {
            for edge in [p.lo, p.hi] {
                if edge > lo && edge < hi {
                    cuts.push(edge);
                }
            }
        }
        if let Some(ext) = &self.negative_extension {
            if ext.hi > lo && ext.hi < hi {
                cuts.push(ext.hi);
            }
        }
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let per = tol / (cuts.len() - 1) as f64;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += adaptive_simpson(&f, w[0], w[1], per)?;
        }
        Ok(sign * total)
    }

    /// Default negative extension: the linear continuation
    /// `phi(y) = phi(0) - K y` on `[-sigma_max, 0]` with
    /// `K = max(1, |phi'(0)| + 1)`.
    pub fn with_default_negative_extension(mut self, sigma_max: f64) -> Result<Self> {
        let phi0 = self.eval(0.0);
        let k = 1.0f64.max(self.deriv(0.0).abs() + 1.0);
        // phi(0) - K y = (phi(0) - K) + K u  with u = 1 - y
        let ext = FluxPiece::poly(-sigma_max.abs(), 0.0, vec![phi0 - k, k]);
        self.negative_extension = Some(ext);
        FluxFunction::new(self.label.clone(), self.pieces, self.negative_extension)
    }
}

/// Wave speed of the `(0,1)` overfall for the given model:
/// the mean of `phi` for the PDE, the harmonic mean for the lattice.
pub fn wave_speed(model: Model, phi: &FluxFunction) -> Result<f64> {
    match model {
        Model::Continuous => phi.integrate(|y| phi.eval(y), 0.0, 1.0, 1e-11),
        Model::Lattice => {
            let inv = phi.integrate(|y| 1.0 / phi.eval(y), 0.0, 1.0, 1e-11)?;
            Ok(1.0 / inv)
        }
    }
}

/// Wave speed of a general overfall `(alpha, beta)` for the lattice model:
/// `(beta - alpha) / int_alpha^beta dy/phi`. Used by barrier wave trains with
/// overfall `(-sigma, 1)`.
pub fn wave_speed_lattice_overfall(phi: &FluxFunction, alpha: f64, beta: f64) -> Result<f64> {
    if alpha < phi.domain_lo() {
        return Err(Error::config(format!(
            "overfall alpha = {alpha} below flux domain {}",
            phi.domain_lo()
        )));
    }
    let inv = phi.integrate(|y| 1.0 / phi.eval(y), alpha, beta, 1e-11)?;
    Ok((beta - alpha) / inv)
}

/// Outcome of a shock-profile condition scan over `u` in `(0, 1)`.
#[derive(Debug, Clone, Serialize)]
pub struct ShockProfileReport {
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_u: f64,
}

/// Margins below which a grid point does not count as strictly positive;
/// covers quadrature noise around the constant-flux equality case.
const MARGIN_TOL: f64 = 1e-13;

/// Evaluate the strict shock-profile inequality on a uniform interior grid.
///
/// Continuous model: `(1/u) int_0^u phi > C`. Lattice model:
/// `(1/u) int_0^u dy/phi < 1/C`. Margins are reported with sign so a failing
/// flux shows where and by how much it fails.
pub fn check_shock_profile(
    model: Model,
    phi: &FluxFunction,
    grid_size: usize,
) -> Result<ShockProfileReport> {
    if grid_size < 100 {
        return Err(Error::config("check_shock_profile: grid_size must be >= 100"));
    }
    let c = wave_speed(model, phi)?;
    let cum = match model {
        Model::Continuous => Antiderivative::build(|y| phi.eval(y), 0.0, 1.0, 4097)?,
        Model::Lattice => Antiderivative::build(|y| 1.0 / phi.eval(y), 0.0, 1.0, 4097)?,
    };
    let mut worst = f64::INFINITY;
    let mut worst_u = 0.0;
    for i in 1..grid_size {
        let u = i as f64 / grid_size as f64;
        let avg = cum.eval(u) / u;
        let margin = match model {
            Model::Continuous => avg - c,
            Model::Lattice => 1.0 / c - avg,
        };
        if margin < worst {
            worst = margin;
            worst_u = u;
        }
    }
    Ok(ShockProfileReport { holds: worst > MARGIN_TOL, worst_margin: worst, worst_u })
}

/// Generalized lattice shock condition for overfall `(alpha, beta)`:
/// `(1/(u - alpha)) int_alpha^u dy/phi < (1/(beta - alpha)) int_alpha^beta dy/phi`.
pub(crate) fn shock_condition_lattice_overfall(
    phi: &FluxFunction,
    alpha: f64,
    beta: f64,
    grid_size: usize,
) -> Result<bool> {
    let cum = Antiderivative::build(|y| 1.0 / phi.eval(y), alpha, beta, 4097)?;
    let mean = cum.total() / (beta - alpha);
    for i in 1..grid_size {
        let u = alpha + (beta - alpha) * i as f64 / grid_size as f64;
        let avg = cum.eval(u) / (u - alpha);
        if !(mean - avg > MARGIN_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Phi(F) = int_F^1 dy / phi(y)`, the lattice equation's natural potential.
pub fn potential_phi(phi: &FluxFunction, f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::domain(format!("potential_phi: F = {f} outside [0, 1]")));
    }
    phi.integrate(|y| 1.0 / phi.eval(y), f, 1.0, 1e-12)
}

/// Cached `Phi` evaluator for hot loops (front-shift sums, balance offsets).
///
/// Independent of [`potential_phi`] only in cost, not in definition: both
/// integrate `1/phi`, and the table construction is validated against the
/// adaptive route in tests.
pub struct PhiTable {
    anti: Antiderivative,
}

impl PhiTable {
    pub fn new(phi: &FluxFunction) -> Result<Self> {
        Ok(Self { anti: Antiderivative::build(|y| 1.0 / phi.eval(y), 0.0, 1.0, 8193)? })
    }

    /// `Phi(F)` for `F` in `[0, 1]` (clamped).
    pub fn eval(&self, f: f64) -> f64 {
        let f = f.clamp(0.0, 1.0);
        self.anti.total() - self.anti.eval(f)
    }

    /// `Phi(0) = 1 / C_lattice`.
    pub fn at_zero(&self) -> f64 {
        self.anti.total()
    }
}

/// Invert `phi` on the declared monotone branch `[y_lo, y_hi]`.
pub fn phi_inverse(phi: &FluxFunction, v: f64, y_lo: f64, y_hi: f64) -> Result<f64> {
    if !(y_lo < y_hi) || y_lo < phi.domain_lo() - 1e-12 || y_hi > 1.0 + 1e-12 {
        return Err(Error::config(format!("phi_inverse: bad branch [{y_lo}, {y_hi}]")));
    }
    let samples = 64;
    let mut sign = 0.0f64;
    for i in 0..=samples {
        let y = y_lo + (y_hi - y_lo) * i as f64 / samples as f64;
        let d = phi.deriv(y);
        if d == 0.0 {
            continue;
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return Err(Error::config(format!(
                "phi_inverse: phi is not monotone on [{y_lo}, {y_hi}]"
            )));
        }
    }
    let (va, vb) = (phi.eval(y_lo), phi.eval(y_hi));
    let (vmin, vmax) = (va.min(vb), va.max(vb));
    if v < vmin - 1e-12 || v > vmax + 1e-12 {
        return Err(Error::domain(format!(
            "phi_inverse: v = {v} outside range [{vmin}, {vmax}] of the branch"
        )));
    }
    if (v - va).abs() <= 1e-15 {
        return Ok(y_lo);
    }
    if (v - vb).abs() <= 1e-15 {
        return Ok(y_hi);
    }
    brent(|y| phi.eval(y) - v, y_lo, y_hi, 1e-13)
}

/// Endpoint degeneracy pattern of a shock-profile flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegeneracyKind {
    NonDegenerate,
    RightDegenerate,
    LeftDegenerate,
    BothDegenerate,
}

/// Degeneracy classification along with the coefficients of the `ln t` term
/// in the long-time front shift, for both models.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DegeneracyCase {
    pub kind: DegeneracyKind,
    /// Continuous-model coefficient: `0`, `1/phi'(1)`, `-1/phi'(0)`, or the
    /// difference, by case.
    pub log_coeff_continuous: f64,
    /// Lattice-model coefficient: the same table scaled by `C/2`.
    pub log_coeff_lattice: f64,
}

/// Compare `phi(0)` and `phi(1)` against the wave speed within `tol` and fill
/// in the shift-coefficient tables. A degenerate endpoint with vanishing
/// `phi'` violates the classification hypotheses and is rejected.
pub fn classify_degeneracy(model: Model, phi: &FluxFunction, tol: f64) -> Result<DegeneracyCase> {
    let shock = check_shock_profile(model, phi, 512)?;
    if !shock.holds {
        return Err(Error::config(format!(
            "classify_degeneracy: shock profile condition fails (worst margin {:.3e} at u = {:.3})",
            shock.worst_margin, shock.worst_u
        )));
    }
    let c = wave_speed(model, phi)?;
    let p0 = phi.eval(0.0);
    let p1 = phi.eval(1.0);
    let d0 = phi.deriv(0.0);
    let d1 = phi.deriv(1.0);
    let left = (p0 - c).abs() <= tol;
    let right = (p1 - c).abs() <= tol;
    if left && d0.abs() < 1e-12 {
        return Err(Error::config("classify_degeneracy: phi(0) = C but phi'(0) = 0"));
    }
    if right && d1.abs() < 1e-12 {
        return Err(Error::config("classify_degeneracy: phi(1) = C but phi'(1) = 0"));
    }
    let (kind, cont) = match (left, right) {
        (false, false) => (DegeneracyKind::NonDegenerate, 0.0),
        (false, true) => (DegeneracyKind::RightDegenerate, 1.0 / d1),
        (true, false) => (DegeneracyKind::LeftDegenerate, -1.0 / d0),
        (true, true) => (DegeneracyKind::BothDegenerate, 1.0 / d1 - 1.0 / d0),
    };
    Ok(DegeneracyCase { kind, log_coeff_continuous: cont, log_coeff_lattice: 0.5 * c * cont })
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

/// Serializable flux description. Polynomial pieces carry `coeffs` (in powers
/// of `1 - y`); rational pieces carry `num` and `den`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxSpec {
    pub label: String,
    pub pieces: Vec<PieceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_extension: Option<PieceSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<f64>>,
}

impl PieceSpec {
    fn to_piece(&self) -> Result<FluxPiece> {
        let form = match (&self.coeffs, &self.num, &self.den) {
            (Some(c), None, None) => PieceForm::Poly(c.clone()),
            (None, Some(n), Some(d)) => PieceForm::Rational { num: n.clone(), den: d.clone() },
            _ => {
                return Err(Error::config(
                    "flux piece: provide either `coeffs` or both `num` and `den`",
                ))
            }
        };
        Ok(FluxPiece { lo: self.lo, hi: self.hi, form })
    }

    fn from_piece(p: &FluxPiece) -> Self {
        match &p.form {
            PieceForm::Poly(c) => {
                Self { lo: p.lo, hi: p.hi, coeffs: Some(c.clone()), num: None, den: None }
            }
            PieceForm::Rational { num, den } => Self {
                lo: p.lo,
                hi: p.hi,
                coeffs: None,
                num: Some(num.clone()),
                den: Some(den.clone()),
            },
        }
    }
}

impl FluxFunction {
    pub fn from_spec(spec: &FluxSpec) -> Result<Self> {
        let pieces = spec.pieces.iter().map(|p| p.to_piece()).collect::<Result<Vec<_>>>()?;
        let ext = spec.negative_extension.as_ref().map(|p| p.to_piece()).transpose()?;
        FluxFunction::new(spec.label.clone(), pieces, ext)
    }

    pub fn to_spec(&self) -> FluxSpec {
        FluxSpec {
            label: self.label.clone(),
            pieces: self.pieces.iter().map(PieceSpec::from_piece).collect(),
            negative_extension: self.negative_extension.as_ref().map(PieceSpec::from_piece),
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: FluxSpec = serde_json::from_str(json)?;
        FluxFunction::from_spec(&spec)
    }
}

// ---------------------------------------------------------------------------
// Shipped fluxes
// ---------------------------------------------------------------------------

/// `phi(y) = 2 - y`: non-degenerate for both models.
pub fn linear_2my() -> FluxFunction {
    FluxFunction::new("linear_2my", vec![FluxPiece::poly(0.0, 1.0, vec![1.0, 1.0])], None)
        .expect("valid builtin flux")
}

/// `phi == 1`: constant flux, fails the strict shock-profile condition.
pub fn unit_flux() -> FluxFunction {
    FluxFunction::new("unit", vec![FluxPiece::poly(0.0, 1.0, vec![1.0])], None)
        .expect("valid builtin flux")
}

/// `phi(y) = 1 + y`: increasing flux with `phi'(0) >= 0`, used for the
/// uniform front-flatness checks on small data.
pub fn linear_1py() -> FluxFunction {
    FluxFunction::new("linear_1py", vec![FluxPiece::poly(0.0, 1.0, vec![2.0, -1.0])], None)
        .expect("valid builtin flux")
}

/// Right-degenerate quadratic family member: `phi(y) = 1 - (1-y)/2 + c(1-y)^2`
/// with `c` solved at build time so the lattice speed is exactly `phi(1) = 1`.
/// Ships with the default negative extension so barrier wave trains with
/// overfall `(-sigma, 1)` can be constructed.
pub fn degenerate_quadratic() -> FluxFunction {
    static CACHE: OnceLock<FluxFunction> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            let residual = |c: f64| {
                let f = FluxFunction::new(
                    "tmp",
                    vec![FluxPiece::poly(0.0, 1.0, vec![1.0, -0.5, c])],
                    None,
                )
                .expect("family member is positive");
                f.integrate(|y| 1.0 / f.eval(y), 0.0, 1.0, 1e-13).expect("quadrature") - 1.0
            };
            let c = brent(residual, 0.5, 1.5, 1e-14).expect("root of speed constraint");
            FluxFunction::new(
                "degenerate_quadratic",
                vec![FluxPiece::poly(0.0, 1.0, vec![1.0, -0.5, c])],
                None,
            )
            .and_then(|f| f.with_default_negative_extension(0.25))
            .expect("valid builtin flux")
        })
        .clone()
}

/// Left-degenerate rational flux `phi(y) = 1 / (1 + 0.6 (3y^2 - 2y))`:
/// `phi(0) = C = 1 > phi(1)`.
pub fn left_degenerate() -> FluxFunction {
    // denominator in u = 1 - y: 1 + 0.6 (1 - 4u + 3u^2)
    FluxFunction::new(
        "left_degenerate",
        vec![FluxPiece {
            lo: 0.0,
            hi: 1.0,
            form: PieceForm::Rational { num: vec![1.0], den: vec![1.6, -2.4, 1.8] },
        }],
        None,
    )
    .expect("valid builtin flux")
}

/// Both-degenerate rational flux with `phi(0) = phi(1) = C = 1` and equal
/// endpoint slopes, so the lattice log coefficient cancels to zero.
pub fn both_degenerate() -> FluxFunction {
    // 1/phi in u = 1 - y: 1 + a u - 3a u^2 + 2a u^3, a = 0.5
    let a = 0.5;
    FluxFunction::new(
        "both_degenerate",
        vec![FluxPiece {
            lo: 0.0,
            hi: 1.0,
            form: PieceForm::Rational { num: vec![1.0], den: vec![1.0, a, -3.0 * a, 2.0 * a] },
        }],
        None,
    )
    .expect("valid builtin flux")
}

/// Look up a shipped flux by label.
pub fn flux_by_label(label: &str) -> Option<FluxFunction> {
    match label {
        "linear_2my" => Some(linear_2my()),
        "unit" => Some(unit_flux()),
        "linear_1py" => Some(linear_1py()),
        "degenerate_quadratic" => Some(degenerate_quadratic()),
        "left_degenerate" => Some(left_degenerate()),
        "both_degenerate" => Some(both_degenerate()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::composite_simpson;

    /// Test-local quadrature oracle: dense composite Simpson, independent of
    /// the adaptive implementation route.
    fn oracle_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        let n = 16385;
        let h = (b - a) / (n - 1) as f64;
        let vals: Vec<f64> = (0..n).map(|i| f(a + i as f64 * h)).collect();
        composite_simpson(&vals, h)
    }

    #[test]
    fn wave_speed_examples() {
        let f = linear_2my();
        let c_cont = wave_speed(Model::Continuous, &f).unwrap();
        assert!((c_cont - 1.5).abs() < 1e-10);
        let c_lat = wave_speed(Model::Lattice, &f).unwrap();
        assert!((c_lat - 1.0 / std::f64::consts::LN_2).abs() < 1e-10);
        // quadrature oracle cross-check
        let oracle = oracle_integral(|y| 1.0 / (2.0 - y), 0.0, 1.0);
        assert!((1.0 / c_lat - oracle).abs() < 1e-10);

        let u = unit_flux();
        assert!((wave_speed(Model::Continuous, &u).unwrap() - 1.0).abs() < 1e-12);
        assert!((wave_speed(Model::Lattice, &u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shock_profile_examples() {
        let f = linear_2my();
        let lat = check_shock_profile(Model::Lattice, &f, 500).unwrap();
        assert!(lat.holds, "worst {} at {}", lat.worst_margin, lat.worst_u);
        let cont = check_shock_profile(Model::Continuous, &f, 500).unwrap();
        assert!(cont.holds);
        // (1/u) int_0^u (2-y) dy = 2 - u/2 > 3/2 with margin (1-u)/2
        assert!((cont.worst_margin - 0.5 / 500.0).abs() < 1e-9);

        let u = unit_flux();
        for model in [Model::Continuous, Model::Lattice] {
            let rep = check_shock_profile(model, &u, 200).unwrap();
            assert!(!rep.holds);
            assert!(rep.worst_margin.abs() < 1e-12);
        }
    }

    #[test]
    fn potential_examples() {
        let f = linear_2my();
        assert_eq!(potential_phi(&f, 1.0).unwrap(), 0.0);
        assert!((potential_phi(&f, 0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let u = unit_flux();
        assert!((potential_phi(&u, 0.25).unwrap() - 0.75).abs() < 1e-12);
        assert!(potential_phi(&f, -0.1).is_err());
        assert!(potential_phi(&f, 1.1).is_err());
    }

    #[test]
    fn phi_table_matches_adaptive_route() {
        for f in [linear_2my(), degenerate_quadratic(), left_degenerate()] {
            let table = PhiTable::new(&f).unwrap();
            for i in 0..=40 {
                let y = i as f64 / 40.0;
                let direct = potential_phi(&f, y).unwrap();
                assert!((table.eval(y) - direct).abs() < 1e-12, "flux {} y {y}", f.label());
            }
        }
    }

    #[test]
    fn phi_strictly_decreasing() {
        let f = degenerate_quadratic();
        let mut state = 0x243F_6A88u64;
        let mut rand = || {
            // xorshift64*
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let a = rand();
            let b = rand();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi - lo < 1e-6 {
                continue;
            }
            let pl = potential_phi(&f, lo).unwrap();
            let ph = potential_phi(&f, hi).unwrap();
            assert!(pl > ph, "Phi must strictly decrease: Phi({lo})={pl} Phi({hi})={ph}");
        }
    }

    #[test]
    fn lattice_speed_is_inverse_potential_at_zero() {
        for f in [linear_2my(), degenerate_quadratic(), both_degenerate()] {
            let c = wave_speed(Model::Lattice, &f).unwrap();
            let phi0 = potential_phi(&f, 0.0).unwrap();
            assert!((c - 1.0 / phi0).abs() < 1e-10, "flux {}", f.label());
        }
    }

    #[test]
    fn harmonic_mean_sandwich() {
        for f in [linear_2my(), degenerate_quadratic(), left_degenerate(), both_degenerate()] {
            let rep = check_shock_profile(Model::Lattice, &f, 512).unwrap();
            assert!(rep.holds, "flux {}", f.label());
            let c = wave_speed(Model::Lattice, &f).unwrap();
            let lo = f.eval(0.0).min(f.eval(1.0));
            assert!(lo <= c + 1e-10, "flux {}", f.label());
            assert!(c <= f.max_on_unit() + 1e-10, "flux {}", f.label());
        }
    }

    #[test]
    fn phi_inverse_examples() {
        let f = linear_2my();
        assert!((phi_inverse(&f, 1.5, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((phi_inverse(&f, 2.0, 0.0, 1.0).unwrap() - 0.0).abs() < 1e-12);

        let d = degenerate_quadratic();
        // monotone increasing branch near y = 1
        let branch_lo: f64 = 1.0 - 1.0 / (4.0 * 0.79); // approximate turning point
        let v = d.eval(0.3);
        // 0.3 is on the decreasing branch; invert there
        let y = phi_inverse(&d, v, 0.0, branch_lo.min(0.6)).unwrap();
        assert!((y - 0.3).abs() < 1e-10);
        // round-trip identity on the increasing branch
        for &yy in &[0.75, 0.9, 0.99] {
            let back = phi_inverse(&d, d.eval(yy), 0.7, 1.0).unwrap();
            assert!((back - yy).abs() < 1e-10);
        }
        assert!(phi_inverse(&f, 5.0, 0.0, 1.0).is_err());
        assert!(phi_inverse(&d, 1.0, 0.0, 1.0).is_err(), "non-monotone branch must be rejected");
    }

    #[test]
    fn classify_nondegenerate_and_tolerance_semantics() {
        let f = linear_2my();
        let lat = classify_degeneracy(Model::Lattice, &f, 1e-9).unwrap();
        assert_eq!(lat.kind, DegeneracyKind::NonDegenerate);
        assert_eq!(lat.log_coeff_lattice, 0.0);
        let cont = classify_degeneracy(Model::Continuous, &f, 1e-9).unwrap();
        assert_eq!(cont.kind, DegeneracyKind::NonDegenerate);
        assert_eq!(cont.log_coeff_continuous, 0.0);
    }

    #[test]
    fn classify_degenerate_quadratic_against_root_find_oracle() {
        // independent oracle: solve the speed constraint with test-local
        // quadrature + bisection, then Gamma_0 = C / (2 phi'(1)) with
        // phi'(1) = 1/2 exactly.
        let g = |c: f64| oracle_integral(|y| 1.0 / (1.0 - (1.0 - y) / 2.0 + c * (1.0 - y) * (1.0 - y)), 0.0, 1.0) - 1.0;
        let (mut a, mut b) = (0.5, 1.5);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if g(m).signum() == g(a).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        let c_star = 0.5 * (a + b);

        let f = degenerate_quadratic();
        // the shipped flux solves the same constraint
        assert!((f.eval(0.0) - (0.5 + c_star)).abs() < 1e-8, "c* mismatch");
        let case = classify_degeneracy(Model::Lattice, &f, 1e-9).unwrap();
        assert_eq!(case.kind, DegeneracyKind::RightDegenerate);
        assert!((case.log_coeff_lattice - 1.0).abs() < 1e-8, "Gamma_0 = C/(2 phi'(1)) = 1");
        assert!((f.deriv(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn classify_left_and_both_degenerate() {
        let l = classify_degeneracy(Model::Lattice, &left_degenerate(), 1e-9).unwrap();
        assert_eq!(l.kind, DegeneracyKind::LeftDegenerate);
        // phi'(0) = 1.2 so the lattice coefficient is -1/(2*1.2)
        assert!((l.log_coeff_lattice + 1.0 / 2.4).abs() < 1e-9, "{}", l.log_coeff_lattice);

        let b = classify_degeneracy(Model::Lattice, &both_degenerate(), 1e-9).unwrap();
        assert_eq!(b.kind, DegeneracyKind::BothDegenerate);
        assert!(b.log_coeff_lattice.abs() < 1e-9, "equal slopes cancel");
    }

    #[test]
    fn classify_continuous_right_degenerate() {
        // phi = 1 + 0.3 (3u^2 - 2u), u = 1 - y: the mean over [0,1] equals
        // phi(1) = 1, so the continuous model is right-degenerate
        let f = FluxFunction::new(
            "cont_right_deg",
            vec![FluxPiece::poly(0.0, 1.0, vec![1.0, -0.6, 0.9])],
            None,
        )
        .unwrap();
        let c = wave_speed(Model::Continuous, &f).unwrap();
        assert!((c - 1.0).abs() < 1e-11);
        assert!((f.eval(1.0) - 1.0).abs() < 1e-15);
        let case = classify_degeneracy(Model::Continuous, &f, 1e-9).unwrap();
        assert_eq!(case.kind, DegeneracyKind::RightDegenerate);
        // gamma_0 = 1/phi'(1) with phi'(1) = 0.6
        assert!((case.log_coeff_continuous - 1.0 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn classify_rejects_flat_degenerate_endpoint() {
        // phi(0) = C = 1 with phi'(0) = 0: 1/phi = (1+a) - 6a u + 9a u^2 - 4a u^3, a = 0.5
        let f = FluxFunction::new(
            "flat_left",
            vec![FluxPiece {
                lo: 0.0,
                hi: 1.0,
                form: PieceForm::Rational { num: vec![1.0], den: vec![1.5, -3.0, 4.5, -2.0] },
            }],
            None,
        )
        .unwrap();
        assert!((f.eval(0.0) - 1.0).abs() < 1e-12);
        assert!(f.deriv(0.0).abs() < 1e-12);
        let err = classify_degeneracy(Model::Lattice, &f, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn classify_invariant_under_repiecing() {
        let one = linear_2my();
        let two = FluxFunction::new(
            "linear_2my_split",
            vec![
                FluxPiece::poly(0.0, 0.5, vec![1.0, 1.0]),
                FluxPiece::poly(0.5, 1.0, vec![1.0, 1.0]),
            ],
            None,
        )
        .unwrap();
        for model in [Model::Continuous, Model::Lattice] {
            let a = classify_degeneracy(model, &one, 1e-9).unwrap();
            let b = classify_degeneracy(model, &two, 1e-9).unwrap();
            assert_eq!(a.kind, b.kind);
            assert!((wave_speed(model, &one).unwrap() - wave_speed(model, &two).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn construction_rejects_bad_fluxes() {
        // gap
        assert!(FluxFunction::new(
            "gap",
            vec![FluxPiece::poly(0.0, 0.4, vec![1.0]), FluxPiece::poly(0.5, 1.0, vec![1.0])],
            None
        )
        .is_err());
        // jump at junction
        assert!(FluxFunction::new(
            "jump",
            vec![FluxPiece::poly(0.0, 0.5, vec![1.0]), FluxPiece::poly(0.5, 1.0, vec![2.0])],
            None
        )
        .is_err());
        // non-positive
        assert!(FluxFunction::new("neg", vec![FluxPiece::poly(0.0, 1.0, vec![1.0, -2.0])], None)
            .is_err());
    }

    #[test]
    fn negative_extension_default() {
        let f = degenerate_quadratic();
        assert!(f.has_negative_extension());
        assert!(f.domain_lo() < 0.0);
        // strictly decreasing and continuous at 0
        let v0 = f.eval(0.0);
        assert!(f.eval(-0.1) > v0);
        assert!(f.eval(-0.2) > f.eval(-0.1));
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{
            "label": "linear_2my",
            "pieces": [{ "lo": 0.0, "hi": 1.0, "coeffs": [1.0, 1.0] }]
        }"#;
        let f = FluxFunction::from_json(json).unwrap();
        assert!((f.eval(0.25) - 1.75).abs() < 1e-15);
        let spec = degenerate_quadratic().to_spec();
        let back = FluxFunction::from_spec(&spec).unwrap();
        for i in 0..=20 {
            let y = i as f64 / 20.0;
            assert_eq!(back.eval(y), degenerate_quadratic().eval(y));
        }
    }
}
