//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Plain bisection on a sign-changing bracket. Deterministic and robust;
/// used where evaluation cost dominates and ~50 iterations are acceptable.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numeric(format!(
            "bisect: no sign change on [{a}, {b}] (f: {fa:.3e}, {fb:.3e})"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Brent's method: inverse quadratic interpolation guarded by bisection.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numeric(format!(
            "brent: no sign change on [{a}, {b}] (f: {fa:.3e}, {fb:.3e})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Grow a bracket geometrically around `[a, b]` until `f` changes sign,
/// staying inside `[lo_limit, hi_limit]`.
pub fn expand_bracket<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut b: f64,
    lo_limit: f64,
    hi_limit: f64,
) -> Result<(f64, f64)> {
    assert!(a < b);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..200 {
        if fa == 0.0 {
            return Ok((a, a));
        }
        if fb == 0.0 {
            return Ok((b, b));
        }
        if fa.signum() != fb.signum() {
            return Ok((a, b));
        }
        let w = b - a;
        if fa.abs() < fb.abs() {
            a = (a - w).max(lo_limit);
            fa = f(a);
        } else {
            b = (b + w).min(hi_limit);
            fb = f(b);
        }
        if a == lo_limit && b == hi_limit && fa.signum() == fb.signum() {
            break;
        }
    }
    Err(Error::numeric(format!(
        "expand_bracket: no sign change found in [{lo_limit}, {hi_limit}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_quadratic_root() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn bisect_agrees_with_brent() {
        let f = |x: f64| x.exp() - 3.0;
        let a = bisect(f, 0.0, 2.0, 1e-13).unwrap();
        let b = brent(f, 0.0, 2.0, 1e-13).unwrap();
        assert!((a - b).abs() < 1e-11);
        assert!((a - 3.0f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn expand_finds_bracket() {
        let f = |x: f64| x - 37.5;
        let (a, b) = expand_bracket(&f, 0.0, 1.0, -1e4, 1e4).unwrap();
        assert!(a <= 37.5 && 37.5 <= b);
    }

    #[test]
    fn no_sign_change_errors() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
