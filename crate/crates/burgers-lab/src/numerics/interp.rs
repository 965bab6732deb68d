//! Cubic Hermite interpolation on uniform tables and cached antiderivatives.

use crate::error::{Error, Result};
use crate::numerics::quad::adaptive_simpson;

/// Cubic Hermite basis evaluation on one interval.
///
/// `x0`/`x1` bracket `x`; `v0`,`v1` are endpoint values, `d0`,`d1` endpoint
/// derivatives.
pub fn hermite_segment(x0: f64, x1: f64, v0: f64, v1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * v0 + h * h10 * d0 + h01 * v1 + h * h11 * d1
}

/// Hermite interpolation on a uniform table starting at `x_lo` with step `h`.
/// `x` must lie inside the table span.
pub fn hermite_eval(x_lo: f64, h: f64, vals: &[f64], ders: &[f64], x: f64) -> f64 {
    debug_assert_eq!(vals.len(), ders.len());
    debug_assert!(vals.len() >= 2);
    let n = vals.len();
    let mut i = ((x - x_lo) / h).floor() as isize;
    if i < 0 {
        i = 0;
    }
    if i as usize >= n - 1 {
        i = (n - 2) as isize;
    }
    let i = i as usize;
    let x0 = x_lo + i as f64 * h;
    hermite_segment(x0, x0 + h, vals[i], vals[i + 1], ders[i], ders[i + 1], x)
}

/// Monotonicity-preserving slopes for a tabulated monotone function
/// (Fritsch-Carlson limiting). Used when no analytic derivative is stored,
/// e.g. for profiles imported from CSV.
pub fn monotone_slopes(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    assert!(n >= 2);
    let d: Vec<f64> = (0..n - 1).map(|i| (vals[i + 1] - vals[i]) / h).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            m[i] = 0.5 * (d[i - 1] + d[i]);
        }
    }
    // limit to keep the interpolant monotone
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d[i];
        let b = m[i + 1] / d[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[i] = t * a * d[i];
            m[i + 1] = t * b * d[i];
        }
    }
    m
}

/// Cached cumulative integral `x -> int_lo^x f` on a uniform node grid, with
/// cubic Hermite evaluation between nodes (the derivative of the cumulative is
/// `f` itself, so segments are fourth-order accurate).
///
/// Node increments are computed with two-panel Simpson plus Richardson
/// refinement via [`adaptive_simpson`] at a tight per-node budget, and summed
/// with Kahan compensation so the accumulated error stays near machine level.
pub struct Antiderivative {
    lo: f64,
    h: f64,
    cum: Vec<f64>,
    deriv: Vec<f64>,
}

impl Antiderivative {
    pub fn build<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(hi > lo) || nodes < 2 {
            return Err(Error::config("Antiderivative: need hi > lo and nodes >= 2"));
        }
        let h = (hi - lo) / (nodes - 1) as f64;
        let mut cum = Vec::with_capacity(nodes);
        let mut deriv = Vec::with_capacity(nodes);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        cum.push(0.0);
        deriv.push(f(lo));
        for i in 1..nodes {
            let a = lo + (i - 1) as f64 * h;
            let b = lo + i as f64 * h;
            let inc = adaptive_simpson(&f, a, b, 1e-15)?;
            // Kahan step
            let y = inc - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            cum.push(sum);
            deriv.push(f(b));
        }
        Ok(Self { lo, h, cum, deriv })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.h * (self.cum.len() - 1) as f64
    }

    /// Total integral over the build interval.
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Evaluate the cumulative integral at `x` inside the build interval.
    pub fn eval(&self, x: f64) -> f64 {
        hermite_eval(self.lo, self.h, &self.cum, &self.deriv, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| x * x * x - x;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let v = hermite_segment(1.0, 2.0, f(1.0), f(2.0), df(1.0), df(2.0), 1.3);
        assert!((v - f(1.3)).abs() < 1e-14);
    }

    #[test]
    fn antiderivative_of_exp() {
        // fourth-order segments: error ~ (h^4 / 384) max|f'''|
        let coarse = Antiderivative::build(|x: f64| x.exp(), 0.0, 1.0, 257).unwrap();
        let fine = Antiderivative::build(|x: f64| x.exp(), 0.0, 1.0, 8193).unwrap();
        for &x in &[0.0f64, 0.1, 0.305, 0.77, 1.0] {
            let exact = x.exp() - 1.0;
            assert!((coarse.eval(x) - exact).abs() < 5e-12, "x={x}");
            assert!((fine.eval(x) - exact).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn monotone_slopes_stay_monotone() {
        let vals = vec![0.0, 0.0, 0.1, 0.9, 1.0, 1.0];
        let m = monotone_slopes(&vals, 1.0);
        for s in m {
            assert!(s >= 0.0);
        }
    }
}
