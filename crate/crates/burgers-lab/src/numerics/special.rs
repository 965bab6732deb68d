//! Special functions: positive-part logarithm, log-factorials, and the
//! Gaussian integrals behind the diffusive tail profiles.

use std::sync::OnceLock;

/// `ln_+(x) = max(0, ln x)`, extended by 0 for non-positive arguments.
pub fn ln_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

const TABLE_N: usize = 257;

fn ln_factorial_table() -> &'static [f64; TABLE_N] {
    static TABLE: OnceLock<[f64; TABLE_N]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0f64; TABLE_N];
        // Kahan-compensated cumulative sum of ln k
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (k, slot) in t.iter_mut().enumerate().skip(1) {
            let y = (k as f64).ln() - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
            *slot = sum;
        }
        t
    })
}

/// `ln(n!)`: exact cumulative table for small `n`, Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_N {
        return ln_factorial_table()[n as usize];
    }
    // Stirling series for ln Gamma(z) at z = n + 1.
    let z = (n + 1) as f64;
    let zi = 1.0 / z;
    let zi2 = zi * zi;
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + zi * (1.0 / 12.0 + zi2 * (-1.0 / 360.0 + zi2 * (1.0 / 1260.0 - zi2 / 1680.0)))
}

/// `int_{-inf}^{s} exp(-2 y^2) dy`, evaluated through `erfc` so the deep
/// negative tail keeps full relative accuracy.
pub fn gauss_quarter_integral(s: f64) -> f64 {
    // sqrt(pi/8) * erfc(-sqrt(2) s)
    const SQRT_PI_OVER_8: f64 = 0.626_657_068_657_750_1;
    SQRT_PI_OVER_8 * libm::erfc(-std::f64::consts::SQRT_2 * s)
}

/// `int_{-inf}^{s} exp(-2 y^2 / c) dy` for `c > 0`.
pub fn gauss_quarter_integral_scaled(s: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0);
    let rc = c.sqrt();
    rc * gauss_quarter_integral(s / rc)
}
