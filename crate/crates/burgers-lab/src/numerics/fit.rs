//! Small least-squares helpers for asymptotic slope extraction.

/// Least squares of `y ~ slope * ln(t) + intercept` over the given samples.
/// Returns `(slope, intercept, rms)`.
pub fn linear_fit_ln(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    debug_assert_eq!(ts.len(), ys.len());
    let n = ts.len() as f64;
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

/// Slope of `ln v` against `ln t`, ignoring non-positive samples. Returns 0
/// when fewer than two usable samples remain (a flat or empty series has no
/// growth trend to report).
pub fn loglog_trend_slope(ts: &[f64], vs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(vs)
        .filter(|(t, v)| **t > 0.0 && **v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det == 0.0 {
        return 0.0;
    }
    (n * sxy - sx * sy) / det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_log_law() {
        let ts: Vec<f64> = (1..=60).map(|i| 10.0 * 1.1f64.powi(i)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 1.0 * t.ln() + 2.7).collect();
        let (g, c, rms) = linear_fit_ln(&ts, &ys);
        assert!((g - 1.0).abs() < 1e-10);
        assert!((c - 2.7).abs() < 1e-10);
        assert!(rms < 1e-12);
    }

    #[test]
    fn trend_of_power_law() {
        let ts: Vec<f64> = (1..=40).map(|i| 2.0f64.powi(i / 4) * 10.0).collect();
        let vs: Vec<f64> = ts.iter().map(|t| 5.0 / t).collect();
        let s = loglog_trend_slope(&ts, &vs);
        assert!((s + 1.0).abs() < 1e-10);
    }
}
