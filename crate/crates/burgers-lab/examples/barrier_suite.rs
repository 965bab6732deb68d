//! The explicit lower barriers: diffusive-tail inequality, patching, the
//! four-piece barrier, comparison against a stored run, and the
//! falsification control.
//!
//! Run with: `cargo run --release --example barrier_suite`

use burgers_lab::flux::degenerate_quadratic;
use burgers_lab::lattice::{run_lattice, InitialData, SnapshotPlan};
use burgers_lab::subsolution::*;

fn main() -> burgers_lab::Result<()> {
    let phi = degenerate_quadratic();
    let t_grid: Vec<f64> = (0..=16).map(|i| 1e3 * 100.0f64.powf(i as f64 / 16.0)).collect();
    let rep = check_asymptotic_subsolution(&phi, 2.25, (1.75, 6.0), &t_grid)?;
    println!("diffusive-tail barrier: residual nonpositive from t0 = {:.0}, scaled margin {:.3e}",
        rep.t0_empirical, rep.margin_scaled);

    let mono = check_psi_monotone(1.0, phi.deriv(1.0), 400);
    println!("scaled tail strictly decreasing: max derivative {:.3e}", mono.max_derivative);

    let patch = check_patching(&phi, 2.0, 0.5, &[1e4, 1e5, 1e6])?;
    println!("patching width delta = {:.4}; margins: {:?}", patch.delta,
        patch.per_time.iter().map(|(t, m)| format!("t={t:.0e}: {m:.2e}")).collect::<Vec<_>>());

    let rec = run_lattice(
        &InitialData::Step { alpha: 0.0, beta: 1.0 },
        &phi,
        0.0,
        1200.0,
        0.1,
        &SnapshotPlan::Times(vec![400.0, 800.0, 1200.0]),
        (-40, 120),
    )?;
    let mut sub = build_patched_subsolution(&phi, PatchedParams { a_cap: 6.0, ..Default::default() })?;
    let cmp = comparison_check(&rec, &mut sub, Some(0.15))?;
    println!("\ncomparison: barrier shift T = {}, violations {} (corollary {})",
        cmp.t_shift, cmp.violations, cmp.corollary_violations);

    // halving the tail amplitude destroys the differential inequality
    let control = check_asymptotic_subsolution_with_amplitude(&phi, 0.0, (0.5, 2.5),
        &[1e4, 1e5, 1e6], 0.5)?;
    let bad = control.per_time.iter().filter(|(_, r)| *r > 0.0).count();
    println!("falsification control (amplitude 1/2): positive residuals at {bad}/{} times", control.per_time.len());
    Ok(())
}
