//! The logarithmic front-shift law: for a right-degenerate flux the shift
//! grows like (C / (2 phi'(1))) ln t; for a non-degenerate flux it settles.
//!
//! Run with: `cargo run --release --example front_shift_asymptotics`

use burgers_lab::asymptotics::{fit_log_shift, shift_rate_diagnostic, shift_trace};
use burgers_lab::flux::{classify_degeneracy, degenerate_quadratic, Model};
use burgers_lab::lattice::{run_lattice, InitialData, SnapshotPlan};
use burgers_lab::wavetrain::solve_wavetrain_lattice;

fn main() -> burgers_lab::Result<()> {
    let phi = degenerate_quadratic();
    let case = classify_degeneracy(Model::Lattice, &phi, 1e-9)?;
    println!("flux {}: {:?}, lattice log coefficient {:.6}", phi.label(), case.kind, case.log_coeff_lattice);

    let profile = solve_wavetrain_lattice(&phi, (0.0, 1.0))?;
    let c = profile.speed;
    let t_end = 2000.0;
    let rec = run_lattice(
        &InitialData::Step { alpha: 0.0, beta: 1.0 },
        &phi,
        0.0,
        t_end,
        0.1,
        &SnapshotPlan::LogSpaced { t_min: 20.0, count: 90 },
        (-60, 120),
    )?;
    let trace = shift_trace(&rec, &profile, &phi, 4.0 * c.sqrt(), 20.0)?;
    let fit = fit_log_shift(&trace, Some((t_end / 10.0, t_end)))?;
    println!(
        "fitted slope over [{:.0}, {:.0}]: {:.4} (theory {:.4}, ratio {:.3})",
        fit.window.0, fit.window.1, fit.gamma_hat, case.log_coeff_lattice,
        fit.gamma_hat / case.log_coeff_lattice
    );

    let diag = shift_rate_diagnostic(&rec, &trace, &profile, &phi, 5)?;
    println!("\nrate diagnostic (numeric d' vs closed form), every 10th point:");
    println!("{:>10} {:>13} {:>13} {:>11}", "t", "numeric", "closed form", "gap * t");
    for pt in diag.iter().step_by(10) {
        println!("{:>10.1} {:>13.4e} {:>13.4e} {:>11.4}", pt.t, pt.lhs, pt.rhs, pt.gap * pt.t);
    }
    Ok(())
}
