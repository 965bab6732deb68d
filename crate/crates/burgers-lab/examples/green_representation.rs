//! Reconstruct lattice differences from the Green-Poisson representation:
//! the homogeneous (pure kernel) mode and the full five-term decomposition
//! on a stored nonlinear run.
//!
//! Run with: `cargo run --release --example green_representation`

use burgers_lab::flux::{linear_2my, wave_speed, Model};
use burgers_lab::kernel::*;
use burgers_lab::lattice::{run_lattice, InitialData, SnapshotPlan};

fn main() -> burgers_lab::Result<()> {
    // homogeneous: a kernel slice reconstructs itself (semigroup identity)
    let times: Vec<f64> = (0..40).map(|i| 4.0 + 0.25 * i as f64).collect();
    let u = SpaceTimeGrid::from_fn(times, (-10, 300), 0.0, 0.0, |n, tau| poisson(n - 5, tau - 2.0));
    let probes: Vec<i64> = (0..40).map(|k| 5 + k).collect();
    println!("homogeneous reconstruction defect: {:.3e}", representation_homogeneous(&u, 0, 39, &probes)?);

    // full decomposition on a simulated run, rescaled to unit front speed
    let phi = linear_2my();
    let c = wave_speed(Model::Lattice, &phi)?;
    let rec = run_lattice(
        &InitialData::Step { alpha: 0.0, beta: 1.0 },
        &phi,
        0.0,
        200.0,
        0.05,
        &SnapshotPlan::Uniform { dt: 0.05 },
        (-50, 80),
    )?;
    let grid = SpaceTimeGrid::from_lattice_record(&rec, c)?;
    let params = RepresentationParams { alpha: 0.75, a1: 0.5, a1_tilde: 1.2, sigma: 4.0, sigma0: 0.2 };
    let rep = representation_residual_full(&grid, Some((&phi, c)), &params, &[1.5, 2.0, 2.5])?;
    println!("equation residual of the stored run: {:.3e}", rep.equation_residual.unwrap());
    println!("{:>6} {:>7} {:>13} {:>13}", "x", "xbar", "delta u", "residual");
    for p in &rep.probes {
        println!("{:>6} {:>7.2} {:>13.4e} {:>13.4e}", p.x, p.xbar, p.delta_measured, p.residual);
    }
    Ok(())
}
