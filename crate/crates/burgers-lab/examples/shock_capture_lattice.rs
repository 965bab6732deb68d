//! Integrate step data on the lattice and watch the shock converge onto the
//! traveling wave.
//!
//! Run with: `cargo run --release --example shock_capture_lattice`

use burgers_lab::asymptotics::{balance_offset_lattice, front_shift};
use burgers_lab::flux::{linear_2my, PhiTable};
use burgers_lab::lattice::{run_lattice, sup_distance_to_profile, InitialData, SnapshotPlan};
use burgers_lab::wavetrain::solve_wavetrain_lattice;

fn main() -> burgers_lab::Result<()> {
    let phi = linear_2my();
    let profile = solve_wavetrain_lattice(&phi, (0.0, 1.0))?;
    let table = PhiTable::new(&phi)?;
    let c = profile.speed;

    let rec = run_lattice(
        &InitialData::Step { alpha: 0.0, beta: 1.0 },
        &phi,
        0.0,
        400.0,
        0.1,
        &SnapshotPlan::Times(vec![10.0, 50.0, 100.0, 200.0, 400.0]),
        (-40, 80),
    )?;
    println!("step data, flux {} (speed {c:.6}):", phi.label());
    println!("{:>8} {:>14} {:>14}", "t", "front shift", "sup distance");
    for i in 0..rec.snapshots.len() {
        let st = rec.state_at(i);
        let d = front_shift(&st, &profile, &table, 4.0 * c.sqrt())?;
        let sup = sup_distance_to_profile(&st, &profile, d).sup;
        println!("{:>8.1} {:>14.6} {:>14.6e}", st.t, d, sup);
    }
    let d0 = balance_offset_lattice(&rec.state_at(0), &profile, &table)?;
    println!("\npotential-balance offset of the initial data: {d0:.6}");
    Ok(())
}
