//! Method-of-lines run of the viscous equation: the exact logistic front is
//! advected and compared against itself.
//!
//! Run with: `cargo run --release --example traveling_wave_pde`

use burgers_lab::flux::linear_2my;
use burgers_lab::pde::{run_pde, sup_distance_to_profile_pde, PdeInitialData};
use burgers_lab::wavetrain::solve_wavetrain_continuous;
use std::sync::Arc;

fn main() -> burgers_lab::Result<()> {
    let phi = linear_2my();
    let profile = Arc::new(solve_wavetrain_continuous(&phi, 1.0, (0.0, 1.0))?);
    for dx in [0.1, 0.05] {
        let rec = run_pde(
            &PdeInitialData::Profile { profile: profile.clone(), d: 0.0 },
            &phi,
            (-45.0, 60.0),
            dx,
            1.0,
            10.0,
            None,
            &[],
        )?;
        let sup = sup_distance_to_profile_pde(&rec.final_state, &profile, 0.0);
        println!("dx = {dx}: sup|f - profile| = {sup:.3e} at t = 10");
    }
    Ok(())
}
