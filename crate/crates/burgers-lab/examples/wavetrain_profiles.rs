//! Build traveling-wave profiles for both models and check their defining
//! residuals against the flux.
//!
//! Run with: `cargo run --release --example wavetrain_profiles`

use burgers_lab::flux::{degenerate_quadratic, linear_2my, wave_speed, Model};
use burgers_lab::wavetrain::{solve_wavetrain_continuous, solve_wavetrain_lattice, RightTail};

fn main() -> burgers_lab::Result<()> {
    let phi = linear_2my();

    // continuous profile: for this flux the closed form is the logistic curve
    let p = solve_wavetrain_continuous(&phi, 1.0, (0.0, 1.0))?;
    let mut worst = 0.0f64;
    for (xi, v) in p.nodes() {
        worst = worst.max((v - 1.0 / (1.0 + (-xi / 2.0).exp())).abs());
    }
    println!("continuous profile: speed {:.6}, max deviation from the logistic {worst:.3e}", p.speed);
    println!("defining residual: {:.3e}", p.max_residual_continuous(&phi, 1.0)?);

    // lattice profile: exponential tails on both sides
    let q = solve_wavetrain_lattice(&phi, (0.0, 1.0))?;
    println!(
        "\nlattice profile: speed {:.6} (= 1/ln 2: {:.6}), residual {:.3e}",
        q.speed,
        1.0 / std::f64::consts::LN_2,
        q.max_residual_lattice(&phi)
    );
    println!("left tail rate {:.6}, right tail {:?}", q.left_tail.rate, q.right_tail);

    // degenerate flux: the right tail becomes algebraic
    let phi_deg = degenerate_quadratic();
    let c = wave_speed(Model::Lattice, &phi_deg)?;
    let r = solve_wavetrain_lattice(&phi_deg, (0.0, 1.0))?;
    println!("\ndegenerate flux: speed {c:.9}, residual {:.3e}", r.max_residual_lattice(&phi_deg));
    if let RightTail::Algebraic { coeff, .. } = r.right_tail {
        println!("algebraic right tail with coefficient C/phi'(1) = {coeff:.6}");
        for xi in [50.0, 100.0, 200.0] {
            println!("  1 - F({xi:>5}) = {:.6e} vs {coeff}/xi = {:.6e}", 1.0 - r.eval(xi), coeff / xi);
        }
    }
    Ok(())
}
