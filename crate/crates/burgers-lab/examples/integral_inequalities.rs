//! The appendix-style integral inequalities: the geometric Gronwall
//! iteration with its algebraic decay exponent, and the weighted-log bound.
//!
//! Run with: `cargo run --release --example integral_inequalities`

use burgers_lab::ineq::*;

fn main() -> burgers_lab::Result<()> {
    let p = GronwallProblem { a: 1.0, alpha: 0.5, h: WeightSpec::Const { value: 0.5 }, t0: 1.0 };
    let sol = gronwall_solve(&p)?;
    println!("limit level A1 = {:.12} (= 4/3), decay exponent m = {:.9}", sol.a1, sol.m);

    for (label, seed) in [
        ("fixed point", SeedSpec::Limit),
        ("invariant decay", SeedSpec::LimitPlusDecay),
        ("10x overshoot", SeedSpec::ScaledLimit { factor: 10.0 }),
    ] {
        let rep = gronwall_iterate(&p, seed, 1e4, 60)?;
        println!(
            "  seed {label:>15}: {} iterations, first-step change {:.2e}, excess over A1 + M t^-m: {:.2e}",
            rep.iterations, rep.first_step_change, rep.max_excess
        );
    }

    println!("\nweighted-log bound constants over two disjoint (a, b) grids:");
    for psi in [PsiSpec::ExpNeg, PsiSpec::MinOneOverX] {
        let a = log_weight_bound_check(&psi, &log_bound_grid(false))?.a_psi;
        let b = log_weight_bound_check(&psi, &log_bound_grid(true))?.a_psi;
        println!("  {psi:?}: {a:.4} vs {b:.4}");
    }
    Ok(())
}
