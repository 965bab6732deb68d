//! The discrete Green-Poisson kernel: difference identities, normalization,
//! semigroup property, and the tail-bound scan.
//!
//! Run with: `cargo run --release --example kernel_identities`

use burgers_lab::kernel::*;

fn main() {
    println!("G_3(2)      = {:.12} (direct: 8 e^-2/6 = {:.12})", poisson(3, 2.0), 8.0 * (-2.0f64).exp() / 6.0);
    println!("dG_3(2)     = {:.12} (closed form G_3(2) (t-n)/t)", poisson_diff(3, 2.0));
    println!("sum G_n(50) - 1 = {:.3e}", normalization_defect(50.0));
    println!("semigroup defect at (s,t,n) = (5, 20, 60): {:.3e}", convolution_defect(5.0, 20.0, 60));

    let rep = check_kernel_bounds(&KernelGrid { n_max: 200, t_max: 200.0, t_step: 0.5 });
    println!("\nbound scan: {} tail violations, telescoping error {:.2e}", rep.tail_violations.len(), rep.telescope_tv_err);
    println!("fitted forward/backward difference constants: {:.3}/{:.3} and {:.3}/{:.3}",
        rep.diff_bound_forward.grid_a, rep.diff_bound_forward.grid_b,
        rep.diff_bound_backward.grid_a, rep.diff_bound_backward.grid_b);

    let c = make_cutoff(1.0, 2.0).unwrap();
    let cut = check_cutoff_bounds(&c, &[25.0, 100.0, 400.0]);
    println!("\ncutoff bounds (A0 = {:.4}): ratios {:.3}, {:.3}, {:.3}", c.a0, cut.ratio_dchi, cut.ratio_d2chi, cut.ratio_transport);
}
