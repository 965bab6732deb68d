//! The acceptance gate: every criterion runs at its pinned tolerance and
//! prints one pass/fail line (visible with `--nocapture`).
//!
//! Expensive lattice runs are shared through the in-process cache, so the
//! criteria can run in any order or in parallel. The determinism criterion
//! deliberately bypasses the cache and re-executes its pipelines.

use burgers_lab::accept::{run_criterion, shared_cache};

fn check(id: &str) {
    let crit = run_criterion(id, Some(shared_cache()), None)
        .unwrap_or_else(|e| panic!("{id} failed to run: {e}"));
    println!("{}", crit.summary_line());
    assert!(crit.pass, "{}", crit.summary_line());
}

#[test]
fn ac1_continuous_wavetrain_vs_logistic() {
    check("AC-1");
}

#[test]
fn ac2_lattice_wavetrain_residuals() {
    check("AC-2");
}

#[test]
fn ac3_kernel_identities() {
    check("AC-3");
}

#[test]
fn ac4_kernel_bounds() {
    check("AC-4");
}

#[test]
fn ac5_green_poisson_representation() {
    check("AC-5");
}

#[test]
fn ac6_traveling_wave_advection() {
    check("AC-6");
}

#[test]
fn ac7_log_shift_law() {
    check("AC-7");
}

#[test]
fn ac8_end_to_end_profile_convergence() {
    check("AC-8");
}

#[test]
fn ac9_front_flatness() {
    check("AC-9");
}

#[test]
fn ac10_barrier_suite() {
    check("AC-10");
}

#[test]
fn ac11_integral_inequalities() {
    check("AC-11");
}

#[test]
fn ac12_determinism() {
    let root = std::env::temp_dir().join(format!("burgers-lab-ac12-{}", std::process::id()));
    let crit = run_criterion("AC-12", None, Some(&root)).expect("AC-12 failed to run");
    println!("{}", crit.summary_line());
    let pass = crit.pass;
    let _ = std::fs::remove_dir_all(&root);
    assert!(pass, "{}", crit.summary_line());
}
