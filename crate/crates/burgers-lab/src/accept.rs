//! The acceptance suite: one runner per criterion, shared by the integration
//! tests and the `reproduce` CLI command.
//!
//! Every runner pins its tolerances in code, measures its quantities, and
//! returns a [`Criterion`] with a one-line summary; given an output directory
//! it also writes the deterministic CSV artifacts that the determinism
//! criterion compares byte for byte.

use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use crate::asymptotics::{
    difference_decay_check, difference_decay_check_uniform, fit_log_shift,
    shift_trace, FrontField, FrontRegion,
};
use crate::error::{Error, Result};
use crate::flux::{
    classify_degeneracy, degenerate_quadratic, linear_2my, wave_speed, Model,
};
use crate::ineq::{
    gronwall_iterate, gronwall_solve, log_bound_grid, log_weight_bound_check, GronwallProblem,
    PsiSpec, SeedSpec, WeightSpec,
};
use crate::kernel::{
    check_kernel_bounds, convolution_defect, normalization_defect, poisson,
    poisson_diff2_both, poisson_diff_both, representation_homogeneous,
    representation_residual_full, KernelGrid, RepresentationParams, SpaceTimeGrid,
};
use crate::lattice::{
    run_lattice, sup_distance_to_profile, InitialData, RunRecord, SnapshotPlan,
};
use crate::pde::{run_pde, sup_distance_to_profile_pde, PdeInitialData};
use crate::report::{csv_from_rows, write_json, write_text};
use crate::subsolution::{
    build_patched_subsolution, check_asymptotic_subsolution_with_amplitude, check_patching,
    check_psi_monotone, comparison_check, PatchedParams,
};
use crate::wavetrain::{solve_wavetrain_continuous, solve_wavetrain_lattice};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: &'static str,
    pub pass: bool,
    pub measured: String,
    pub threshold: String,
    pub seconds: f64,
}

impl Criterion {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {} measured: {} | required: {} [{:.1}s]",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.measured,
            self.threshold,
            self.seconds
        )
    }
}

pub const CRITERIA: &[&str] = &[
    "AC-1", "AC-2", "AC-3", "AC-4", "AC-5", "AC-6", "AC-7", "AC-8", "AC-9", "AC-10", "AC-11",
    "AC-12",
];

/// Cache of the expensive lattice runs, shared across criteria within one
/// process. The determinism criterion bypasses it.
pub struct RunCache {
    map: Mutex<std::collections::BTreeMap<String, Arc<RunRecord>>>,
}

impl RunCache {
    fn get_or_run(
        &self,
        key: &str,
        f: impl FnOnce() -> Result<RunRecord>,
    ) -> Result<Arc<RunRecord>> {
        let mut map = self.map.lock().unwrap();
        if let Some(rec) = map.get(key) {
            return Ok(rec.clone());
        }
        let rec = Arc::new(f()?);
        map.insert(key.to_string(), rec.clone());
        Ok(rec)
    }
}

pub fn shared_cache() -> &'static RunCache {
    static CACHE: OnceLock<RunCache> = OnceLock::new();
    CACHE.get_or_init(|| RunCache { map: Mutex::new(Default::default()) })
}

fn run_record(cache: Option<&RunCache>, key: &str, f: impl FnOnce() -> Result<RunRecord>) -> Result<Arc<RunRecord>> {
    match cache {
        Some(c) => c.get_or_run(key, f),
        None => Ok(Arc::new(f()?)),
    }
}

/// Step-data run on the degenerate flux out to t = 1e4, sampled for the
/// log-shift fit, the end-to-end profile comparison, and the barrier checks.
fn degenerate_long_run(cache: Option<&RunCache>) -> Result<Arc<RunRecord>> {
    run_record(cache, "degenerate-step-1e4", || {
        let phi = degenerate_quadratic();
        let mut times = log_times(50.0, 1e4, 140);
        times.push(50.0);
        times.push(800.0);
        times.push(999.0); // pins a full decade inside the fit window
        run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            1e4,
            0.1,
            &SnapshotPlan::Times(times),
            (-60, 120),
        )
    })
}

/// Step-data run on the non-degenerate flux out to t = 1e4, also sampled on
/// the front-flatness window [100, 800].
fn nondegenerate_long_run(cache: Option<&RunCache>) -> Result<Arc<RunRecord>> {
    run_record(cache, "nondegenerate-step-1e4", || {
        let phi = linear_2my();
        let mut times = log_times(50.0, 1e4, 140);
        times.push(999.0);
        run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            1e4,
            0.1,
            &SnapshotPlan::Times(times),
            (-60, 120),
        )
    })
}

/// Densely stored non-degenerate run feeding the representation check.
fn representation_run(cache: Option<&RunCache>) -> Result<Arc<RunRecord>> {
    run_record(cache, "representation-step-200", || {
        let phi = linear_2my();
        run_lattice(
            &InitialData::Step { alpha: 0.0, beta: 1.0 },
            &phi,
            0.0,
            200.0,
            0.05,
            &SnapshotPlan::Uniform { dt: 0.05 },
            (-50, 80),
        )
    })
}

fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

fn logistic(xi: f64) -> f64 {
    1.0 / (1.0 + (-xi / 2.0).exp())
}

fn finish(
    id: &'static str,
    started: Instant,
    pass: bool,
    measured: String,
    threshold: String,
) -> Criterion {
    Criterion { id, pass, measured, threshold, seconds: started.elapsed().as_secs_f64() }
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

/// Continuous wave train vs the analytic logistic profile.
pub fn ac1(out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let phi = linear_2my();
    let p = solve_wavetrain_continuous(&phi, 1.0, (0.0, 1.0))?;
    let mut worst = 0.0f64;
    for (xi, v) in p.nodes() {
        worst = worst.max((v - logistic(xi)).abs());
    }
    if let Some(dir) = out {
        let rows: Vec<Vec<f64>> =
            p.nodes().step_by(16).map(|(xi, v)| vec![xi, v, logistic(xi)]).collect();
        write_text(dir, "profile_vs_logistic.csv", &csv_from_rows("xi,value,logistic", &rows))?;
    }
    Ok(finish("AC-1", t, worst <= 1e-6, format!("max error {worst:.3e}"), "<= 1e-6".into()))
}

/// Lattice wave-train residuals for both shipped fluxes.
pub fn ac2(out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (label, phi) in [("nondegenerate", linear_2my()), ("degenerate", degenerate_quadratic())]
    {
        let p = solve_wavetrain_lattice(&phi, (0.0, 1.0))?;
        let r = p.max_residual_lattice(&phi);
        worst = worst.max(r);
        rows.push(vec![if label == "nondegenerate" { 0.0 } else { 1.0 }, p.speed, r]);
    }
    if let Some(dir) = out {
        write_text(dir, "lattice_residuals.csv", &csv_from_rows("flux_idx,speed,residual", &rows))?;
    }
    Ok(finish("AC-2", t, worst <= 1e-7, format!("max residual {worst:.3e}"), "<= 1e-7".into()))
}

/// Kernel identities: dual-route differences, normalization, semigroup.
pub fn ac3(out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let mut state = 0x5851_F42Du64;
    let mut rand = || {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        (state.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut ident = 0.0f64;
    for _ in 0..10_000 {
        let n = (rand() * 2000.0) as i64;
        let tt = rand() * 500.0 + 1e-6;
        let scale = poisson(n, tt).max(poisson(n - 1, tt)).max(1e-300);
        let (a, b) = poisson_diff_both(n, tt);
        ident = ident.max((a - b).abs() / scale);
        let scale2 = scale.max(poisson(n - 2, tt));
        let (a2, b2) = poisson_diff2_both(n, tt);
        ident = ident.max((a2 - b2).abs() / scale2);
    }
    let mut norm = 0.0f64;
    for k in 0..=50 {
        norm = norm.max(normalization_defect(10.0 * k as f64));
    }
    let mut conv = 0.0f64;
    for &(s, tt) in &[(0.3, 0.7), (1.0, 2.0), (5.0, 20.0), (50.0, 100.0), (200.0, 200.0)] {
        for &n in &[0i64, 1, 3, 10, 60, 200, 500] {
            conv = conv.max(convolution_defect(s, tt, n));
        }
    }
    if let Some(dir) = out {
        write_text(
            dir,
            "kernel_identities.csv",
            &csv_from_rows("identity_rel,normalization,semigroup", &[vec![ident, norm, conv]]),
        )?;
    }
    let pass = ident <= 1e-12 && norm <= 1e-12 && conv <= 1e-12;
    Ok(finish(
        "AC-3",
        t,
        pass,
        format!("identity {ident:.2e}, normalization {norm:.2e}, semigroup {conv:.2e}"),
        "all <= 1e-12".into(),
    ))
}

/// Kernel tail bounds and total-variation telescoping on the full grid.
pub fn ac4(out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let rep = check_kernel_bounds(&KernelGrid::default());
    if let Some(dir) = out {
        write_text(
            dir,
            "kernel_bounds.csv",
            &csv_from_rows(
                "tail_violations,telescope_err,tv_scaled_dev,identity_rel,fit_fwd_a,fit_fwd_b,fit_bwd_a,fit_bwd_b,weighted_a,weighted_b",
                &[vec![
                    rep.tail_violations.len() as f64,
                    rep.telescope_tv_err,
                    rep.tv_asymptotic_scaled_dev,
                    rep.identity_max_rel,
                    rep.diff_bound_forward.grid_a,
                    rep.diff_bound_forward.grid_b,
                    rep.diff_bound_backward.grid_a,
                    rep.diff_bound_backward.grid_b,
                    rep.weighted_sum.grid_a,
                    rep.weighted_sum.grid_b,
                ]],
            ),
        )?;
        write_json(dir, "kernel_bounds.json", &rep)?;
    }
    let pass = rep.tail_violations.is_empty()
        && rep.telescope_tv_err <= 1e-12
        && rep.tv_asymptotic_scaled_dev <= 1.0
        && rep.sign_violations == 0;
    Ok(finish(
        "AC-4",
        t,
        pass,
        format!(
            "{} tail violations, telescope {:.2e}, scaled tv dev {:.3}",
            rep.tail_violations.len(),
            rep.telescope_tv_err,
            rep.tv_asymptotic_scaled_dev
        ),
        "0 violations, telescope <= 1e-12, scaled dev <= 1".into(),
    ))
}

/// Green-Poisson representation: homogeneous reconstruction and the full
/// five-term decomposition on a stored run.
pub fn ac5(cache: Option<&RunCache>, out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    // (a) kernel slice reconstruction = semigroup identity
    let times: Vec<f64> = (0..40).map(|i| 4.0 + 0.25 * i as f64).collect();
    let u =
        SpaceTimeGrid::from_fn(times, (-10, 300), 0.0, 0.0, |n, tau| poisson(n - 5, tau - 2.0));
    let probes: Vec<i64> = (0..40).map(|k| 5 + k).collect();
    let homog = representation_homogeneous(&u, 0, 39, &probes)?;

    // (b) full decomposition on the stored lattice run
    let phi = linear_2my();
    let c = wave_speed(Model::Lattice, &phi)?;
    let rec = representation_run(cache)?;
    let grid = SpaceTimeGrid::from_lattice_record(&rec, c)?;
    let params =
        RepresentationParams { alpha: 0.75, a1: 0.5, a1_tilde: 1.2, sigma: 4.0, sigma0: 0.2 };
    let rep = representation_residual_full(
        &grid,
        Some((&phi, c)),
        &params,
        &[1.5, 1.75, 2.0, 2.25, 2.5],
    )?;
    if let Some(dir) = out {
        let rows: Vec<Vec<f64>> = rep
            .probes
            .iter()
            .map(|p| {
                vec![
                    p.x as f64,
                    p.xbar,
                    p.delta_measured,
                    p.i_terms[0],
                    p.i_terms[1],
                    p.i_terms[2],
                    p.i_terms[3],
                    p.i_terms[4],
                    p.residual,
                ]
            })
            .collect();
        write_text(
            dir,
            "representation.csv",
            &csv_from_rows("x,xbar,delta_measured,i0,i1,i2,i3,i4,residual", &rows),
        )?;
    }
    let pass = homog <= 1e-12 && rep.residual_sup <= 1e-4;
    Ok(finish(
        "AC-5",
        t,
        pass,
        format!(
            "homogeneous {homog:.2e}, decomposition {:.2e} (quadrature step {:.3})",
            rep.residual_sup, rep.quadrature_step
        ),
        "homogeneous <= 1e-12, decomposition <= 1e-4".into(),
    ))
}

/// Traveling-wave advection for both integrators.
pub fn ac6(out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let phi = linear_2my();
    let lat_profile = Arc::new(solve_wavetrain_lattice(&phi, (0.0, 1.0))?);
    let rec = run_lattice(
        &InitialData::WaveTrainShifted { profile: lat_profile.clone(), d: 2.0 },
        &phi,
        0.0,
        10.0,
        0.025,
        &SnapshotPlan::None,
        (-40, 40),
    )?;
    let lat = sup_distance_to_profile(&rec.final_state, &lat_profile, 2.0).sup;

    let pde_profile = Arc::new(solve_wavetrain_continuous(&phi, 1.0, (0.0, 1.0))?);
    let prec = run_pde(
        &PdeInitialData::Profile { profile: pde_profile.clone(), d: 0.0 },
        &phi,
        (-45.0, 60.0),
        0.05,
        1.0,
        10.0,
        None,
        &[],
    )?;
    let pde = sup_distance_to_profile_pde(&prec.final_state, &pde_profile, 0.0);
    if let Some(dir) = out {
        write_text(
            dir,
            "advection.csv",
            &csv_from_rows("lattice_sup,pde_sup", &[vec![lat, pde]]),
        )?;
    }
    let pass = lat <= 1e-5 && pde <= 5e-3;
    Ok(finish(
        "AC-6",
        t,
        pass,
        format!("lattice {lat:.2e}, pde {pde:.2e}"),
        "lattice <= 1e-5, pde <= 5e-3".into(),
    ))
}

/// Logarithmic front-shift law: fitted slope vs the coefficient table.
pub fn ac7(cache: Option<&RunCache>, out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    // degenerate: slope within 15% of the table coefficient
    let phi_d = degenerate_quadratic();
    let case = classify_degeneracy(Model::Lattice, &phi_d, 1e-9)?;
    let gamma0 = case.log_coeff_lattice;
    let profile_d = solve_wavetrain_lattice(&phi_d, (0.0, 1.0))?;
    let rec_d = degenerate_long_run(cache)?;
    let c_d = profile_d.speed;
    let trace_d = shift_trace(&rec_d, &profile_d, &phi_d, 4.0 * c_d.sqrt(), 50.0)?;
    let fit_d = fit_log_shift(&trace_d, Some((999.0, 1e4)))?;
    let rel = (fit_d.gamma_hat - gamma0).abs() / gamma0.abs();

    // non-degenerate: slope below the synthetic noise floor
    let phi_n = linear_2my();
    let profile_n = solve_wavetrain_lattice(&phi_n, (0.0, 1.0))?;
    let rec_n = nondegenerate_long_run(cache)?;
    let c_n = profile_n.speed;
    let trace_n = shift_trace(&rec_n, &profile_n, &phi_n, 4.0 * c_n.sqrt(), 50.0)?;
    let fit_n = fit_log_shift(&trace_n, Some((999.0, 1e4)))?;
    let dmax = phi_n.deriv(0.0).abs().max(phi_n.deriv(1.0).abs());
    let floor = 0.05 * c_n / dmax;

    let smooth = trace_d.max_jump_over_median();
    if let Some(dir) = out {
        write_text(dir, "trace_degenerate.csv", &crate::report::shift_trace_csv(&trace_d, 5))?;
        write_text(dir, "trace_nondegenerate.csv", &crate::report::shift_trace_csv(&trace_n, 5))?;
        write_text(
            dir,
            "fits.csv",
            &csv_from_rows(
                "gamma_hat_deg,gamma0,rel_err,gamma_hat_nondeg,noise_floor,trace_jump_ratio",
                &[vec![fit_d.gamma_hat, gamma0, rel, fit_n.gamma_hat, floor, smooth]],
            ),
        )?;
    }
    let pass = rel <= 0.15 && fit_n.gamma_hat.abs() <= floor && smooth <= 10.0;
    Ok(finish(
        "AC-7",
        t,
        pass,
        format!(
            "degenerate slope {:.4} vs {gamma0:.4} ({:.1}%), nondegenerate slope {:.4}",
            fit_d.gamma_hat,
            100.0 * rel,
            fit_n.gamma_hat
        ),
        format!("within 15%; |slope| <= {floor:.4}"),
    ))
}

/// End-to-end profile convergence with the fitted log shift.
pub fn ac8(cache: Option<&RunCache>, out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let phi = degenerate_quadratic();
    let case = classify_degeneracy(Model::Lattice, &phi, 1e-9)?;
    let gamma0 = case.log_coeff_lattice;
    let profile = solve_wavetrain_lattice(&phi, (0.0, 1.0))?;
    let rec = degenerate_long_run(cache)?;
    // The offset is fitted once, at the latest stored time, by minimizing the
    // sup distance there; it is then frozen and propagated backwards through
    // the logarithmic law alone.
    let last = rec.snapshots.len() - 1;
    let st_last = rec.state_at(last);
    let sup_for = |st: &crate::lattice::LatticeState, d: f64| {
        sup_distance_to_profile(st, &profile, gamma0 * st.t.ln() + d).sup
    };
    let mut d0 = 0.0;
    let mut best = f64::INFINITY;
    let mut d = -8.0;
    while d <= 8.0 {
        let s = sup_for(&st_last, d);
        if s < best {
            best = s;
            d0 = d;
        }
        d += 0.05;
    }
    // ternary refinement around the coarse minimum
    let (mut lo, mut hi) = (d0 - 0.05, d0 + 0.05);
    for _ in 0..40 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if sup_for(&st_last, m1) <= sup_for(&st_last, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let d0 = 0.5 * (lo + hi);
    let sup_at = |tt: f64| -> Result<f64> {
        let idx = rec
            .nearest_snapshot(tt)
            .ok_or_else(|| Error::config("ac8: no snapshots"))?;
        let st = rec.state_at(idx);
        Ok(sup_for(&st, d0))
    };
    let early = sup_at(50.0)?;
    let late = sup_at(800.0)?;
    let ratio = late / early;
    if let Some(dir) = out {
        write_text(
            dir,
            "supdist.csv",
            &csv_from_rows("t_early_sup,t_late_sup,ratio,d0", &[vec![early, late, ratio, d0]]),
        )?;
    }
    Ok(finish(
        "AC-8",
        t,
        ratio <= 0.25,
        format!("sup {early:.3e} at t=50 -> {late:.3e} at t=800 (ratio {ratio:.3})"),
        "ratio <= 1/4".into(),
    ))
}

/// Front-flatness property checks over the [100, 800] window, on the gap
/// field of the non-degenerate shock run in the frame co-moving with the
/// front. The gap is exponentially flat there, so the normalized difference
/// stays bounded with a firmly decreasing trend; the gap field also has a
/// nonnegative effective slope at the small level, which the strict uniform
/// variant requires.
pub fn ac9(cache: Option<&RunCache>, out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let phi = linear_2my();
    let c_front = wave_speed(Model::Lattice, &phi)?;
    let rec = nondegenerate_long_run(cache)?;
    let sub = filter_record(&rec, 100.0, 800.0);
    let region = FrontRegion { a1: 1.0, a2: 3.0, sigma0: 0.5 };
    let rep = difference_decay_check(&sub, &region, None, FrontField::GapToUpper, c_front, 100.0)?;
    let region_u = FrontRegion { a1: 1.0, a2: 3.0, sigma0: 0.0 };
    let rep_u = difference_decay_check_uniform(
        &sub,
        &region_u,
        None,
        FrontField::GapToUpper,
        c_front,
        100.0,
        true,
        &phi,
    )?;
    if let Some(dir) = out {
        let rows: Vec<Vec<f64>> = rep
            .per_time
            .iter()
            .zip(&rep_u.per_time)
            .map(|((t1, v1), (_, v2))| vec![*t1, *v1, *v2])
            .collect();
        write_text(dir, "flatness.csv", &csv_from_rows("t,sup_weighted,sup_uniform", &rows))?;
    }
    let pass = !rep.aborted()
        && !rep_u.aborted()
        && rep.min_difference >= -1e-12
        && rep_u.min_difference >= -1e-12
        && rep.sup_normalized.is_finite()
        && rep_u.sup_normalized.is_finite()
        && rep.trend_slope <= 0.05
        && rep_u.trend_slope <= 0.05;
    Ok(finish(
        "AC-9",
        t,
        pass,
        format!(
            "min dF {:.1e}; weighted sup {:.3} trend {:+.3}; uniform sup {:.3} trend {:+.3}",
            rep.min_difference.min(rep_u.min_difference),
            rep.sup_normalized,
            rep.trend_slope,
            rep_u.sup_normalized,
            rep_u.trend_slope
        ),
        "dF >= -1e-12, sups bounded, trends <= 0.05".into(),
    ))
}

fn filter_record(rec: &RunRecord, t_lo: f64, t_hi: f64) -> RunRecord {
    let snapshots: Vec<_> = rec
        .snapshots
        .iter()
        .filter(|s| s.t >= t_lo - 1e-9 && s.t <= t_hi + 1e-9)
        .cloned()
        .collect();
    RunRecord { meta: rec.meta.clone(), snapshots, final_state: rec.final_state.clone() }
}

/// Barrier suite: inequality residual, strict tail decrease, patching
/// margins, comparison with zero violations, and the falsification control.
pub fn ac10(cache: Option<&RunCache>, out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let phi = degenerate_quadratic();
    // differential-inequality residual on the shipped window
    let t_grid = log_times(1e3, 1e5, 21);
    let barrier =
        check_asymptotic_subsolution_with_amplitude(&phi, 2.25, (1.75, 6.0), &t_grid, 1.0)?;
    // strict decrease of the scaled tail profile
    let mono = check_psi_monotone(1.0, phi.deriv(1.0), 400);
    // patching margins
    let patch = check_patching(&phi, 2.0, 0.5, &log_times(1e4, 1e6, 9))?;
    let patch_ok = patch.per_time.iter().all(|(_, m)| *m > 0.0);
    // comparison on the shipped run, restricted to [1e3, 1e4]
    let rec = degenerate_long_run(cache)?;
    let windowed = filter_record(&rec, 1e3, 1e4);
    let params = PatchedParams { a_cap: 6.0, ..Default::default() };
    let mut sub = build_patched_subsolution(&phi, params)?;
    let comparison = comparison_check(&windowed, &mut sub, Some(0.15))?;
    // falsification: halved tail amplitude loses the inequality
    let control = check_asymptotic_subsolution_with_amplitude(
        &phi,
        0.0,
        (0.5, 2.5),
        &log_times(1e4, 1e6, 17),
        0.5,
    )?;
    let control_violations = control.per_time.iter().filter(|(_, r)| *r > 0.0).count();

    if let Some(dir) = out {
        let rows: Vec<Vec<f64>> = barrier.per_time.iter().map(|(a, b)| vec![*a, *b]).collect();
        write_text(dir, "barrier_residual.csv", &csv_from_rows("t,max_residual", &rows))?;
        let rows: Vec<Vec<f64>> = patch.per_time.iter().map(|(a, b)| vec![*a, *b]).collect();
        write_text(dir, "patching_margins.csv", &csv_from_rows("t,min_margin", &rows))?;
        let rows: Vec<Vec<f64>> =
            comparison.margins.iter().map(|(a, b)| vec![*a, *b]).collect();
        write_text(dir, "comparison_margins.csv", &csv_from_rows("t,min_margin", &rows))?;
    }
    let pass = barrier.t0_empirical.is_finite()
        && barrier.margin_scaled < 0.0
        && mono.max_derivative < 0.0
        && mono.max_cross_check_err <= 1e-8
        && patch_ok
        && comparison.violations == 0
        && comparison.corollary_violations == 0
        && control_violations > 0;
    Ok(finish(
        "AC-10",
        t,
        pass,
        format!(
            "residual t0 {:.0}, scaled margin {:.2e}; tail decrease max {:.2e}; patch ok {patch_ok}; comparison violations {}/{}; control positives {control_violations}",
            barrier.t0_empirical,
            barrier.margin_scaled,
            mono.max_derivative,
            comparison.violations,
            comparison.corollary_violations,
        ),
        "residual <= 0 past t0, margins > 0, 0 violations, control > 0".into(),
    ))
}

/// Appendix inequalities: exact level, exponent root, iterate bound, and the
/// weighted-log constant stability.
pub fn ac11(out: Option<&Path>) -> Result<Criterion> {
    let t = Instant::now();
    let p =
        GronwallProblem { a: 1.0, alpha: 0.5, h: WeightSpec::Const { value: 0.5 }, t0: 1.0 };
    let sol = gronwall_solve(&p)?;
    let a1_err = (sol.a1 - 4.0 / 3.0).abs();
    let root_residual = {
        let r = crate::numerics::adaptive_simpson(
            |rho: f64| 0.5 / rho.powf(sol.m),
            0.5,
            1.0,
            1e-13,
        )?;
        (r - 1.0).abs()
    };
    let iter = gronwall_iterate(&p, SeedSpec::ScaledLimit { factor: 10.0 }, 1e4 * p.t0, 60)?;
    let mut stability = 0.0f64;
    let mut fitted = Vec::new();
    for psi in [PsiSpec::ExpNeg, PsiSpec::MinOneOverX] {
        let a = log_weight_bound_check(&psi, &log_bound_grid(false))?.a_psi;
        let b = log_weight_bound_check(&psi, &log_bound_grid(true))?.a_psi;
        stability = stability.max((a - b).abs() / a.max(b));
        fitted.push((a, b));
    }
    if let Some(dir) = out {
        write_text(
            dir,
            "gronwall.csv",
            &csv_from_rows(
                "a1,m,root_residual,big_m,max_excess,apsi_exp_a,apsi_exp_b,apsi_inv_a,apsi_inv_b",
                &[vec![
                    sol.a1,
                    sol.m,
                    root_residual,
                    iter.big_m,
                    iter.max_excess,
                    fitted[0].0,
                    fitted[0].1,
                    fitted[1].0,
                    fitted[1].1,
                ]],
            ),
        )?;
    }
    let pass = a1_err <= 1e-12
        && sol.m > 3.0
        && sol.m < 4.0
        && root_residual <= 1e-10
        && iter.max_excess <= 1e-9
        && stability <= 0.25;
    Ok(finish(
        "AC-11",
        t,
        pass,
        format!(
            "A1 err {a1_err:.1e}, m {:.6}, root residual {root_residual:.1e}, iterate excess {:.1e}, A_psi stability {:.1}%",
            sol.m, iter.max_excess, 100.0 * stability
        ),
        "A1 exact, m in (3,4), root <= 1e-10, excess <= 1e-9, stability <= 25%".into(),
    ))
}

/// Determinism: every reproduce target run twice yields byte-identical CSVs.
pub fn ac12(out_root: &Path) -> Result<Criterion> {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    for id in CRITERIA.iter().take(11) {
        let dir_a = out_root.join(format!("{id}-first"));
        let dir_b = out_root.join(format!("{id}-second"));
        // fresh pipelines: no shared cache, so the second run recomputes all
        run_criterion(id, None, Some(&dir_a))?;
        run_criterion(id, None, Some(&dir_b))?;
        for entry in std::fs::read_dir(&dir_a)? {
            let entry = entry?;
            let name = entry.file_name();
            if !name.to_string_lossy().ends_with(".csv") {
                continue;
            }
            let a = std::fs::read(entry.path())?;
            let b = std::fs::read(dir_b.join(&name))?;
            if a != b {
                mismatches.push(format!("{id}/{}", name.to_string_lossy()));
            }
        }
    }
    let pass = mismatches.is_empty();
    Ok(finish(
        "AC-12",
        t,
        pass,
        if pass { "all reproduce CSVs byte-identical".into() } else { format!("mismatches: {mismatches:?}") },
        "byte-identical artifacts".into(),
    ))
}

/// Run one criterion by id.
pub fn run_criterion(id: &str, cache: Option<&RunCache>, out: Option<&Path>) -> Result<Criterion> {
    match id {
        "AC-1" => ac1(out),
        "AC-2" => ac2(out),
        "AC-3" => ac3(out),
        "AC-4" => ac4(out),
        "AC-5" => ac5(cache, out),
        "AC-6" => ac6(out),
        "AC-7" => ac7(cache, out),
        "AC-8" => ac8(cache, out),
        "AC-9" => ac9(cache, out),
        "AC-10" => ac10(cache, out),
        "AC-11" => ac11(out),
        "AC-12" => {
            let root = out
                .map(|p| p.to_path_buf())
                .unwrap_or_else(|| std::env::temp_dir().join("burgers-lab-ac12"));
            ac12(&root)
        }
        other => Err(Error::config(format!("unknown criterion id: {other}"))),
    }
}

