//! Thin command-line front end over the library pipelines.
//!
//! Exit codes: 0 success, 1 a check ran and reported violations,
//! 2 configuration error, 3 numeric failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::accept;
use crate::asymptotics::{fit_log_shift, shift_trace, FrontField, FrontRegion};
use crate::error::{Error, Result};
use crate::flux::{flux_by_label, wave_speed, FluxFunction, FluxSpec, Model};
use crate::ineq::{
    gronwall_iterate, gronwall_solve, log_bound_grid, log_weight_bound_check, GronwallProblem,
    PsiSpec, SeedSpec, WeightSpec,
};
use crate::kernel::{check_kernel_bounds, KernelGrid};
use crate::lattice::{run_lattice, InitialData, RunMeta, SnapshotPlan};
use crate::pde::{run_pde, PdeInitialData};
use crate::report::{
    csv_from_rows, lattice_record_from_csv, lattice_snapshots_csv, pde_snapshots_csv,
    shift_trace_csv, write_json, write_text,
};
use crate::subsolution::{
    build_patched_subsolution, check_asymptotic_subsolution_with_amplitude, check_patching,
    check_psi_monotone, comparison_check, PatchedParams,
};
use crate::wavetrain::{solve_wavetrain_continuous, solve_wavetrain_lattice};

const USAGE: &str = "\
usage: burgers-lab <command> [flags]

commands:
  wavetrain          --flux <label|file.json> --model <continuous|lattice>
                     [--epsilon E] --out DIR
  simulate-lattice   --config FILE --out DIR
  simulate-pde       --config FILE --out DIR
  shift-fit          --run DIR --a-window A [--t-min T] [--fit-lo T --fit-hi T]
                     --out DIR
  kernel-check       [--n-max N] [--t-max T] [--t-step S] --out DIR
  subsolution-check  [--config FILE] --out DIR
  apriori-check      --config FILE --out DIR
  gronwall           [--config FILE] --out DIR
  reproduce          <AC-1 .. AC-12> [--out DIR]

shipped flux labels: linear_2my, unit, linear_1py, degenerate_quadratic,
left_degenerate, both_degenerate";

/// Entry point used by the binary; returns the process exit code.
pub fn dispatch(args: Vec<String>) -> i32 {
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                eprintln!("\n{USAGE}");
            }
            e.exit_code()
        }
    }
}

struct Flags {
    values: BTreeMap<String, String>,
    positional: Vec<String>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut positional = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let a = &args[i];
            if let Some(key) = a.strip_prefix("--") {
                let val = args
                    .get(i + 1)
                    .ok_or_else(|| Error::config(format!("flag --{key} needs a value")))?;
                values.insert(key.to_string(), val.clone());
                i += 2;
            } else {
                positional.push(a.clone());
                i += 1;
            }
        }
        Ok(Self { values, positional })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::config(format!("missing required flag --{key}")))
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse().map_err(|e| Error::config(format!("--{key}: {e}"))))
            .transpose()
    }

    fn out_dir(&self) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require("out")?))
    }
}

fn run(args: Vec<String>) -> Result<i32> {
    let Some((cmd, rest)) = args.split_first() else {
        println!("{USAGE}");
        return Ok(2);
    };
    let flags = Flags::parse(rest)?;
    match cmd.as_str() {
        "wavetrain" => cmd_wavetrain(&flags),
        "simulate-lattice" => cmd_simulate_lattice(&flags),
        "simulate-pde" => cmd_simulate_pde(&flags),
        "shift-fit" => cmd_shift_fit(&flags),
        "kernel-check" => cmd_kernel_check(&flags),
        "subsolution-check" => cmd_subsolution_check(&flags),
        "apriori-check" => cmd_apriori_check(&flags),
        "gronwall" => cmd_gronwall(&flags),
        "reproduce" => cmd_reproduce(&flags),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(0)
        }
        other => Err(Error::config(format!("unknown command: {other}"))),
    }
}

/// Flux reference in configs: a shipped label, a JSON file, or an inline spec.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum FluxRef {
    Label(String),
    Path { path: String },
    Inline { spec: FluxSpec },
}

impl FluxRef {
    fn load(&self) -> Result<FluxFunction> {
        match self {
            FluxRef::Label(label) => flux_by_label(label)
                .ok_or_else(|| Error::config(format!("unknown flux label: {label}"))),
            FluxRef::Path { path } => {
                let text = std::fs::read_to_string(path)?;
                FluxFunction::from_json(&text)
            }
            FluxRef::Inline { spec } => FluxFunction::from_spec(spec),
        }
    }
}

fn load_flux_arg(arg: &str) -> Result<FluxFunction> {
    if let Some(f) = flux_by_label(arg) {
        return Ok(f);
    }
    if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg)?;
        return FluxFunction::from_json(&text);
    }
    Err(Error::config(format!("--flux: neither a shipped label nor a file: {arg}")))
}

fn cmd_wavetrain(flags: &Flags) -> Result<i32> {
    let phi = load_flux_arg(flags.require("flux")?)?;
    let model = match flags.require("model")? {
        "continuous" => Model::Continuous,
        "lattice" => Model::Lattice,
        other => return Err(Error::config(format!("--model must be continuous|lattice: {other}"))),
    };
    let out = flags.out_dir()?;
    let profile = match model {
        Model::Continuous => {
            let eps = flags.get_f64("epsilon")?.unwrap_or(1.0);
            solve_wavetrain_continuous(&phi, eps, (0.0, 1.0))?
        }
        Model::Lattice => solve_wavetrain_lattice(&phi, (0.0, 1.0))?,
    };
    write_text(&out, "profile.csv", &profile.to_csv())?;
    write_json(&out, "profile.json", &profile.sidecar())?;
    println!(
        "wave train for {} ({:?}): speed {:.12}, table [{:.3}, {:.3}] ({} nodes)",
        phi.label(),
        model,
        profile.speed,
        profile.xi_min(),
        profile.xi_max(),
        profile.len()
    );
    Ok(0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum InitialSpec {
    Step,
    WavetrainShifted { d: f64 },
    Custom {
        n_lo: i64,
        values: Vec<f64>,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        expect_monotone: bool,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SnapshotSpec {
    None,
    Times { times: Vec<f64> },
    Uniform { dt: f64 },
    Log { t_min: f64, count: usize },
}

impl SnapshotSpec {
    fn plan(&self) -> SnapshotPlan {
        match self {
            SnapshotSpec::None => SnapshotPlan::None,
            SnapshotSpec::Times { times } => SnapshotPlan::Times(times.clone()),
            SnapshotSpec::Uniform { dt } => SnapshotPlan::Uniform { dt: *dt },
            SnapshotSpec::Log { t_min, count } => {
                SnapshotPlan::LogSpaced { t_min: *t_min, count: *count }
            }
        }
    }
}

fn default_dt_max() -> f64 {
    0.1
}
fn default_window() -> (i64, i64) {
    (-60, 120)
}

#[derive(Debug, Clone, Deserialize)]
struct LatticeRunConfig {
    flux: FluxRef,
    initial: InitialSpec,
    #[serde(default)]
    t0: f64,
    t_end: f64,
    #[serde(default = "default_dt_max")]
    dt_max: f64,
    snapshots: SnapshotSpec,
    #[serde(default = "default_window")]
    window: (i64, i64),
}

fn read_config<T: for<'de> Deserialize<'de>>(flags: &Flags) -> Result<T> {
    let path = flags.require("config")?;
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_simulate_lattice(flags: &Flags) -> Result<i32> {
    let cfg: LatticeRunConfig = read_config(flags)?;
    let out = flags.out_dir()?;
    let phi = cfg.flux.load()?;
    let initial = match &cfg.initial {
        InitialSpec::Step => InitialData::Step { alpha: 0.0, beta: 1.0 },
        InitialSpec::WavetrainShifted { d } => {
            let profile = Arc::new(solve_wavetrain_lattice(&phi, (0.0, 1.0))?);
            InitialData::WaveTrainShifted { profile, d: *d }
        }
        InitialSpec::Custom { n_lo, values, alpha, beta, expect_monotone } => {
            InitialData::Custom {
                n_lo: *n_lo,
                values: values.clone(),
                alpha: *alpha,
                beta: *beta,
                expect_monotone: *expect_monotone,
            }
        }
    };
    let rec =
        run_lattice(&initial, &phi, cfg.t0, cfg.t_end, cfg.dt_max, &cfg.snapshots.plan(), cfg.window)?;
    write_text(&out, "snapshots.csv", &lattice_snapshots_csv(&rec))?;
    write_json(&out, "meta.json", &rec.meta)?;
    println!(
        "lattice run: {} snapshots to t = {}, final window [{}, {}]",
        rec.snapshots.len(),
        rec.final_state.t,
        rec.final_state.n_lo,
        rec.final_state.n_hi()
    );
    Ok(0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PdeInitialSpec {
    Profile { d: f64 },
    Hump { height: f64, width: f64, center: f64 },
    Step { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Deserialize)]
struct PdeRunConfig {
    flux: FluxRef,
    initial: PdeInitialSpec,
    domain: (f64, f64),
    dx: f64,
    #[serde(default = "one")]
    epsilon: f64,
    t_end: f64,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    snapshot_times: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn cmd_simulate_pde(flags: &Flags) -> Result<i32> {
    let cfg: PdeRunConfig = read_config(flags)?;
    let out = flags.out_dir()?;
    let phi = cfg.flux.load()?;
    let initial = match &cfg.initial {
        PdeInitialSpec::Profile { d } => {
            let profile = Arc::new(solve_wavetrain_continuous(&phi, cfg.epsilon, (0.0, 1.0))?);
            PdeInitialData::Profile { profile, d: *d }
        }
        PdeInitialSpec::Hump { height, width, center } => {
            PdeInitialData::Hump { height: *height, width: *width, center: *center }
        }
        PdeInitialSpec::Step { alpha, beta } => PdeInitialData::Step { alpha: *alpha, beta: *beta },
    };
    let rec = run_pde(
        &initial,
        &phi,
        cfg.domain,
        cfg.dx,
        cfg.epsilon,
        cfg.t_end,
        cfg.dt,
        &cfg.snapshot_times,
    )?;
    write_text(&out, "snapshots.csv", &pde_snapshots_csv(&rec))?;
    write_json(&out, "meta.json", &rec.meta)?;
    println!("pde run: {} snapshots to t = {}", rec.snapshots.len(), rec.final_state.t);
    Ok(0)
}

#[derive(serde::Serialize)]
struct ShiftFitOutput {
    gamma_hat: f64,
    const_hat: f64,
    rms: f64,
    samples: usize,
    window: (f64, f64),
    theory_coefficient: f64,
    ratio_to_theory: f64,
}

fn cmd_shift_fit(flags: &Flags) -> Result<i32> {
    let run_dir = PathBuf::from(flags.require("run")?);
    let out = flags.out_dir()?;
    let meta: RunMeta =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("meta.json"))?)?;
    let phi = flux_by_label(&meta.flux_label)
        .ok_or_else(|| Error::config(format!("run used unknown flux: {}", meta.flux_label)))?;
    let csv = std::fs::read_to_string(run_dir.join("snapshots.csv"))?;
    let rec = lattice_record_from_csv(&csv, meta)?;
    let profile = solve_wavetrain_lattice(&phi, (0.0, 1.0))?;
    let c = profile.speed;
    let a_window = flags.get_f64("a-window")?.unwrap_or(4.0 * c.sqrt());
    let t_min = flags.get_f64("t-min")?.unwrap_or(0.0);
    let trace = shift_trace(&rec, &profile, &phi, a_window, t_min)?;
    let window = match (flags.get_f64("fit-lo")?, flags.get_f64("fit-hi")?) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => None,
    };
    let fit = fit_log_shift(&trace, window)?;
    let case = crate::flux::classify_degeneracy(Model::Lattice, &phi, 1e-9)?;
    let theory = case.log_coeff_lattice;
    write_text(&out, "trace.csv", &shift_trace_csv(&trace, 5))?;
    write_json(
        &out,
        "fit.json",
        &ShiftFitOutput {
            gamma_hat: fit.gamma_hat,
            const_hat: fit.const_hat,
            rms: fit.rms,
            samples: fit.samples,
            window: fit.window,
            theory_coefficient: theory,
            ratio_to_theory: if theory != 0.0 { fit.gamma_hat / theory } else { f64::NAN },
        },
    )?;
    println!(
        "shift fit: gamma_hat = {:.6} (theory {:.6}), rms {:.3e}, {} samples",
        fit.gamma_hat, theory, fit.rms, fit.samples
    );
    Ok(0)
}

fn cmd_kernel_check(flags: &Flags) -> Result<i32> {
    let out = flags.out_dir()?;
    let grid = KernelGrid {
        n_max: flags.get_f64("n-max")?.unwrap_or(400.0) as i64,
        t_max: flags.get_f64("t-max")?.unwrap_or(400.0),
        t_step: flags.get_f64("t-step")?.unwrap_or(0.25),
    };
    let rep = check_kernel_bounds(&grid);
    write_json(&out, "kernel_report.json", &rep)?;
    write_text(
        &out,
        "fitted_constants.csv",
        &csv_from_rows(
            "diff_fwd_a,diff_fwd_b,diff_bwd_a,diff_bwd_b,weighted_a,weighted_b,weighted_upper_a,weighted_upper_b",
            &[vec![
                rep.diff_bound_forward.grid_a,
                rep.diff_bound_forward.grid_b,
                rep.diff_bound_backward.grid_a,
                rep.diff_bound_backward.grid_b,
                rep.weighted_sum.grid_a,
                rep.weighted_sum.grid_b,
                rep.weighted_sum_upper.grid_a,
                rep.weighted_sum_upper.grid_b,
            ]],
        ),
    )?;
    println!(
        "kernel check: {} tail violations, identity {:.2e}, telescope {:.2e}",
        rep.tail_violations.len(),
        rep.identity_max_rel,
        rep.telescope_tv_err
    );
    Ok(if rep.clean() { 0 } else { 1 })
}

#[derive(Debug, Clone, Deserialize)]
struct SubsolutionConfig {
    #[serde(default = "default_deg_flux")]
    flux: FluxRef,
    #[serde(default = "default_sub_t_end")]
    t_end: f64,
    #[serde(default)]
    sample_times: Vec<f64>,
}

fn default_deg_flux() -> FluxRef {
    FluxRef::Label("degenerate_quadratic".into())
}
fn default_sub_t_end() -> f64 {
    2000.0
}

impl Default for SubsolutionConfig {
    fn default() -> Self {
        Self { flux: default_deg_flux(), t_end: default_sub_t_end(), sample_times: vec![] }
    }
}

fn cmd_subsolution_check(flags: &Flags) -> Result<i32> {
    let cfg: SubsolutionConfig = match flags.get("config") {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SubsolutionConfig::default(),
    };
    let out = flags.out_dir()?;
    let phi = cfg.flux.load()?;
    let dp1 = phi.deriv(1.0);

    let t_grid: Vec<f64> = (0..=20).map(|i| 1e3 * 100.0f64.powf(i as f64 / 20.0)).collect();
    let barrier = check_asymptotic_subsolution_with_amplitude(&phi, 2.25, (1.75, 6.0), &t_grid, 1.0)?;
    let mono = check_psi_monotone(1.0, dp1, 400);
    let patch = check_patching(&phi, 2.0, 0.5, &[1e4, 1e5, 1e6])?;
    let sample_times = if cfg.sample_times.is_empty() {
        vec![cfg.t_end / 4.0, cfg.t_end / 2.0, cfg.t_end]
    } else {
        cfg.sample_times.clone()
    };
    let rec = run_lattice(
        &InitialData::Step { alpha: 0.0, beta: 1.0 },
        &phi,
        0.0,
        cfg.t_end,
        0.1,
        &SnapshotPlan::Times(sample_times),
        (-60, 120),
    )?;
    let mut sub = build_patched_subsolution(&phi, PatchedParams { a_cap: 6.0, ..Default::default() })?;
    let comparison = comparison_check(&rec, &mut sub, Some(0.15))?;

    write_json(&out, "barrier_residual.json", &barrier)?;
    write_json(&out, "tail_monotone.json", &mono)?;
    write_json(&out, "patching.json", &patch)?;
    write_json(&out, "comparison.json", &comparison)?;
    let violations = comparison.violations
        + comparison.corollary_violations
        + usize::from(!barrier.t0_empirical.is_finite())
        + usize::from(mono.max_derivative >= 0.0)
        + patch.per_time.iter().filter(|(_, m)| *m <= 0.0).count();
    println!(
        "subsolution checks: barrier t0 {:.0}, patch margins ok {}, comparison violations {}",
        barrier.t0_empirical,
        patch.per_time.iter().all(|(_, m)| *m > 0.0),
        comparison.violations
    );
    Ok(if violations == 0 { 0 } else { 1 })
}

#[derive(Debug, Clone, Deserialize)]
struct AprioriConfig {
    flux: FluxRef,
    t_end: f64,
    snapshot_times: Vec<f64>,
    region: (f64, f64, f64),
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    field: Option<String>,
    #[serde(default)]
    c_front: Option<f64>,
    #[serde(default)]
    strict: bool,
}

fn cmd_apriori_check(flags: &Flags) -> Result<i32> {
    let cfg: AprioriConfig = read_config(flags)?;
    let out = flags.out_dir()?;
    let phi = cfg.flux.load()?;
    let field = match cfg.field.as_deref() {
        None | Some("gap") => FrontField::GapToUpper,
        Some("value") => FrontField::Value,
        Some(other) => return Err(Error::config(format!("field must be value|gap: {other}"))),
    };
    let c_front = match cfg.c_front {
        Some(c) => c,
        None => wave_speed(Model::Lattice, &phi)?,
    };
    let rec = run_lattice(
        &InitialData::Step { alpha: 0.0, beta: 1.0 },
        &phi,
        0.0,
        cfg.t_end,
        0.1,
        &SnapshotPlan::Times(cfg.snapshot_times.clone()),
        (-60, 120),
    )?;
    let region = FrontRegion { a1: cfg.region.0, a2: cfg.region.1, sigma0: cfg.region.2 };
    let weighted = crate::asymptotics::difference_decay_check(
        &rec,
        &region,
        cfg.gamma,
        field,
        c_front,
        cfg.snapshot_times.first().copied().unwrap_or(0.0),
    )?;
    let uniform = crate::asymptotics::difference_decay_check_uniform(
        &rec,
        &region,
        cfg.gamma,
        field,
        c_front,
        cfg.snapshot_times.first().copied().unwrap_or(0.0),
        cfg.strict,
        &phi,
    )?;
    write_json(&out, "weighted.json", &weighted)?;
    write_json(&out, "uniform.json", &uniform)?;
    println!(
        "front flatness: weighted sup {:.3} (trend {:+.3}), uniform sup {:.3} (trend {:+.3})",
        weighted.sup_normalized, weighted.trend_slope, uniform.sup_normalized, uniform.trend_slope
    );
    let bad = weighted.aborted()
        || uniform.aborted()
        || weighted.min_difference < -1e-12
        || uniform.min_difference < -1e-12;
    Ok(if bad { 1 } else { 0 })
}

#[derive(Debug, Clone, Deserialize)]
struct GronwallConfig {
    a: f64,
    alpha: f64,
    h: WeightSpec,
    t0: f64,
    #[serde(default)]
    seed: Option<SeedSpec>,
    #[serde(default)]
    horizon: Option<f64>,
}

fn cmd_gronwall(flags: &Flags) -> Result<i32> {
    let out = flags.out_dir()?;
    let (problem, seed, horizon) = match flags.get("config") {
        Some(path) => {
            let cfg: GronwallConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            let p = GronwallProblem { a: cfg.a, alpha: cfg.alpha, h: cfg.h, t0: cfg.t0 };
            (
                p,
                cfg.seed.unwrap_or(SeedSpec::ScaledLimit { factor: 10.0 }),
                cfg.horizon.unwrap_or(1e4 * cfg.t0),
            )
        }
        None => (
            GronwallProblem { a: 1.0, alpha: 0.5, h: WeightSpec::Const { value: 0.5 }, t0: 1.0 },
            SeedSpec::ScaledLimit { factor: 10.0 },
            1e4,
        ),
    };
    let sol = gronwall_solve(&problem)?;
    let iter = gronwall_iterate(&problem, seed, horizon, 60)?;
    let mut bounds = Vec::new();
    for psi in [PsiSpec::ExpNeg, PsiSpec::MinOneOverX] {
        let a = log_weight_bound_check(&psi, &log_bound_grid(false))?;
        let b = log_weight_bound_check(&psi, &log_bound_grid(true))?;
        bounds.push((psi, a.a_psi, b.a_psi));
    }
    write_json(&out, "iteration.json", &iter)?;
    write_json(&out, "log_bound_constants.json", &bounds)?;
    println!(
        "limit level {:.12}, exponent {:.6}, iterate excess {:.2e}",
        sol.a1, sol.m, iter.max_excess
    );
    Ok(if iter.max_excess <= 1e-9 { 0 } else { 1 })
}

fn cmd_reproduce(flags: &Flags) -> Result<i32> {
    let id = flags
        .positional
        .first()
        .ok_or_else(|| Error::config("reproduce: give a criterion id (AC-1 .. AC-12)"))?;
    if !accept::CRITERIA.contains(&id.as_str()) {
        return Err(Error::config(format!("unknown criterion id: {id}")));
    }
    let out = flags
        .get("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("burgers-lab-reproduce").join(id));
    let crit = accept::run_criterion(id, Some(accept::shared_cache()), Some(&out))?;
    println!("{}", crit.summary_line());
    println!("artifacts: {}", out.display());
    Ok(if crit.pass { 0 } else { 1 })
}
