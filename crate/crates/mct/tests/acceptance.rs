//! Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
//! line. Scenario runs are shared across criteria through lazy fixtures, and
//! the whole suite runs on a single worker so the timed criterion is honest.

use mct::grid::{PeriodicGrid, PhaseField, ScalarField};
use mct::harness::{builtin_config, read_field_dump, run_scenario, run_sweep, ScenarioReport};
use mct::init::{build_initial_field, GraphHeights, InitialGeometry};
use mct::interface::{density_estimate, extract_interface, fit_circle};
use mct::measures::{brakke_residual, energy_and_discrepancy, TestFunction};
use mct::potential::{make_quartic_well, standing_wave};
use mct::solver::{rhs, run_with_options, DtSpec, FlowState, Scheme, SolverConfig};
use mct::transport::{mollify, TransportKind, TransportSpec};
use mct::util::pairwise_sum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

fn single_thread() {
    static POOL: OnceLock<()> = OnceLock::new();
    POOL.get_or_init(|| {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    });
}

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("mct_acceptance").join(name);
    let _ = std::fs::create_dir_all(&dir);
    dir
}

fn run_builtin(name: &str) -> (ScenarioReport, f64) {
    single_thread();
    let mut cfg = builtin_config(name).expect("builtin");
    cfg.output_dir = out_dir(name).to_string_lossy().into_owned();
    let t0 = Instant::now();
    let report = run_scenario(&cfg).expect("scenario run");
    (report, t0.elapsed().as_secs_f64())
}

fn circle_shrink() -> &'static (ScenarioReport, f64) {
    static FIX: OnceLock<(ScenarioReport, f64)> = OnceLock::new();
    FIX.get_or_init(|| run_builtin("circle_shrink"))
}

fn circle_transport() -> &'static (ScenarioReport, f64) {
    static FIX: OnceLock<(ScenarioReport, f64)> = OnceLock::new();
    FIX.get_or_init(|| run_builtin("circle_transport"))
}

fn plane_translate() -> &'static (ScenarioReport, f64) {
    static FIX: OnceLock<(ScenarioReport, f64)> = OnceLock::new();
    FIX.get_or_init(|| run_builtin("plane_translate"))
}

fn plane_stationary() -> &'static (ScenarioReport, f64) {
    static FIX: OnceLock<(ScenarioReport, f64)> = OnceLock::new();
    FIX.get_or_init(|| run_builtin("plane_stationary"))
}

fn other_scenarios() -> &'static Vec<ScenarioReport> {
    static FIX: OnceLock<Vec<ScenarioReport>> = OnceLock::new();
    FIX.get_or_init(|| {
        ["two_circles_disjoint", "annulus_collapse", "sphere_shrink", "rough_u_circle"]
            .iter()
            .map(|n| run_builtin(n).0)
            .collect()
    })
}

fn circle_sweep() -> &'static mct::harness::SweepReport {
    static FIX: OnceLock<mct::harness::SweepReport> = OnceLock::new();
    FIX.get_or_init(|| {
        single_thread();
        let mut cfg = builtin_config("circle_sweep").expect("builtin");
        cfg.output_dir = out_dir("circle_sweep").to_string_lossy().into_owned();
        run_sweep(&cfg).expect("sweep run")
    })
}

fn check<'a>(report: &'a ScenarioReport, name: &str) -> &'a mct::harness::CheckResult {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: missing check {name}", report.name))
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

/// Reads a dumped snapshot and fits the circle through its level set.
fn fitted_circle_at(report: &ScenarioReport, t: f64) -> mct::interface::CircleFit {
    let path = report.output_dir.join(format!("phi_t{t:.6}.pfmf"));
    let dump = read_field_dump(&path).expect("field dump");
    let phase = PhaseField {
        field: dump.field,
        epsilon: dump.epsilon,
    };
    let mesh = extract_interface(&phase).expect("interface");
    fit_circle(&mesh).expect("circle fit")
}

#[test]
fn criterion_01_shrinking_circle_law() {
    let (report, runtime) = circle_shrink();
    let mut worst = 0.0f64;
    for &t in &[0.005, 0.01, 0.02] {
        let fit = fitted_circle_at(report, t);
        let exact = (0.0625f64 - 2.0 * t).sqrt();
        worst = worst.max((fit.radius - exact).abs() / exact);
    }
    let pass = worst <= 0.02 && *runtime <= 120.0;
    verdict(
        "01 shrinking circle law",
        pass,
        &format!("max radius error {worst:.4} (tol 0.02), runtime {runtime:.1}s (cap 120s)"),
    );
}

#[test]
fn criterion_02_transport_superposition() {
    let (report, _) = circle_transport();
    let c0 = fitted_circle_at(report, 0.0);
    let mut worst_drift = 0.0f64;
    let mut worst_radius = 0.0f64;
    for &t in &[0.005, 0.01, 0.02] {
        let fit = fitted_circle_at(report, t);
        let drift = PeriodicGrid::min_image(fit.center[0] - c0.center[0]);
        let dy = PeriodicGrid::min_image(fit.center[1] - c0.center[1]);
        let expected = 0.5 * t;
        worst_drift = worst_drift
            .max(((drift - expected).powi(2) + dy * dy).sqrt() / expected);
        let exact = (0.0625f64 - 2.0 * t).sqrt();
        worst_radius = worst_radius.max((fit.radius - exact).abs() / exact);
    }
    let pass = worst_drift <= 0.02 && worst_radius <= 0.02;
    verdict(
        "02 transport superposition",
        pass,
        &format!("drift err {worst_drift:.4}, radius err {worst_radius:.4} (tol 0.02)"),
    );
}

#[test]
fn criterion_03_traveling_planar_wave() {
    let (report, _) = plane_translate();
    let trans = check(report, "wave_translation");
    let shape = check(report, "wave_shape");
    let pass = trans.pass && shape.pass;
    verdict(
        "03 traveling planar wave",
        pass,
        &format!(
            "zero-set err {:.3e} (tol {:.3e}), shape drift {:.3e} (tol 5e-3)",
            trans.value, trans.threshold, shape.value
        ),
    );
}

#[test]
fn criterion_04_energy_dissipation() {
    let (report, _) = circle_shrink();
    let c = check(report, "dissipation");
    verdict(
        "04 energy dissipation",
        c.pass,
        &format!("largest per-step rise {:.3e} (tol 1e-10)", c.value),
    );
}

#[test]
fn criterion_05_energy_growth_bound() {
    let (report, _) = circle_transport();
    let c = check(report, "energy_growth");
    verdict(
        "05 energy growth bound",
        c.pass,
        &format!("max excess over mu0 + work {:.3e} (tol {:.3e})", c.value, c.threshold),
    );
}

#[test]
fn criterion_06_discrepancy_bound_and_decay() {
    // sup xi+ <= 10 eps^(-1/4) on every builtin scenario, all diagnostic times
    let mut all = vec![
        &circle_shrink().0,
        &circle_transport().0,
        &plane_translate().0,
        &plane_stationary().0,
    ];
    let others = other_scenarios();
    all.extend(others.iter());
    let mut worst_margin = f64::MIN;
    for rep in &all {
        let c = check(rep, "discrepancy_bound");
        assert!(c.pass, "{}: sup xi+ {} over bound {}", rep.name, c.value, c.threshold);
        worst_margin = worst_margin.max(c.value / c.threshold);
    }
    // vanishing-discrepancy trend across the eps sweep
    let sweep = circle_sweep();
    let xi = sweep.checks.iter().find(|c| c.name == "xi_l1_decreasing").unwrap();
    let pass = xi.pass;
    verdict(
        "06 discrepancy bound + decay",
        pass,
        &format!(
            "worst sup xi+ at {:.2}% of bound over {} scenarios; xi_l1 {}",
            100.0 * worst_margin,
            all.len(),
            xi.detail
        ),
    );
}

#[test]
fn criterion_07_surface_tension_concentration() {
    // 2% at eps = 4h, res 256 for circle, two_circles, annulus
    let (shrink, _) = circle_shrink();
    let c1 = check(shrink, "energy_concentration");
    let others = other_scenarios();
    let two = others.iter().find(|r| r.name == "two_circles_disjoint").unwrap();
    let ann = others.iter().find(|r| r.name == "annulus_collapse").unwrap();
    let c2 = check(two, "energy_concentration");
    let c3 = check(ann, "energy_concentration");
    // strictly decreasing error along the eps sweep, all three geometries
    single_thread();
    let mut decreasing = true;
    let mut details = String::new();
    for geom in ["circle", "two_circles", "annulus"] {
        let mut cfg = builtin_config("energy_sweep").unwrap();
        match geom {
            "two_circles" => {
                cfg.geometry = mct::harness::config::GeometryConfig::TwoCircles {
                    c1: [0.3, 0.5],
                    r1: 0.15,
                    c2: [0.7, 0.5],
                    r2: 0.15,
                };
            }
            "annulus" => {
                cfg.geometry = mct::harness::config::GeometryConfig::Annulus {
                    center: [0.5, 0.5],
                    r_in: 0.15,
                    r_out: 0.35,
                };
            }
            _ => {}
        }
        cfg.name = format!("energy_sweep_{geom}");
        cfg.output_dir = out_dir(&cfg.name).to_string_lossy().into_owned();
        let sweep = run_sweep(&cfg).expect("energy sweep");
        let errs: Vec<f64> = sweep.rows.iter().map(|r| r.energy_error).collect();
        let dec = errs.windows(2).all(|w| w[1] < w[0]);
        decreasing &= dec;
        details.push_str(&format!("{geom}: {errs:?}; "));
    }
    let pass = c1.pass && c2.pass && c3.pass && decreasing;
    verdict(
        "07 surface tension concentration",
        pass,
        &format!(
            "rel errors circle {:.4}, two_circles {:.4}, annulus {:.4} (tol 0.02); sweep {details}",
            c1.value, c2.value, c3.value
        ),
    );
}

#[test]
fn criterion_08_density_ratio_uniformity() {
    let sweep = circle_sweep();
    let unif = sweep
        .checks
        .iter()
        .find(|c| c.name == "density_ratio_uniform")
        .unwrap();
    let (stat, _) = plane_stationary();
    let probe = check(stat, "planar_sigma");
    let pass = unif.pass && probe.pass;
    verdict(
        "08 density ratio uniformity",
        pass,
        &format!(
            "D spread {:.4} (tol 0.15); planar probe off sigma by {:.4} (tol 0.05)",
            unif.value, probe.value
        ),
    );
}

#[test]
fn criterion_09_monotonicity_audit() {
    let (shrink, _) = circle_shrink();
    let m1 = check(shrink, "monotonicity");
    let (transport, _) = circle_transport();
    let m2 = check(transport, "monotonicity");
    let pass = m1.pass && m2.pass;
    verdict(
        "09 monotonicity audit",
        pass,
        &format!(
            "u=0 worst dM excess {:.3e} (tol 2e-3); transported audit {}",
            m1.value,
            if m2.pass { "pass" } else { "fail" }
        ),
    );
}

#[test]
fn criterion_10_unit_density() {
    let (shrink, _) = circle_shrink();
    let c = check(shrink, "unit_density");
    // two parallel sheets 6 eps apart: ball of radius 20 eps between them
    single_thread();
    let grid = PeriodicGrid::new(2, 256).unwrap();
    let well = make_quartic_well();
    let prof = standing_wave(&well).unwrap();
    let eps = 3.0 * grid.h();
    let two = PhaseField {
        field: ScalarField::from_fn(grid, |x| {
            let d = 3.0 * eps - (x[0] - 0.5).abs().min(1.0 - (x[0] - 0.5).abs());
            prof.psi(d / eps)
        }),
        epsilon: eps,
    };
    let m = energy_and_discrepancy(&two, &well);
    let est = density_estimate(&m, prof.sigma, &[0.5, 0.5, 0.0], 20.0 * eps).unwrap();
    let two_ok = est.theta_hat >= 1.8 && est.theta_hat <= 2.2;
    let pass = c.pass && two_ok;
    verdict(
        "10 unit density",
        pass,
        &format!(
            "single-sheet theta range ok ({}); two-sheet theta {:.4} (want [1.8, 2.2])",
            c.detail, est.theta_hat
        ),
    );
}

#[test]
fn criterion_11_bv_bound() {
    let mut all = vec![
        &circle_shrink().0,
        &circle_transport().0,
        &plane_translate().0,
        &plane_stationary().0,
    ];
    all.extend(other_scenarios().iter());
    for rep in &all {
        let c = check(rep, "bv_bound");
        assert!(c.pass, "{}: TV excess {:.3e}", rep.name, c.value);
    }
    let per = check(&circle_shrink().0, "bv_perimeter");
    verdict(
        "11 bv bound",
        per.pass,
        &format!(
            "TV <= mu/sigma + 1e-8 on {} scenarios; circle TV off perimeter by {:.4} (tol 0.03)",
            all.len(),
            per.value
        ),
    );
}

#[test]
fn criterion_12_brakke_residual_decay() {
    single_thread();
    let well = make_quartic_well();
    let prof = standing_wave(&well).unwrap();
    let geom = InitialGeometry::Circle {
        center: [0.5, 0.5],
        r0: 0.25,
    };
    let eps = 1.0 / 64.0;
    let mut residuals = Vec::new();
    // (resolution, dt, snapshot gap): the finer run halves dt and h^2
    for &(n, dt, t0, t1) in &[(256usize, 1.8e-6, 0.002, 0.003), (362, 0.9e-6, 0.0025, 0.003)] {
        let grid = PeriodicGrid::new(2, n).unwrap();
        let phi0 = build_initial_field(&geom, &prof, eps, &grid, None).unwrap();
        let u = mollify(
            &TransportSpec::new(TransportKind::Zero, 2.0, 4.0, 2).unwrap(),
            eps,
            0.25,
            &grid,
            1.0,
        )
        .unwrap();
        let cfg = SolverConfig {
            scheme: Scheme::Explicit,
            dt: DtSpec::Fixed(dt),
            t_end: t1,
            cfl_safety: 0.5,
            upwind: false,
        };
        let state = FlowState {
            phi: phi0,
            t: 0.0,
            step_count: 0,
        };
        let traj = run_with_options(state, &u, &well, &cfg, &[t0, t1], false).unwrap();
        let a = traj.snapshot_at(t0).unwrap();
        let b = traj.snapshot_at(t1).unwrap();
        let r1 = brakke_residual(&a.phi, a.t, &b.phi, b.t, None, &well, TestFunction::One);
        let r2 = brakke_residual(
            &a.phi,
            a.t,
            &b.phi,
            b.t,
            None,
            &well,
            TestFunction::OnePlusCos { axis: 0 },
        );
        residuals.push((r1, r2));
    }
    let ratio1 = residuals[0].0 / residuals[1].0;
    let ratio2 = residuals[0].1 / residuals[1].1;
    let pass = ratio1 >= 1.8 && ratio2 >= 1.8;
    verdict(
        "12 weak motion-law residual decay",
        pass,
        &format!(
            "test=1: {:.3e} -> {:.3e} (x{ratio1:.2}); test=1+cos: {:.3e} -> {:.3e} (x{ratio2:.2}); want >= 1.8",
            residuals[0].0, residuals[1].0, residuals[0].1, residuals[1].1
        ),
    );
}

#[test]
fn criterion_13_equipartition_and_gradient_checks() {
    single_thread();
    let well = make_quartic_well();
    let prof = standing_wave(&well).unwrap();
    // (a) planar rhs residual decays at second order under h-refinement
    let eps = 1.0 / 64.0;
    let slab = InitialGeometry::Graph(GraphHeights {
        samples: vec![0.25; 16],
    });
    let mut sups = Vec::new();
    for n in [256usize, 512] {
        let grid = PeriodicGrid::new(2, n).unwrap();
        let phase = build_initial_field(&slab, &prof, eps, &grid, None).unwrap();
        sups.push(rhs(&phase, &well, None, false).unwrap().max_abs());
    }
    let order_ratio = sups[0] / sups[1];
    let order_ok = (3.0..5.0).contains(&order_ratio);
    // (b) finite differences of the discrete energy against the rhs
    let grid = PeriodicGrid::new(2, 128).unwrap();
    let phase = build_initial_field(
        &InitialGeometry::Circle {
            center: [0.5, 0.5],
            r0: 0.25,
        },
        &prof,
        2.0 * grid.h(),
        &grid,
        None,
    )
    .unwrap();
    let eps2 = phase.epsilon;
    let h = grid.h();
    let vol = grid.cell_volume();
    let forward_energy = |data: &[f64]| -> f64 {
        let mut acc = vec![0.0; data.len()];
        for (idx, a) in acc.iter_mut().enumerate() {
            let c = data[idx];
            let mut g2 = 0.0;
            for ax in 0..grid.dim {
                let d = (data[grid.neighbor(idx, ax, 1)] - c) / h;
                g2 += d * d;
            }
            *a = 0.5 * eps2 * g2 + well.value(c) / eps2;
        }
        pairwise_sum(&acc) * vol
    };
    let r = rhs(&phase, &well, None, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let s = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let delta: Vec<f64> = (0..grid.cell_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let mut plus = phase.field.data.clone();
        let mut minus = phase.field.data.clone();
        for i in 0..plus.len() {
            plus[i] += s * delta[i];
            minus[i] -= s * delta[i];
        }
        let de_ds = (forward_energy(&plus) - forward_energy(&minus)) / (2.0 * s);
        let inner: f64 = r
            .data
            .iter()
            .zip(delta.iter())
            .map(|(&rv, &dv)| rv * dv)
            .sum::<f64>()
            * vol;
        let predicted = -eps2 * inner;
        worst = worst.max((de_ds - predicted).abs() / predicted.abs().max(1e-300));
    }
    let grad_ok = worst <= 1e-6;
    let pass = order_ok && grad_ok;
    verdict(
        "13 equipartition + gradient checks",
        pass,
        &format!(
            "rhs residual ratio {order_ratio:.2} (want [3,5]); worst gradient-check rel err {worst:.3e} (tol 1e-6)"
        ),
    );
}
