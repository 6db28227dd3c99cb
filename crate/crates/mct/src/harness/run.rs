//! Scenario orchestration: build -> settle -> run -> diagnose -> check ->
//! write reports. Sweeps repeat the pipeline across (eps, resolution) pairs
//! and aggregate convergence columns.

use super::config::{ChecksConfig, ScenarioConfig, SweepConfig, TransportConfig};
use super::report::{
    render_summary, write_checks_csv, write_convergence_csv, write_field_dump,
    write_interface_csv, write_measures_csv, write_monotonicity_csv, CheckResult, ConvergenceRow,
    MeasureRow, MonoRow,
};
use crate::grid::{PeriodicGrid, PhaseField};
use crate::init::{build_initial_field, InitialGeometry};
use crate::interface::{extract_interface, fit_circle_loop, fit_sphere, CircleFit};
use crate::measures::{
    bv_projection, density_ratio, energy_and_discrepancy, positive_discrepancy_bound, xi_l1,
    CenterStrategy, MeasureField, TestFunction,
};
use crate::monotonicity::{monotonicity_audit, KernelSpec};
use crate::potential::{
    make_perturbed_quartic_well, make_quartic_well, standing_wave, well_from_csv, DoubleWell,
    Profile,
};
use crate::solver::{run_with_options, FlowState, SolverConfig};
use crate::transport::{
    mollify, sobolev_norm, MollifiedTransport, SampledTransport, TransportKind, TransportSpec,
};
use crate::util::{CubicSpline, SplineBc};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigInvalid),
    #[error("well: {0}")]
    Potential(#[from] crate::potential::PotentialError),
    #[error("grid: {0}")]
    Grid(#[from] crate::grid::GridError),
    #[error("initial data: {0}")]
    Init(#[from] crate::init::InitError),
    #[error("transport: {0}")]
    Transport(#[from] crate::transport::TransportError),
    #[error("solver: {0}")]
    Solver(#[from] crate::solver::SolverError),
    #[error("measures: {0}")]
    Measure(#[from] crate::measures::MeasureError),
    #[error("interface: {0}")]
    Interface(#[from] crate::interface::InterfaceError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct ScenarioReport {
    pub name: String,
    pub output_dir: PathBuf,
    pub checks: Vec<CheckResult>,
    pub measures: Vec<MeasureRow>,
    pub mono_rows: Vec<MonoRow>,
    pub summary: String,
    /// All enabled binding checks passed.
    pub passed: bool,
}

#[derive(Debug)]
pub struct SweepReport {
    pub name: String,
    pub output_dir: PathBuf,
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<CheckResult>,
    pub summary: String,
    pub passed: bool,
}

pub fn build_well(name: &str) -> Result<DoubleWell, HarnessError> {
    match name {
        "quartic" => Ok(make_quartic_well()),
        "perturbed_quartic" => Ok(make_perturbed_quartic_well()),
        other => {
            let path = other.strip_prefix("csv:").unwrap_or(other);
            let text = std::fs::read_to_string(path)?;
            Ok(well_from_csv(&text)?)
        }
    }
}

fn build_transport(
    tc: &TransportConfig,
    dim: usize,
    grid: &PeriodicGrid,
) -> Result<TransportSpec, HarnessError> {
    let p = |k: usize, d: f64| tc.params.get(k).copied().unwrap_or(d);
    let kind = match tc.kind.as_str() {
        "zero" => TransportKind::Zero,
        "constant" => TransportKind::Constant([p(0, 0.0), p(1, 0.0), p(2, 0.0)]),
        "shear" => TransportKind::Shear { amplitude: p(0, 1.0) },
        "rotation" => TransportKind::Rotation {
            center: [p(0, 0.5), p(1, 0.5)],
            omega: p(2, 1.0),
        },
        "rough_radial" => TransportKind::RoughRadial {
            center: [p(0, 0.5), p(1, 0.5)],
            amplitude: p(2, 1.0),
        },
        "sampled" => {
            let dir = tc.samples_dir.clone().ok_or_else(|| {
                super::config::ConfigInvalid {
                    messages: vec!["transport.samples_dir: required for sampled".into()],
                }
            })?;
            let mut fields = Vec::new();
            for (k, _) in tc.sample_times.iter().enumerate() {
                let mut vf = crate::grid::VectorField::zeros(*grid);
                for a in 0..dim {
                    let path = Path::new(&dir).join(format!("u{a}_t{k}.pfmf"));
                    let dump = super::report::read_field_dump(&path)?;
                    if dump.field.grid != *grid {
                        return Err(super::config::ConfigInvalid {
                            messages: vec![format!(
                                "transport.samples_dir: {} has grid {}^{}, expected {}^{}",
                                path.display(),
                                dump.field.grid.resolution,
                                dump.field.grid.dim,
                                grid.resolution,
                                grid.dim
                            )],
                        }
                        .into());
                    }
                    vf.comps[a] = dump.field;
                }
                fields.push(vf);
            }
            TransportKind::Sampled(SampledTransport {
                times: tc.sample_times.clone(),
                fields,
            })
        }
        other => {
            return Err(super::config::ConfigInvalid {
                messages: vec![format!("transport.kind: unknown '{other}'")],
            }
            .into())
        }
    };
    Ok(TransportSpec::new(kind, tc.p, tc.q, dim)?)
}

struct SnapshotDiag {
    t: f64,
    row: MeasureRow,
    fits: Vec<CircleFit>,
    sphere_radius: Option<f64>,
    theta_probes: Vec<f64>,
    measure: Option<MeasureField>,
}

/// Runs one configured scenario end to end and writes its report files.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, HarnessError> {
    let well = build_well(&cfg.well)?;
    let profile = standing_wave(&well)?;
    let grid = PeriodicGrid::new(cfg.dim, cfg.resolution)?;
    let geometry = cfg.geometry.build();
    let phase0 = build_initial_field(&geometry, &profile, cfg.epsilon, &grid, cfg.r_trunc)?;
    let tspec = build_transport(&cfg.transport, cfg.dim, &grid)?;
    let horizon = cfg.t_end.max(1e-6);
    let u_eps = mollify(&tspec, cfg.epsilon, cfg.transport.beta, &grid, horizon)?;
    let u_norm = if tspec.is_zero() {
        0.0
    } else {
        sobolev_norm(&tspec, horizon, &grid)
    };
    let solver_cfg = SolverConfig {
        scheme: cfg.scheme,
        dt: cfg.dt,
        t_end: cfg.t_end,
        cfl_safety: cfg.cfl_safety,
        upwind: cfg.upwind,
    };

    // optional settle phase: relax to the scheme's own stationary profile
    // with the transport off, then restart the clock
    let mut state = FlowState {
        phi: phase0,
        t: 0.0,
        step_count: 0,
    };
    if cfg.settle_time > 0.0 {
        let zero = mollify(
            &TransportSpec::new(TransportKind::Zero, 2.0, 4.0, cfg.dim)?,
            cfg.epsilon,
            cfg.transport.beta,
            &grid,
            1.0,
        )?;
        let settle_cfg = SolverConfig {
            t_end: cfg.settle_time,
            ..solver_cfg
        };
        let settled = run_with_options(state, &zero, &well, &settle_cfg, &[], false)?;
        state = settled.snapshots.last().unwrap().clone();
        state.t = 0.0;
        state.step_count = 0;
    }

    let track_energy = cfg.checks.dissipation || cfg.checks.energy_growth;
    let traj = run_with_options(
        state,
        &u_eps,
        &well,
        &solver_cfg,
        &cfg.snapshot_times,
        track_energy,
    )?;

    // per-snapshot diagnostics
    let keep_measures = cfg.checks.monotonicity && !cfg.poles.is_empty();
    let radii = density_radii(cfg, &grid);
    let theta_radius = cfg
        .theta_radius
        .unwrap_or(10.0 * cfg.epsilon)
        .clamp(5.0 * cfg.epsilon, 0.25);
    let mut diags: Vec<SnapshotDiag> = Vec::with_capacity(traj.snapshots.len());
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let m = energy_and_discrepancy(&snap.phi, &well);
        let dens = density_ratio(
            &m,
            &radii,
            CenterStrategy::InterfaceAndRandom {
                phi: &snap.phi,
                band: cfg.density_band,
                n_random: cfg.n_random_centers,
                seed: cfg.seed,
                max_centers: cfg.max_centers,
            },
        )?;
        let (sup_xi, _pass) = positive_discrepancy_bound(&m, cfg.transport.beta);
        let (_w, tv) = bv_projection(&snap.phi, &profile);
        let brakke = if k == 0 {
            0.0
        } else {
            let prev = &traj.snapshots[k - 1];
            crate::measures::brakke_residual(
                &prev.phi,
                prev.t,
                &snap.phi,
                snap.t,
                Some(&u_eps),
                &well,
                TestFunction::One,
            )
        };
        let (fits, sphere_radius, theta_probes) =
            interface_diagnostics(cfg, &snap.phi, &m, &profile, theta_radius);
        diags.push(SnapshotDiag {
            t: snap.t,
            row: MeasureRow {
                t: snap.t,
                mu_total: dens.total,
                d: dens.d_of_t,
                sup_xi_plus: sup_xi,
                xi_l1: xi_l1(&m),
                tv_w: tv,
                brakke_residual: brakke,
            },
            fits,
            sphere_radius,
            theta_probes,
            measure: keep_measures.then_some(m),
        });
    }

    // checks
    let mut checks: Vec<CheckResult> = Vec::new();
    evaluate_checks(
        cfg,
        &geometry,
        &profile,
        &well,
        &u_eps,
        &traj,
        &diags,
        theta_radius,
        &mut checks,
    );
    let mut mono_rows = Vec::new();
    if cfg.checks.monotonicity && !cfg.poles.is_empty() {
        monotonicity_checks(cfg, &u_eps, &diags, &mut checks, &mut mono_rows);
    }

    // outputs
    let out = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out)?;
    let rows: Vec<MeasureRow> = diags.iter().map(|d| d.row.clone()).collect();
    write_measures_csv(&out.join("measures.csv"), &rows)?;
    if !mono_rows.is_empty() {
        write_monotonicity_csv(&out.join("monotonicity.csv"), &mono_rows, cfg.dim)?;
    }
    write_checks_csv(&out.join("checks.csv"), &checks)?;
    if cfg.field_dumps {
        for snap in &traj.snapshots {
            let path = out.join(format!("phi_t{:.6}.pfmf", snap.t));
            write_field_dump(&path, &snap.phi.field, cfg.epsilon, snap.t)?;
        }
    }
    if cfg.interface_csv && cfg.dim >= 2 {
        for snap in &traj.snapshots {
            if let Ok(mesh) = extract_interface(&snap.phi) {
                write_interface_csv(&out.join(format!("interface_t{:.6}.csv", snap.t)), &mesh)?;
            }
        }
    }
    let mut extra = vec![
        format!("grid: dim {} resolution {}", cfg.dim, cfg.resolution),
        format!(
            "epsilon = {} (eps/h = {}), dt = {:.3e}, steps = {}",
            cfg.epsilon,
            cfg.epsilon * cfg.resolution as f64,
            traj.dt,
            traj.energy_series.len().max(2) - 1
        ),
        format!(
            "transport: {} (|u|_LqW1p = {:.6}, p_hat = {:.4})",
            cfg.transport.kind,
            u_norm,
            crate::monotonicity::p_hat(cfg.transport.p, cfg.transport.q, cfg.dim)
        ),
    ];
    if !u_eps.is_zero() {
        extra.push(format!(
            "mollified bounds: sup|u_eps| = {:.4} (cap {:.4}), sup|grad u_eps| = {:.4} (cap {:.4}){}",
            u_eps.sup_u,
            cfg.epsilon.powf(-cfg.transport.beta),
            u_eps.sup_grad_u,
            cfg.epsilon.powf(-(1.0 + cfg.transport.beta)),
            if cfg.transport.kind == "sampled" {
                "; sampled fields: gradient bound checked on grid points only"
            } else {
                ""
            }
        ));
    }
    // theta transitions are reported per snapshot, asserted only via the
    // unit_density check
    for d in &diags {
        if !d.theta_probes.is_empty() {
            let mn = d.theta_probes.iter().cloned().fold(f64::MAX, f64::min);
            let mx = d.theta_probes.iter().cloned().fold(f64::MIN, f64::max);
            extra.push(format!(
                "theta at r = {theta_radius:.4}, t = {:.4}: [{mn:.3}, {mx:.3}] over {} probes",
                d.t,
                d.theta_probes.len()
            ));
        }
    }
    let summary = render_summary(&cfg.name, &checks, &extra);
    std::fs::write(out.join("summary.txt"), &summary)?;
    let passed = checks.iter().all(|c| !c.binding || c.pass);
    Ok(ScenarioReport {
        name: cfg.name.clone(),
        output_dir: out,
        checks,
        measures: rows,
        mono_rows,
        summary,
        passed,
    })
}

fn density_radii(cfg: &ScenarioConfig, grid: &PeriodicGrid) -> Vec<f64> {
    let h = grid.h();
    let mut radii = cfg.density_radii.clone().unwrap_or_else(|| {
        vec![
            5.0 * cfg.epsilon,
            10.0 * cfg.epsilon,
            20.0 * cfg.epsilon,
            0.1,
            0.2,
        ]
    });
    radii.retain(|&r| r >= 4.0 * h && r <= 0.5);
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    radii
}

fn interface_diagnostics(
    cfg: &ScenarioConfig,
    phi: &PhaseField,
    m: &MeasureField,
    profile: &Profile,
    theta_radius: f64,
) -> (Vec<CircleFit>, Option<f64>, Vec<f64>) {
    let mut fits = Vec::new();
    let mut sphere_radius = None;
    let mut thetas = Vec::new();
    let Ok(mesh) = extract_interface(phi) else {
        return (fits, sphere_radius, thetas);
    };
    if cfg.dim == 2 {
        for k in 0..mesh.loops.len() {
            if let Ok(fit) = fit_circle_loop(&mesh, k) {
                // theta probes apply while the ball is small vs the circle
                if 2.0 * fit.radius >= 1.6 * theta_radius {
                    for a in 0..8 {
                        let ang = std::f64::consts::PI * a as f64 / 4.0;
                        let p = [
                            (fit.center[0] + fit.radius * ang.cos()).rem_euclid(1.0),
                            (fit.center[1] + fit.radius * ang.sin()).rem_euclid(1.0),
                            0.0,
                        ];
                        if let Ok(est) =
                            crate::interface::density_estimate(m, profile.sigma, &p, theta_radius)
                        {
                            thetas.push(est.theta_hat);
                        }
                    }
                }
                fits.push(fit);
            }
        }
    } else if cfg.dim == 3 {
        if let Ok(fit) = fit_sphere(&mesh) {
            sphere_radius = Some(fit.radius);
            if 2.0 * fit.radius >= 1.6 * theta_radius {
                for (axis, sign) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)]
                {
                    let mut p = fit.center;
                    p[axis] = (p[axis] + sign * fit.radius).rem_euclid(1.0);
                    if let Ok(est) =
                        crate::interface::density_estimate(m, profile.sigma, &p, theta_radius)
                    {
                        thetas.push(est.theta_hat);
                    }
                }
            }
        }
    }
    (fits, sphere_radius, thetas)
}

fn exact_radius(dim: usize, r0: f64, t: f64) -> Option<f64> {
    let factor = 2.0 * (dim - 1) as f64; // dr/dt = -(n-1)/r
    let v = r0 * r0 - factor * t;
    (v > 0.0).then(|| v.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn evaluate_checks(
    cfg: &ScenarioConfig,
    geometry: &InitialGeometry,
    profile: &Profile,
    _well: &DoubleWell,
    u_eps: &MollifiedTransport,
    traj: &crate::solver::Trajectory,
    diags: &[SnapshotDiag],
    theta_radius: f64,
    checks: &mut Vec<CheckResult>,
) {
    let c: &ChecksConfig = &cfg.checks;
    let check_times: Vec<f64> = if cfg.check_times.is_empty() {
        diags.iter().skip(1).map(|d| d.t).collect()
    } else {
        cfg.check_times.clone()
    };
    let diag_at = |t: f64| diags.iter().find(|d| (d.t - t).abs() < 1e-12);

    if c.radius_law {
        let tol = radius_tolerance(cfg);
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for &t in &check_times {
            let Some(d) = diag_at(t) else { continue };
            if cfg.dim == 2 {
                for fit in &d.fits {
                    let r0 = match geometry {
                        InitialGeometry::Circle { r0, .. } => *r0,
                        InitialGeometry::TwoCircles { c1, r1, c2, r2, .. } => {
                            // match the loop to its generating circle
                            let d1 = per_dist(&fit.center, c1);
                            let d2 = per_dist(&fit.center, c2);
                            if d1 < d2 {
                                *r1
                            } else {
                                *r2
                            }
                        }
                        InitialGeometry::Annulus { r_in, r_out, .. } => {
                            let mid = 0.5 * (r_in + r_out);
                            if fit.radius < mid {
                                *r_in
                            } else {
                                *r_out
                            }
                        }
                        _ => continue,
                    };
                    if let Some(rex) = exact_radius(2, r0, t) {
                        let rel = (fit.radius - rex).abs() / rex;
                        if rel > worst {
                            worst = rel;
                            detail = format!("t = {t}: fitted {:.5} vs {:.5}", fit.radius, rex);
                        }
                    }
                }
            } else if let (Some(rf), InitialGeometry::Sphere { r0, .. }) =
                (d.sphere_radius, geometry)
            {
                if let Some(rex) = exact_radius(3, *r0, t) {
                    let rel = (rf - rex).abs() / rex;
                    if rel > worst {
                        worst = rel;
                        detail = format!("t = {t}: fitted {rf:.5} vs {rex:.5}");
                    }
                }
            }
        }
        checks.push(CheckResult {
            name: "radius_law".into(),
            binding: true,
            pass: worst <= tol,
            value: worst,
            threshold: tol,
            detail,
        });
    }

    if c.translation_law {
        // constant transport moves the circle rigidly
        let u = [
            cfg.transport.params.first().copied().unwrap_or(0.0),
            cfg.transport.params.get(1).copied().unwrap_or(0.0),
        ];
        let c0 = diags
            .first()
            .and_then(|d| d.fits.first())
            .map(|f| f.center);
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        if let Some(c0) = c0 {
            for &t in &check_times {
                let Some(d) = diag_at(t) else { continue };
                let Some(fit) = d.fits.first() else { continue };
                let drift = [
                    PeriodicGrid::min_image(fit.center[0] - c0[0]),
                    PeriodicGrid::min_image(fit.center[1] - c0[1]),
                ];
                let expected = [u[0] * t, u[1] * t];
                let norm_e = (expected[0] * expected[0] + expected[1] * expected[1]).sqrt();
                if norm_e < 1e-12 {
                    continue;
                }
                let err = ((drift[0] - expected[0]).powi(2) + (drift[1] - expected[1]).powi(2))
                    .sqrt()
                    / norm_e;
                if err > worst {
                    worst = err;
                    detail = format!(
                        "t = {t}: drift ({:.6},{:.6}) vs ({:.6},{:.6})",
                        drift[0], drift[1], expected[0], expected[1]
                    );
                }
            }
        }
        checks.push(CheckResult {
            name: "translation_law".into(),
            binding: true,
            pass: worst <= 0.02,
            value: worst,
            threshold: 0.02,
            detail,
        });
    }

    if c.stationarity {
        let phi0 = &traj.snapshots[0].phi;
        let mut worst: f64 = 0.0;
        for snap in traj.snapshots.iter().skip(1) {
            let mut sup: f64 = 0.0;
            for (a, b) in snap.phi.field.data.iter().zip(phi0.field.data.iter()) {
                sup = sup.max((a - b).abs());
            }
            worst = worst.max(sup);
        }
        checks.push(CheckResult {
            name: "stationarity".into(),
            binding: true,
            pass: worst <= 1e-4,
            value: worst,
            threshold: 1e-4,
            detail: "sup-norm drift from the settled state".into(),
        });
    }

    if c.wave_translation {
        wave_translation_checks(cfg, traj, checks);
    }

    if c.dissipation {
        let mut worst = f64::MIN;
        let mut at = 0.0;
        for w in traj.energy_series.windows(2) {
            let rise = w[1].1 - w[0].1;
            if rise > worst {
                worst = rise;
                at = w[1].0;
            }
        }
        checks.push(CheckResult {
            name: "dissipation".into(),
            binding: true,
            pass: worst <= 1e-10,
            value: worst,
            threshold: 1e-10,
            detail: format!("largest per-step energy rise, at t = {at:.6}"),
        });
    }

    if c.energy_growth {
        let mu0 = traj.energy_series[0].1;
        let mut worst = f64::MIN;
        let mut at = 0.0;
        for (k, &(t, mu)) in traj.energy_series.iter().enumerate() {
            let work = traj.transport_work_series[k].1;
            let excess = mu - (mu0 + work);
            if excess > worst {
                worst = excess;
                at = t;
            }
        }
        checks.push(CheckResult {
            name: "energy_growth".into(),
            binding: true,
            pass: worst <= 1e-6 * mu0,
            value: worst,
            threshold: 1e-6 * mu0,
            detail: format!("max of mu - (mu0 + transport work), at t = {at:.6}"),
        });
    }

    if c.discrepancy_bound {
        let bound = 10.0 * cfg.epsilon.powf(-cfg.transport.beta);
        let mut worst: f64 = 0.0;
        let mut at = 0.0;
        for d in diags {
            if d.row.sup_xi_plus > worst {
                worst = d.row.sup_xi_plus;
                at = d.t;
            }
        }
        checks.push(CheckResult {
            name: "discrepancy_bound".into(),
            binding: true,
            pass: worst <= bound,
            value: worst,
            threshold: bound,
            detail: format!("sup xi+ over all diagnostic times, worst at t = {at:.6}"),
        });
    }

    if c.energy_concentration {
        let per = geometry.boundary_measure();
        let expected = profile.sigma * per;
        let mu0 = diags[0].row.mu_total;
        let rel = (mu0 - expected).abs() / expected;
        checks.push(CheckResult {
            name: "energy_concentration".into(),
            binding: true,
            pass: rel <= 0.02,
            value: rel,
            threshold: 0.02,
            detail: format!("mu_0 = {mu0:.5} vs sigma * Per = {expected:.5}"),
        });
    }

    if c.unit_density {
        let mut worst: f64 = 0.0;
        let mut n_probes = 0usize;
        for d in diags {
            for &th in &d.theta_probes {
                n_probes += 1;
                worst = worst.max((th - 1.0).abs());
            }
        }
        checks.push(CheckResult {
            name: "unit_density".into(),
            binding: true,
            pass: n_probes > 0 && worst <= 0.1,
            value: 1.0 + worst,
            threshold: 1.1,
            detail: format!(
                "{n_probes} probes at radius {theta_radius:.4}; worst |theta - 1| = {worst:.4}"
            ),
        });
    }

    if c.bv_bound {
        let mut worst = f64::MIN;
        for d in diags {
            worst = worst.max(d.row.tv_w - d.row.mu_total / profile.sigma);
        }
        checks.push(CheckResult {
            name: "bv_bound".into(),
            binding: true,
            pass: worst <= 1e-8,
            value: worst,
            threshold: 1e-8,
            detail: "max over snapshots of TV(w) - mu/sigma".into(),
        });
        let per = geometry.boundary_measure();
        let rel = (diags[0].row.tv_w - per).abs() / per;
        checks.push(CheckResult {
            name: "bv_perimeter".into(),
            binding: true,
            pass: rel <= 0.03,
            value: rel,
            threshold: 0.03,
            detail: format!("TV(w)(0) = {:.5} vs Per = {per:.5}", diags[0].row.tv_w),
        });
    }

    if c.energy_collapse {
        let mu0 = diags[0].row.mu_total;
        let mu_end = diags.last().unwrap().row.mu_total;
        checks.push(CheckResult {
            name: "energy_collapse".into(),
            binding: false,
            pass: mu_end <= 0.1 * mu0,
            value: mu_end / mu0,
            threshold: 0.1,
            detail: "final over initial total energy (trend, advisory)".into(),
        });
    }

    if c.planar_sigma {
        // ball ratio on a boundary sheet must recover sigma
        let probe = planar_probe_point(geometry);
        let grid = traj.snapshots[0].phi.field.grid;
        let m = energy_and_discrepancy(&traj.snapshots[0].phi, _well);
        let idx = nearest_cell_idx(&grid, &probe);
        let rep = density_ratio(&m, &[0.2], CenterStrategy::Explicit(vec![idx]));
        let (value, detail) = match rep {
            Ok(r) => {
                let ratio = r.ratio_samples[0].2;
                (
                    (ratio - profile.sigma).abs() / profile.sigma,
                    format!("ratio {ratio:.5} vs sigma {:.5}", profile.sigma),
                )
            }
            Err(e) => (f64::INFINITY, format!("probe failed: {e}")),
        };
        checks.push(CheckResult {
            name: "planar_sigma".into(),
            binding: true,
            pass: value <= 0.05,
            value,
            threshold: 0.05,
            detail,
        });
    }

    let _ = u_eps;
}

fn radius_tolerance(cfg: &ScenarioConfig) -> f64 {
    // small circles and 3-D fits carry stronger eps- and mesh-corrections
    match (&cfg.geometry, cfg.dim) {
        (_, 3) => 0.03,
        (super::config::GeometryConfig::TwoCircles { .. }, _) => 0.03,
        _ => 0.02,
    }
}

fn per_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = PeriodicGrid::min_image(a[0] - b[0]);
    let dy = PeriodicGrid::min_image(a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

fn planar_probe_point(geometry: &InitialGeometry) -> [f64; 3] {
    match geometry {
        InitialGeometry::Graph(g) => [g.samples[0], 0.5, 0.0],
        InitialGeometry::Circle { center, r0 } => [center[0] + r0, center[1], 0.0],
        _ => [0.5, 0.5, 0.0],
    }
}

fn nearest_cell_idx(grid: &PeriodicGrid, x: &[f64; 3]) -> usize {
    let n = grid.resolution as isize;
    let mut ijk = [0usize; 3];
    for a in 0..grid.dim {
        ijk[a] = ((x[a] * grid.resolution as f64).round() as isize).rem_euclid(n) as usize;
    }
    grid.index(ijk)
}

fn wave_translation_checks(
    cfg: &ScenarioConfig,
    traj: &crate::solver::Trajectory,
    checks: &mut Vec<CheckResult>,
) {
    let grid = traj.snapshots[0].phi.field.grid;
    let h = grid.h();
    let u_speed = cfg.transport.params.first().copied().unwrap_or(0.0);
    let t_end = traj.snapshots.last().unwrap().t;
    let phi0 = &traj.snapshots[0].phi;
    let phi1 = &traj.snapshots.last().unwrap().phi;
    // displacement from the zero crossings of both sheets (row x2 = 0)
    let delta = match (sheet_crossings(phi0), sheet_crossings(phi1)) {
        (Some(a), Some(b)) if a.len() == b.len() && !a.is_empty() => {
            let mut acc = 0.0;
            for (x0, x1) in a.iter().zip(b.iter()) {
                acc += PeriodicGrid::min_image(x1 - x0);
            }
            acc / a.len() as f64
        }
        _ => f64::NAN,
    };
    let expected = u_speed * t_end;
    let err = (delta - expected).abs();
    checks.push(CheckResult {
        name: "wave_translation".into(),
        binding: true,
        pass: err <= 1.5 * h,
        value: err,
        threshold: 1.5 * h,
        detail: format!("zero-set displacement {delta:.6} vs {expected:.6}"),
    });
    // shape drift: compare against the initial 1-D profile translated by the
    // measured displacement (periodic cubic interpolation along x1)
    let n = grid.resolution;
    let mut xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut ys: Vec<f64> = (0..n)
        .map(|i| phi0.field.data[grid.index([i, 0, 0])])
        .collect();
    ys.push(ys[0]);
    xs[n] = 1.0;
    let spline = CubicSpline::new(xs, ys, SplineBc::Periodic);
    let mut drift: f64 = 0.0;
    if delta.is_finite() {
        for idx in 0..grid.cell_count() {
            let x = grid.cell_center(idx);
            let expect = spline.eval((x[0] - delta).rem_euclid(1.0));
            drift = drift.max((phi1.field.data[idx] - expect).abs());
        }
    } else {
        drift = f64::NAN;
    }
    checks.push(CheckResult {
        name: "wave_shape".into(),
        binding: true,
        pass: drift <= 5e-3,
        value: drift,
        threshold: 5e-3,
        detail: "sup-norm drift after aligning by the measured displacement".into(),
    });
}

/// Sub-cell zero crossings along the x1 row at x2 = 0, ascending.
fn sheet_crossings(phi: &PhaseField) -> Option<Vec<f64>> {
    let grid = phi.field.grid;
    let n = grid.resolution;
    let h = grid.h();
    let mut out = Vec::new();
    for i in 0..n {
        let a = phi.field.data[grid.index([i, 0, 0])];
        let b = phi.field.data[grid.index([(i + 1) % n, 0, 0])];
        if (a > 0.0) != (b > 0.0) {
            out.push((i as f64 + a / (a - b)) * h);
        }
    }
    (!out.is_empty()).then_some(out)
}

fn monotonicity_checks(
    cfg: &ScenarioConfig,
    u_eps: &MollifiedTransport,
    diags: &[SnapshotDiag],
    checks: &mut Vec<CheckResult>,
    mono_rows: &mut Vec<MonoRow>,
) {
    let snaps: Vec<(f64, &MeasureField)> = diags
        .iter()
        .filter_map(|d| d.measure.as_ref().map(|m| (d.t, m)))
        .collect();
    let d_value = diags.iter().map(|d| d.row.d).fold(1.0f64, f64::max);
    let default_window = (
        diags.iter().map(|d| d.t).find(|&t| t > 0.0).unwrap_or(0.0),
        diags.last().map(|d| d.t).unwrap_or(0.0),
    );
    let (t0, t1) = cfg.audit_window.unwrap_or(default_window);
    let u = (!u_eps.is_zero()).then_some(u_eps);
    let mut worst_excess = f64::MIN;
    let mut all_pass = true;
    let mut details = Vec::new();
    for pole in &cfg.poles {
        let k = KernelSpec {
            pole_center: [pole[0], pole[1], pole[2]],
            pole_time: pole[3],
        };
        // clamp the window below the pole time
        let t1p = snaps
            .iter()
            .map(|s| s.0)
            .filter(|&t| t <= t1 + 1e-14 && t < pole[3])
            .fold(t0, f64::max);
        match monotonicity_audit(&snaps, u, &k, t0, t1p, d_value, cfg.audit_tolerance) {
            Ok(rec) => {
                // with u = 0 the bound is direct: delta M <= tolerance
                let (excess, pass) = if u.is_none() {
                    (rec.delta_m, rec.delta_m <= cfg.audit_tolerance)
                } else {
                    (
                        rec.delta_m - rec.transport_total - rec.tail_total,
                        rec.pass,
                    )
                };
                worst_excess = worst_excess.max(excess);
                all_pass &= pass;
                details.push(format!(
                    "pole ({:.3},{:.3},s={:.4}): dM {:+.3e}, disc {:.3e}, transport {:.3e}, tail {:.3e}",
                    pole[0], pole[1], pole[3], rec.delta_m, rec.discrepancy_total,
                    rec.transport_total, rec.tail_total
                ));
                for row in &rec.rows {
                    mono_rows.push(MonoRow {
                        pole: [pole[0], pole[1], pole[2]],
                        s: pole[3],
                        t: row.t,
                        value: row.value,
                        delta_from_prev: row.delta_from_prev,
                        discrepancy_term: row.discrepancy_term,
                        transport_term: row.transport_term,
                        tail_term: row.tail_term,
                        pass: row.pass,
                    });
                }
            }
            Err(e) => {
                all_pass = false;
                details.push(format!(
                    "pole ({:.3},{:.3},s={:.4}): audit failed: {e}",
                    pole[0], pole[1], pole[3]
                ));
            }
        }
    }
    checks.push(CheckResult {
        name: "monotonicity".into(),
        binding: true,
        pass: all_pass,
        value: worst_excess,
        threshold: cfg.audit_tolerance,
        detail: details.join(" | "),
    });
}

/// Runs the (eps, resolution) sweep and aggregates the convergence table.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepReport, HarnessError> {
    let sweep: &SweepConfig = cfg.sweep.as_ref().ok_or_else(|| {
        super::config::ConfigInvalid {
            messages: vec!["sweep.epsilon: required for the sweep command".into()],
        }
    })?;
    if sweep.epsilons.len() < 3 {
        return Err(super::config::ConfigInvalid {
            messages: vec![format!(
                "sweep.epsilon: need at least 3 entries, got {}",
                sweep.epsilons.len()
            )],
        }
        .into());
    }
    let out = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut d_by_time: Vec<Vec<(f64, f64)>> = Vec::new();
    for (k, (&eps, &res)) in sweep
        .epsilons
        .iter()
        .zip(sweep.resolutions.iter())
        .enumerate()
    {
        let mut entry = cfg.clone();
        entry.epsilon = eps;
        entry.resolution = res;
        entry.sweep = None;
        entry.checks = ChecksConfig {
            discrepancy_bound: true,
            bv_bound: false,
            ..all_checks_off()
        };
        entry.field_dumps = false;
        entry.interface_csv = false;
        entry.poles = Vec::new();
        entry.name = format!("{}_eps{k}", cfg.name);
        entry.output_dir = out.join(format!("entry{k}")).to_string_lossy().into_owned();
        // make sure the |xi| probe time is on the snapshot schedule
        if cfg.t_end > 0.0
            && sweep.xi_time > 0.0
            && sweep.xi_time <= cfg.t_end
            && !entry
                .snapshot_times
                .iter()
                .any(|&t| (t - sweep.xi_time).abs() < 1e-12)
        {
            entry.snapshot_times.push(sweep.xi_time);
            entry
                .snapshot_times
                .sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let report = run_scenario(&entry)?;
        let per = cfg.geometry.build().boundary_measure();
        let profile = standing_wave(&build_well(&cfg.well)?)?;
        let expected = profile.sigma * per;
        let energy_error = (report.measures[0].mu_total - expected).abs() / expected;
        let xi_row = report
            .measures
            .iter()
            .find(|r| (r.t - sweep.xi_time).abs() < 1e-12)
            .unwrap_or(&report.measures[0]);
        let d_max = report.measures.iter().map(|r| r.d).fold(f64::MIN, f64::max);
        let interface_error = interface_error_for(&entry, &report);
        d_by_time.push(report.measures.iter().map(|r| (r.t, r.d)).collect());
        rows.push(ConvergenceRow {
            epsilon: eps,
            resolution: res,
            energy_error,
            xi_l1: xi_row.xi_l1,
            d_max,
            interface_error,
        });
    }

    let mut checks = Vec::new();
    let ratio_worst = |vals: &[f64]| -> f64 {
        vals.windows(2)
            .map(|w| w[1] / w[0])
            .fold(f64::MIN, f64::max)
    };
    let energy_errs: Vec<f64> = rows.iter().map(|r| r.energy_error).collect();
    checks.push(CheckResult {
        name: "energy_error_decreasing".into(),
        binding: true,
        pass: ratio_worst(&energy_errs) < 1.0,
        value: ratio_worst(&energy_errs),
        threshold: 1.0,
        detail: format!("errors {energy_errs:?}"),
    });
    let xis: Vec<f64> = rows.iter().map(|r| r.xi_l1).collect();
    checks.push(CheckResult {
        name: "xi_l1_decreasing".into(),
        binding: true,
        pass: ratio_worst(&xis) < 1.0,
        value: ratio_worst(&xis),
        threshold: 1.0,
        detail: format!("int |xi| at t = {}: {xis:?}", sweep.xi_time),
    });
    // D uniformity across the sweep: the sup of D over the time window must
    // not drift with eps (the uniform density bound)
    let d_sups: Vec<f64> = rows.iter().map(|r| r.d_max).collect();
    let mx = d_sups.iter().cloned().fold(f64::MIN, f64::max);
    let mn = d_sups.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (mx - mn) / mn;
    let _ = &d_by_time;
    checks.push(CheckResult {
        name: "density_ratio_uniform".into(),
        binding: true,
        pass: spread < 0.15,
        value: spread,
        threshold: 0.15,
        detail: format!("sup_t D per entry: {d_sups:?}"),
    });

    write_convergence_csv(&out.join("convergence.csv"), &rows)?;
    write_checks_csv(&out.join("checks.csv"), &checks)?;
    let extra: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "eps {:.6} res {:>4}: energy err {:.4e}, |xi|_1 {:.4e}, D {:.4}, interface err {:.4e}",
                r.epsilon, r.resolution, r.energy_error, r.xi_l1, r.d_max, r.interface_error
            )
        })
        .collect();
    let summary = render_summary(&format!("{} (sweep)", cfg.name), &checks, &extra);
    std::fs::write(out.join("summary.txt"), &summary)?;
    let passed = checks.iter().all(|c| !c.binding || c.pass);
    Ok(SweepReport {
        name: cfg.name.clone(),
        output_dir: out,
        rows,
        checks,
        summary,
        passed,
    })
}

fn all_checks_off() -> ChecksConfig {
    ChecksConfig {
        radius_law: false,
        translation_law: false,
        stationarity: false,
        wave_translation: false,
        dissipation: false,
        energy_growth: false,
        discrepancy_bound: false,
        energy_concentration: false,
        unit_density: false,
        bv_bound: false,
        monotonicity: false,
        energy_collapse: false,
        planar_sigma: false,
    }
}

fn interface_error_for(cfg: &ScenarioConfig, report: &ScenarioReport) -> f64 {
    // for circles: radius-law error at the last snapshot; otherwise the
    // initial extraction error against the analytic boundary measure
    let per = cfg.geometry.build().boundary_measure();
    match &cfg.geometry {
        super::config::GeometryConfig::Circle { r0, .. } if cfg.t_end > 0.0 => {
            let t = report.measures.last().map(|r| r.t).unwrap_or(0.0);
            match exact_radius(2, *r0, t) {
                Some(rex) => {
                    // re-extract from the dumped summary is not possible here;
                    // approximate by the TV-based perimeter at the end
                    let tv = report.measures.last().map(|r| r.tv_w).unwrap_or(0.0);
                    let r_tv = tv / (2.0 * std::f64::consts::PI);
                    (r_tv - rex).abs() / rex
                }
                None => f64::NAN,
            }
        }
        _ => {
            let tv = report.measures.first().map(|r| r.tv_w).unwrap_or(0.0);
            (tv - per).abs() / per
        }
    }
}
