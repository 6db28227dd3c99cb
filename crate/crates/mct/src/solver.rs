//! Time stepping for the Allen-Cahn equation with transport,
//! dphi/dt = lap phi - W'(phi)/eps^2 - u_eps . grad phi.
//!
//! Two schemes: forward Euler, and a semi-implicit step that treats the
//! Laplacian implicitly by dimensional splitting (periodic tridiagonal solves
//! per axis) while the reaction and advection stay explicit. The transport
//! field is evaluated at the half step. A maximum-principle monitor aborts
//! the run if |phi| leaves [0, 1 + 1e-6].

use crate::grid::{PeriodicGrid, PhaseField, ScalarField};
use crate::potential::DoubleWell;
use crate::transport::MollifiedTransport;
use crate::util::{pairwise_sum, PeriodicThomas};
use crate::grid::VectorField;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("solver config invalid: {0}")]
    InvalidConfig(String),
    #[error("maximum principle violated at t = {t}: max |phi| = {max_abs}")]
    StabilityViolation { t: f64, max_abs: f64 },
}

pub const MAX_PRINCIPLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSpec {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub dt: DtSpec,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// First-order upwind advection instead of central differences.
    pub upwind: bool,
}

impl SolverConfig {
    /// The stability ceiling cfl_safety * min(...) for this scheme.
    pub fn dt_bound(&self, grid: &PeriodicGrid, eps: f64, max_d2: f64, max_u: f64) -> f64 {
        let h = grid.h();
        let mut bound = eps * eps / max_d2.max(1e-300);
        if self.scheme == Scheme::Explicit {
            bound = bound.min(h * h / (2.0 * grid.dim as f64));
        }
        if max_u > 1e-300 {
            bound = bound.min(h / max_u);
        }
        self.cfl_safety * bound
    }

    pub fn resolve_dt(
        &self,
        grid: &PeriodicGrid,
        eps: f64,
        max_d2: f64,
        max_u: f64,
    ) -> Result<f64, SolverError> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "cfl_safety {} not in (0, 1]",
                self.cfl_safety
            )));
        }
        if self.t_end < 0.0 {
            return Err(SolverError::InvalidConfig("t_end negative".into()));
        }
        let bound = self.dt_bound(grid, eps, max_d2, max_u);
        match self.dt {
            DtSpec::Auto => Ok(bound),
            DtSpec::Fixed(dt) => {
                if dt <= 0.0 || dt > bound {
                    Err(SolverError::InvalidConfig(format!(
                        "dt = {dt} outside the stable window (0, {bound:.3e}]"
                    )))
                } else {
                    Ok(dt)
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub phi: PhaseField,
    pub t: f64,
    pub step_count: u64,
}

/// lap phi - W'(phi)/eps^2 - u . grad phi, single fused stencil pass.
pub fn rhs(
    phi: &PhaseField,
    well: &DoubleWell,
    u_slice: Option<&VectorField>,
    upwind: bool,
) -> Result<ScalarField, SolverError> {
    if let Some(u) = u_slice {
        if u.grid != phi.field.grid {
            return Err(SolverError::GridMismatch);
        }
    }
    let grid = phi.field.grid;
    let mut out = ScalarField::zeros(grid);
    rhs_kernel(phi, well, u_slice, upwind, true, &mut out.data, None);
    Ok(out)
}

/// Writes `phi + dt*(reaction+advection) [+ dt*lap if with_lap]` pieces:
/// with_lap=true writes the full rhs; with_lap=false writes only the
/// explicit part used by the semi-implicit scheme. Optionally accumulates
/// the transport-work integrand eps (u . grad phi)^2.
fn rhs_kernel(
    phi: &PhaseField,
    well: &DoubleWell,
    u_slice: Option<&VectorField>,
    upwind: bool,
    with_lap: bool,
    out: &mut [f64],
    work_integrand: Option<&mut Vec<f64>>,
) {
    let grid = phi.field.grid;
    let data = &phi.field.data;
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;
    let inv_h = 1.0 / h;
    let inv_eps2 = 1.0 / (phi.epsilon * phi.epsilon);
    let eps = phi.epsilon;
    let dim = grid.dim;
    let work = work_integrand.map(|w| {
        w.clear();
        w.resize(data.len(), 0.0);
        w
    });
    let compute = |idx: usize| -> (f64, f64) {
        let c = data[idx];
        let mut lap = 0.0;
        let mut adv = 0.0;
        for a in 0..dim {
            let vp = data[grid.neighbor(idx, a, 1)];
            let vm = data[grid.neighbor(idx, a, -1)];
            if with_lap {
                lap += (vp + vm - 2.0 * c) * inv_h2;
            }
            if let Some(u) = u_slice {
                let ua = u.comps[a].data[idx];
                let g = if upwind {
                    if ua >= 0.0 {
                        (c - vm) * inv_h
                    } else {
                        (vp - c) * inv_h
                    }
                } else {
                    (vp - vm) * inv_2h
                };
                adv += ua * g;
            }
        }
        (lap - well.d1(c) * inv_eps2 - adv, eps * adv * adv)
    };
    match work {
        Some(w) => {
            out.par_iter_mut()
                .zip(w.par_iter_mut())
                .enumerate()
                .for_each(|(idx, (o, wi))| {
                    let (r, work_v) = compute(idx);
                    *o = r;
                    *wi = work_v;
                });
        }
        None => {
            out.par_iter_mut().enumerate().for_each(|(idx, o)| {
                *o = compute(idx).0;
            });
        }
    }
}

/// Central-difference energy integrand, bitwise identical to the measures
/// module's e_eps so the per-step series matches the reported measure.
fn energy_total(phi: &PhaseField, well: &DoubleWell, scratch: &mut Vec<f64>) -> f64 {
    let grid = phi.field.grid;
    let data = &phi.field.data;
    let inv_2h = 0.5 * grid.resolution as f64;
    let eps = phi.epsilon;
    scratch.clear();
    scratch.resize(data.len(), 0.0);
    scratch.par_iter_mut().enumerate().for_each(|(idx, o)| {
        let mut g2 = 0.0;
        for a in 0..grid.dim {
            let g = (data[grid.neighbor(idx, a, 1)] - data[grid.neighbor(idx, a, -1)]) * inv_2h;
            g2 += g * g;
        }
        *o = 0.5 * eps * g2 + well.value(data[idx]) / eps;
    });
    pairwise_sum(scratch) * grid.cell_volume()
}

/// One step of the chosen scheme; `u_eps` is sampled at t + dt/2.
/// Returns the new state and the transport-work increment
/// dt * integral of eps (u . grad phi)^2 evaluated at the old state.
pub fn step(
    state: &FlowState,
    u_eps: &MollifiedTransport,
    well: &DoubleWell,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<(FlowState, f64), SolverError> {
    let grid = state.phi.field.grid;
    let slice = if u_eps.is_zero() {
        None
    } else {
        Some(u_eps.slice_at(state.t + 0.5 * dt))
    };
    let slice_ref = slice.as_deref();
    let mut work_buf = Vec::new();
    let mut new_data = vec![0.0; grid.cell_count()];
    match cfg.scheme {
        Scheme::Explicit => {
            rhs_kernel(
                &state.phi,
                well,
                slice_ref,
                cfg.upwind,
                true,
                &mut new_data,
                Some(&mut work_buf),
            );
            let old = &state.phi.field.data;
            new_data
                .par_iter_mut()
                .zip(old.par_iter())
                .for_each(|(r, &c)| {
                    *r = c + dt * *r;
                });
        }
        Scheme::SemiImplicit => {
            rhs_kernel(
                &state.phi,
                well,
                slice_ref,
                cfg.upwind,
                false,
                &mut new_data,
                Some(&mut work_buf),
            );
            let old = &state.phi.field.data;
            new_data
                .par_iter_mut()
                .zip(old.par_iter())
                .for_each(|(r, &c)| {
                    *r = c + dt * *r;
                });
            // (I - dt D_aa) solve along each axis; elimination coefficients
            // are shared by every line
            let n = grid.resolution;
            let r = dt * (n as f64) * (n as f64);
            let solver = PeriodicThomas::new(-r, 1.0 + 2.0 * r, n);
            let mut line = vec![0.0; n];
            for axis in 0..grid.dim {
                let stride = stride_of(&grid, axis);
                for start in line_starts(&grid, axis) {
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = new_data[start + j * stride];
                    }
                    solver.solve(&mut line);
                    for (j, &v) in line.iter().enumerate() {
                        new_data[start + j * stride] = v;
                    }
                }
            }
        }
    }
    let work = if slice_ref.is_some() {
        dt * pairwise_sum(&work_buf) * grid.cell_volume()
    } else {
        0.0
    };
    let t_new = state.t + dt;
    let max_abs = new_data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if !(max_abs <= 1.0 + MAX_PRINCIPLE_TOL) {
        return Err(SolverError::StabilityViolation {
            t: t_new,
            max_abs,
        });
    }
    Ok((
        FlowState {
            phi: PhaseField {
                field: ScalarField {
                    grid,
                    data: new_data,
                },
                epsilon: state.phi.epsilon,
            },
            t: t_new,
            step_count: state.step_count + 1,
        },
        work,
    ))
}

fn stride_of(grid: &PeriodicGrid, axis: usize) -> usize {
    let n = grid.resolution;
    match (grid.dim, axis) {
        (1, _) => 1,
        (2, 0) => n,
        (2, _) => 1,
        (3, 0) => n * n,
        (3, 1) => n,
        _ => 1,
    }
}

fn line_starts(grid: &PeriodicGrid, axis: usize) -> Vec<usize> {
    let n = grid.resolution;
    let mut out = Vec::new();
    match grid.dim {
        1 => out.push(0),
        2 => {
            let other_stride = if axis == 0 { 1 } else { n };
            for k in 0..n {
                out.push(k * other_stride);
            }
        }
        _ => {
            let (s1, s2) = match axis {
                0 => (n, 1),
                1 => (n * n, 1),
                _ => (n * n, n),
            };
            for a in 0..n {
                for b in 0..n {
                    out.push(a * s1 + b * s2);
                }
            }
        }
    }
    out
}

/// A completed run: states at the requested snapshot times plus per-step
/// energy bookkeeping.
#[derive(Debug)]
pub struct Trajectory {
    pub snapshots: Vec<FlowState>,
    /// (t, mu(Omega)) after every step, starting at t = 0.
    pub energy_series: Vec<(f64, f64)>,
    /// (t, cumulative transport work integral) on the same step times.
    pub transport_work_series: Vec<(f64, f64)>,
    pub dt: f64,
}

impl Trajectory {
    pub fn snapshot_at(&self, t: f64) -> Option<&FlowState> {
        self.snapshots.iter().find(|s| (s.t - t).abs() < 1e-12)
    }
}

/// Advances `initial` to cfg.t_end, landing exactly on every requested
/// snapshot time (steps are clipped, never stretched). Snapshots at t = 0 and
/// t_end are always included.
pub fn run(
    initial: FlowState,
    u_eps: &MollifiedTransport,
    well: &DoubleWell,
    cfg: &SolverConfig,
    snapshot_times: &[f64],
) -> Result<Trajectory, SolverError> {
    run_with_options(initial, u_eps, well, cfg, snapshot_times, true)
}

/// Like [`run`], with the per-step energy series optional (the dissipation
/// and energy-growth checks need it; sweeps skip it for speed).
pub fn run_with_options(
    initial: FlowState,
    u_eps: &MollifiedTransport,
    well: &DoubleWell,
    cfg: &SolverConfig,
    snapshot_times: &[f64],
    track_energy: bool,
) -> Result<Trajectory, SolverError> {
    let grid = initial.phi.field.grid;
    let eps = initial.phi.epsilon;
    let dt = cfg.resolve_dt(&grid, eps, well.max_d2_abs(), u_eps.max_abs())?;
    let mut times: Vec<f64> = snapshot_times
        .iter()
        .cloned()
        .filter(|&t| t > 0.0 && t <= cfg.t_end)
        .collect();
    times.push(cfg.t_end);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut scratch = Vec::new();
    let mut state = initial;
    state.t = 0.0;
    let mut energy_series = vec![(0.0, energy_total(&state.phi, well, &mut scratch))];
    let mut work_series = vec![(0.0, 0.0)];
    let mut work_acc = 0.0;
    let mut snapshots = vec![state.clone()];
    for &target in &times {
        if target <= 0.0 {
            continue;
        }
        while state.t < target - 1e-14 {
            let step_dt = dt.min(target - state.t);
            let (next, work) = step(&state, u_eps, well, cfg, step_dt)?;
            state = next;
            work_acc += work;
            if track_energy {
                energy_series.push((state.t, energy_total(&state.phi, well, &mut scratch)));
                work_series.push((state.t, work_acc));
            }
        }
        state.t = target; // remove accumulated roundoff in t
        snapshots.push(state.clone());
    }
    if !track_energy {
        energy_series.push((state.t, energy_total(&state.phi, well, &mut scratch)));
        work_series.push((state.t, work_acc));
    }
    Ok(Trajectory {
        snapshots,
        energy_series,
        transport_work_series: work_series,
        dt,
    })
}
