//! Transport fields: analytic and sampled vector fields with their mixed
//! Sobolev norms, plus the mollified form the solver actually advects with.
//!
//! The integrability exponents must satisfy 2 < q and n q / (2(q-1)) < p
//! (with p >= 4/3 when n = 2); that window is what makes the transport term
//! subordinate to mean curvature. The mollified field must obey the
//! eps-dependent bounds sup |u_eps| <= eps^-beta and
//! sup |grad u_eps| <= eps^-(1+beta); violations are reported, never clamped,
//! so a caller reacts by shrinking eps.

use crate::grid::{deriv_central, PeriodicGrid, ScalarField, VectorField};
use crate::util::{pairwise_sum, quintic_step};
use std::borrow::Cow;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("invalid transport exponents: {0}")]
    InvalidExponents(String),
    #[error("sampled transport invalid: {0}")]
    InvalidSamples(String),
    #[error(
        "mollified field violates the sup bound: {quantity} = {value:.6e} > {bound:.6e} (eps = {epsilon}); shrink eps"
    )]
    SupBoundViolated {
        quantity: &'static str,
        value: f64,
        bound: f64,
        epsilon: f64,
    },
}

/// Time-indexed vector-field samples with linear interpolation between knots.
#[derive(Debug, Clone)]
pub struct SampledTransport {
    pub times: Vec<f64>,
    pub fields: Vec<VectorField>,
}

#[derive(Debug, Clone)]
pub enum TransportKind {
    Zero,
    Constant([f64; 3]),
    /// (amplitude * sin(2 pi x2), 0, ...)
    Shear { amplitude: f64 },
    /// Rigid rotation about `center` in the x1-x2 plane, tapered to zero
    /// before the wrap seam (identity for r <= 0.3, zero for r >= 0.45).
    Rotation { center: [f64; 2], omega: f64 },
    /// Radial field amplitude * sqrt(r) * r_hat with the same taper; W^{1,p}
    /// rough at the center point.
    RoughRadial { center: [f64; 2], amplitude: f64 },
    Sampled(SampledTransport),
}

const TAPER_ON: f64 = 0.3;
const TAPER_OFF: f64 = 0.45;

fn taper(r: f64) -> f64 {
    1.0 - quintic_step((r - TAPER_ON) / (TAPER_OFF - TAPER_ON))
}

fn taper_deriv(r: f64) -> f64 {
    let t = (r - TAPER_ON) / (TAPER_OFF - TAPER_ON);
    if !(0.0..1.0).contains(&t) {
        return 0.0;
    }
    -30.0 * t * t * (1.0 - t) * (1.0 - t) / (TAPER_OFF - TAPER_ON)
}

/// A transport field with its integrability exponents.
#[derive(Debug, Clone)]
pub struct TransportSpec {
    pub kind: TransportKind,
    pub p: f64,
    pub q: f64,
}

impl TransportSpec {
    pub fn new(kind: TransportKind, p: f64, q: f64, dim: usize) -> Result<Self, TransportError> {
        if !(q > 2.0 && q.is_finite()) {
            return Err(TransportError::InvalidExponents(format!(
                "need 2 < q < inf, got q = {q}"
            )));
        }
        let lower = dim as f64 * q / (2.0 * (q - 1.0));
        if !(p > lower && p.is_finite()) {
            return Err(TransportError::InvalidExponents(format!(
                "need p > n q / (2(q-1)) = {lower}, got p = {p}"
            )));
        }
        if dim == 2 && p < 4.0 / 3.0 {
            return Err(TransportError::InvalidExponents(format!(
                "need p >= 4/3 when dim = 2, got p = {p}"
            )));
        }
        if let TransportKind::Sampled(s) = &kind {
            if s.times.is_empty() || s.times.len() != s.fields.len() {
                return Err(TransportError::InvalidSamples(
                    "times and fields must be non-empty and match".into(),
                ));
            }
            if s.times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(TransportError::InvalidSamples(
                    "sample times must be strictly increasing".into(),
                ));
            }
        }
        Ok(TransportSpec { kind, p, q })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, TransportKind::Zero)
    }

    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            TransportKind::Sampled(s) => s.times.len() == 1,
            _ => true,
        }
    }

    pub fn eval(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        match &self.kind {
            TransportKind::Zero => [0.0; 3],
            TransportKind::Constant(v) => *v,
            TransportKind::Shear { amplitude } => {
                [amplitude * (2.0 * std::f64::consts::PI * x[1]).sin(), 0.0, 0.0]
            }
            TransportKind::Rotation { center, omega } => {
                let rx = PeriodicGrid::min_image(x[0] - center[0]);
                let ry = PeriodicGrid::min_image(x[1] - center[1]);
                let r = (rx * rx + ry * ry).sqrt();
                let f = omega * taper(r);
                [-f * ry, f * rx, 0.0]
            }
            TransportKind::RoughRadial { center, amplitude } => {
                let rx = PeriodicGrid::min_image(x[0] - center[0]);
                let ry = PeriodicGrid::min_image(x[1] - center[1]);
                let r = (rx * rx + ry * ry).sqrt();
                if r < 1e-300 {
                    return [0.0; 3];
                }
                let g = amplitude * taper(r) / r.sqrt();
                [g * rx, g * ry, 0.0]
            }
            TransportKind::Sampled(s) => {
                let (i0, i1, w) = bracket(&s.times, t);
                let grid = s.fields[0].grid;
                let idx = nearest_cell(&grid, x);
                let mut out = [0.0; 3];
                for a in 0..grid.dim {
                    let v0 = s.fields[i0].comps[a].data[idx];
                    let v1 = s.fields[i1].comps[a].data[idx];
                    out[a] = (1.0 - w) * v0 + w * v1;
                }
                out
            }
        }
    }

    /// Jacobian d u_i / d x_j; analytic for the analytic kinds, central
    /// differences at the nearest cell for sampled fields.
    pub fn grad(&self, x: &[f64; 3], t: f64) -> [[f64; 3]; 3] {
        let mut j = [[0.0; 3]; 3];
        match &self.kind {
            TransportKind::Zero | TransportKind::Constant(_) => {}
            TransportKind::Shear { amplitude } => {
                let tp = 2.0 * std::f64::consts::PI;
                j[0][1] = amplitude * tp * (tp * x[1]).cos();
            }
            TransportKind::Rotation { center, omega } => {
                let rx = PeriodicGrid::min_image(x[0] - center[0]);
                let ry = PeriodicGrid::min_image(x[1] - center[1]);
                let r = (rx * rx + ry * ry).sqrt().max(1e-300);
                let f = taper(r);
                let fp = taper_deriv(r);
                // u = omega f(r) (-ry, rx)
                j[0][0] = omega * (fp * (-ry) * rx / r);
                j[0][1] = omega * (fp * (-ry) * ry / r - f);
                j[1][0] = omega * (fp * rx * rx / r + f);
                j[1][1] = omega * (fp * rx * ry / r);
            }
            TransportKind::RoughRadial { center, amplitude } => {
                let rx = PeriodicGrid::min_image(x[0] - center[0]);
                let ry = PeriodicGrid::min_image(x[1] - center[1]);
                let r = (rx * rx + ry * ry).sqrt().max(1e-12);
                let g = amplitude * taper(r) / r.sqrt();
                let gp =
                    amplitude * (taper_deriv(r) / r.sqrt() - 0.5 * taper(r) / (r * r.sqrt()));
                j[0][0] = gp * rx * rx / r + g;
                j[0][1] = gp * rx * ry / r;
                j[1][0] = gp * ry * rx / r;
                j[1][1] = gp * ry * ry / r + g;
            }
            TransportKind::Sampled(s) => {
                let (i0, i1, w) = bracket(&s.times, t);
                let grid = s.fields[0].grid;
                let idx = nearest_cell(&grid, x);
                let inv2h = 0.5 / grid.h();
                for a in 0..grid.dim {
                    for b in 0..grid.dim {
                        let dp = grid.neighbor(idx, b, 1);
                        let dm = grid.neighbor(idx, b, -1);
                        let g0 = (s.fields[i0].comps[a].data[dp]
                            - s.fields[i0].comps[a].data[dm])
                            * inv2h;
                        let g1 = (s.fields[i1].comps[a].data[dp]
                            - s.fields[i1].comps[a].data[dm])
                            * inv2h;
                        j[a][b] = (1.0 - w) * g0 + w * g1;
                    }
                }
            }
        }
        j
    }
}

fn bracket(times: &[f64], t: f64) -> (usize, usize, f64) {
    if times.len() == 1 || t <= times[0] {
        return (0, 0, 0.0);
    }
    if t >= *times.last().unwrap() {
        let k = times.len() - 1;
        return (k, k, 0.0);
    }
    let i1 = times.partition_point(|&s| s <= t);
    let i0 = i1 - 1;
    let w = (t - times[i0]) / (times[i1] - times[i0]);
    (i0, i1, w)
}

fn nearest_cell(grid: &PeriodicGrid, x: &[f64; 3]) -> usize {
    let n = grid.resolution as isize;
    let mut ijk = [0usize; 3];
    for a in 0..grid.dim {
        ijk[a] = ((x[a] * grid.resolution as f64).round() as isize).rem_euclid(n) as usize;
    }
    grid.index(ijk)
}

/// || u ||_{L^q([0,T]; (W^{1,p})^n)} by lattice quadrature in space and a
/// uniform trapezoid partition (>= 64 slices) in time.
pub fn sobolev_norm(u: &TransportSpec, t_end: f64, grid: &PeriodicGrid) -> f64 {
    assert!(t_end > 0.0, "T must be positive");
    let slices: usize = 64;
    let spatial = |t: f64| -> f64 {
        let cells = grid.cell_count();
        let mut vals = vec![0.0; cells];
        for (idx, v) in vals.iter_mut().enumerate() {
            let x = grid.cell_center(idx);
            let uv = u.eval(&x, t);
            let ju = u.grad(&x, t);
            let mut mag2 = 0.0;
            let mut jmag2 = 0.0;
            for a in 0..grid.dim {
                mag2 += uv[a] * uv[a];
                for b in 0..grid.dim {
                    jmag2 += ju[a][b] * ju[a][b];
                }
            }
            *v = mag2.sqrt().powf(u.p) + jmag2.sqrt().powf(u.p);
        }
        pairwise_sum(&vals) * grid.cell_volume()
    };
    if u.is_autonomous() {
        let s = spatial(0.0);
        return s.powf(1.0 / u.p) * t_end.powf(1.0 / u.q);
    }
    let dt = t_end / slices as f64;
    let mut acc = 0.0;
    for k in 0..=slices {
        let t = k as f64 * dt;
        let wgt = if k == 0 || k == slices { 0.5 } else { 1.0 };
        acc += wgt * spatial(t).powf(u.q / u.p) * dt;
    }
    acc.powf(1.0 / u.q)
}

/// The mollified transport field: time-indexed slices of u convolved with a
/// periodic Gaussian of standard deviation max(h, eps^(1+beta)), with the
/// sup bounds verified (never clamped).
#[derive(Debug, Clone)]
pub struct MollifiedTransport {
    pub epsilon: f64,
    pub beta: f64,
    times: Vec<f64>,
    slices: Vec<VectorField>,
    pub sup_u: f64,
    pub sup_grad_u: f64,
    zero: bool,
}

impl MollifiedTransport {
    /// Field at time t, linear interpolation between stored slices.
    pub fn slice_at(&self, t: f64) -> Cow<'_, VectorField> {
        let (i0, i1, w) = bracket(&self.times, t);
        if i0 == i1 {
            return Cow::Borrowed(&self.slices[i0]);
        }
        let mut out = self.slices[i0].clone();
        for a in 0..out.grid.dim {
            let d1 = &self.slices[i1].comps[a].data;
            for (o, &v1) in out.comps[a].data.iter_mut().zip(d1.iter()) {
                *o = (1.0 - w) * *o + w * v1;
            }
        }
        Cow::Owned(out)
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn max_abs(&self) -> f64 {
        self.sup_u
    }
}

/// Mollifies `u` on `grid` over [0, T].
pub fn mollify(
    u: &TransportSpec,
    epsilon: f64,
    beta: f64,
    grid: &PeriodicGrid,
    t_end: f64,
) -> Result<MollifiedTransport, TransportError> {
    assert!(epsilon > 0.0 && epsilon < 1.0, "eps must be in (0, 1)");
    assert!(beta > 0.0 && beta < 0.5, "beta must be in (0, 1/2)");
    let times: Vec<f64> = match &u.kind {
        TransportKind::Sampled(s) => s.times.clone(),
        _ if u.is_autonomous() => vec![0.0],
        _ => {
            let slices = 64;
            (0..=slices)
                .map(|k| k as f64 * t_end / slices as f64)
                .collect()
        }
    };
    let sigma = grid.h().max(epsilon.powf(1.0 + beta));
    let kernel = gaussian_kernel(grid.h(), sigma);
    let mut slices = Vec::with_capacity(times.len());
    for &t in &times {
        let mut vf = VectorField::zeros(*grid);
        for a in 0..grid.dim {
            let sampled = ScalarField::from_fn(*grid, |x| u.eval(x, t)[a]);
            vf.comps[a] = convolve_separable(&sampled, &kernel);
        }
        slices.push(vf);
    }
    // Verify (not apply) the sup bounds over the sampled trajectory.
    let bound_u = epsilon.powf(-beta);
    let bound_grad = epsilon.powf(-(1.0 + beta));
    let mut sup_u = 0.0f64;
    let mut sup_grad = 0.0f64;
    for vf in &slices {
        for idx in 0..grid.cell_count() {
            let mut m2 = 0.0;
            let mut g2 = 0.0;
            for a in 0..grid.dim {
                let v = vf.comps[a].data[idx];
                m2 += v * v;
            }
            for a in 0..grid.dim {
                for b in 0..grid.dim {
                    let gp = vf.comps[a].data[grid.neighbor(idx, b, 1)];
                    let gm = vf.comps[a].data[grid.neighbor(idx, b, -1)];
                    let g = (gp - gm) * 0.5 * grid.resolution as f64;
                    g2 += g * g;
                }
            }
            sup_u = sup_u.max(m2.sqrt());
            sup_grad = sup_grad.max(g2.sqrt());
        }
    }
    if sup_u > bound_u {
        return Err(TransportError::SupBoundViolated {
            quantity: "sup |u_eps|",
            value: sup_u,
            bound: bound_u,
            epsilon,
        });
    }
    if sup_grad > bound_grad {
        return Err(TransportError::SupBoundViolated {
            quantity: "sup |grad u_eps|",
            value: sup_grad,
            bound: bound_grad,
            epsilon,
        });
    }
    Ok(MollifiedTransport {
        epsilon,
        beta,
        times,
        zero: u.is_zero(),
        slices,
        sup_u,
        sup_grad_u: sup_grad,
    })
}

fn gaussian_kernel(h: f64, sigma: f64) -> Vec<f64> {
    let half = ((6.0 * sigma / h).ceil() as usize).max(1);
    let mut w: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let d = (j as f64 - half as f64) * h;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    w
}

fn convolve_separable(f: &ScalarField, kernel: &[f64]) -> ScalarField {
    let grid = f.grid;
    let n = grid.resolution as isize;
    let half = (kernel.len() / 2) as isize;
    let mut cur = f.data.clone();
    for axis in 0..grid.dim {
        let mut next = vec![0.0; cur.len()];
        for (idx, out) in next.iter_mut().enumerate() {
            let ijk = grid.cell_ijk(idx);
            let mut acc = 0.0;
            for (j, &w) in kernel.iter().enumerate() {
                let off = j as isize - half;
                let mut nb = ijk;
                nb[axis] = (ijk[axis] as isize + off).rem_euclid(n) as usize;
                acc += w * cur[grid.index(nb)];
            }
            *out = acc;
        }
        cur = next;
    }
    ScalarField { grid, data: cur }
}

/// || u - u_eps || in the same mixed norm, with both gradients taken
/// discretely so the comparison is consistent.
pub fn mollification_error_norm(
    u: &TransportSpec,
    m: &MollifiedTransport,
    t_end: f64,
    grid: &PeriodicGrid,
) -> f64 {
    let spatial = |t: f64| -> f64 {
        let slice = m.slice_at(t);
        let mut diff = VectorField::zeros(*grid);
        for a in 0..grid.dim {
            let exact = ScalarField::from_fn(*grid, |x| u.eval(x, t)[a]);
            for idx in 0..grid.cell_count() {
                diff.comps[a].data[idx] = exact.data[idx] - slice.comps[a].data[idx];
            }
        }
        let grads: Vec<Vec<ScalarField>> = (0..grid.dim)
            .map(|a| {
                (0..grid.dim)
                    .map(|b| deriv_central(&diff.comps[a], b))
                    .collect()
            })
            .collect();
        let mut vals = vec![0.0; grid.cell_count()];
        for (idx, v) in vals.iter_mut().enumerate() {
            let mut m2 = 0.0;
            let mut g2 = 0.0;
            for a in 0..grid.dim {
                let d = diff.comps[a].data[idx];
                m2 += d * d;
                for gb in grads[a].iter() {
                    g2 += gb.data[idx] * gb.data[idx];
                }
            }
            *v = m2.sqrt().powf(u.p) + g2.sqrt().powf(u.p);
        }
        pairwise_sum(&vals) * grid.cell_volume()
    };
    if u.is_autonomous() {
        return spatial(0.0).powf(1.0 / u.p) * t_end.powf(1.0 / u.q);
    }
    let slices = 64;
    let dt = t_end / slices as f64;
    let mut acc = 0.0;
    for k in 0..=slices {
        let wgt = if k == 0 || k == slices { 0.5 } else { 1.0 };
        acc += wgt * spatial(k as f64 * dt).powf(u.q / u.p) * dt;
    }
    acc.powf(1.0 / u.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::divergence;

    fn grid2(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(2, n).unwrap()
    }

    #[test]
    fn exponent_window_is_enforced() {
        assert!(TransportSpec::new(TransportKind::Zero, 2.0, 4.0, 2).is_ok());
        // q must exceed 2
        assert!(TransportSpec::new(TransportKind::Zero, 2.0, 2.0, 2).is_err());
        // p floor 4/3 in dim 2
        assert!(TransportSpec::new(TransportKind::Zero, 1.2, 4.0, 2).is_err());
        // n q / (2(q-1)) = 3*4/6 = 2 in dim 3
        assert!(TransportSpec::new(TransportKind::Zero, 1.9, 4.0, 3).is_err());
        assert!(TransportSpec::new(TransportKind::Zero, 2.1, 4.0, 3).is_ok());
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = grid2(32);
        let u = TransportSpec::new(TransportKind::Zero, 2.0, 4.0, 2).unwrap();
        assert_eq!(sobolev_norm(&u, 1.0, &g), 0.0);
    }

    #[test]
    fn constant_field_norm_is_closed_form() {
        let g = grid2(64);
        let u =
            TransportSpec::new(TransportKind::Constant([0.8, 0.0, 0.0]), 2.5, 4.0, 2).unwrap();
        let t = 0.7;
        let got = sobolev_norm(&u, t, &g);
        let expected = 0.8 * t.powf(0.25);
        assert!(
            (got - expected).abs() / expected < 1e-12,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn shear_norm_matches_quadrature_oracle() {
        let g = grid2(128);
        let u = TransportSpec::new(TransportKind::Shear { amplitude: 1.0 }, 4.0, 4.0, 2).unwrap();
        let got = sobolev_norm(&u, 1.0, &g);
        // oracle: 1-D Simpson of sin^4 + (2 pi cos)^4 over one period
        let f = |y: f64| {
            let tp = 2.0 * std::f64::consts::PI;
            (tp * y).sin().abs().powi(4) + (tp * (tp * y).cos()).abs().powi(4)
        };
        let m = 4096;
        let mut s = 0.0;
        for i in 0..m {
            let a = i as f64 / m as f64;
            let b = (i + 1) as f64 / m as f64;
            s += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        let expected = s.powf(0.25);
        assert!(
            (got - expected).abs() / expected < 1e-6,
            "{got} vs oracle {expected}"
        );
    }

    #[test]
    fn norm_is_monotone_in_t_and_homogeneous() {
        let g = grid2(64);
        let mk = |amp: f64| {
            TransportSpec::new(TransportKind::Shear { amplitude: amp }, 2.0, 3.0, 2).unwrap()
        };
        let u = mk(1.0);
        let n1 = sobolev_norm(&u, 0.5, &g);
        let n2 = sobolev_norm(&u, 1.0, &g);
        assert!(n2 > n1);
        let scaled = sobolev_norm(&mk(2.5), 0.5, &g);
        assert!((scaled - 2.5 * n1).abs() / scaled < 1e-12);
    }

    #[test]
    fn mollify_zero_stays_zero() {
        let g = grid2(32);
        let u = TransportSpec::new(TransportKind::Zero, 2.0, 4.0, 2).unwrap();
        let m = mollify(&u, 0.05, 0.25, &g, 1.0).unwrap();
        assert!(m.is_zero());
        assert_eq!(m.slice_at(0.3).max_abs(), 0.0);
    }

    #[test]
    fn constant_sup_bound_arithmetic() {
        let g = grid2(32);
        // |u| = 1 <= 0.01^(-1/4) ~ 3.16: passes
        let u1 =
            TransportSpec::new(TransportKind::Constant([1.0, 0.0, 0.0]), 2.0, 4.0, 2).unwrap();
        let m = mollify(&u1, 0.01, 0.25, &g, 1.0).unwrap();
        assert!((m.sup_u - 1.0).abs() < 1e-12);
        // |u| = 5 > 3.16: rejected
        let u5 =
            TransportSpec::new(TransportKind::Constant([5.0, 0.0, 0.0]), 2.0, 4.0, 2).unwrap();
        match mollify(&u5, 0.01, 0.25, &g, 1.0) {
            Err(TransportError::SupBoundViolated { value, bound, .. }) => {
                assert!((value - 5.0).abs() < 1e-12);
                assert!((bound - 0.01f64.powf(-0.25)).abs() < 1e-12);
            }
            other => panic!("expected SupBoundViolated, got {other:?}"),
        }
    }

    #[test]
    fn mollified_divergence_free_field_stays_divergence_free() {
        let g = grid2(128);
        let u = TransportSpec::new(TransportKind::Shear { amplitude: 1.0 }, 2.0, 4.0, 2).unwrap();
        let m = mollify(&u, 0.02, 0.25, &g, 1.0).unwrap();
        let div = divergence(&m.slice_at(0.0));
        assert!(div.max_abs() < 1e-6, "div = {}", div.max_abs());
    }

    #[test]
    fn mollification_converges_as_eps_shrinks() {
        let g = grid2(128);
        let u = TransportSpec::new(TransportKind::Shear { amplitude: 1.0 }, 2.0, 4.0, 2).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let m = mollify(&u, eps, 0.25, &g, 1.0).unwrap();
            let err = mollification_error_norm(&u, &m, 1.0, &g);
            assert!(err < prev, "eps {eps}: {err} not below {prev}");
            prev = err;
        }
    }

    #[test]
    fn rough_radial_grad_is_integrable_but_large() {
        let g = grid2(128);
        let u = TransportSpec::new(
            TransportKind::RoughRadial {
                center: [0.5, 0.5],
                amplitude: 1.0,
            },
            1.6,
            4.0,
            2,
        )
        .unwrap();
        let norm = sobolev_norm(&u, 1.0, &g);
        assert!(norm.is_finite() && norm > 0.1);
        // mollification smooths the center singularity enough for the bounds
        let m = mollify(&u, 1.0 / 64.0, 0.25, &g, 1.0).unwrap();
        assert!(m.sup_grad_u <= (1.0f64 / 64.0).powf(-1.25));
    }
}
