//! Initial phase fields: truncated signed distance to a smooth hypersurface
//! composed with the standing wave, phi_0 = psi(d_trunc / eps).
//!
//! The truncation h(d) equals d for |d| <= r/3, ramps with a C^2 slope
//! profile, and is exactly the constant r/2 beyond 2r/3, is odd, and has
//! slope in [0, 1] everywhere. Keeping the slope at most 1 is what makes the
//! initial discrepancy nonpositive up to discretization.

use crate::grid::{PeriodicGrid, PhaseField, ScalarField};
use crate::potential::Profile;
use crate::util::{quintic_step_integral, CubicSpline, SplineBc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InitError {
    #[error("eps = {eps} below the resolution floor 2h = {min} (profile unresolved)")]
    EpsilonGridMismatch { eps: f64, min: f64 },
    #[error("eps = {eps} exceeds r_trunc/10 = {max} (truncation plateau too close)")]
    TruncationTooTight { eps: f64, max: f64 },
    #[error("geometry invalid: {0}")]
    GeometryInvalid(String),
}

/// Minimum clearance between a feature and its periodic copies (and between
/// the two circles of a pair).
const CLEARANCE: f64 = 0.1;

/// Periodic height samples for the graph geometry; the region is the band
/// between the curve x1 = g(x2) and its half-period translate.
#[derive(Debug, Clone)]
pub struct GraphHeights {
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum InitialGeometry {
    Circle { center: [f64; 2], r0: f64 },
    Sphere { center: [f64; 3], r0: f64 },
    TwoCircles { c1: [f64; 2], r1: f64, c2: [f64; 2], r2: f64 },
    Annulus { center: [f64; 2], r_in: f64, r_out: f64 },
    Graph(GraphHeights),
}

impl InitialGeometry {
    pub fn validate(&self, dim: usize) -> Result<(), InitError> {
        let need = |want: usize| -> Result<(), InitError> {
            if dim != want {
                return Err(InitError::GeometryInvalid(format!(
                    "geometry needs dim {want}, grid has dim {dim}"
                )));
            }
            Ok(())
        };
        match self {
            InitialGeometry::Circle { r0, .. } => {
                need(2)?;
                check_radius(*r0)
            }
            InitialGeometry::Sphere { r0, .. } => {
                need(3)?;
                check_radius(*r0)
            }
            InitialGeometry::TwoCircles { c1, r1, c2, r2 } => {
                need(2)?;
                check_radius(*r1)?;
                check_radius(*r2)?;
                // the pair only needs disjoint closures; the 0.1 clearance
                // rule concerns wrap copies and is covered by check_radius
                let d = per_dist2(c1, c2);
                if d <= r1 + r2 + 1e-9 {
                    return Err(InitError::GeometryInvalid(format!(
                        "circle closures not disjoint: centers {d:.4} apart vs radii sum {:.4}",
                        r1 + r2
                    )));
                }
                Ok(())
            }
            InitialGeometry::Annulus { r_in, r_out, .. } => {
                need(2)?;
                check_radius(*r_out)?;
                if !(*r_in > 0.0 && r_in + 0.02 <= *r_out) {
                    return Err(InitError::GeometryInvalid(format!(
                        "annulus needs 0 < r_in < r_out, got ({r_in}, {r_out})"
                    )));
                }
                Ok(())
            }
            InitialGeometry::Graph(g) => {
                need(2)?;
                if g.samples.len() < 4 {
                    return Err(InitError::GeometryInvalid(
                        "graph needs at least 4 height samples".into(),
                    ));
                }
                let max = g.samples.iter().cloned().fold(f64::MIN, f64::max);
                let min = g.samples.iter().cloned().fold(f64::MAX, f64::min);
                if max - min > 0.5 - CLEARANCE {
                    return Err(InitError::GeometryInvalid(format!(
                        "graph oscillation {:.3} leaves less than {CLEARANCE} clearance to the \
                         half-period translate",
                        max - min
                    )));
                }
                Ok(())
            }
        }
    }

    /// Analytic perimeter (dim 2) or surface area (dim 3) of the boundary.
    pub fn boundary_measure(&self) -> f64 {
        use std::f64::consts::PI;
        match self {
            InitialGeometry::Circle { r0, .. } => 2.0 * PI * r0,
            InitialGeometry::Sphere { r0, .. } => 4.0 * PI * r0 * r0,
            InitialGeometry::TwoCircles { r1, r2, .. } => 2.0 * PI * (r1 + r2),
            InitialGeometry::Annulus { r_in, r_out, .. } => 2.0 * PI * (r_in + r_out),
            InitialGeometry::Graph(g) => {
                // both band boundaries have the same arc length
                let curve = GraphCurve::new(&g.samples, 0.0);
                2.0 * curve.arc_length()
            }
        }
    }

    /// Default truncation radius. The scale is the interior reach, enlarged by
    /// 1.4 (the plateau only needs to start before the medial axis) and kept
    /// large enough that eps sweeps up to eps = r_trunc/10 remain admissible
    /// at desk resolutions; far-field distance kinks beyond the exact zone
    /// carry exponentially little energy.
    pub fn default_r_trunc(&self) -> f64 {
        let scale = match self {
            InitialGeometry::Circle { r0, .. } | InitialGeometry::Sphere { r0, .. } => *r0,
            InitialGeometry::TwoCircles { r1, r2, .. } => r1.min(*r2),
            InitialGeometry::Annulus { r_in, r_out, .. } => 0.5 * (r_out - r_in),
            InitialGeometry::Graph(_) => 0.25,
        };
        (1.4 * scale).max(0.32).min(0.45)
    }
}

fn check_radius(r: f64) -> Result<(), InitError> {
    if !(r > 0.0 && 2.0 * r <= 1.0 - CLEARANCE) {
        return Err(InitError::GeometryInvalid(format!(
            "radius {r} must be in (0, {}]",
            (1.0 - CLEARANCE) / 2.0
        )));
    }
    Ok(())
}

fn per_dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = PeriodicGrid::min_image(a[0] - b[0]);
    let dy = PeriodicGrid::min_image(a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

/// Spline model of the graph curve x1 = g(x2) + offset with Newton projection.
struct GraphCurve {
    spline: CubicSpline,
    offset: f64,
    knots: usize,
}

impl GraphCurve {
    fn new(samples: &[f64], offset: f64) -> Self {
        let m = samples.len();
        let mut x = Vec::with_capacity(m + 1);
        let mut y = Vec::with_capacity(m + 1);
        for (k, &v) in samples.iter().enumerate() {
            x.push(k as f64 / m as f64);
            y.push(v);
        }
        x.push(1.0);
        y.push(samples[0]);
        GraphCurve {
            spline: CubicSpline::new(x, y, SplineBc::Periodic),
            offset,
            knots: m,
        }
    }

    fn g(&self, s: f64) -> f64 {
        self.spline.eval(s.rem_euclid(1.0)) + self.offset
    }

    fn g_prime(&self, s: f64) -> f64 {
        self.spline.eval_deriv(s.rem_euclid(1.0))
    }

    fn arc_length(&self) -> f64 {
        let m = 4096;
        let mut acc = 0.0;
        for k in 0..m {
            let s = (k as f64 + 0.5) / m as f64;
            let gp = self.g_prime(s);
            acc += (1.0 + gp * gp).sqrt();
        }
        acc / m as f64
    }

    /// Distance from `x` to the curve, coarse scan plus Newton refinement.
    fn distance(&self, x: &[f64; 3]) -> f64 {
        let d2 = |s: f64| {
            let dx = PeriodicGrid::min_image(x[0] - self.g(s));
            let dy = PeriodicGrid::min_image(x[1] - s);
            dx * dx + dy * dy
        };
        let m = self.knots.max(32);
        let mut best_s = 0.0;
        let mut best = f64::INFINITY;
        for k in 0..m {
            let s = k as f64 / m as f64;
            let v = d2(s);
            if v < best {
                best = v;
                best_s = s;
            }
        }
        let mut s = best_s;
        for _ in 0..8 {
            let dx = PeriodicGrid::min_image(x[0] - self.g(s));
            let dy = PeriodicGrid::min_image(x[1] - s);
            let gp = self.g_prime(s);
            let gpp = self.spline.eval_deriv2(s.rem_euclid(1.0));
            let f1 = -dx * gp - dy;
            let f2 = gp * gp - dx * gpp + 1.0;
            if f2.abs() < 1e-14 {
                break;
            }
            let step = (f1 / f2).clamp(-0.5 / m as f64 * 8.0, 0.5 / m as f64 * 8.0);
            s -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        best.min(d2(s)).sqrt()
    }
}

/// Signed distance to the boundary of the region, positive inside, periodic
/// minimal-image metric. Closed forms for circles/spheres/annuli, Newton
/// projection for graphs.
pub fn signed_distance(geom: &InitialGeometry, x: &[f64; 3]) -> f64 {
    match geom {
        InitialGeometry::Circle { center, r0 } => r0 - per_dist2(&[x[0], x[1]], center),
        InitialGeometry::Sphere { center, r0 } => {
            let mut d2 = 0.0;
            for a in 0..3 {
                let d = PeriodicGrid::min_image(x[a] - center[a]);
                d2 += d * d;
            }
            r0 - d2.sqrt()
        }
        InitialGeometry::TwoCircles { c1, r1, c2, r2 } => {
            let d1 = r1 - per_dist2(&[x[0], x[1]], c1);
            let d2 = r2 - per_dist2(&[x[0], x[1]], c2);
            d1.max(d2)
        }
        InitialGeometry::Annulus { center, r_in, r_out } => {
            let r = per_dist2(&[x[0], x[1]], center);
            (r - r_in).min(r_out - r)
        }
        InitialGeometry::Graph(g) => {
            let c0 = GraphCurve::new(&g.samples, 0.0);
            let c1 = GraphCurve::new(&g.samples, 0.5);
            signed_distance_graph(&c0, &c1, x)
        }
    }
}

fn signed_distance_graph(c0: &GraphCurve, c1: &GraphCurve, x: &[f64; 3]) -> f64 {
    let frac = (x[0] - c0.g(x[1])).rem_euclid(1.0);
    let inside = frac > 0.0 && frac < 0.5;
    let d = c0.distance(x).min(c1.distance(x));
    if inside {
        d
    } else {
        -d
    }
}

/// The truncation h(r_trunc): identity below r/3, C^2 ramp, constant r/2
/// beyond 2r/3, odd, slope in [0, 1].
#[derive(Debug, Clone)]
pub struct TruncatedDistance {
    pub r_trunc: f64,
}

impl TruncatedDistance {
    pub fn new(r_trunc: f64) -> Self {
        TruncatedDistance { r_trunc }
    }

    pub fn apply(&self, d: f64) -> f64 {
        let a = self.r_trunc / 3.0;
        let b = 2.0 * self.r_trunc / 3.0;
        let ad = d.abs();
        // h(s) = s - (b-a) * T((s-a)/(b-a)) where T is the integral of the
        // quintic step; h'(s) = 1 - step(...) stays in [0, 1].
        let v = ad - (b - a) * quintic_step_integral((ad - a) / (b - a));
        v.copysign(d)
    }
}

/// Builds phi_0 = psi(d_trunc / eps) on the grid.
///
/// Preconditions: eps >= 2h (profile resolved) and eps <= r_trunc/10
/// (truncation plateau far away in profile units). `r_trunc` defaults per
/// geometry; the graph curve is smoothed by one periodic Gaussian blur pass
/// at scale 2h before the distance is computed.
pub fn build_initial_field(
    geom: &InitialGeometry,
    profile: &Profile,
    epsilon: f64,
    grid: &PeriodicGrid,
    r_trunc: Option<f64>,
) -> Result<PhaseField, InitError> {
    geom.validate(grid.dim)?;
    let h = grid.h();
    if epsilon < 2.0 * h {
        return Err(InitError::EpsilonGridMismatch {
            eps: epsilon,
            min: 2.0 * h,
        });
    }
    let r_trunc = r_trunc.unwrap_or_else(|| geom.default_r_trunc());
    if epsilon > r_trunc / 10.0 {
        return Err(InitError::TruncationTooTight {
            eps: epsilon,
            max: r_trunc / 10.0,
        });
    }
    let trunc = TruncatedDistance::new(r_trunc);
    let field = match geom {
        InitialGeometry::Graph(g) => {
            let smoothed = GraphHeights {
                samples: blur_periodic(&g.samples, 2.0 * h),
            };
            let c0 = GraphCurve::new(&smoothed.samples, 0.0);
            let c1 = GraphCurve::new(&smoothed.samples, 0.5);
            ScalarField::from_fn(*grid, |x| {
                let d = signed_distance_graph(&c0, &c1, x);
                profile.psi(trunc.apply(d) / epsilon)
            })
        }
        _ => ScalarField::from_fn(*grid, |x| {
            let d = signed_distance(geom, x);
            profile.psi(trunc.apply(d) / epsilon)
        }),
    };
    Ok(PhaseField {
        field,
        epsilon,
    })
}

fn blur_periodic(samples: &[f64], sigma: f64) -> Vec<f64> {
    let m = samples.len();
    let spacing = 1.0 / m as f64;
    let half = ((6.0 * sigma / spacing).ceil() as usize).max(1).min(m / 2);
    let mut kernel: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let d = (j as f64 - half as f64) * spacing;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= s;
    }
    (0..m)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let k = (i + m + j - half) % m;
                    w * samples[k]
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient;
    use crate::potential::{make_quartic_well, standing_wave};
    use crate::util::pairwise_sum;
    use std::f64::consts::PI;

    fn circle() -> InitialGeometry {
        InitialGeometry::Circle {
            center: [0.5, 0.5],
            r0: 0.25,
        }
    }

    #[test]
    fn signed_distance_closed_forms() {
        let c = circle();
        assert!((signed_distance(&c, &[0.5, 0.5, 0.0]) - 0.25).abs() < 1e-15);
        assert!(signed_distance(&c, &[0.75, 0.5, 0.0]).abs() < 1e-15);
        assert!((signed_distance(&c, &[0.9, 0.5, 0.0]) + 0.15).abs() < 1e-12);
        // two circles of radius 0.15 with centers 0.4 apart: midpoint is
        // 0.2 from both centers, so 0.05 outside each
        let two = InitialGeometry::TwoCircles {
            c1: [0.3, 0.5],
            r1: 0.15,
            c2: [0.7, 0.5],
            r2: 0.15,
        };
        assert!((signed_distance(&two, &[0.5, 0.5, 0.0]) + 0.05).abs() < 1e-12);
        let ann = InitialGeometry::Annulus {
            center: [0.5, 0.5],
            r_in: 0.15,
            r_out: 0.35,
        };
        assert!((signed_distance(&ann, &[0.5 + 0.25, 0.5, 0.0]) - 0.1).abs() < 1e-12);
        assert!((signed_distance(&ann, &[0.5, 0.5, 0.0]) + 0.15).abs() < 1e-12);
    }

    #[test]
    fn graph_band_distance_matches_slab() {
        // constant heights make the band an exact slab [0.25, 0.75] in x1
        let g = InitialGeometry::Graph(GraphHeights {
            samples: vec![0.25; 64],
        });
        for (x, expect) in [
            ([0.5, 0.3, 0.0], 0.25),
            ([0.3, 0.9, 0.0], 0.05),
            ([0.1, 0.2, 0.0], -0.15),
            ([0.75, 0.5, 0.0], 0.0),
        ] {
            let d = signed_distance(&g, &x);
            assert!(
                (d - expect).abs() < 1e-6,
                "slab distance at {x:?}: {d} vs {expect}"
            );
        }
        assert!((g.boundary_measure() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn truncation_shape() {
        let t = TruncatedDistance::new(0.3);
        // identity zone
        assert_eq!(t.apply(0.05), 0.05);
        assert_eq!(t.apply(-0.09), -0.09);
        // plateau exactly r/2
        assert!((t.apply(0.25) - 0.15).abs() < 1e-15);
        assert!((t.apply(0.7) - 0.15).abs() < 1e-15);
        assert!((t.apply(-0.5) + 0.15).abs() < 1e-15);
        // odd and 1-Lipschitz with nonnegative slope
        let mut prev = t.apply(-0.6);
        for i in 1..=1200 {
            let d = -0.6 + i as f64 * 1e-3;
            let v = t.apply(d);
            assert!((t.apply(-d) + v).abs() < 1e-15);
            let slope = (v - prev) / 1e-3;
            assert!(slope >= -1e-12 && slope <= 1.0 + 1e-9, "slope {slope} at {d}");
            prev = v;
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(circle().validate(2).is_ok());
        assert!(circle().validate(3).is_err());
        assert!(InitialGeometry::Circle {
            center: [0.5, 0.5],
            r0: 0.47
        }
        .validate(2)
        .is_err());
        assert!(InitialGeometry::TwoCircles {
            c1: [0.3, 0.5],
            r1: 0.2,
            c2: [0.7, 0.5],
            r2: 0.2
        }
        .validate(2)
        .is_err());
        let osc: Vec<f64> = (0..64)
            .map(|k| 0.3 + 0.25 * (2.0 * PI * k as f64 / 64.0).sin())
            .collect();
        assert!(InitialGeometry::Graph(GraphHeights { samples: osc })
            .validate(2)
            .is_err());
    }

    #[test]
    fn initial_field_values_on_the_profile() {
        let grid = PeriodicGrid::new(2, 256).unwrap();
        let prof = standing_wave(&make_quartic_well()).unwrap();
        let eps = 4.0 * grid.h();
        let phase = build_initial_field(&circle(), &prof, eps, &grid, None).unwrap();
        // boundary point (0.75, 0.5) is a cell center: phi = psi(0) = 0
        let idx = grid.index([192, 128, 0]);
        assert_eq!(phase.field.data[idx], 0.0);
        // one eps inward: phi = psi(1) = tanh(sqrt 2)
        let idx_in = grid.index([192 - 4, 128, 0]);
        assert!(
            (phase.field.data[idx_in] - std::f64::consts::SQRT_2.tanh()).abs() < 1e-12
        );
        // all values strictly inside (-1, 1)
        assert!(phase.field.data.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn initial_field_preconditions() {
        let grid = PeriodicGrid::new(2, 256).unwrap();
        let prof = standing_wave(&make_quartic_well()).unwrap();
        assert!(matches!(
            build_initial_field(&circle(), &prof, 1.5 * grid.h(), &grid, None),
            Err(InitError::EpsilonGridMismatch { .. })
        ));
        assert!(matches!(
            build_initial_field(&circle(), &prof, 0.05, &grid, None),
            Err(InitError::TruncationTooTight { .. })
        ));
    }

    fn initial_energy(phase: &PhaseField, grid: &PeriodicGrid) -> f64 {
        let w = make_quartic_well();
        let g = gradient(&phase.field);
        let mut vals = vec![0.0; grid.cell_count()];
        for (idx, v) in vals.iter_mut().enumerate() {
            let mut g2 = 0.0;
            for c in &g.comps {
                g2 += c.data[idx] * c.data[idx];
            }
            *v = phase.epsilon * g2 / 2.0 + w.value(phase.field.data[idx]) / phase.epsilon;
        }
        pairwise_sum(&vals) * grid.cell_volume()
    }

    #[test]
    fn initial_energy_concentrates_on_the_perimeter() {
        let grid = PeriodicGrid::new(2, 256).unwrap();
        let prof = standing_wave(&make_quartic_well()).unwrap();
        let eps = 4.0 * grid.h();
        let phase = build_initial_field(&circle(), &prof, eps, &grid, None).unwrap();
        let mu = initial_energy(&phase, &grid);
        let expected = prof.sigma * 2.0 * PI * 0.25;
        let rel = (mu - expected).abs() / expected;
        assert!(rel < 0.02, "energy {mu} vs sigma*Per {expected}: rel {rel:.4}");
    }

    #[test]
    fn energy_error_decreases_along_the_eps_sweep() {
        // eps halves while eps/h grows, so both the model error and the
        // lattice bias shrink
        let prof = standing_wave(&make_quartic_well()).unwrap();
        let expected = prof.sigma * 2.0 * PI * 0.25;
        let mut prev = f64::INFINITY;
        for (n, eps) in [(128usize, 1.0 / 32.0), (362, 1.0 / 64.0), (724, 1.0 / 128.0)] {
            let grid = PeriodicGrid::new(2, n).unwrap();
            let phase = build_initial_field(&circle(), &prof, eps, &grid, None).unwrap();
            let err = (initial_energy(&phase, &grid) - expected).abs() / expected;
            assert!(err < prev, "eps {eps}: err {err:.5} not below {prev:.5}");
            prev = err;
        }
    }

    #[test]
    fn indicator_l1_error_scales_with_eps() {
        let prof = standing_wave(&make_quartic_well()).unwrap();
        let mut prev = f64::INFINITY;
        for (n, eps) in [(128usize, 1.0 / 32.0), (256, 1.0 / 64.0), (512, 1.0 / 128.0)] {
            let grid = PeriodicGrid::new(2, n).unwrap();
            let phase = build_initial_field(&circle(), &prof, eps, &grid, None).unwrap();
            let mut err = 0.0;
            for idx in 0..grid.cell_count() {
                let x = grid.cell_center(idx);
                let chi = if signed_distance(&circle(), &x) > 0.0 { 1.0 } else { 0.0 };
                err += ((1.0 + phase.field.data[idx]) / 2.0 - chi).abs();
            }
            err *= grid.cell_volume();
            // within c * eps with a measured constant below 1
            assert!(err < eps, "L1 error {err} at eps {eps}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn initial_xi_l1_decreases_along_the_eps_sweep() {
        // the initial |xi| integral is lattice-dominated, so the sweep must
        // shrink h/eps along with eps for the decay to show
        let w = make_quartic_well();
        let prof = standing_wave(&w).unwrap();
        let mut prev = f64::INFINITY;
        for (n, eps) in [(128usize, 1.0 / 32.0), (362, 1.0 / 64.0)] {
            let grid = PeriodicGrid::new(2, n).unwrap();
            let phase = build_initial_field(&circle(), &prof, eps, &grid, None).unwrap();
            let g = gradient(&phase.field);
            let mut acc = 0.0;
            for idx in 0..grid.cell_count() {
                let mut g2 = 0.0;
                for c in &g.comps {
                    g2 += c.data[idx] * c.data[idx];
                }
                acc += (eps * g2 / 2.0 - w.value(phase.field.data[idx]) / eps).abs();
            }
            acc *= grid.cell_volume();
            assert!(acc < prev, "xi0 L1 {acc} not below {prev} at eps {eps}");
            prev = acc;
        }
    }

    #[test]
    fn initial_discrepancy_positive_part_is_tiny() {
        let grid = PeriodicGrid::new(2, 256).unwrap();
        let w = make_quartic_well();
        let prof = standing_wave(&w).unwrap();
        let eps = 4.0 * grid.h();
        let phase = build_initial_field(&circle(), &prof, eps, &grid, None).unwrap();
        let g = gradient(&phase.field);
        let mut sup_pos = f64::MIN;
        for idx in 0..grid.cell_count() {
            let mut g2 = 0.0;
            for c in &g.comps {
                g2 += c.data[idx] * c.data[idx];
            }
            let xi = eps * g2 / 2.0 - w.value(phase.field.data[idx]) / eps;
            sup_pos = sup_pos.max(xi);
        }
        // the continuum bound is eps^(-beta) with beta = 1/4
        assert!(sup_pos <= eps.powf(-0.25), "sup xi+ = {sup_pos}");
    }
}
