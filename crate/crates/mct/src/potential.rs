//! Double-well potentials and the associated 1-D interface profile.
//!
//! A well W must vanish to second order exactly at +-1, be W-shaped with a
//! single interior maximum, and have a convexity floor near the minima. The
//! standing wave psi solves psi' = sqrt(2 W(psi)) with psi(0) = 0 and is the
//! cross-sectional shape of every diffuse interface. The surface tension
//! sigma = int sqrt(2W) is the energy carried per unit interface area, and
//! Phi(s) = sigma^-1 int_{-1}^s sqrt(2W) squashes the phase field into [0,1]
//! for the BV-projection diagnostics.

use crate::util::{adaptive_simpson, CubicSpline, SplineBc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("well rejected: {0}")]
    InvalidWell(String),
    #[error("standing-wave integration failed: {0}")]
    IntegrationFailure(String),
    #[error("quadrature did not converge")]
    QuadratureFailure,
}

#[derive(Debug, Clone)]
enum WellKind {
    /// W(s) = (1 - s^2)^2
    Quartic,
    /// W(s) = (1 - s^2)^2 (1 + s^2/4); exercises the generic (non-closed-form)
    /// profile path while staying analytic.
    PerturbedQuartic,
    /// Clamped cubic spline through user samples on [-1, 1].
    Table(CubicSpline),
}

/// A double-well potential with derivatives and its shape constants:
/// `gamma` locates the interior maximum, and `d2 >= kappa` holds for
/// `|s| >= alpha`.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    kind: WellKind,
    pub gamma: f64,
    pub alpha: f64,
    pub kappa: f64,
}

impl DoubleWell {
    pub fn value(&self, s: f64) -> f64 {
        match &self.kind {
            WellKind::Quartic => {
                let a = 1.0 - s * s;
                a * a
            }
            WellKind::PerturbedQuartic => {
                let a = 1.0 - s * s;
                a * a * (1.0 + 0.25 * s * s)
            }
            WellKind::Table(sp) => sp.eval(s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match &self.kind {
            WellKind::Quartic => -4.0 * s * (1.0 - s * s),
            WellKind::PerturbedQuartic => {
                let a = 1.0 - s * s;
                -4.0 * s * a * (1.0 + 0.25 * s * s) + a * a * 0.5 * s
            }
            WellKind::Table(sp) => sp.eval_deriv(s),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match &self.kind {
            WellKind::Quartic => -4.0 + 12.0 * s * s,
            WellKind::PerturbedQuartic => {
                let a = 1.0 - s * s;
                (-4.0 + 12.0 * s * s) * (1.0 + 0.25 * s * s)
                    + 2.0 * (-4.0 * s * a) * 0.5 * s
                    + a * a * 0.5
            }
            WellKind::Table(sp) => sp.eval_deriv2(s),
        }
    }

    /// Largest |W''| on [-1, 1]; the solver's reaction CFL constant.
    pub fn max_d2_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..=2000 {
            let s = -1.0 + i as f64 * 1e-3;
            m = m.max(self.d2(s).abs());
        }
        m
    }
}

/// The quartic well W(s) = (1 - s^2)^2 with gamma = 0 and the
/// (alpha, kappa) = (0.9, 5.72) convexity pair.
pub fn make_quartic_well() -> DoubleWell {
    DoubleWell {
        kind: WellKind::Quartic,
        gamma: 0.0,
        alpha: 0.9,
        kappa: 5.72,
    }
}

/// A second built-in well, (1 - s^2)^2 (1 + s^2/4), driven through the
/// generic scan/ODE code path.
pub fn make_perturbed_quartic_well() -> DoubleWell {
    let mut w = DoubleWell {
        kind: WellKind::PerturbedQuartic,
        gamma: 0.0,
        alpha: 0.0,
        kappa: 0.0,
    };
    let (alpha, kappa) = scan_alpha_kappa(&w).expect("perturbed quartic is a valid well");
    w.alpha = alpha;
    w.kappa = kappa;
    validate_well(&w).expect("perturbed quartic is a valid well");
    w
}

/// Builds a well from (s, W(s)) samples on [-1, 1].
///
/// Endpoints are pinned to the exact double zeros W(+-1) = W'(+-1) = 0; the
/// samples must already be within 1e-10 of that for the well to be accepted.
pub fn well_from_samples(samples: &[(f64, f64)]) -> Result<DoubleWell, PotentialError> {
    if samples.len() < 9 {
        return Err(PotentialError::InvalidWell(format!(
            "need at least 9 samples, got {}",
            samples.len()
        )));
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("nan sample"));
    if (pts[0].0 - -1.0).abs() > 1e-12 || (pts.last().unwrap().0 - 1.0).abs() > 1e-12 {
        return Err(PotentialError::InvalidWell(
            "samples must span exactly [-1, 1]".into(),
        ));
    }
    if pts[0].1.abs() > 1e-10 || pts.last().unwrap().1.abs() > 1e-10 {
        return Err(PotentialError::InvalidWell(
            "W(-1) and W(1) must vanish".into(),
        ));
    }
    pts[0].1 = 0.0;
    let n = pts.len();
    pts[n - 1].1 = 0.0;
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    // Clamped ends realize W'(+-1) = 0 exactly in the interpolant.
    let spline = CubicSpline::new(x, y, SplineBc::Clamped(0.0, 0.0));
    let mut well = DoubleWell {
        kind: WellKind::Table(spline),
        gamma: 0.0,
        alpha: 0.0,
        kappa: 0.0,
    };
    well.gamma = find_gamma(&well)?;
    let (alpha, kappa) = scan_alpha_kappa(&well)?;
    well.alpha = alpha;
    well.kappa = kappa;
    validate_well(&well)?;
    Ok(well)
}

/// Parses a two-column CSV (s, W(s)); lines starting with '#' and a
/// non-numeric header row are skipped.
pub fn well_from_csv(text: &str) -> Result<DoubleWell, PotentialError> {
    let mut samples = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let a = cols.next().map(str::trim);
        let b = cols.next().map(str::trim);
        match (a, b) {
            (Some(a), Some(b)) => match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(s), Ok(w)) => samples.push((s, w)),
                _ if samples.is_empty() => continue, // header row
                _ => {
                    return Err(PotentialError::InvalidWell(format!(
                        "bad CSV row: {line}"
                    )))
                }
            },
            _ => {
                return Err(PotentialError::InvalidWell(format!(
                    "expected two columns: {line}"
                )))
            }
        }
    }
    well_from_samples(&samples)
}

fn find_gamma(well: &DoubleWell) -> Result<f64, PotentialError> {
    // gamma is the sign change of W' scanned on a 1e-3 grid, refined by bisection.
    let n = 2000;
    let mut bracket = None;
    for i in 1..n {
        let s0 = -1.0 + (i - 1) as f64 * 2.0 / n as f64;
        let s1 = -1.0 + i as f64 * 2.0 / n as f64;
        if s0 > -0.999 && s1 < 0.999 && well.d1(s0) > 0.0 && well.d1(s1) <= 0.0 {
            bracket = Some((s0, s1));
            break;
        }
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| PotentialError::InvalidWell("no interior maximum found".into()))?;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if well.d1(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn scan_alpha_kappa(well: &DoubleWell) -> Result<(f64, f64), PotentialError> {
    // Scan d2 on a 1e-4 grid. floor(a) = min of d2 over alpha <= |s| <= 1 is
    // non-increasing as a shrinks; take the smallest alpha that still keeps
    // half of the convexity available at the minima, so kappa is not a
    // degenerate sliver.
    let step = 1e-4;
    let n = (1.0 / step) as usize;
    let edge = well.d2(1.0).min(well.d2(-1.0));
    if edge <= 0.0 {
        return Err(PotentialError::InvalidWell(
            "W'' not positive at the minima".into(),
        ));
    }
    let target = 0.5 * edge;
    let mut best: Option<(f64, f64)> = None;
    let mut running_min = f64::INFINITY;
    for i in (1..n).rev() {
        let a = i as f64 * step;
        running_min = running_min.min(well.d2(a)).min(well.d2(-a));
        if running_min >= target {
            best = Some((a, running_min));
        } else if best.is_some() {
            break;
        }
    }
    best.ok_or_else(|| {
        PotentialError::InvalidWell("no convexity floor: W'' <= 0 arbitrarily close to +-1".into())
    })
}

fn validate_well(well: &DoubleWell) -> Result<(), PotentialError> {
    if well.value(1.0).abs() > 1e-12 || well.value(-1.0).abs() > 1e-12 {
        return Err(PotentialError::InvalidWell("W(+-1) != 0".into()));
    }
    if well.d1(1.0).abs() > 1e-10 || well.d1(-1.0).abs() > 1e-10 {
        return Err(PotentialError::InvalidWell("W'(+-1) != 0".into()));
    }
    if !(well.gamma > -1.0 && well.gamma < 1.0) {
        return Err(PotentialError::InvalidWell("gamma outside (-1, 1)".into()));
    }
    if !(well.alpha > 0.0 && well.alpha < 1.0 && well.kappa > 0.0) {
        return Err(PotentialError::InvalidWell(
            "no valid (alpha, kappa) pair".into(),
        ));
    }
    // Nonnegativity and the strict W-shape on a 1e-3 grid.
    let n = 2000;
    for i in 0..=n {
        let s = -1.0 + i as f64 * 2.0 / n as f64;
        if well.value(s) < -1e-12 {
            return Err(PotentialError::InvalidWell(format!("W({s}) < 0")));
        }
        let margin = 1e-3;
        if s > -1.0 + margin && s < well.gamma - margin && well.d1(s) <= 0.0 {
            return Err(PotentialError::InvalidWell(format!(
                "W' not positive at {s} left of gamma"
            )));
        }
        if s > well.gamma + margin && s < 1.0 - margin && well.d1(s) >= 0.0 {
            return Err(PotentialError::InvalidWell(format!(
                "W' not negative at {s} right of gamma"
            )));
        }
    }
    Ok(())
}

/// sigma = int_{-1}^1 sqrt(2 W(s)) ds by adaptive quadrature (relative
/// tolerance 1e-10).
pub fn surface_tension(well: &DoubleWell) -> Result<f64, PotentialError> {
    let f = |s: f64| (2.0 * well.value(s).max(0.0)).sqrt();
    adaptive_simpson(&f, -1.0, 1.0, 1e-11).map_err(|_| PotentialError::QuadratureFailure)
}

/// The BV projection map Phi(s) = sigma^-1 int_{-1}^s sqrt(2W).
#[derive(Debug, Clone)]
pub enum PhiMap {
    /// Closed form for the quartic well: (3s - s^3 + 2)/4.
    Quartic,
    Table(CubicSpline),
}

impl PhiMap {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            PhiMap::Quartic => {
                let s = s.clamp(-1.0, 1.0);
                (3.0 * s - s * s * s + 2.0) * 0.25
            }
            PhiMap::Table(sp) => sp.eval(s.clamp(-1.0, 1.0)).clamp(0.0, 1.0),
        }
    }

    /// Phi'(s) = sigma^-1 sqrt(2 W(s)); used for the chain-rule form of |grad w|.
    pub fn deriv(&self, s: f64) -> f64 {
        match self {
            PhiMap::Quartic => {
                let s = s.clamp(-1.0, 1.0);
                0.75 * (1.0 - s * s)
            }
            PhiMap::Table(sp) => sp.eval_deriv(s.clamp(-1.0, 1.0)).max(0.0),
        }
    }
}

pub fn bv_map(well: &DoubleWell) -> Result<PhiMap, PotentialError> {
    if matches!(well.kind, WellKind::Quartic) {
        return Ok(PhiMap::Quartic);
    }
    let sigma = surface_tension(well)?;
    // Cumulative integral of sqrt(2W) on a fine grid, then a clamped spline.
    let n = 4096;
    let h = 2.0 / n as f64;
    let mut x = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    x.push(-1.0);
    y.push(0.0);
    let mut acc = 0.0;
    let f = |s: f64| (2.0 * well.value(s).max(0.0)).sqrt();
    for i in 0..n {
        let a = -1.0 + i as f64 * h;
        let b = a + h;
        // 5-point Gauss-Legendre per panel
        acc += gauss5(&f, a, b);
        x.push(b);
        y.push(acc / sigma);
    }
    let end = *y.last().unwrap();
    // Normalization must come out as 1 up to quadrature error.
    if (end - 1.0).abs() > 1e-9 {
        return Err(PotentialError::QuadratureFailure);
    }
    let n_last = y.len() - 1;
    y[n_last] = 1.0;
    let d0 = f(-1.0) / sigma;
    let d1 = f(1.0) / sigma;
    Ok(PhiMap::Table(CubicSpline::new(x, y, SplineBc::Clamped(d0, d1))))
}

fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        -0.906179845938664,
        -0.538469310105683,
        0.0,
        0.538469310105683,
        0.906179845938664,
    ];
    const W: [f64; 5] = [
        0.236926885056189,
        0.478628670499366,
        0.568888888888889,
        0.478628670499366,
        0.236926885056189,
    ];
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += W[i] * f(c + hw * X[i]);
    }
    s * hw
}

#[derive(Debug, Clone)]
enum ProfileImpl {
    /// psi(x) = tanh(sqrt(2) x) for the quartic well.
    TanhQuartic,
    Table {
        spline: CubicSpline,
        x_max: f64,
        /// Tail model psi = sign(x) (1 - c exp(-sqrt(kappa)|x|)) beyond the table.
        tail_rate: f64,
        tail_c_pos: f64,
        tail_c_neg: f64,
    },
}

/// The standing wave and its derived constants.
#[derive(Debug, Clone)]
pub struct Profile {
    imp: ProfileImpl,
    pub sigma: f64,
    phi: PhiMap,
    equi_residual: f64,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl Profile {
    pub fn psi(&self, x: f64) -> f64 {
        match &self.imp {
            ProfileImpl::TanhQuartic => (SQRT2 * x).tanh(),
            ProfileImpl::Table {
                spline,
                x_max,
                tail_rate,
                tail_c_pos,
                tail_c_neg,
            } => {
                if x > *x_max {
                    1.0 - tail_c_pos * (-tail_rate * x).exp()
                } else if x < -*x_max {
                    -1.0 + tail_c_neg * (tail_rate * x).exp()
                } else {
                    spline.eval(x)
                }
            }
        }
    }

    pub fn psi_prime(&self, x: f64) -> f64 {
        match &self.imp {
            ProfileImpl::TanhQuartic => {
                let t = (SQRT2 * x).tanh();
                SQRT2 * (1.0 - t * t)
            }
            ProfileImpl::Table {
                spline,
                x_max,
                tail_rate,
                tail_c_pos,
                tail_c_neg,
            } => {
                if x > *x_max {
                    tail_c_pos * tail_rate * (-tail_rate * x).exp()
                } else if x < -*x_max {
                    tail_c_neg * tail_rate * (tail_rate * x).exp()
                } else {
                    spline.eval_deriv(x)
                }
            }
        }
    }

    /// The BV projection Phi applied to a phase value.
    pub fn phi_map(&self, s: f64) -> f64 {
        self.phi.eval(s)
    }

    /// Phi'(s); vanishes at s = +-1.
    pub fn phi_map_deriv(&self, s: f64) -> f64 {
        self.phi.deriv(s)
    }

    /// Certified sup of |psi'^2 - 2 W(psi)| over [-10, 10] at 1e-3 spacing.
    pub fn equipartition_residual(&self) -> f64 {
        self.equi_residual
    }
}

// Spacing is set by the spline-derivative error (O(spacing^3)), which must
// stay below the 1e-10 equipartition certificate.
const TABLE_HALF_WIDTH: f64 = 12.0;
const TABLE_SPACING: f64 = 1.0 / 2048.0;

/// Computes the standing wave psi' = sqrt(2 W(psi)), psi(0) = 0.
///
/// The quartic well takes the closed form tanh(sqrt(2) x); other wells are
/// integrated by RK4 and tabulated on [-12, 12] with spline interpolation and
/// exponential-tail extension. Fails if the equipartition identity cannot be
/// certified to 1e-10.
pub fn standing_wave(well: &DoubleWell) -> Result<Profile, PotentialError> {
    let sigma = surface_tension(well)?;
    let phi = bv_map(well)?;
    let imp = match well.kind {
        WellKind::Quartic => ProfileImpl::TanhQuartic,
        _ => integrate_profile(well)?,
    };
    let mut profile = Profile {
        imp,
        sigma,
        phi,
        equi_residual: 0.0,
    };
    let mut residual: f64 = 0.0;
    let samples = 20_000;
    for i in 0..=samples {
        let x = -10.0 + i as f64 * 1e-3;
        let p = profile.psi(x);
        let dp = profile.psi_prime(x);
        residual = residual.max((dp * dp - 2.0 * well.value(p)).abs());
    }
    if residual > 1e-10 {
        return Err(PotentialError::IntegrationFailure(format!(
            "equipartition residual {residual:.3e} exceeds 1e-10"
        )));
    }
    profile.equi_residual = residual;
    Ok(profile)
}

fn integrate_profile(well: &DoubleWell) -> Result<ProfileImpl, PotentialError> {
    let substeps = 16usize;
    let dx = TABLE_SPACING / substeps as f64;
    let knots_half = (TABLE_HALF_WIDTH / TABLE_SPACING).round() as usize;
    let f = |p: f64| (2.0 * well.value(p.clamp(-1.0, 1.0)).max(0.0)).sqrt();
    let rk4 = |p: f64, h: f64| {
        let k1 = f(p);
        let k2 = f(p + 0.5 * h * k1);
        let k3 = f(p + 0.5 * h * k2);
        let k4 = f(p + h * k3);
        p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let mut fwd = Vec::with_capacity(knots_half + 1);
    let mut p = 0.0;
    fwd.push(p);
    for _ in 0..knots_half {
        for _ in 0..substeps {
            p = rk4(p, dx);
        }
        if !(p.is_finite() && p < 1.0 + 1e-9) {
            return Err(PotentialError::IntegrationFailure(
                "profile escaped (-1, 1)".into(),
            ));
        }
        fwd.push(p.min(1.0));
    }
    let mut bwd = Vec::with_capacity(knots_half + 1);
    p = 0.0;
    bwd.push(p);
    for _ in 0..knots_half {
        for _ in 0..substeps {
            p = rk4(p, -dx);
        }
        if !(p.is_finite() && p > -1.0 - 1e-9) {
            return Err(PotentialError::IntegrationFailure(
                "profile escaped (-1, 1)".into(),
            ));
        }
        bwd.push(p.max(-1.0));
    }
    let mut xs = Vec::with_capacity(2 * knots_half + 1);
    let mut ys = Vec::with_capacity(2 * knots_half + 1);
    for i in (1..=knots_half).rev() {
        xs.push(-(i as f64) * TABLE_SPACING);
        ys.push(bwd[i]);
    }
    xs.push(0.0);
    ys.push(0.0);
    for (i, &v) in fwd.iter().enumerate().skip(1) {
        xs.push(i as f64 * TABLE_SPACING);
        ys.push(v);
    }
    let d_left = f(ys[0]);
    let d_right = f(*ys.last().unwrap());
    let spline = CubicSpline::new(xs, ys, SplineBc::Clamped(d_left, d_right));
    let rate = well.kappa.sqrt();
    let end_pos = fwd[knots_half];
    let end_neg = bwd[knots_half];
    let tail_c_pos = ((1.0 - end_pos).max(0.0)) * (rate * TABLE_HALF_WIDTH).exp();
    let tail_c_neg = ((1.0 + end_neg).max(0.0)) * (rate * TABLE_HALF_WIDTH).exp();
    Ok(ProfileImpl::Table {
        spline,
        x_max: TABLE_HALF_WIDTH,
        tail_rate: rate,
        tail_c_pos,
        tail_c_neg,
    })
}
