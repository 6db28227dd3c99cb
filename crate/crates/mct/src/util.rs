//! Small numerical helpers shared across modules: deterministic reductions,
//! adaptive quadrature, cubic splines, and tridiagonal solves.

/// Pairwise (fixed-shape tree) summation.
///
/// The reduction tree depends only on the slice length, so the result is
/// bitwise identical no matter how the caller produced the slice, and the
/// rounding error grows like O(log n) instead of O(n).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if v.len() <= BLOCK {
        let mut s = 0.0;
        for &x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// C^2 monotone quintic step: 0 for t <= 0, 1 for t >= 1.
pub fn quintic_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Antiderivative of [`quintic_step`] with value 0 at 0; equals t - 1/2 for t >= 1.
pub fn quintic_step_integral(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        t - 0.5
    } else {
        t * t * t * t * (2.5 + t * (-3.0 + t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureError {
    DidNotConverge,
}

/// Adaptive Simpson quadrature with a relative tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, QuadratureError> {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            return Err(QuadratureError::DidNotConverge);
        }
        let lv = recurse(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1)?;
        let rv = recurse(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1)?;
        Ok(lv + rv)
    }

    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    // Coarse magnitude estimate to convert the relative tolerance into an
    // absolute one; the floor guards integrals that are legitimately zero.
    let scale = whole.abs().max(1e-300);
    let abs_tol = (rel_tol * scale).max(1e-16 * scale);
    recurse(f, a, fa, b, fb, whole, fm, abs_tol, 48)
}

/// Solves a tridiagonal system with constant coefficients (b on the diagonal,
/// a below, c above) by the Thomas algorithm. Overwrites and returns `d`.
pub fn solve_tridiag_const(a: f64, b: f64, c: f64, d: &mut [f64], scratch: &mut Vec<f64>) {
    let n = d.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let cp = scratch;
    let mut beta = b;
    cp[0] = c / beta;
    d[0] /= beta;
    for i in 1..n {
        beta = b - a * cp[i - 1];
        cp[i] = c / beta;
        d[i] = (d[i] - a * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Solves the periodic tridiagonal system with constant stencil (a, b, a)
/// via the Sherman-Morrison correction. Overwrites and returns `d`.
pub fn solve_periodic_tridiag_const(a: f64, b: f64, d: &mut [f64]) {
    PeriodicThomas::new(a, b, d.len()).solve(d);
}

/// Periodic constant-coefficient Thomas solver with the elimination
/// coefficients and the Sherman-Morrison correction vector precomputed, so
/// repeated solves over many grid lines cost two sweeps each and allocate
/// nothing.
pub struct PeriodicThomas {
    a: f64,
    gamma: f64,
    /// Upper-diagonal multipliers of the forward sweep.
    cp: Vec<f64>,
    /// Reciprocals of the eliminated diagonal.
    inv_beta: Vec<f64>,
    /// Solution of the modified system for the rank-one correction.
    u: Vec<f64>,
    vu: f64,
}

impl PeriodicThomas {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 3);
        let gamma = -b;
        let b0 = b - gamma;
        let bn = b - a * a / gamma;
        let mut cp = vec![0.0; n];
        let mut inv_beta = vec![0.0; n];
        let mut beta = b0;
        inv_beta[0] = 1.0 / beta;
        cp[0] = a / beta;
        for i in 1..n {
            let bi = if i == n - 1 { bn } else { b };
            beta = bi - a * cp[i - 1];
            inv_beta[i] = 1.0 / beta;
            cp[i] = a / beta;
        }
        let mut solver = PeriodicThomas {
            a,
            gamma,
            cp,
            inv_beta,
            u: Vec::new(),
            vu: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = a;
        solver.core_solve(&mut u);
        solver.vu = u[0] + a / gamma * u[n - 1];
        solver.u = u;
        solver
    }

    fn core_solve(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] *= self.inv_beta[0];
        for i in 1..n {
            d[i] = (d[i] - self.a * d[i - 1]) * self.inv_beta[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.cp[i] * d[i + 1];
        }
    }

    pub fn solve(&self, d: &mut [f64]) {
        let n = d.len();
        debug_assert_eq!(n, self.u.len());
        self.core_solve(d);
        let vx = d[0] + self.a / self.gamma * d[n - 1];
        let factor = vx / (1.0 + self.vu);
        for i in 0..n {
            d[i] -= factor * self.u[i];
        }
    }
}

/// Boundary conditions for [`CubicSpline`].
#[derive(Debug, Clone, Copy)]
pub enum SplineBc {
    Natural,
    /// Prescribed first derivatives at the two ends.
    Clamped(f64, f64),
    /// Periodic: the last knot value must equal the first.
    Periodic,
}

/// Cubic spline through (x_i, y_i) on strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>, bc: SplineBc) -> Self {
        let n = x.len();
        assert!(n >= 3, "spline needs at least 3 knots");
        assert_eq!(n, y.len());
        let mut m = vec![0.0; n];
        match bc {
            SplineBc::Natural | SplineBc::Clamped(..) => {
                // Solve for second derivatives with the standard tridiagonal system.
                let mut sub = vec![0.0; n];
                let mut diag = vec![0.0; n];
                let mut sup = vec![0.0; n];
                let mut rhs = vec![0.0; n];
                for i in 1..n - 1 {
                    let h0 = x[i] - x[i - 1];
                    let h1 = x[i + 1] - x[i];
                    sub[i] = h0 / 6.0;
                    diag[i] = (h0 + h1) / 3.0;
                    sup[i] = h1 / 6.0;
                    rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                }
                match bc {
                    SplineBc::Natural => {
                        diag[0] = 1.0;
                        diag[n - 1] = 1.0;
                    }
                    SplineBc::Clamped(d0, d1) => {
                        let h0 = x[1] - x[0];
                        diag[0] = h0 / 3.0;
                        sup[0] = h0 / 6.0;
                        rhs[0] = (y[1] - y[0]) / h0 - d0;
                        let hn = x[n - 1] - x[n - 2];
                        sub[n - 1] = hn / 6.0;
                        diag[n - 1] = hn / 3.0;
                        rhs[n - 1] = d1 - (y[n - 1] - y[n - 2]) / hn;
                    }
                    SplineBc::Periodic => unreachable!(),
                }
                thomas_var(&sub, &diag, &sup, &mut rhs);
                m.copy_from_slice(&rhs);
            }
            SplineBc::Periodic => {
                assert!(
                    (y[n - 1] - y[0]).abs() < 1e-12,
                    "periodic spline endpoint mismatch"
                );
                // Unknowns m_0..m_{n-2}; m_{n-1} = m_0.
                let k = n - 1;
                let mut sub = vec![0.0; k];
                let mut diag = vec![0.0; k];
                let mut sup = vec![0.0; k];
                let mut rhs = vec![0.0; k];
                for i in 0..k {
                    let im = (i + k - 1) % k;
                    let h0 = if i == 0 {
                        x[n - 1] - x[n - 2]
                    } else {
                        x[i] - x[i - 1]
                    };
                    let h1 = x[i + 1] - x[i];
                    let ym = y[im];
                    sub[i] = h0 / 6.0;
                    diag[i] = (h0 + h1) / 3.0;
                    sup[i] = h1 / 6.0;
                    rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - ym) / h0;
                }
                cyclic_thomas(&sub, &diag, &sup, &mut rhs);
                m[..k].copy_from_slice(&rhs);
                m[n - 1] = m[0];
            }
        }
        CubicSpline { x, y, m }
    }

    fn segment(&self, t: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&t).expect("nan knot"))
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Evaluates the spline; outside the knot range the end segment is extended.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn eval_deriv2(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.m[i] + b * self.m[i + 1]
    }
}

fn thomas_var(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    let mut cp = vec![0.0; n];
    let mut beta = diag[0];
    cp[0] = sup[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * cp[i - 1];
        cp[i] = sup[i] / beta;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= cp[i] * rhs[i + 1];
    }
}

fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    let alpha = sub[0];
    let beta = sup[n - 1];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let solve = |d: &[f64], r: &mut [f64]| {
        let mut cp = vec![0.0; n];
        let mut b = d[0];
        cp[0] = sup[0] / b;
        r[0] /= b;
        for i in 1..n {
            b = d[i] - sub[i] * cp[i - 1];
            cp[i] = sup[i] / b;
            r[i] = (r[i] - sub[i] * r[i - 1]) / b;
        }
        for i in (0..n - 1).rev() {
            r[i] -= cp[i] * r[i + 1];
        }
    };
    solve(&d, rhs);
    solve(&d, &mut u);
    let vx = rhs[0] + beta / gamma * rhs[n - 1];
    let vu = u[0] + beta / gamma * u[n - 1];
    let factor = vx / (1.0 + vu);
    for i in 0..n {
        rhs[i] -= factor * u[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_smooth_data() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-10);
    }

    #[test]
    fn quintic_step_is_c2_monotone() {
        assert_eq!(quintic_step(-1.0), 0.0);
        assert_eq!(quintic_step(2.0), 1.0);
        assert!((quintic_step(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = quintic_step(i as f64 / 1000.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        // integral consistency
        let steps = 100_000;
        let dt = 1.0 / steps as f64;
        let riemann: f64 = (0..steps).map(|i| quintic_step((i as f64 + 0.5) * dt) * dt).sum();
        assert!((riemann - quintic_step_integral(1.0)).abs() < 1e-8);
    }

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        let f = |x: f64| 3.0 * x * x;
        let v = adaptive_simpson(&f, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_meets_relative_tolerance_on_gaussian() {
        let f = |x: f64| (-x * x).exp();
        let v = adaptive_simpson(&f, -8.0, 8.0, 1e-11).unwrap();
        let exact = std::f64::consts::PI.sqrt();
        assert!((v - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn periodic_tridiag_solves_circulant_system() {
        let n = 17;
        let a = -0.3;
        let b = 1.9;
        let x_true: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.11).cos()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = b * x_true[i] + a * x_true[(i + 1) % n] + a * x_true[(i + n - 1) % n];
        }
        solve_periodic_tridiag_const(a, b, &mut rhs);
        for i in 0..n {
            assert!((rhs[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_reproduces_cubic_exactly_with_clamped_ends() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let fp = |x: f64| 3.0 * x * x - 2.0;
        let x: Vec<f64> = (0..=20).map(|i| -1.0 + i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let s = CubicSpline::new(x, y, SplineBc::Clamped(fp(-1.0), fp(1.0)));
        for i in 0..=100 {
            let t = -1.0 + i as f64 * 0.02;
            assert!((s.eval(t) - f(t)).abs() < 1e-12);
            assert!((s.eval_deriv(t) - fp(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn periodic_spline_interpolates_sine() {
        let n = 64;
        let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| (2.0 * std::f64::consts::PI * v).sin())
            .collect();
        let s = CubicSpline::new(x, y, SplineBc::Periodic);
        for i in 0..200 {
            let t = i as f64 / 200.0;
            let exact = (2.0 * std::f64::consts::PI * t).sin();
            assert!((s.eval(t) - exact).abs() < 1e-6);
        }
    }
}
