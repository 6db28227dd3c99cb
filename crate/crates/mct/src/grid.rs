//! Periodic lattice on the unit torus (dim 1, 2, 3), scalar and vector
//! fields, second-order finite-difference operators, and periodic ball
//! geometry. All coordinate arithmetic uses the minimal-image convention.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("ball radius {0} exceeds 0.5 (would self-overlap on the torus)")]
    RadiusTooLarge(f64),
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Uniform periodic lattice with `resolution` cells per axis; cell centers
/// sit at integer multiples of h = 1/resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    pub dim: usize,
    pub resolution: usize,
    strides: [usize; 3],
}

impl PeriodicGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if resolution < 16 {
            return Err(GridError::InvalidGrid(format!(
                "resolution {resolution} below 16"
            )));
        }
        let n = resolution;
        let strides = match dim {
            1 => [1, 0, 0],
            2 => [n, 1, 0],
            _ => [n * n, n, 1],
        };
        Ok(PeriodicGrid {
            dim,
            resolution,
            strides,
        })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    /// Cell volume h^dim.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim {
            idx += ijk[a] * self.strides[a];
        }
        idx
    }

    #[inline]
    pub fn cell_ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.resolution;
        let mut out = [0usize; 3];
        for a in 0..self.dim {
            out[a] = (idx / self.strides[a]) % n;
        }
        out
    }

    /// Coordinates of a cell center; unused axes are 0.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let ijk = self.cell_ijk(idx);
        let h = self.h();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = ijk[a] as f64 * h;
        }
        x
    }

    /// Neighbor index one cell over along `axis` (dir = +-1), with wrap.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, dir: isize) -> usize {
        let n = self.resolution;
        let s = self.strides[axis];
        let i = (idx / s) % n;
        if dir > 0 {
            if i + 1 == n {
                idx - (n - 1) * s
            } else {
                idx + s
            }
        } else if i == 0 {
            idx + (n - 1) * s
        } else {
            idx - s
        }
    }

    /// Minimal-image difference on the unit torus.
    #[inline]
    pub fn min_image(d: f64) -> f64 {
        d - d.round()
    }

    /// Periodic distance between two points (first `dim` components).
    pub fn distance(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = Self::min_image(a[k] - b[k]);
            s += d * d;
        }
        s.sqrt()
    }
}

/// Scalar field: one f64 per cell, row-major.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: PeriodicGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        ScalarField {
            grid,
            data: vec![0.0; grid.cell_count()],
        }
    }

    pub fn from_fn<F: Fn(&[f64; 3]) -> f64 + Sync>(grid: PeriodicGrid, f: F) -> Self {
        let mut data = vec![0.0; grid.cell_count()];
        data.par_iter_mut().enumerate().for_each(|(idx, v)| {
            *v = f(&grid.cell_center(idx));
        });
        ScalarField { grid, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn assert_compatible(&self, other: &ScalarField) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(())
    }
}

/// Vector field as `dim` scalar components on a shared grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: PeriodicGrid,
    pub comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        VectorField {
            grid,
            comps: (0..grid.dim).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for idx in 0..self.grid.cell_count() {
            let mut s = 0.0;
            for c in &self.comps {
                s += c.data[idx] * c.data[idx];
            }
            m = m.max(s);
        }
        m.sqrt()
    }
}

/// A phase field paired with its interface width.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub field: ScalarField,
    pub epsilon: f64,
}

/// Second-order central difference along one axis, periodic.
pub fn deriv_central(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid;
    let inv2h = 0.5 / grid.h();
    let data = &f.data;
    let mut out = vec![0.0; data.len()];
    out.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let p = grid.neighbor(idx, axis, 1);
        let m = grid.neighbor(idx, axis, -1);
        *v = (data[p] - data[m]) * inv2h;
    });
    ScalarField { grid, data: out }
}

/// Gradient by central differences.
pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField {
        grid: f.grid,
        comps: (0..f.grid.dim).map(|a| deriv_central(f, a)).collect(),
    }
}

/// Compact (2 dim + 1)-point Laplacian, periodic.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid;
    let inv_h2 = (grid.resolution as f64) * (grid.resolution as f64);
    let data = &f.data;
    let dim = grid.dim;
    let mut out = vec![0.0; data.len()];
    out.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let c = data[idx];
        let mut acc = 0.0;
        for a in 0..dim {
            acc += data[grid.neighbor(idx, a, 1)] + data[grid.neighbor(idx, a, -1)] - 2.0 * c;
        }
        *v = acc * inv_h2;
    });
    ScalarField { grid, data: out }
}

/// Divergence of a vector field by central differences.
pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = u.grid;
    let mut out = ScalarField::zeros(grid);
    for (a, comp) in u.comps.iter().enumerate() {
        let d = deriv_central(comp, a);
        for (o, v) in out.data.iter_mut().zip(d.data.iter()) {
            *o += v;
        }
    }
    out
}

/// Forward-difference gradient (staggered to the upper half cell).
pub fn gradient_forward(f: &ScalarField) -> VectorField {
    let grid = f.grid;
    let inv_h = grid.resolution as f64;
    let comps = (0..grid.dim)
        .map(|a| {
            let mut out = vec![0.0; f.data.len()];
            out.par_iter_mut().enumerate().for_each(|(idx, v)| {
                *v = (f.data[grid.neighbor(idx, a, 1)] - f.data[idx]) * inv_h;
            });
            ScalarField { grid, data: out }
        })
        .collect();
    VectorField { grid, comps }
}

/// Backward-difference divergence; adjoint of [`gradient_forward`], so the
/// composition reproduces the compact Laplacian.
pub fn divergence_backward(u: &VectorField) -> ScalarField {
    let grid = u.grid;
    let inv_h = grid.resolution as f64;
    let mut out = ScalarField::zeros(grid);
    for (a, comp) in u.comps.iter().enumerate() {
        for idx in 0..comp.data.len() {
            let m = grid.neighbor(idx, a, -1);
            out.data[idx] += (comp.data[idx] - comp.data[m]) * inv_h;
        }
    }
    out
}

/// All cells whose centers lie strictly within periodic distance `r` of
/// `center`, ascending by flat index.
pub fn ball_cells(
    grid: &PeriodicGrid,
    center: &[f64; 3],
    r: f64,
) -> Result<Vec<usize>, GridError> {
    if r > 0.5 {
        return Err(GridError::RadiusTooLarge(r));
    }
    if r <= 0.0 {
        return Ok(Vec::new());
    }
    let n = grid.resolution as isize;
    let h = grid.h();
    // candidate window per axis, capped to one period to avoid duplicates
    let m = ((r / h).ceil() as isize + 1).min(n / 2);
    let lo = -m;
    let hi = m.min(n - 1 - m); // ensures hi - lo + 1 <= n
    let hi = hi.max(lo);
    let base: Vec<isize> = (0..grid.dim)
        .map(|a| (center[a] / h).round() as isize)
        .collect();
    let mut cells = Vec::new();
    let mut offs = vec![lo; grid.dim];
    'outer: loop {
        let mut d2 = 0.0;
        let mut ijk = [0usize; 3];
        for a in 0..grid.dim {
            let j = base[a] + offs[a];
            let x = j as f64 * h;
            let d = PeriodicGrid::min_image(x - center[a]);
            d2 += d * d;
            ijk[a] = j.rem_euclid(n) as usize;
        }
        if d2.sqrt() < r {
            cells.push(grid.index(ijk));
        }
        let mut a = 0;
        loop {
            offs[a] += 1;
            if offs[a] <= hi {
                break;
            }
            offs[a] = lo;
            a += 1;
            if a == grid.dim {
                break 'outer;
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}

/// Precomputed ball stencil for cell-centered probes: wrapped index deltas
/// sorted by distance, with one cutoff per query radius.
pub struct BallStencil {
    grid: PeriodicGrid,
    deltas: Vec<[isize; 3]>,
    /// deltas[..counts[i]] lie strictly within radii[i].
    pub radii: Vec<f64>,
    counts: Vec<usize>,
}

impl BallStencil {
    pub fn new(grid: PeriodicGrid, radii: &[f64]) -> Result<Self, GridError> {
        let mut radii: Vec<f64> = radii.to_vec();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup();
        let r_max = *radii.last().expect("at least one radius");
        if r_max > 0.5 {
            return Err(GridError::RadiusTooLarge(r_max));
        }
        let n = grid.resolution as isize;
        let h = grid.h();
        // canonical wrapped window per axis avoids duplicate cells
        let lo = -(n / 2);
        let hi = (n - 1) / 2;
        let m = ((r_max / h).ceil() as isize).min(n / 2);
        let a_lo = (-m).max(lo);
        let a_hi = m.min(hi);
        let mut deltas: Vec<([isize; 3], f64)> = Vec::new();
        let mut offs = [a_lo; 3];
        for a in grid.dim..3 {
            offs[a] = 0;
        }
        loop {
            let mut d2 = 0.0;
            for a in 0..grid.dim {
                let d = offs[a] as f64 * h;
                d2 += d * d;
            }
            let dist = d2.sqrt();
            if dist < r_max {
                deltas.push((offs, dist));
            }
            let mut a = 0;
            loop {
                offs[a] += 1;
                if offs[a] <= a_hi {
                    break;
                }
                offs[a] = a_lo;
                a += 1;
                if a == grid.dim {
                    deltas.sort_by(|x, y| {
                        x.1.partial_cmp(&y.1)
                            .unwrap()
                            .then(x.0.cmp(&y.0))
                    });
                    let counts = radii
                        .iter()
                        .map(|&r| deltas.partition_point(|d| d.1 < r))
                        .collect();
                    return Ok(BallStencil {
                        grid,
                        deltas: deltas.into_iter().map(|d| d.0).collect(),
                        radii,
                        counts,
                    });
                }
            }
        }
    }

    /// Sums `values` over the balls centered at cell `center_idx`, one sum per
    /// stencil radius (ascending), in a fixed accumulation order.
    pub fn ball_sums(&self, values: &[f64], center_idx: usize) -> Vec<f64> {
        let n = self.grid.resolution as isize;
        let ijk = self.grid.cell_ijk(center_idx);
        let mut out = Vec::with_capacity(self.radii.len());
        let mut acc = 0.0;
        let mut next = 0;
        for (ri, &cnt) in self.counts.iter().enumerate() {
            while next < cnt {
                let d = &self.deltas[next];
                let mut cell = [0usize; 3];
                for a in 0..self.grid.dim {
                    cell[a] = (ijk[a] as isize + d[a]).rem_euclid(n) as usize;
                }
                acc += values[self.grid.index(cell)];
                next += 1;
            }
            let _ = ri;
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::pairwise_sum;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(PeriodicGrid::new(0, 32).is_err());
        assert!(PeriodicGrid::new(4, 32).is_err());
        assert!(PeriodicGrid::new(2, 8).is_err());
        let g = PeriodicGrid::new(2, 256).unwrap();
        assert_eq!(g.h(), 1.0 / 256.0);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let f = ScalarField::from_fn(g, |_| 7.25);
        let gr = gradient(&f);
        for c in &gr.comps {
            assert_eq!(c.max_abs(), 0.0);
        }
    }

    #[test]
    fn gradient_of_sine_matches_discrete_symbol() {
        let n = 256;
        let g = PeriodicGrid::new(2, n).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let gr = gradient(&f);
        let h = g.h();
        // exact value of the central difference of sine at x = 0
        let expected = (2.0 * PI * h).sin() / h;
        let got = gr.comps[0].data[g.index([0, 0, 0])];
        assert!((got - expected).abs() < 1e-12);
        // and the Taylor form 2*pi*(1 - (2*pi*h)^2/6) to leading order
        let taylor = 2.0 * PI * (1.0 - (2.0 * PI * h).powi(2) / 6.0);
        assert!((got - taylor).abs() / taylor < 1e-5);
    }

    #[test]
    fn sawtooth_gradient_is_one_away_from_the_wrap() {
        let n = 64;
        let g = PeriodicGrid::new(1, n).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        let gr = gradient(&f);
        for i in 0..n {
            let v = gr.comps[0].data[i];
            if i == 0 || i == n - 1 {
                // wrap cells see the jump
                assert!((v - (1.0 - 0.5 * n as f64)).abs() < 1e-9);
            } else {
                assert!((v - 1.0).abs() < 1e-12, "cell {i} -> {v}");
            }
        }
    }

    #[test]
    fn laplacian_eigenfunction_and_telescoping() {
        let n = 128;
        let g = PeriodicGrid::new(2, n).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let lap = laplacian(&f);
        let h = g.h();
        let lambda = -(2.0 / (h * h)) * (1.0 - (2.0 * PI * h).cos());
        for idx in 0..g.cell_count() {
            let expect = lambda * f.data[idx];
            assert!(
                (lap.data[idx] - expect).abs() <= 1e-9 * lambda.abs(),
                "eigenvalue mismatch at {idx}"
            );
        }
        // telescoping on the torus
        let rough = ScalarField::from_fn(g, |x| (13.0 * x[0]).sin() + x[1] * x[1]);
        let l2 = laplacian(&rough);
        assert!(pairwise_sum(&l2.data).abs() < 1e-7 * l2.max_abs());
        let c = ScalarField::from_fn(g, |_| 3.0);
        assert_eq!(laplacian(&c).max_abs(), 0.0);
    }

    #[test]
    fn staggered_div_grad_reproduces_compact_laplacian() {
        let g = PeriodicGrid::new(2, 128).unwrap();
        let f = ScalarField::from_fn(g, |x| {
            (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos() + 0.3 * (2.0 * PI * x[1]).cos()
        });
        let a = laplacian(&f);
        let b = divergence_backward(&gradient_forward(&f));
        let scale = a.max_abs();
        for idx in 0..g.cell_count() {
            assert!((a.data[idx] - b.data[idx]).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn operators_commute_with_translations() {
        let n = 32;
        let g = PeriodicGrid::new(2, n).unwrap();
        let f = ScalarField::from_fn(g, |x| {
            (2.0 * PI * x[0]).sin() * (2.0 * PI * (x[1] + 0.13)).cos()
        });
        // shift by (5, 9) cells
        let shift = |fld: &ScalarField| {
            let mut out = ScalarField::zeros(g);
            for i in 0..n {
                for j in 0..n {
                    out.data[g.index([(i + 5) % n, (j + 9) % n, 0])] = fld.data[g.index([i, j, 0])];
                }
            }
            out
        };
        let a = shift(&laplacian(&f));
        let b = laplacian(&shift(&f));
        for idx in 0..g.cell_count() {
            assert_eq!(a.data[idx].to_bits(), b.data[idx].to_bits());
        }
        let ga = shift(&gradient(&f).comps[0]);
        let gb = gradient(&shift(&f)).comps[0].clone();
        for idx in 0..g.cell_count() {
            assert_eq!(ga.data[idx].to_bits(), gb.data[idx].to_bits());
        }
    }

    #[test]
    fn ball_cells_basics() {
        let g = PeriodicGrid::new(2, 64).unwrap();
        let h = g.h();
        // far from any cell center with r < h/2: empty
        let c = [10.3 * h, 20.6 * h, 0.0];
        assert!(ball_cells(&g, &c, 0.3 * h).unwrap().is_empty());
        // hand-enumerated stencils at a cell center: distances {0,1,1,1,1} then
        // sqrt(2) on the diagonals, so r between 1 and sqrt(2) gives the 5-cell
        // plus and r = 1.5 picks up the diagonals as well
        let c2 = [10.0 * h, 20.0 * h, 0.0];
        let cells = ball_cells(&g, &c2, 1.2 * h).unwrap();
        assert_eq!(cells.len(), 5);
        assert!(cells.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ball_cells(&g, &c2, 1.5 * h).unwrap().len(), 9);
        // radius too large
        assert!(matches!(
            ball_cells(&g, &c2, 0.6),
            Err(GridError::RadiusTooLarge(_))
        ));
    }

    #[test]
    fn ball_volume_brackets_continuum() {
        for (dim, n) in [(1usize, 256usize), (2, 128), (3, 48)] {
            let g = PeriodicGrid::new(dim, n).unwrap();
            let h = g.h();
            let r = 0.5 - h;
            let omega = match dim {
                1 => 2.0,
                2 => PI,
                _ => 4.0 * PI / 3.0,
            };
            let c = [0.31, 0.47, 0.52];
            let count = ball_cells(&g, &c, r).unwrap().len() as f64;
            let vol = count * g.cell_volume();
            let cont = omega * r.powi(dim as i32);
            let slack = 4.0 * h / r;
            assert!(
                vol >= cont * (1.0 - slack) && vol <= cont * (1.0 + slack),
                "dim {dim}: vol {vol} vs continuum {cont}"
            );
        }
    }

    #[test]
    fn ball_cells_respects_reflection_symmetry() {
        // reflecting through the ball center maps the cell set onto itself
        let g = PeriodicGrid::new(2, 64).unwrap();
        let c = [0.25, 0.375, 0.0];
        let r = 0.11;
        let cells = ball_cells(&g, &c, r).unwrap();
        let n = g.resolution;
        let two_c = [
            (2.0 * c[0] / g.h()).round() as usize,
            (2.0 * c[1] / g.h()).round() as usize,
        ];
        let mut mapped: Vec<usize> = cells
            .iter()
            .map(|&idx| {
                let ijk = g.cell_ijk(idx);
                let ri = (two_c[0] + n - ijk[0]) % n;
                let rj = (two_c[1] + n - ijk[1]) % n;
                g.index([ri, rj, 0])
            })
            .collect();
        mapped.sort_unstable();
        assert_eq!(mapped, cells);
    }

    #[test]
    fn ball_stencil_matches_ball_cells_at_cell_centers() {
        let g = PeriodicGrid::new(2, 64).unwrap();
        let radii = [0.07, 0.19, 0.31];
        let st = BallStencil::new(g, &radii).unwrap();
        let f = ScalarField::from_fn(g, |x| 1.0 + x[0] + 2.0 * x[1] * x[1]);
        let center_idx = g.index([13, 40, 0]);
        let center = g.cell_center(center_idx);
        let sums = st.ball_sums(&f.data, center_idx);
        for (k, &r) in st.radii.iter().enumerate() {
            let direct: f64 = ball_cells(&g, &center, r)
                .unwrap()
                .iter()
                .map(|&i| f.data[i])
                .sum();
            assert!(
                (sums[k] - direct).abs() < 1e-9,
                "radius {r}: {} vs {}",
                sums[k],
                direct
            );
        }
    }
}
