//! Zero level-set extraction and interface geometry.
//!
//! dim 2: marching squares on the sign of phi with vertices on grid edges by
//! linear interpolation; segments assemble into closed loops (every vertex
//! has degree 2 on a valid field). dim 3: marching tetrahedra on the Kuhn
//! 6-tet split of each cube, which is ambiguity-free. A phi value of exactly
//! zero at a node is perturbed by +1e-12 so tie-breaking is deterministic.

use crate::grid::{ball_cells, GridError, PhaseField};
use crate::measures::{omega_lower, MeasureField};
use crate::util::pairwise_sum;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterfaceError {
    #[error("phase field has a single sign: no interface")]
    NoInterface,
    #[error("expected a single loop, found {0}")]
    MultipleLoops(usize),
    #[error("probe radius {r} below the 5 eps floor {min}")]
    RadiusTooSmall { r: f64, min: f64 },
    #[error("probe radius {0} above 0.25")]
    RadiusTooLarge(f64),
    #[error("operation needs dim {want}, mesh has dim {got}")]
    WrongDim { want: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Extracted zero level set: segments + loops in dim 2, triangles in dim 3.
#[derive(Debug, Clone)]
pub struct InterfaceMesh {
    pub dim: usize,
    pub vertices: Vec<[f64; 3]>,
    pub segments: Vec<(usize, usize)>,
    pub triangles: Vec<(usize, usize, usize)>,
    /// Vertex-index cycles (dim 2 only).
    pub loops: Vec<Vec<usize>>,
    /// Total length (dim 2) or area (dim 3).
    pub total_measure: f64,
    /// Every vertex has degree 2 (dim 2) / every triangle edge is shared by
    /// exactly two triangles (dim 3).
    pub closed: bool,
}

#[inline]
fn tb(v: f64) -> f64 {
    // deterministic tie-break for exact zeros
    if v == 0.0 {
        1e-12
    } else {
        v
    }
}

fn min_image(d: f64) -> f64 {
    d - d.round()
}

/// Marching squares / marching tetrahedra on the sign of phi.
pub fn extract_interface(phi: &PhaseField) -> Result<InterfaceMesh, InterfaceError> {
    match phi.field.grid.dim {
        2 => extract_2d(phi),
        3 => extract_3d(phi),
        _ => extract_1d(phi),
    }
}

fn extract_1d(phi: &PhaseField) -> Result<InterfaceMesh, InterfaceError> {
    let grid = phi.field.grid;
    let n = grid.resolution;
    let h = grid.h();
    let mut vertices = Vec::new();
    for i in 0..n {
        let a = tb(phi.field.data[i]);
        let b = tb(phi.field.data[(i + 1) % n]);
        if (a > 0.0) != (b > 0.0) {
            let f = a / (a - b);
            vertices.push([(i as f64 + f) * h, 0.0, 0.0]);
        }
    }
    if vertices.is_empty() {
        return Err(InterfaceError::NoInterface);
    }
    let count = vertices.len() as f64;
    Ok(InterfaceMesh {
        dim: 1,
        vertices,
        segments: Vec::new(),
        triangles: Vec::new(),
        loops: Vec::new(),
        total_measure: count,
        closed: true,
    })
}

fn extract_2d(phi: &PhaseField) -> Result<InterfaceMesh, InterfaceError> {
    let grid = phi.field.grid;
    let n = grid.resolution;
    let h = grid.h();
    let val = |i: usize, j: usize| tb(phi.field.data[grid.index([i % n, j % n, 0])]);

    // vertex on the edge from (i,j) along axis, if the sign changes
    let mut vertex_of_edge: BTreeMap<(u8, usize, usize), usize> = BTreeMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut get_vertex = |axis: u8, i: usize, j: usize, a: f64, b: f64| -> usize {
        *vertex_of_edge.entry((axis, i, j)).or_insert_with(|| {
            let f = a / (a - b);
            let pos = match axis {
                0 => [(i as f64 + f) * h, j as f64 * h, 0.0],
                _ => [i as f64 * h, (j as f64 + f) * h, 0.0],
            };
            vertices.push(pos);
            vertices.len() - 1
        })
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c00 = val(i, j);
            let c10 = val(i + 1, j);
            let c11 = val(i + 1, j + 1);
            let c01 = val(i, j + 1);
            // crossing edges of this cell: bottom, right, top, left
            let mut crossings: Vec<usize> = Vec::with_capacity(4);
            let mut which = [false; 4];
            if (c00 > 0.0) != (c10 > 0.0) {
                crossings.push(get_vertex(0, i, j, c00, c10));
                which[0] = true;
            }
            if (c10 > 0.0) != (c11 > 0.0) {
                crossings.push(get_vertex(1, (i + 1) % n, j, c10, c11));
                which[1] = true;
            }
            if (c01 > 0.0) != (c11 > 0.0) {
                crossings.push(get_vertex(0, i, (j + 1) % n, c01, c11));
                which[2] = true;
            }
            if (c00 > 0.0) != (c01 > 0.0) {
                crossings.push(get_vertex(1, i, j, c00, c01));
                which[3] = true;
            }
            match crossings.len() {
                0 => {}
                2 => segments.push((crossings[0], crossings[1])),
                4 => {
                    // saddle cell: resolve the pairing by the center sign
                    debug_assert!(which.iter().all(|&w| w));
                    let center = tb(0.25 * (c00 + c10 + c11 + c01));
                    // crossings order: bottom, right, top, left
                    if (center > 0.0) == (c00 > 0.0) {
                        // c00's phase connects through the middle:
                        // separate the two opposite corners individually
                        segments.push((crossings[0], crossings[1]));
                        segments.push((crossings[2], crossings[3]));
                    } else {
                        segments.push((crossings[0], crossings[3]));
                        segments.push((crossings[1], crossings[2]));
                    }
                }
                _ => unreachable!("odd crossing count in a cell"),
            }
        }
    }
    if segments.is_empty() {
        return Err(InterfaceError::NoInterface);
    }

    // adjacency and loop walk
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (k, &(a, b)) in segments.iter().enumerate() {
        adj[a].push(k);
        adj[b].push(k);
    }
    let closed = adj.iter().all(|v| v.len() == 2);
    let mut loops = Vec::new();
    if closed {
        let mut seg_used = vec![false; segments.len()];
        for start in 0..vertices.len() {
            if adj[start].is_empty() || seg_used[adj[start][0]] {
                continue;
            }
            let mut cycle = vec![start];
            let mut cur = start;
            let mut seg = adj[start][0];
            loop {
                seg_used[seg] = true;
                let (a, b) = segments[seg];
                let next = if a == cur { b } else { a };
                if next == start {
                    break;
                }
                cycle.push(next);
                let next_seg = if adj[next][0] == seg {
                    adj[next][1]
                } else {
                    adj[next][0]
                };
                cur = next;
                seg = next_seg;
            }
            loops.push(cycle);
        }
    }
    let lengths: Vec<f64> = segments
        .iter()
        .map(|&(a, b)| {
            let dx = min_image(vertices[a][0] - vertices[b][0]);
            let dy = min_image(vertices[a][1] - vertices[b][1]);
            (dx * dx + dy * dy).sqrt()
        })
        .collect();
    let total = pairwise_sum(&lengths);
    Ok(InterfaceMesh {
        dim: 2,
        vertices,
        segments,
        triangles: Vec::new(),
        loops,
        total_measure: total,
        closed,
    })
}

/// Kuhn 6-tetrahedra decomposition along the main diagonal (0,0,0)-(1,1,1).
const KUHN_TETS: [[usize; 4]; 6] = [
    [0b000, 0b100, 0b110, 0b111],
    [0b000, 0b110, 0b010, 0b111],
    [0b000, 0b010, 0b011, 0b111],
    [0b000, 0b011, 0b001, 0b111],
    [0b000, 0b001, 0b101, 0b111],
    [0b000, 0b101, 0b100, 0b111],
];

fn extract_3d(phi: &PhaseField) -> Result<InterfaceMesh, InterfaceError> {
    let grid = phi.field.grid;
    let n = grid.resolution;
    let h = grid.h();
    let val = |i: usize, j: usize, k: usize| {
        tb(phi.field.data[grid.index([i % n, j % n, k % n])])
    };
    // global corner key for vertex dedup: lattice point id (wrapped)
    let corner_id = |i: usize, j: usize, k: usize| -> usize {
        ((i % n) * n + (j % n)) * n + (k % n)
    };
    let mut vertex_of_edge: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles: Vec<(usize, usize, usize)> = Vec::new();
    let mut areas: Vec<f64> = Vec::new();

    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // cube corner values and unwrapped positions
                let mut cv = [0.0; 8];
                let mut cp = [[0.0; 3]; 8];
                let mut cid = [0usize; 8];
                for c in 0..8 {
                    let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
                    cv[c] = val(i + di, j + dj, k + dk);
                    cp[c] = [
                        (i + di) as f64 * h,
                        (j + dj) as f64 * h,
                        (k + dk) as f64 * h,
                    ];
                    cid[c] = corner_id(i + di, j + dj, k + dk);
                }
                let all_pos = cv.iter().all(|&v| v > 0.0);
                let all_neg = cv.iter().all(|&v| v <= 0.0);
                if all_pos || all_neg {
                    continue;
                }
                for tet in &KUHN_TETS {
                    let mut pos = Vec::with_capacity(4);
                    let mut neg = Vec::with_capacity(4);
                    for &c in tet {
                        if cv[c] > 0.0 {
                            pos.push(c);
                        } else {
                            neg.push(c);
                        }
                    }
                    if pos.is_empty() || neg.is_empty() {
                        continue;
                    }
                    let mut edge_vertex = |a: usize, b: usize| -> usize {
                        let key = if cid[a] < cid[b] {
                            (cid[a], cid[b])
                        } else {
                            (cid[b], cid[a])
                        };
                        *vertex_of_edge.entry(key).or_insert_with(|| {
                            let (va, vb) = (cv[a], cv[b]);
                            let f = va / (va - vb);
                            let p = [
                                (cp[a][0] + f * (cp[b][0] - cp[a][0])).rem_euclid(1.0),
                                (cp[a][1] + f * (cp[b][1] - cp[a][1])).rem_euclid(1.0),
                                (cp[a][2] + f * (cp[b][2] - cp[a][2])).rem_euclid(1.0),
                            ];
                            vertices.push(p);
                            vertices.len() - 1
                        })
                    };
                    let tris: Vec<[usize; 3]> = if pos.len() == 1 || neg.len() == 1 {
                        let (apex, base) = if pos.len() == 1 {
                            (pos[0], &neg)
                        } else {
                            (neg[0], &pos)
                        };
                        let v0 = edge_vertex(apex, base[0]);
                        let v1 = edge_vertex(apex, base[1]);
                        let v2 = edge_vertex(apex, base[2]);
                        vec![[v0, v1, v2]]
                    } else {
                        // 2-2 split: quad across the four mixed edges
                        let v00 = edge_vertex(pos[0], neg[0]);
                        let v01 = edge_vertex(pos[0], neg[1]);
                        let v11 = edge_vertex(pos[1], neg[1]);
                        let v10 = edge_vertex(pos[1], neg[0]);
                        vec![[v00, v01, v11], [v00, v11, v10]]
                    };
                    for t in tris {
                        let a = vertices[t[0]];
                        let b = vertices[t[1]];
                        let c = vertices[t[2]];
                        let ab = [
                            min_image(b[0] - a[0]),
                            min_image(b[1] - a[1]),
                            min_image(b[2] - a[2]),
                        ];
                        let ac = [
                            min_image(c[0] - a[0]),
                            min_image(c[1] - a[1]),
                            min_image(c[2] - a[2]),
                        ];
                        let cx = ab[1] * ac[2] - ab[2] * ac[1];
                        let cy = ab[2] * ac[0] - ab[0] * ac[2];
                        let cz = ab[0] * ac[1] - ab[1] * ac[0];
                        let area = 0.5 * (cx * cx + cy * cy + cz * cz).sqrt();
                        if area > 0.0 {
                            triangles.push((t[0], t[1], t[2]));
                            areas.push(area);
                        }
                    }
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(InterfaceError::NoInterface);
    }
    // closed-surface check: every undirected triangle edge appears twice
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(a, b, c) in &triangles {
        for (u, v) in [(a, b), (b, c), (a, c)] {
            let key = if u < v { (u, v) } else { (v, u) };
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }
    let closed = edge_count.values().all(|&c| c == 2);
    let total = pairwise_sum(&areas);
    Ok(InterfaceMesh {
        dim: 3,
        vertices,
        segments: Vec::new(),
        triangles,
        loops: Vec::new(),
        total_measure: total,
        closed,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CircleFit {
    pub center: [f64; 2],
    pub radius: f64,
    pub rms_residual: f64,
}

/// Least-squares circle through the single loop of the mesh, with periodic
/// unwrapping along the loop walk.
pub fn fit_circle(mesh: &InterfaceMesh) -> Result<CircleFit, InterfaceError> {
    if mesh.loops.len() != 1 {
        return Err(InterfaceError::MultipleLoops(mesh.loops.len()));
    }
    fit_circle_loop(mesh, 0)
}

/// Fits one loop of a (possibly multi-loop) mesh.
pub fn fit_circle_loop(mesh: &InterfaceMesh, loop_index: usize) -> Result<CircleFit, InterfaceError> {
    if mesh.dim != 2 {
        return Err(InterfaceError::WrongDim {
            want: 2,
            got: mesh.dim,
        });
    }
    if loop_index >= mesh.loops.len() {
        return Err(InterfaceError::MultipleLoops(mesh.loops.len()));
    }
    let cycle = &mesh.loops[loop_index];
    // unwrap into covering-space coordinates
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(cycle.len());
    let mut cur = [mesh.vertices[cycle[0]][0], mesh.vertices[cycle[0]][1]];
    pts.push(cur);
    for &vi in cycle.iter().skip(1) {
        let v = mesh.vertices[vi];
        cur = [
            cur[0] + min_image(v[0] - cur[0]),
            cur[1] + min_image(v[1] - cur[1]),
        ];
        pts.push(cur);
    }
    let (center, radius, rms) = kasa_fit(&pts);
    Ok(CircleFit {
        center: [center[0].rem_euclid(1.0), center[1].rem_euclid(1.0)],
        radius,
        rms_residual: rms,
    })
}

fn kasa_fit(pts: &[[f64; 2]]) -> ([f64; 2], f64, f64) {
    // rows [2x, 2y, 1] . [cx, cy, d] = x^2 + y^2
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for p in pts {
        let row = [2.0 * p[0], 2.0 * p[1], 1.0];
        let rhs = p[0] * p[0] + p[1] * p[1];
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * rhs;
        }
    }
    let sol = solve_small(&mut ata, &mut atb, 3);
    let c = [sol[0], sol[1]];
    let r = (sol[2] + c[0] * c[0] + c[1] * c[1]).max(0.0).sqrt();
    let mut ss = 0.0;
    for p in pts {
        let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r;
        ss += d * d;
    }
    (c, r, (ss / pts.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct SphereFit {
    pub center: [f64; 3],
    pub radius: f64,
    pub rms_residual: f64,
}

/// Algebraic least-squares sphere through all mesh vertices (dim 3); vertices
/// are unwrapped relative to the first one.
pub fn fit_sphere(mesh: &InterfaceMesh) -> Result<SphereFit, InterfaceError> {
    if mesh.dim != 3 {
        return Err(InterfaceError::WrongDim {
            want: 3,
            got: mesh.dim,
        });
    }
    let anchor = mesh.vertices[0];
    let pts: Vec<[f64; 3]> = mesh
        .vertices
        .iter()
        .map(|v| {
            [
                anchor[0] + min_image(v[0] - anchor[0]),
                anchor[1] + min_image(v[1] - anchor[1]),
                anchor[2] + min_image(v[2] - anchor[2]),
            ]
        })
        .collect();
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for p in &pts {
        let row = [2.0 * p[0], 2.0 * p[1], 2.0 * p[2], 1.0];
        let rhs = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        for a in 0..4 {
            for b in 0..4 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * rhs;
        }
    }
    let sol = solve_small4(&mut ata, &mut atb);
    let c = [sol[0], sol[1], sol[2]];
    let r = (sol[3] + c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).max(0.0).sqrt();
    let mut ss = 0.0;
    for p in &pts {
        let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt() - r;
        ss += d * d;
    }
    Ok(SphereFit {
        center: [
            c[0].rem_euclid(1.0),
            c[1].rem_euclid(1.0),
            c[2].rem_euclid(1.0),
        ],
        radius: r,
        rms_residual: (ss / pts.len() as f64).sqrt(),
    })
}

fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], n: usize) -> [f64; 3] {
    gauss(a.as_mut_slice(), b, n);
    *b
}

fn solve_small4(a: &mut [[f64; 4]; 4], b: &mut [f64; 4]) -> [f64; 4] {
    // same elimination inlined for the 4x4 case
    let n = 4;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
    *b
}

fn gauss(a: &mut [[f64; 3]], b: &mut [f64; 3], n: usize) {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
}

/// Local (n-1)-density in units of sigma.
#[derive(Debug, Clone, Copy)]
pub struct DensityEstimate {
    pub center: [f64; 3],
    pub radius: f64,
    pub theta_hat: f64,
    pub nearest_integer: i64,
    pub deviation: f64,
}

/// theta^ = mu(B_r(center)) / (sigma omega_{n-1} r^{n-1}); the radius floor
/// 5 eps keeps the diffuse-profile bias below the 10% test budget.
pub fn density_estimate(
    m: &MeasureField,
    sigma: f64,
    center: &[f64; 3],
    radius: f64,
) -> Result<DensityEstimate, InterfaceError> {
    let grid = m.e.grid;
    if radius < 5.0 * m.epsilon {
        return Err(InterfaceError::RadiusTooSmall {
            r: radius,
            min: 5.0 * m.epsilon,
        });
    }
    if radius > 0.25 {
        return Err(InterfaceError::RadiusTooLarge(radius));
    }
    let cells = ball_cells(&grid, center, radius)?;
    let mass: f64 = cells.iter().map(|&i| m.e.data[i]).sum::<f64>() * grid.cell_volume();
    let theta = mass / (sigma * omega_lower(grid.dim) * radius.powi((grid.dim - 1) as i32));
    let nearest = theta.round();
    Ok(DensityEstimate {
        center: *center,
        radius,
        theta_hat: theta,
        nearest_integer: nearest as i64,
        deviation: (theta - nearest).abs(),
    })
}
