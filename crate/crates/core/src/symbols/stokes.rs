use crate::domain::VerticalGrid;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Right-hand side of one horizontal frequency of the gamma-Stokes problem.
///
/// `f` is `n` nodal profiles in `[comp][node]` order, `g` one profile and
/// `k` the `n` stress components at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesRhs {
    pub f: Vec<C64>,
    pub g: Vec<C64>,
    pub k: Vec<C64>,
}

impl StokesRhs {
    pub fn zeros(n: usize, nodes: usize) -> Self {
        StokesRhs {
            f: vec![ZERO; n * nodes],
            g: vec![ZERO; nodes],
            k: vec![ZERO; n],
        }
    }

    /// Complex conjugate of every entry.
    pub fn conj(&self) -> Self {
        StokesRhs {
            f: self.f.iter().map(C64::conj).collect(),
            g: self.g.iter().map(C64::conj).collect(),
            k: self.k.iter().map(C64::conj).collect(),
        }
    }
}

/// Velocity and pressure profiles at one frequency, `u` in `[comp][node]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesProfile {
    pub u: Vec<C64>,
    pub p: Vec<C64>,
}

impl StokesProfile {
    pub fn conj(&self) -> Self {
        StokesProfile {
            u: self.u.iter().map(C64::conj).collect(),
            p: self.p.iter().map(C64::conj).collect(),
        }
    }

    pub fn comp(&self, c: usize) -> &[C64] {
        let m = self.p.len();
        &self.u[c * m..(c + 1) * m]
    }
}

/// Factorized collocation system for
///
/// ```text
/// div S(p,u) - gamma d_1 u = f,  div u = g  in (0,b),
/// S(p,u) e_n = k  at x_n = b,    u = 0      at x_n = 0,
/// ```
///
/// at one horizontal frequency `xi`, with `S(p,u) = pI - Du - Du^T`.
///
/// The system is written in first-order form in `(u', u_n, p - 2g, d_n u')`
/// so that no derivative of the data is needed. Bottom Dirichlet rows replace
/// the first collocation rows of the `u` equations, the stress rows replace
/// the last collocation rows of the remaining equations, and `d_n u' = Du'`
/// is imposed at the bottom node. The data rows that do not enter are
/// listed by [`ignored_rows`]; on the remaining rows the solve inverts
/// [`stokes_forward`] exactly for polynomial profiles with `u(0) = 0`.
pub struct StokesSolver {
    xi: Vec<f64>,
    gamma: f64,
    nodes: usize,
    lu: LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl std::fmt::Debug for StokesSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesSolver")
            .field("xi", &self.xi)
            .field("gamma", &self.gamma)
            .field("condition", &self.condition)
            .finish()
    }
}

impl StokesSolver {
    pub fn new(xi: &[f64], gamma: f64, grid: &VerticalGrid) -> Result<Self> {
        let d = xi.len();
        let n = d + 1;
        let nodes = grid.len();
        let size = 2 * n * nodes;
        let dm = grid.diff_matrix();
        let two_pi_i: Vec<C64> = xi.iter().map(|&x| I * (2.0 * PI * x)).collect();
        let a2 = 4.0 * PI * PI * xi.iter().map(|x| x * x).sum::<f64>();
        let beta = 2.0 * PI * xi[0] * gamma;
        let lam = C64::new(a2, -beta);
        let idx = |var: usize, j: usize| var * nodes + j;
        let (vn, vpi) = (d, d + 1);
        let vz = |i: usize| d + 2 + i;
        let last = nodes - 1;
        let mut a = DMatrix::<C64>::zeros(size, size);

        for i in 0..d {
            a[(idx(i, 0), idx(i, 0))] = C64::new(1.0, 0.0);
            for j in 1..nodes {
                let row = idx(i, j);
                for k in 0..nodes {
                    a[(row, idx(i, k))] += dm[(j, k)];
                }
                a[(row, idx(vz(i), j))] -= 1.0;
            }
        }
        a[(idx(vn, 0), idx(vn, 0))] = C64::new(1.0, 0.0);
        for j in 1..nodes {
            let row = idx(vn, j);
            for k in 0..nodes {
                a[(row, idx(vn, k))] += dm[(j, k)];
            }
            for i in 0..d {
                a[(row, idx(i, j))] += two_pi_i[i];
            }
        }
        for i in 0..d {
            let row = idx(vz(i), 0);
            a[(row, idx(vz(i), 0))] = C64::new(1.0, 0.0);
            for k in 0..nodes {
                a[(row, idx(i, k))] -= dm[(0, k)];
            }
            for j in 1..last {
                let row = idx(vz(i), j);
                for k in 0..nodes {
                    a[(row, idx(vz(i), k))] += dm[(j, k)];
                }
                a[(row, idx(i, j))] -= lam;
                a[(row, idx(vpi, j))] -= two_pi_i[i];
            }
            let row = idx(vz(i), last);
            a[(row, idx(vz(i), last))] = C64::new(-1.0, 0.0);
            a[(row, idx(vn, last))] = -two_pi_i[i];
        }
        for j in 0..last {
            let row = idx(vpi, j);
            for k in 0..nodes {
                a[(row, idx(vpi, k))] += dm[(j, k)];
            }
            for i in 0..d {
                a[(row, idx(vz(i), j))] += two_pi_i[i];
            }
            a[(row, idx(vn, j))] += lam;
        }
        let row = idx(vpi, last);
        a[(row, idx(vpi, last))] = C64::new(1.0, 0.0);
        for i in 0..d {
            a[(row, idx(i, last))] += 2.0 * two_pi_i[i];
        }

        let lu = a.lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..size).map(|i| u[(i, i)].norm()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if min == 0.0 { f64::INFINITY } else { max / min };
        if !condition.is_finite() {
            return Err(Error::Singular {
                xi: xi.to_vec(),
                condition,
            });
        }
        Ok(StokesSolver {
            xi: xi.to_vec(),
            gamma,
            nodes,
            lu,
            condition,
        })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Pivot-ratio estimate of the condition number.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &StokesRhs) -> StokesProfile {
        let d = self.xi.len();
        let n = d + 1;
        let nodes = self.nodes;
        let last = nodes - 1;
        let idx = |var: usize, j: usize| var * nodes + j;
        let (vn, vpi) = (d, d + 1);
        let vz = |i: usize| d + 2 + i;
        let mut b = DVector::<C64>::zeros(2 * n * nodes);
        for j in 1..nodes {
            b[idx(vn, j)] = rhs.g[j];
        }
        for i in 0..d {
            let c = I * (2.0 * PI * self.xi[i]);
            for j in 1..last {
                b[idx(vz(i), j)] = c * rhs.g[j] - rhs.f[i * nodes + j];
            }
            b[idx(vz(i), last)] = rhs.k[i];
        }
        for j in 0..last {
            b[idx(vpi, j)] = rhs.f[d * nodes + j];
        }
        b[idx(vpi, last)] = rhs.k[d];
        self.lu.solve_mut(&mut b);
        let mut u = vec![ZERO; n * nodes];
        for c in 0..n {
            for j in 1..nodes {
                u[c * nodes + j] = b[idx(c, j)];
            }
        }
        let p = (0..nodes).map(|j| b[idx(vpi, j)] + 2.0 * rhs.g[j]).collect();
        StokesProfile { u, p }
    }
}

/// Data rows not seen by [`StokesSolver::solve`]: `f'` at the bottom and top
/// nodes, `f_n` at the top node and `g` at the bottom node. Returned as
/// `(f row indices in [comp][node] layout, g node indices)`.
pub fn ignored_rows(n: usize, nodes: usize) -> (Vec<usize>, Vec<usize>) {
    let last = nodes - 1;
    let mut f = Vec::new();
    for c in 0..n - 1 {
        f.push(c * nodes);
        f.push(c * nodes + last);
    }
    f.push((n - 1) * nodes + last);
    (f, vec![0])
}

/// Applies the forward operator at one frequency: returns `(f, g, k)` for
/// given profiles, with exact spectral differentiation on `grid`.
pub fn stokes_forward(xi: &[f64], gamma: f64, grid: &VerticalGrid, prof: &StokesProfile) -> StokesRhs {
    let d = xi.len();
    let n = d + 1;
    let nodes = grid.len();
    let two_pi_i: Vec<C64> = xi.iter().map(|&x| I * (2.0 * PI * x)).collect();
    let a2 = 4.0 * PI * PI * xi.iter().map(|x| x * x).sum::<f64>();
    let lam = C64::new(a2, -2.0 * PI * xi[0] * gamma);
    let du: Vec<Vec<C64>> = (0..n).map(|c| grid.differentiate(prof.comp(c))).collect();
    let d2u: Vec<Vec<C64>> = du.iter().map(|v| grid.differentiate(v)).collect();
    let dp = grid.differentiate(&prof.p);
    let g: Vec<C64> = (0..nodes)
        .map(|j| du[d][j] + (0..d).map(|i| two_pi_i[i] * prof.comp(i)[j]).sum::<C64>())
        .collect();
    let dg = grid.differentiate(&g);
    let mut f = vec![ZERO; n * nodes];
    for j in 0..nodes {
        for i in 0..d {
            f[i * nodes + j] = two_pi_i[i] * prof.p[j] - d2u[i][j] + lam * prof.comp(i)[j] - two_pi_i[i] * g[j];
        }
        f[d * nodes + j] = dp[j] - d2u[d][j] + lam * prof.comp(d)[j] - dg[j];
    }
    let last = nodes - 1;
    let mut k = vec![ZERO; n];
    for i in 0..d {
        k[i] = -(du[i][last] + two_pi_i[i] * prof.comp(d)[last]);
    }
    k[d] = prof.p[last] - 2.0 * du[d][last];
    StokesRhs { f, g, k }
}
