use super::stokes::{stokes_forward, StokesProfile};
use super::table::{solve_symbol_bvp, suggested_m, SymbolEntry, SymbolOptions, SymbolTable};
use crate::domain::VerticalGrid;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Solves for `m(xi, gamma)` on a grid sized for the boundary layer.
pub fn symbol_m(xi: &[f64], gamma: f64, b: f64, opts: &SymbolOptions) -> Result<C64> {
    let m = suggested_m(norm(xi), b).max(32);
    let grid = VerticalGrid::new(b, m);
    Ok(solve_symbol_bvp(xi, gamma, 0.0, &grid, opts)?.m)
}

/// Normwise backward error of the six symbol equations: the max-norm
/// defect divided by `||L|| ||(V, Q)|| + 1`, with `||L||` built from the
/// row-sum norm of the differentiation matrix. Pointwise second derivatives
/// of a computed profile carry roundoff of order `||D||^2 eps`, so this is
/// the scale at which the defect is meaningful.
pub fn collocation_residual(entry: &SymbolEntry, eval_gamma: f64, grid: &VerticalGrid) -> f64 {
    let n = entry.n();
    let d = n - 1;
    let nodes = grid.len();
    let prof = StokesProfile {
        u: entry.v.clone(),
        p: entry.q.clone(),
    };
    let rhs = stokes_forward(&entry.xi, eval_gamma, grid, &prof);
    let a = 2.0 * PI * norm(&entry.xi);
    let beta = (2.0 * PI * entry.xi[0] * eval_gamma).abs();
    let dm = grid.diff_matrix();
    let dnorm = (0..nodes)
        .map(|i| (0..nodes).map(|j| dm[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let scale = (dnorm * dnorm + a * a + beta) * max_abs(&entry.v) + (a + dnorm) * max_abs(&entry.q) + 1.0;
    let mut worst: f64 = 0.0;
    for j in 1..nodes - 1 {
        for c in 0..n {
            worst = worst.max(rhs.f[c * nodes + j].norm());
        }
    }
    for j in 1..nodes {
        worst = worst.max(rhs.g[j].norm());
    }
    for i in 0..d {
        worst = worst.max(rhs.k[i].norm());
    }
    worst = worst.max((rhs.k[d] - 1.0).norm());
    for c in 0..n {
        worst = worst.max(entry.v_comp(c)[0].norm());
    }
    worst / scale
}

/// Returns `(Re m, -1/2 int |DV + DV^T|^2)`; the two agree for an exact solution.
pub fn energy_defect(entry: &SymbolEntry, grid: &VerticalGrid) -> (f64, f64) {
    let n = entry.n();
    let nodes = grid.len();
    let grads: Vec<Vec<Vec<C64>>> = (0..n)
        .map(|c| {
            let v = entry.v_comp(c);
            (0..n)
                .map(|j| {
                    if j < n - 1 {
                        v.iter().map(|x| x * C64::new(0.0, 2.0 * PI * entry.xi[j])).collect()
                    } else {
                        grid.differentiate(v)
                    }
                })
                .collect()
        })
        .collect();
    let density: Vec<f64> = (0..nodes)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += (grads[j][i][k] + grads[i][j][k]).norm_sqr();
                }
            }
            s
        })
        .collect();
    (entry.m.re, -0.5 * grid.integrate_real(&density))
}

/// Deviations from the small-frequency expansion, each normalized by the
/// order of its remainder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LowDeviation {
    pub xi_norm: f64,
    /// `m / (-4 pi^2 |xi|^2 b^3 / 3)`.
    pub m_ratio: f64,
    pub m: f64,
    pub v_tangential: f64,
    pub v_normal: f64,
    pub q: f64,
}

/// Normalized remainders of the expansions
/// `V' = -pi i xi (2 x_n b - x_n^2)`, `V_n = 2 pi^2 |xi|^2 x_n^2 (x_n/3 - b)`,
/// `Q = 1`, `m = -4 pi^2 |xi|^2 b^3 / 3`.
pub fn low_deviation(entry: &SymbolEntry, nodes: &[f64], b: f64) -> LowDeviation {
    let r = norm(&entry.xi);
    if r == 0.0 {
        return LowDeviation {
            xi_norm: 0.0,
            m_ratio: 1.0,
            m: 0.0,
            v_tangential: 0.0,
            v_normal: 0.0,
            q: 0.0,
        };
    }
    let d = entry.n() - 1;
    let lead = -4.0 * PI * PI * r * r * b.powi(3) / 3.0;
    let mut vt: f64 = 0.0;
    let mut vn: f64 = 0.0;
    let mut q: f64 = 0.0;
    for (j, &z) in nodes.iter().enumerate() {
        for i in 0..d {
            let e = C64::new(0.0, -PI * entry.xi[i] * (2.0 * z * b - z * z));
            vt = vt.max((entry.v_comp(i)[j] - e).norm());
        }
        let e = 2.0 * PI * PI * r * r * z * z * (z / 3.0 - b);
        vn = vn.max((entry.v_comp(d)[j] - e).norm());
        q = q.max((entry.q[j] - 1.0).norm());
    }
    LowDeviation {
        xi_norm: r,
        m_ratio: entry.m.re / lead,
        m: (entry.m - lead).norm() / r.powi(3),
        v_tangential: vt / (r * r),
        v_normal: vn / r.powi(3),
        q: q / (r * r),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowReport {
    pub radius: f64,
    pub rows: Vec<LowDeviation>,
    pub max_m: f64,
    pub max_v_tangential: f64,
    pub max_v_normal: f64,
    pub max_q: f64,
}

/// Small-frequency deviations over the table entries with `0 < |xi| <= radius`.
pub fn check_low_asymptotics(table: &SymbolTable, radius: f64) -> Result<LowReport> {
    let rows: Vec<LowDeviation> = table
        .entries
        .iter()
        .filter(|e| {
            let r = norm(&e.xi);
            r > 0.0 && r <= radius
        })
        .map(|e| low_deviation(e, &table.nodes, table.depth))
        .collect();
    if rows.is_empty() {
        return Err(Error::Empty(format!("no frequencies with 0 < |xi| <= {radius}")));
    }
    let max = |f: fn(&LowDeviation) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(LowReport {
        radius,
        max_m: max(|r| r.m),
        max_v_tangential: max(|r| r.v_tangential),
        max_v_normal: max(|r| r.v_normal),
        max_q: max(|r| r.q),
        rows,
    })
}

/// Large-frequency deviations: `|xi|^2 |m + 1/(4 pi |xi|)|` and the fitted
/// constants of the exponential envelopes of `V'`, `V_n`, `Q`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HighDeviation {
    pub xi_norm: f64,
    pub m_scaled: f64,
    pub v_tangential: f64,
    pub v_normal: f64,
    pub q: f64,
}

pub fn high_deviation(entry: &SymbolEntry, nodes: &[f64], b: f64, eval_gamma: f64) -> HighDeviation {
    let r = norm(&entry.xi);
    let a = 2.0 * PI * r;
    let d = entry.n() - 1;
    let floor = (-a * b).exp();
    let mut vt: f64 = 0.0;
    let mut vn: f64 = 0.0;
    let mut q: f64 = 0.0;
    for (j, &z) in nodes.iter().enumerate() {
        let e = (-a * (b - z)).exp();
        let tang: f64 = (0..d).map(|i| entry.v_comp(i)[j].norm_sqr()).sum::<f64>().sqrt();
        vt = vt.max(tang / ((eval_gamma.abs() / (r * r) + (b - z)) * e + floor));
        vn = vn.max(entry.v_comp(d)[j].norm() / ((1.0 / r + (b - z)) * e + floor));
        q = q.max(entry.q[j].norm() / (e + floor));
    }
    HighDeviation {
        xi_norm: r,
        m_scaled: m_high_scaled(entry.m, r),
        v_tangential: vt,
        v_normal: vn,
        q,
    }
}

/// `|xi|^2 |m + 1/(4 pi |xi|)|`.
pub fn m_high_scaled(m: C64, xi_norm: f64) -> f64 {
    xi_norm * xi_norm * (m + 1.0 / (4.0 * PI * xi_norm)).norm()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HighReport {
    pub threshold: f64,
    pub rows: Vec<HighDeviation>,
    pub fitted_m: f64,
    pub fitted_v_tangential: f64,
    pub fitted_v_normal: f64,
    pub fitted_q: f64,
    /// Entries that used the half-space asymptote instead of a solve.
    pub asymptotic_entries: usize,
}

/// Large-frequency deviations over the table entries with `|xi| > threshold`.
pub fn check_high_asymptotics(table: &SymbolTable, threshold: f64) -> Result<HighReport> {
    let selected: Vec<&SymbolEntry> = table.entries.iter().filter(|e| norm(&e.xi) > threshold).collect();
    if selected.is_empty() {
        return Err(Error::Empty(format!("no frequencies with |xi| > {threshold}")));
    }
    let rows: Vec<HighDeviation> = selected
        .iter()
        .map(|e| high_deviation(e, &table.nodes, table.depth, table.eval_gamma))
        .collect();
    let max = |f: fn(&HighDeviation) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(HighReport {
        threshold,
        fitted_m: max(|r| r.m_scaled),
        fitted_v_tangential: max(|r| r.v_tangential),
        fitted_v_normal: max(|r| r.v_normal),
        fitted_q: max(|r| r.q),
        asymptotic_entries: selected.iter().filter(|e| e.asymptotic).count(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_and_energy_at_moderate_frequency() {
        let grid = VerticalGrid::new(1.0, 40);
        for xi in [vec![0.5], vec![2.0], vec![0.3, 0.4]] {
            let e = solve_symbol_bvp(&xi, 1.0, 1.0, &grid, &SymbolOptions::default()).unwrap();
            let res = collocation_residual(&e, 1.0, &grid);
            assert!(res < 1e-10, "{xi:?} {res}");
            let (re_m, diss) = energy_defect(&e, &grid);
            assert!(re_m < 0.0);
            assert!((re_m - diss).abs() < 1e-10 * re_m.abs(), "{re_m} {diss}");
        }
    }

    #[test]
    fn small_frequency_leading_terms() {
        let grid = VerticalGrid::new(1.0, 24);
        let opts = SymbolOptions::default();
        let a = solve_symbol_bvp(&[1e-3], 1.0, 1.0, &grid, &opts).unwrap();
        let b = solve_symbol_bvp(&[5e-4], 1.0, 1.0, &grid, &opts).unwrap();
        let da = low_deviation(&a, grid.nodes(), 1.0);
        let db = low_deviation(&b, grid.nodes(), 1.0);
        assert!((da.m_ratio - 1.0).abs() < 0.02);
        for (x, y) in [
            (da.m, db.m),
            (da.v_tangential, db.v_tangential),
            (da.v_normal, db.v_normal),
            (da.q, db.q),
        ] {
            assert!((x / y - 1.0).abs() < 0.1, "{da:?} {db:?}");
        }
    }
}
