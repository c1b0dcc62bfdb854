use super::stokes::{StokesRhs, StokesSolver};
use crate::domain::{DomainSpec, Lattice, VerticalGrid};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tuning knobs for symbol computation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SymbolOptions {
    /// Above `2 pi |xi| b` of this size the half-space asymptote is used.
    pub asymptote_threshold: f64,
    /// Collocation systems with a larger condition estimate are retried on a finer grid.
    pub condition_limit: f64,
    /// Largest admissible ratio of trailing to leading Chebyshev coefficients.
    pub tail_tolerance: f64,
}

impl Default for SymbolOptions {
    fn default() -> Self {
        SymbolOptions {
            asymptote_threshold: 700.0,
            condition_limit: 1e12,
            tail_tolerance: 1e-9,
        }
    }
}

impl SymbolOptions {
    /// Never substitute the asymptote.
    pub fn exact() -> Self {
        SymbolOptions {
            asymptote_threshold: f64::INFINITY,
            ..Self::default()
        }
    }
}

/// Vertical resolution recommended for a boundary layer of width `1/(2 pi |xi|)`.
pub fn suggested_m(xi_norm: f64, b: f64) -> usize {
    (8.0 * (PI * xi_norm * b).sqrt() + 16.0).ceil() as usize
}

/// Symbol profiles `V`, `Q` and `m = V_n(b)` at one frequency, evaluated at
/// speed `eval_gamma`, together with the surface symbol `rho` of the wave
/// moving at speed `-eval_gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub xi: Vec<f64>,
    /// `n` profiles in `[comp][node]` order.
    pub v: Vec<C64>,
    pub q: Vec<C64>,
    pub m: C64,
    pub rho: C64,
    /// True when the half-space asymptote replaced the collocation solve.
    pub asymptotic: bool,
    pub condition: f64,
}

impl SymbolEntry {
    pub fn n(&self) -> usize {
        self.xi.len() + 1
    }

    pub fn v_comp(&self, c: usize) -> &[C64] {
        let m = self.q.len();
        &self.v[c * m..(c + 1) * m]
    }

    fn conj_at(&self, xi: Vec<f64>) -> Self {
        SymbolEntry {
            xi,
            v: self.v.iter().map(C64::conj).collect(),
            q: self.q.iter().map(C64::conj).collect(),
            m: self.m.conj(),
            rho: self.rho.conj(),
            asymptotic: self.asymptotic,
            condition: self.condition,
        }
    }
}

/// `rho_gamma(xi) = 2 pi i gamma xi_1 + (1 + 4 pi^2 |xi|^2 sigma) conj(m)`,
/// where `m_minus = m(xi, -gamma)`.
pub fn rho_gamma(m_minus: C64, xi: &[f64], gamma: f64, sigma: f64) -> C64 {
    let xi2: f64 = xi.iter().map(|x| x * x).sum();
    C64::new(0.0, 2.0 * PI * gamma * xi[0]) + m_minus.conj() * (1.0 + 4.0 * PI * PI * xi2 * sigma)
}

/// Solves the symbol boundary-value problem at `(xi, eval_gamma)` and
/// interpolates onto `grid`. `rho` is filled for the wave speed
/// `-eval_gamma` with surface tension `sigma`.
pub fn solve_symbol_bvp(
    xi: &[f64],
    eval_gamma: f64,
    sigma: f64,
    grid: &VerticalGrid,
    opts: &SymbolOptions,
) -> Result<SymbolEntry> {
    let n = xi.len() + 1;
    let b = grid.depth();
    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nodes = grid.len();
    if xi_norm == 0.0 {
        return Ok(SymbolEntry {
            xi: xi.to_vec(),
            v: vec![C64::new(0.0, 0.0); n * nodes],
            q: vec![C64::new(1.0, 0.0); nodes],
            m: C64::new(0.0, 0.0),
            rho: C64::new(0.0, 0.0),
            asymptotic: false,
            condition: 1.0,
        });
    }
    let (v, q, asymptotic, condition) = if 2.0 * PI * xi_norm * b > opts.asymptote_threshold {
        let (v, q) = half_space_profiles(xi, grid);
        (v, q, true, 1.0)
    } else {
        let (v, q, cond) = collocated_symbol(xi, eval_gamma, grid, opts)?;
        (v, q, false, cond)
    };
    let m = v[(n - 1) * nodes + nodes - 1];
    let rho = rho_gamma(m, xi, -eval_gamma, sigma);
    if rho.norm() < 1e-14 {
        return Err(Error::RhoVanishes {
            xi: xi.to_vec(),
            modulus: rho.norm(),
        });
    }
    Ok(SymbolEntry {
        xi: xi.to_vec(),
        v,
        q,
        m,
        rho,
        asymptotic,
        condition,
    })
}

fn collocated_symbol(
    xi: &[f64],
    gamma: f64,
    grid: &VerticalGrid,
    opts: &SymbolOptions,
) -> Result<(Vec<C64>, Vec<C64>, f64)> {
    let n = xi.len() + 1;
    let b = grid.depth();
    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut work = grid.clone();
    for attempt in 0..2 {
        let solver = StokesSolver::new(xi, gamma, &work)?;
        let mut rhs = StokesRhs::zeros(n, work.len());
        rhs.k[n - 1] = C64::new(1.0, 0.0);
        let prof = solver.solve(&rhs);
        let tail = (0..n)
            .map(|c| work.tail_ratio(prof.comp(c)))
            .chain(std::iter::once(work.tail_ratio(&prof.p)))
            .fold(0.0, f64::max);
        let ok = solver.condition() <= opts.condition_limit && tail <= opts.tail_tolerance;
        if ok {
            if attempt == 0 {
                return Ok((prof.u, prof.p, solver.condition()));
            }
            let nodes = grid.len();
            let mut v = vec![C64::new(0.0, 0.0); n * nodes];
            let mut q = vec![C64::new(0.0, 0.0); nodes];
            for (j, &z) in grid.nodes().iter().enumerate() {
                let w = work.interpolation_weights(z);
                for c in 0..n {
                    v[c * nodes + j] = prof.comp(c).iter().zip(&w).map(|(a, w)| a * *w).sum();
                }
                q[j] = prof.p.iter().zip(&w).map(|(a, w)| a * *w).sum();
            }
            return Ok((v, q, solver.condition()));
        }
        if attempt == 1 && solver.condition() > opts.condition_limit {
            return Err(Error::Singular {
                xi: xi.to_vec(),
                condition: solver.condition(),
            });
        }
        work = VerticalGrid::new(b, 2 * work.m());
    }
    Err(Error::Resolution {
        xi_norm,
        suggested: suggested_m(xi_norm, b),
    })
}

/// Leading-order half-space solution with the surface at `x_n = b`:
/// `Q = e^{k z}`, `V_n = (z/2 - 1/(2k)) e^{k z}`, `V' = (xi/|xi|)(i z/2) e^{k z}`
/// with `z = x_n - b` and `k = 2 pi |xi|`.
fn half_space_profiles(xi: &[f64], grid: &VerticalGrid) -> (Vec<C64>, Vec<C64>) {
    let d = xi.len();
    let nodes = grid.len();
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let k = 2.0 * PI * norm;
    let b = grid.depth();
    let mut v = vec![C64::new(0.0, 0.0); (d + 1) * nodes];
    let mut q = vec![C64::new(0.0, 0.0); nodes];
    for (j, &x) in grid.nodes().iter().enumerate() {
        let z = x - b;
        let e = (k * z).exp();
        q[j] = C64::new(e, 0.0);
        v[d * nodes + j] = C64::new((0.5 * z - 0.5 / k) * e, 0.0);
        for i in 0..d {
            v[i * nodes + j] = C64::new(0.0, xi[i] / norm * 0.5 * z * e);
        }
    }
    (v, q)
}

/// Symbols over a set of frequencies sharing one vertical grid.
///
/// Profiles are evaluated at `eval_gamma = -gamma`, the speed at which the
/// free-surface construction for a wave of speed `gamma` needs them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolTable {
    pub gamma: f64,
    pub sigma: f64,
    pub depth: f64,
    pub eval_gamma: f64,
    pub vertical_degree: usize,
    pub nodes: Vec<f64>,
    pub entries: Vec<SymbolEntry>,
}

impl SymbolTable {
    /// Table over explicit frequencies. Pairs `xi`, `-xi` are solved once
    /// and filled by conjugation.
    pub fn from_points(
        points: &[Vec<f64>],
        gamma: f64,
        sigma: f64,
        grid: &VerticalGrid,
        opts: &SymbolOptions,
    ) -> Result<Self> {
        let eval_gamma = -gamma;
        let entries: Vec<Result<SymbolEntry>> = points
            .par_iter()
            .map(|xi| solve_symbol_bvp(xi, eval_gamma, sigma, grid, opts))
            .collect();
        let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(SymbolTable {
            gamma,
            sigma,
            depth: grid.depth(),
            eval_gamma,
            vertical_degree: grid.m(),
            nodes: grid.nodes().to_vec(),
            entries,
        })
    }

    pub fn grid(&self) -> VerticalGrid {
        VerticalGrid::new(self.depth, self.vertical_degree)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest violation of the conjugation symmetry over a lattice.
    pub fn symmetry_defect(&self, lattice: &Lattice) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..self.entries.len() {
            let a = &self.entries[l];
            let b = &self.entries[lattice.neg(l)];
            worst = worst.max((a.m - b.m.conj()).norm()).max((a.rho - b.rho.conj()).norm());
            for (x, y) in a.v.iter().zip(&b.v).chain(a.q.iter().zip(&b.q)) {
                worst = worst.max((x - y.conj()).norm());
            }
        }
        worst
    }
}

/// Symbol table over a lattice for the wave parameters of `spec`.
pub fn build_symbol_table(
    spec: &DomainSpec,
    lattice: &Lattice,
    grid: &VerticalGrid,
    opts: &SymbolOptions,
) -> Result<SymbolTable> {
    if (grid.depth() - spec.depth).abs() > 1e-14 * spec.depth {
        return Err(Error::Shape("vertical grid depth differs from the domain depth".into()));
    }
    let eval_gamma = -spec.gamma;
    let reps: Vec<usize> = (0..lattice.len()).filter(|&l| lattice.neg(l) >= l).collect();
    let solved: Vec<Result<SymbolEntry>> = reps
        .par_iter()
        .map(|&l| solve_symbol_bvp(lattice.xi(l), eval_gamma, spec.sigma, grid, opts))
        .collect();
    let mut slots: Vec<Option<SymbolEntry>> = vec![None; lattice.len()];
    for (&l, e) in reps.iter().zip(solved) {
        let e = e?;
        let m = lattice.neg(l);
        if m != l {
            slots[m] = Some(e.conj_at(lattice.xi(m).to_vec()));
        }
        slots[l] = Some(e);
    }
    Ok(SymbolTable {
        gamma: spec.gamma,
        sigma: spec.sigma,
        depth: spec.depth,
        eval_gamma,
        vertical_degree: grid.m(),
        nodes: grid.nodes().to_vec(),
        entries: slots.into_iter().map(|e| e.expect("every point solved")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Factor;

    #[test]
    fn zero_frequency_entry() {
        let grid = VerticalGrid::new(1.0, 16);
        let e = solve_symbol_bvp(&[0.0], 1.0, 1.0, &grid, &SymbolOptions::default()).unwrap();
        assert_eq!(e.m, C64::new(0.0, 0.0));
        assert!(e.q.iter().all(|q| *q == C64::new(1.0, 0.0)));
        assert_eq!(e.rho, C64::new(0.0, 0.0));
    }

    #[test]
    fn matches_solver_on_nonzero_frequency() {
        let grid = VerticalGrid::new(1.0, 32);
        let e = solve_symbol_bvp(&[0.5], 1.0, 1.0, &grid, &SymbolOptions::default()).unwrap();
        assert_eq!(e.v[0], C64::new(0.0, 0.0));
        assert_eq!(e.v[grid.len()], C64::new(0.0, 0.0));
        assert!(e.m.re < 0.0);
        let dvn = grid.differentiate(e.v_comp(1));
        for j in 1..grid.len() {
            let div = C64::new(0.0, 2.0 * PI * 0.5) * e.v_comp(0)[j] + dvn[j];
            assert!(div.norm() < 1e-10);
        }
    }

    #[test]
    fn table_is_symmetric_and_deterministic() {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 9)], 1.0, 0.0, 1.0, 1.0).unwrap();
        let lat = Lattice::from_factors(&spec.factors, &[4]).unwrap();
        let grid = VerticalGrid::new(1.0, 24);
        let a = build_symbol_table(&spec, &lat, &grid, &SymbolOptions::default()).unwrap();
        let b = build_symbol_table(&spec, &lat, &grid, &SymbolOptions::default()).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.symmetry_defect(&lat), 0.0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_gamma(C64::new(0.0, 0.0), &[0.0], 1.0, 1.0), C64::new(0.0, 0.0));
        let r = rho_gamma(C64::new(-1.0, 2.0), &[0.5], 2.0, 0.0);
        assert!((r - C64::new(-1.0, 2.0 * PI - 2.0)).norm() < 1e-15);
    }

    #[test]
    fn half_space_limit_is_used_far_out() {
        let grid = VerticalGrid::new(1.0, 16);
        let e = solve_symbol_bvp(&[200.0], 1.0, 1.0, &grid, &SymbolOptions::default()).unwrap();
        assert!(e.asymptotic);
        assert!((e.m.re + 1.0 / (4.0 * PI * 200.0)).abs() < 1e-15);
    }
}
