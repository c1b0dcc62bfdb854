use super::data::{block_sizes, DataTuple, SolutionTriple};
use crate::domain::{DomainSpec, Lattice, SurfaceField, VerticalGrid};
use crate::error::{Error, Result};
use crate::multipliers::Seminorm;
use crate::symbols::{
    build_symbol_table, stokes_forward, StokesProfile, StokesRhs, StokesSolver, SymbolOptions, SymbolTable,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// The linear operator `Upsilon_{gamma,sigma}` on one lattice and vertical
/// grid, its inverse and the incline perturbation `M_kappa`.
///
/// Every operator acts frequency by frequency. The symbol table is
/// evaluated at `-gamma` (for `psi` and `rho`), the factorized Stokes
/// solvers at `+gamma`; pairs `xi`, `-xi` share one factorization through
/// `A(-xi) = conj A(xi)`.
pub struct LinearSystem {
    spec: DomainSpec,
    lattice: Lattice,
    grid: VerticalGrid,
    table: SymbolTable,
    solvers: Vec<Option<StokesSolver>>,
}

impl std::fmt::Debug for LinearSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSystem")
            .field("n", &self.spec.n())
            .field("lattice", &self.lattice.len())
            .field("m", &self.grid.m())
            .finish()
    }
}

/// Outcome of the overdetermined solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverdeterminedReport {
    /// Largest `|psi|` of the data over `xi != 0`.
    pub adjoint_residual: f64,
    /// Largest `|u_n(b) - h|` over the lattice.
    pub trace_defect: f64,
}

impl LinearSystem {
    pub fn new(spec: &DomainSpec, lattice: &Lattice, grid: &VerticalGrid, opts: &SymbolOptions) -> Result<Self> {
        if lattice.dim() != spec.d() {
            return Err(Error::Shape(format!(
                "lattice dimension {} does not match cross-section dimension {}",
                lattice.dim(),
                spec.d()
            )));
        }
        let table = build_symbol_table(spec, lattice, grid, opts)?;
        let reps: Vec<usize> = (0..lattice.len()).filter(|&l| lattice.neg(l) >= l).collect();
        let built: Vec<Result<StokesSolver>> = reps
            .par_iter()
            .map(|&l| StokesSolver::new(lattice.xi(l), spec.gamma, grid))
            .collect();
        let mut solvers: Vec<Option<StokesSolver>> = (0..lattice.len()).map(|_| None).collect();
        for (&l, s) in reps.iter().zip(built) {
            solvers[l] = Some(s?);
        }
        Ok(LinearSystem {
            spec: spec.clone(),
            lattice: lattice.clone(),
            grid: grid.clone(),
            table,
            solvers,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn grid(&self) -> &VerticalGrid {
        &self.grid
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn zero_data(&self) -> DataTuple {
        DataTuple::zeros(self.lattice.len(), self.nodes(), self.n())
    }

    pub fn zero_state(&self) -> SolutionTriple {
        SolutionTriple::zeros(self.lattice.len(), self.nodes(), self.n())
    }

    /// Lattice index whose solver serves `l`.
    pub(crate) fn representative(&self, l: usize) -> usize {
        if self.solvers[l].is_some() {
            l
        } else {
            self.lattice.neg(l)
        }
    }

    fn stokes_solve(&self, l: usize, rhs: &StokesRhs) -> StokesProfile {
        match &self.solvers[l] {
            Some(s) => s.solve(rhs),
            None => {
                let s = self.solvers[self.lattice.neg(l)]
                    .as_ref()
                    .expect("representative solver");
                s.solve(&rhs.conj()).conj()
            }
        }
    }

    fn split_state(&self, x: &[C64]) -> (StokesProfile, C64) {
        let n = self.n();
        let nodes = self.nodes();
        (
            StokesProfile {
                u: x[..n * nodes].to_vec(),
                p: x[n * nodes..(n + 1) * nodes].to_vec(),
            },
            x[(n + 1) * nodes],
        )
    }

    fn split_data(&self, y: &[C64]) -> (StokesRhs, C64) {
        let n = self.n();
        let nodes = self.nodes();
        (
            StokesRhs {
                f: y[..n * nodes].to_vec(),
                g: y[n * nodes..(n + 1) * nodes].to_vec(),
                k: y[(n + 1) * nodes + 1..].to_vec(),
            },
            y[(n + 1) * nodes],
        )
    }

    fn join_data(rhs: StokesRhs, h: C64) -> Vec<C64> {
        let mut y = rhs.f;
        y.extend(rhs.g);
        y.push(h);
        y.extend(rhs.k);
        y
    }

    /// Adds the free-surface terms of `Upsilon(0, 0, eta)` to `y`.
    fn add_eta_terms(&self, l: usize, eta: C64, y: &mut [C64]) {
        let n = self.n();
        let d = n - 1;
        let nodes = self.nodes();
        let xi = self.lattice.xi(l);
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        for i in 0..d {
            let c = I * (2.0 * PI * xi[i]) * eta;
            for v in &mut y[i * nodes..(i + 1) * nodes] {
                *v += c;
            }
        }
        y[(n + 1) * nodes] += I * (2.0 * PI * self.spec.gamma * xi[0]) * eta;
        y[(n + 1) * nodes + 1 + d] -= 4.0 * PI * PI * xi2 * self.spec.sigma * eta;
    }

    /// `Upsilon` at lattice point `l` on a state vector.
    pub fn upsilon_block(&self, l: usize, x: &[C64]) -> Vec<C64> {
        let (prof, eta) = self.split_state(x);
        let rhs = stokes_forward(self.lattice.xi(l), self.spec.gamma, &self.grid, &prof);
        let h = prof.comp(self.n() - 1)[self.nodes() - 1];
        let mut y = Self::join_data(rhs, h);
        self.add_eta_terms(l, eta, &mut y);
        y
    }

    /// `psi` at lattice point `l` on a data vector.
    pub fn psi_block(&self, l: usize, y: &[C64]) -> C64 {
        let n = self.n();
        let nodes = self.nodes();
        let e = &self.table.entries[l];
        let w = self.grid.weights();
        let mut acc = ZERO;
        for c in 0..n {
            let v = e.v_comp(c);
            for j in 0..nodes {
                acc += w[j] * y[c * nodes + j] * v[j].conj();
            }
            acc -= y[(n + 1) * nodes + 1 + c] * v[nodes - 1].conj();
        }
        for j in 0..nodes {
            acc -= w[j] * y[n * nodes + j] * e.q[j].conj();
        }
        acc + y[(n + 1) * nodes]
    }

    /// `eta^ = psi / rho` at `l`, zero at the origin.
    pub fn eta_block(&self, l: usize, y: &[C64]) -> C64 {
        if l == self.lattice.zero_index() {
            ZERO
        } else {
            self.psi_block(l, y) / self.table.entries[l].rho
        }
    }

    /// Solves `Psi_gamma (u, p) = (f, g, k)` at `l`, ignoring `h`.
    pub fn overdetermined_block(&self, l: usize, y: &[C64]) -> Vec<C64> {
        let (rhs, _) = self.split_data(y);
        let prof = self.stokes_solve(l, &rhs);
        let mut x = prof.u;
        x.extend(prof.p);
        x.push(ZERO);
        x
    }

    /// Inverse of `Upsilon` at `l`: `eta` from `psi / rho`, then the
    /// overdetermined solve on the modified data.
    pub fn inverse_block(&self, l: usize, y: &[C64]) -> Vec<C64> {
        let eta = self.eta_block(l, y);
        let mut ym = y.to_vec();
        self.add_eta_terms(l, -eta, &mut ym);
        let mut x = self.overdetermined_block(l, &ym);
        let last = x.len() - 1;
        x[last] = eta;
        x
    }

    /// `M_kappa` at `l` split as `kappa M1 + kappa^2 M2`; returns `(M1 x, M2 x)`.
    pub fn m_parts_block(&self, l: usize, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n();
        let d = n - 1;
        let nodes = self.nodes();
        let b = self.spec.depth;
        let gamma = self.spec.gamma;
        let xi = self.lattice.xi(l);
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        let a: Vec<C64> = xi.iter().map(|&x| I * (2.0 * PI * x)).collect();
        let a1 = a[0];
        let eta = x[(n + 1) * nodes];
        let (_, ny) = block_sizes(n, nodes);
        let mut y1 = vec![ZERO; ny];
        let mut y2 = vec![ZERO; ny];
        for (j, &z) in self.grid.nodes().iter().enumerate() {
            let s0 = b * z - 0.5 * z * z;
            let s0p = b - z;
            let un = x[d * nodes + j];
            for i in 0..n {
                y1[i * nodes + j] = s0 * a1 * x[i * nodes + j];
            }
            y1[j] += -gamma * z * a1 * eta + s0p * un + z * 4.0 * PI * PI * xi2 * eta;
            y2[j] += z * s0 * a1 * eta;
            for i in 0..d {
                y1[i * nodes + j] -= z * a[i] * a1 * eta;
            }
            y1[d * nodes + j] -= a1 * eta;
            y1[n * nodes + j] = z * a1 * eta;
        }
        y1[(n + 1) * nodes] = -0.5 * b * b * a1 * eta;
        (y1, y2)
    }

    pub fn m_block(&self, l: usize, kappa: f64, x: &[C64]) -> Vec<C64> {
        let (y1, y2) = self.m_parts_block(l, x);
        y1.iter()
            .zip(&y2)
            .map(|(a, b)| a * kappa + b * (kappa * kappa))
            .collect()
    }

    fn map_state_to_data(&self, x: &SolutionTriple, op: impl Fn(usize, &[C64]) -> Vec<C64> + Sync) -> DataTuple {
        let blocks: Vec<Vec<C64>> = (0..self.lattice.len())
            .into_par_iter()
            .map(|l| op(l, &x.gather(l)))
            .collect();
        let mut d = self.zero_data();
        for (l, y) in blocks.iter().enumerate() {
            d.scatter(l, y);
        }
        d
    }

    fn map_data_to_state(&self, d: &DataTuple, op: impl Fn(usize, &[C64]) -> Vec<C64> + Sync) -> SolutionTriple {
        let blocks: Vec<Vec<C64>> = (0..self.lattice.len())
            .into_par_iter()
            .map(|l| op(l, &d.gather(l)))
            .collect();
        let mut x = self.zero_state();
        for (l, v) in blocks.iter().enumerate() {
            x.scatter(l, v);
        }
        x
    }

    fn check_shape(&self, x: &SolutionTriple) -> Result<()> {
        if x.n() != self.n() || x.nlat() != self.lattice.len() || x.nodes() != self.nodes() {
            return Err(Error::Shape("state does not match the linear system".into()));
        }
        Ok(())
    }

    fn check_data_shape(&self, d: &DataTuple) -> Result<()> {
        if d.n() != self.n() || d.nlat() != self.lattice.len() || d.nodes() != self.nodes() {
            return Err(Error::Shape("data does not match the linear system".into()));
        }
        Ok(())
    }

    /// `Upsilon_{gamma,sigma}(u, p, eta) = (div S(p,u) - gamma d_1 u + (grad' eta, 0),
    /// div u, u_n + gamma d_1 eta, S(p,u) e_n + sigma Lap' eta e_n)`.
    pub fn apply_upsilon(&self, x: &SolutionTriple) -> Result<DataTuple> {
        self.check_shape(x)?;
        Ok(self.map_state_to_data(x, |l, v| self.upsilon_block(l, v)))
    }

    /// `M_kappa(u, p, eta)`.
    pub fn apply_m_kappa(&self, x: &SolutionTriple, kappa: f64) -> Result<DataTuple> {
        self.check_shape(x)?;
        Ok(self.map_state_to_data(x, |l, v| self.m_block(l, kappa, v)))
    }

    /// `L_{kappa,sigma} = Upsilon + M_kappa`.
    pub fn apply_l_kappa(&self, x: &SolutionTriple, kappa: f64) -> Result<DataTuple> {
        self.check_shape(x)?;
        Ok(self.map_state_to_data(x, |l, v| {
            let y = self.upsilon_block(l, v);
            let m = self.m_block(l, kappa, v);
            y.iter().zip(&m).map(|(a, b)| a + b).collect()
        }))
    }

    /// `psi(xi) = int (f . conj V - g conj Q) - k . conj V(b) + h`, with
    /// `V, Q` at `-gamma` and Clenshaw–Curtis quadrature.
    pub fn psi_of_data(&self, d: &DataTuple) -> Result<SurfaceField> {
        self.check_data_shape(d)?;
        let coeffs: Vec<C64> = (0..self.lattice.len())
            .into_par_iter()
            .map(|l| self.psi_block(l, &d.gather(l)))
            .collect();
        Ok(SurfaceField {
            ncomp: 1,
            coeffs,
            is_real: true,
        })
    }

    /// Free surface `eta^ = psi / rho_gamma` off the origin, `eta^(0) = 0`.
    pub fn construct_eta(&self, d: &DataTuple) -> Result<SurfaceField> {
        let psi = self.psi_of_data(d)?;
        let z = self.lattice.zero_index();
        let coeffs = psi
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, p)| if l == z { ZERO } else { p / self.table.entries[l].rho })
            .collect();
        Ok(SurfaceField {
            ncomp: 1,
            coeffs,
            is_real: true,
        })
    }

    /// `max_{xi != 0} |psi(xi) - rho_gamma(xi) eta^(xi)|`: the adjoint
    /// compatibility defect of the data modified by `eta`.
    pub fn adjoint_compat_residual(&self, d: &DataTuple, eta: &SurfaceField) -> Result<f64> {
        let psi = self.psi_of_data(d)?;
        let z = self.lattice.zero_index();
        Ok((0..self.lattice.len())
            .filter(|&l| l != z)
            .map(|l| (psi.get(0, l) - self.table.entries[l].rho * eta.get(0, l)).norm())
            .fold(0.0, f64::max))
    }

    /// Solves `Psi_gamma(u, p) = (f, g, k)` frequency by frequency and
    /// reports the defect of the overdetermined trace row `u_n(b) = h`.
    /// Refuses data whose adjoint residual exceeds `tol * max(1, |data|)`.
    pub fn solve_overdetermined(&self, d: &DataTuple, tol: f64) -> Result<(SolutionTriple, OverdeterminedReport)> {
        self.check_data_shape(d)?;
        let psi = self.psi_of_data(d)?;
        let z = self.lattice.zero_index();
        let adjoint_residual = (0..self.lattice.len())
            .filter(|&l| l != z)
            .map(|l| psi.get(0, l).norm())
            .fold(0.0, f64::max);
        let scale = d.max_abs().max(1.0);
        if adjoint_residual > tol * scale {
            return Err(Error::Incompatible(format!(
                "adjoint residual {adjoint_residual:.3e} exceeds {:.3e}",
                tol * scale
            )));
        }
        let x = self.map_data_to_state(d, |l, y| self.overdetermined_block(l, y));
        let trace_defect = self.trace_defect(&x, d);
        Ok((
            x,
            OverdeterminedReport {
                adjoint_residual,
                trace_defect,
            },
        ))
    }

    fn trace_defect(&self, x: &SolutionTriple, d: &DataTuple) -> f64 {
        let top = self.nodes() - 1;
        let nc = self.n() - 1;
        (0..self.lattice.len())
            .map(|l| (x.u.get(nc, l, top) - d.h.get(0, l)).norm())
            .fold(0.0, f64::max)
    }

    /// Checks that the data satisfy the divergence-trace condition, including
    /// the mean condition `h^(0) = int g^(0)` at the origin.
    pub fn check_admissible(&self, d: &DataTuple) -> Result<()> {
        self.check_data_shape(d)?;
        if let Seminorm::Infinite = d.divtrace_residual(&self.lattice, &self.grid) {
            return Err(Error::Incompatible("h - int g has nonzero mean on a torus".into()));
        }
        let z = self.lattice.zero_index();
        let gap = (d.h.get(0, z) - self.grid.integrate(d.g.profile(0, z))).norm();
        if gap > 1e-10 * d.max_abs().max(1.0) {
            return Err(Error::Incompatible(format!("h^(0) - int g^(0) = {gap:.3e}")));
        }
        Ok(())
    }

    /// Inverse of `Upsilon_{gamma,sigma}` without admissibility checks.
    pub fn apply_inverse(&self, d: &DataTuple) -> SolutionTriple {
        self.map_data_to_state(d, |l, y| self.inverse_block(l, y))
    }

    /// `Upsilon_{gamma,sigma}^{-1}` on admissible data.
    pub fn solve_upsilon(&self, d: &DataTuple) -> Result<SolutionTriple> {
        self.check_admissible(d)?;
        let eta = self.construct_eta(d)?;
        let mut modified = d.clone();
        let upe = self.apply_upsilon(&SolutionTriple {
            eta: eta.clone(),
            ..self.zero_state()
        })?;
        modified = modified.sub(&upe);
        let (mut x, _) = self.solve_overdetermined(&modified, 1e-6)?;
        x.eta = eta;
        Ok(x)
    }
}
