use super::data::{block_sizes, data_weights, hdot_factor, state_weights, xs_state_norm, DataTuple, SolutionTriple};
use super::system::LinearSystem;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `B(gamma, b, kappa)`: `b^(1/2) kappa^2 + (|gamma| b^(1/2) + 1)|kappa|`
/// for `b <= 1`, `b^(7/2) kappa^2 + (|gamma| b^(3/2) + b^2)|kappa|` for `b > 1`.
pub fn budget(gamma: f64, b: f64, kappa: f64) -> f64 {
    let (q, l) = budget_coefficients(gamma, b);
    q * kappa * kappa + l * kappa.abs()
}

/// Coefficients `(quadratic, linear)` of [`budget`].
pub fn budget_coefficients(gamma: f64, b: f64) -> (f64, f64) {
    if b <= 1.0 {
        (b.sqrt(), gamma.abs() * b.sqrt() + 1.0)
    } else {
        (b.powf(3.5), gamma.abs() * b.powf(1.5) + b * b)
    }
}

/// Positive root of `c B(gamma, b, kappa) = 1 / inverse_norm`.
pub fn kappa0_from_budget(c: f64, inverse_norm: f64, gamma: f64, b: f64) -> f64 {
    let (q, l) = budget_coefficients(gamma, b);
    let t = 1.0 / (c * inverse_norm);
    (-l + (l * l + 4.0 * q * t).sqrt()) / (2.0 * q)
}

/// Dense per-frequency matrices of the inverse and of `M_kappa` in the
/// weighted coordinates of the `X^s` and `Y^s` norms.
struct Block {
    xi_norm: f64,
    /// `H_x^(1/2) S T L_y^(-H)`: inverse from data (compatible subspace) to state.
    inverse: DMatrix<C64>,
    /// `L_y^H M_j H_x^(-1/2)` for `M_kappa = kappa M_1 + kappa^2 M_2`.
    m1: DMatrix<C64>,
    m2: DMatrix<C64>,
    /// `S M_j` in plain state coordinates.
    sm1: DMatrix<C64>,
    sm2: DMatrix<C64>,
}

/// Norms of one frequency block.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockNorms {
    pub xi_norm: f64,
    pub inverse: f64,
    pub m: f64,
    pub composite: f64,
    pub spectral_radius: f64,
}

/// Operator norms `||L_0^-1||`, `||M_kappa||`, `||L_0^-1 M_kappa||` and the
/// spectral radius of `L_0^-1 M_kappa`, all maxima over frequency blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorNorms {
    pub kappa: f64,
    pub inverse_norm: f64,
    pub m_norm: f64,
    pub composite_norm: f64,
    pub spectral_radius: f64,
    pub blocks: Vec<BlockNorms>,
}

/// Exact discrete operator norms between `X^s` and `Y^s`, computed by
/// singular values of the frequency blocks.
///
/// States are restricted to `u(0) = 0` and `eta^(0) = 0`; at the origin
/// the data are restricted to `h = int g`.
pub struct BlockOperators {
    s: f64,
    blocks: Vec<Block>,
}

impl std::fmt::Debug for BlockOperators {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockOperators")
            .field("s", &self.s)
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

fn cholesky_lower(g: DMatrix<C64>) -> Result<DMatrix<C64>> {
    g.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Config("Gram matrix is not positive definite".into()))
}

fn sigma_max(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

fn spectral_radius(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match m.clone().schur().eigenvalues() {
        Some(ev) => ev.iter().map(|e| e.norm()).fold(0.0, f64::max),
        None => f64::NAN,
    }
}

impl BlockOperators {
    pub fn new(sys: &LinearSystem, s: f64) -> Result<Self> {
        let lat = sys.lattice();
        let reps: Vec<usize> = (0..lat.len()).filter(|&l| sys.representative(l) == l).collect();
        let blocks: Vec<Result<Block>> = reps.par_iter().map(|&l| build_block(sys, l, s)).collect();
        Ok(BlockOperators {
            s,
            blocks: blocks.into_iter().collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn norms(&self, kappa: f64) -> OperatorNorms {
        let blocks: Vec<BlockNorms> = self
            .blocks
            .par_iter()
            .map(|b| {
                let m = &b.m1 * C64::from(kappa) + &b.m2 * C64::from(kappa * kappa);
                let sm = &b.sm1 * C64::from(kappa) + &b.sm2 * C64::from(kappa * kappa);
                // composite in weighted coordinates: H^(1/2) S M H^(-1/2)
                let comp = &b.inverse * &m;
                BlockNorms {
                    xi_norm: b.xi_norm,
                    inverse: sigma_max(&b.inverse),
                    m: sigma_max(&m),
                    composite: sigma_max(&comp),
                    spectral_radius: spectral_radius(&sm),
                }
            })
            .collect();
        let max = |f: fn(&BlockNorms) -> f64| blocks.iter().map(f).fold(0.0, f64::max);
        OperatorNorms {
            kappa,
            inverse_norm: max(|b| b.inverse),
            m_norm: max(|b| b.m),
            composite_norm: max(|b| b.composite),
            spectral_radius: max(|b| b.spectral_radius),
            blocks,
        }
    }

    pub fn inverse_norm(&self) -> f64 {
        self.blocks.iter().map(|b| sigma_max(&b.inverse)).fold(0.0, f64::max)
    }
}

fn build_block(sys: &LinearSystem, l: usize, s: f64) -> Result<Block> {
    let lat = sys.lattice();
    let grid = sys.grid();
    let n = sys.n();
    let nodes = sys.nodes();
    let (nx, ny) = block_sizes(n, nodes);
    let is_zero = l == lat.zero_index();
    let xi = lat.xi(l);
    let cell = lat.weight(l);

    let state_idx: Vec<usize> = (0..nx)
        .filter(|&i| !(i < n * nodes && i % nodes == 0))
        .filter(|&i| !(is_zero && i == nx - 1))
        .collect();
    let hx = state_weights(xi, cell, s, n, grid);
    let hx_sqrt: Vec<f64> = state_idx.iter().map(|&i| hx[i].sqrt()).collect();

    // data Gram matrix with the H^-1 term of h - int g
    let wy = data_weights(xi, cell, s, n, grid);
    let h_at = (n + 1) * nodes;
    let mut gap = vec![ZERO; ny];
    gap[h_at] = C64::from(1.0);
    for (j, w) in grid.weights().iter().enumerate() {
        gap[n * nodes + j] = C64::from(-w);
    }
    let hd = hdot_factor(lat, l);
    let mut gy = DMatrix::<C64>::from_fn(ny, ny, |i, j| gap[i] * gap[j].conj() * hd);
    for i in 0..ny {
        gy[(i, i)] += wy[i];
    }

    // embedding of the data parameters: at the origin h = int g
    let t = if is_zero {
        DMatrix::<C64>::from_fn(ny, ny - 1, |i, j| {
            let jj = if j >= h_at { j + 1 } else { j };
            if i == jj {
                C64::from(1.0)
            } else if i == h_at && (n * nodes..(n + 1) * nodes).contains(&j) {
                C64::from(grid.weights()[j - n * nodes])
            } else {
                ZERO
            }
        })
    } else {
        DMatrix::<C64>::identity(ny, ny)
    };
    let ly_full = cholesky_lower(gy.clone())?;
    let ly_sub = cholesky_lower(t.adjoint() * &gy * &t)?;

    // S on full data, rows restricted to the state basis
    let mut s_full = DMatrix::<C64>::zeros(state_idx.len(), ny);
    let mut e = vec![ZERO; ny];
    for j in 0..ny {
        e[j] = C64::from(1.0);
        let x = sys.inverse_block(l, &e);
        for (r, &i) in state_idx.iter().enumerate() {
            s_full[(r, j)] = x[i];
        }
        e[j] = ZERO;
    }
    // H^(1/2) S T L^(-H): solve L Z = (H^(1/2) S T)^H, inverse = Z^H
    let mut hst = &s_full * &t;
    for (r, w) in hx_sqrt.iter().enumerate() {
        hst.row_mut(r).scale_mut(*w);
    }
    let z = ly_sub
        .solve_lower_triangular(&hst.adjoint())
        .ok_or_else(|| Error::Config("singular data Gram factor".into()))?;
    let inverse = z.adjoint();

    let mut m1 = DMatrix::<C64>::zeros(ny, state_idx.len());
    let mut m2 = DMatrix::<C64>::zeros(ny, state_idx.len());
    let mut v = vec![ZERO; nx];
    for (c, &i) in state_idx.iter().enumerate() {
        v[i] = C64::from(1.0);
        let (y1, y2) = sys.m_parts_block(l, &v);
        for r in 0..ny {
            m1[(r, c)] = y1[r];
            m2[(r, c)] = y2[r];
        }
        v[i] = ZERO;
    }
    let sm1 = &s_full * &m1;
    let sm2 = &s_full * &m2;
    let weigh = |m: &DMatrix<C64>| {
        let mut out = ly_full.adjoint() * m;
        for (c, w) in hx_sqrt.iter().enumerate() {
            out.column_mut(c).scale_mut(1.0 / w);
        }
        out
    };
    // the composite uses inverse (which ends in L_sub^-H) times L_sub^H-weighted M,
    // so M must be expressed in the same data parameters; at the origin the image
    // of M lies in the compatible subspace and its h entry is dropped
    let (wm1, wm2) = if is_zero {
        let drop = |m: &DMatrix<C64>| {
            let keep: Vec<usize> = (0..ny).filter(|&i| i != h_at).collect();
            let sub = m.select_rows(keep.iter());
            let mut out = ly_sub.adjoint() * sub;
            for (c, w) in hx_sqrt.iter().enumerate() {
                out.column_mut(c).scale_mut(1.0 / w);
            }
            out
        };
        (drop(&m1), drop(&m2))
    } else {
        (weigh(&m1), weigh(&m2))
    };
    Ok(Block {
        xi_norm: lat.xi_norm(l),
        inverse,
        m1: wm1,
        m2: wm2,
        sm1,
        sm2,
    })
}

/// One point of a `kappa` sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KappaSample {
    pub kappa: f64,
    pub m_norm: f64,
    pub budget: f64,
    pub composite_norm: f64,
    pub spectral_radius: f64,
}

/// Fitted constant of `||M_kappa|| <= C B(gamma, b, kappa)` and the
/// resulting admissible range `|kappa| < kappa0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaBudget {
    pub gamma: f64,
    pub depth: f64,
    pub s: f64,
    pub c: f64,
    pub inverse_norm: f64,
    pub kappa0: f64,
    pub samples: Vec<KappaSample>,
}

impl KappaBudget {
    pub fn budget(&self, kappa: f64) -> f64 {
        budget(self.gamma, self.depth, kappa)
    }

    /// Largest `||M_kappa|| / (C B)` over the samples.
    pub fn worst_ratio(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.budget > 0.0)
            .map(|s| s.m_norm / (self.c * s.budget))
            .fold(0.0, f64::max)
    }
}

/// Measures `||M_kappa||` over a sweep and fits `C` as the largest ratio to
/// `B` over the `calibration` subset of `kappas` (all of them if empty).
pub fn kappa_budget(ops: &BlockOperators, sys: &LinearSystem, kappas: &[f64], calibration: &[f64]) -> KappaBudget {
    let gamma = sys.spec().gamma;
    let b = sys.spec().depth;
    let samples: Vec<KappaSample> = kappas
        .iter()
        .map(|&k| {
            let nrm = ops.norms(k);
            KappaSample {
                kappa: k,
                m_norm: nrm.m_norm,
                budget: budget(gamma, b, k),
                composite_norm: nrm.composite_norm,
                spectral_radius: nrm.spectral_radius,
            }
        })
        .collect();
    let cal: Vec<&KappaSample> = if calibration.is_empty() {
        samples.iter().collect()
    } else {
        samples.iter().filter(|s| calibration.contains(&s.kappa)).collect()
    };
    let c = cal
        .iter()
        .filter(|s| s.budget > 0.0)
        .map(|s| s.m_norm / s.budget)
        .fold(0.0, f64::max);
    let inverse_norm = ops.inverse_norm();
    KappaBudget {
        gamma,
        depth: b,
        s: ops.s(),
        c,
        inverse_norm,
        kappa0: if c > 0.0 {
            kappa0_from_budget(c, inverse_norm, gamma, b)
        } else {
            f64::INFINITY
        },
        samples,
    }
}

/// Power iteration of `L_0^-1 M_kappa` from a random state: the growth
/// factor per step after `iters` steps, in the `X^s` norm.
pub fn power_probe(sys: &LinearSystem, kappa: f64, s: f64, iters: usize, rng: &mut impl Rng) -> Result<f64> {
    let lat = sys.lattice();
    let grid = sys.grid();
    let mut x = super::data::random_state(rng, lat, grid, sys.n(), usize::MAX, 3);
    let mut ratio = 0.0;
    for _ in 0..iters {
        let before = xs_state_norm(&x, lat, grid, s);
        if before == 0.0 {
            return Ok(0.0);
        }
        x = sys.apply_inverse(&sys.apply_m_kappa(&x, kappa)?);
        let after = xs_state_norm(&x, lat, grid, s);
        ratio = after / before;
        x = x.scaled(1.0 / after.max(f64::MIN_POSITIVE));
    }
    Ok(ratio)
}

/// Controls of the Neumann iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NeumannOptions {
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        NeumannOptions {
            s: 0.0,
            tol: 1e-11,
            max_iter: 200,
        }
    }
}

/// Result of [`solve_l_kappa`].
#[derive(Debug, Clone)]
pub struct NeumannReport {
    pub solution: SolutionTriple,
    pub iterations: usize,
    /// Relative update sizes per iteration.
    pub updates: Vec<f64>,
    /// Geometric-mean ratio of successive updates over the tail of the run.
    pub observed_contraction: f64,
    /// Spectral radius of `L_0^-1 M_kappa` checked before iterating.
    pub spectral_radius: f64,
    /// `||L_kappa x - data||_Y / ||data||_Y`.
    pub residual: f64,
}

/// Solves `L_{kappa,sigma} x = data` by `x_{j+1} = L_0^-1 (data - M_kappa x_j)`.
pub fn solve_l_kappa(
    sys: &LinearSystem,
    ops: Option<&BlockOperators>,
    data: &DataTuple,
    kappa: f64,
    opts: &NeumannOptions,
) -> Result<NeumannReport> {
    sys.check_admissible(data)?;
    let lat = sys.lattice();
    let grid = sys.grid();
    let radius = if kappa == 0.0 {
        0.0
    } else {
        match ops {
            Some(o) => o.norms(kappa).spectral_radius,
            None => BlockOperators::new(sys, opts.s)?.norms(kappa).spectral_radius,
        }
    };
    if !(radius < 1.0) {
        return Err(Error::NonContraction(format!(
            "spectral radius of L0^-1 M_kappa is {radius:.4} at kappa = {kappa}; reduce |kappa|"
        )));
    }
    let mut x = sys.apply_inverse(data);
    let mut updates = Vec::new();
    let mut iterations = 0;
    if kappa != 0.0 {
        for it in 1..=opts.max_iter {
            let next = sys.apply_inverse(&data.sub(&sys.apply_m_kappa(&x, kappa)?));
            let du = xs_state_norm(&next.sub(&x), lat, grid, opts.s);
            let nx = xs_state_norm(&next, lat, grid, opts.s).max(f64::MIN_POSITIVE);
            x = next;
            iterations = it;
            updates.push(du / nx);
            if du <= opts.tol * nx {
                break;
            }
        }
    }
    let tail: Vec<f64> = updates.iter().copied().filter(|u| *u > 1e3 * opts.tol).collect();
    let observed_contraction = if tail.len() >= 2 {
        let k = tail.len().min(8);
        let w = &tail[tail.len() - k..];
        (w[k - 1] / w[0]).powf(1.0 / (k - 1) as f64)
    } else {
        0.0
    };
    let forward = sys.apply_l_kappa(&x, kappa)?;
    let dn = super::data::ys_data_norm(data, lat, grid, opts.s);
    let residual = if dn > 0.0 {
        super::data::ys_data_norm(&forward.sub(data), lat, grid, opts.s) / dn
    } else {
        super::data::ys_data_norm(&forward, lat, grid, opts.s)
    };
    Ok(NeumannReport {
        solution: x,
        iterations,
        updates,
        observed_contraction,
        spectral_radius: radius,
        residual,
    })
}

/// `L_kappa^-1 data` by the Neumann series without admissibility checks;
/// rows the collocation ignores are dropped by the block inverses.
pub fn neumann_inverse(
    sys: &LinearSystem,
    data: &DataTuple,
    kappa: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolutionTriple> {
    let mut x = sys.apply_inverse(data);
    if kappa == 0.0 {
        return Ok(x);
    }
    let mut first = f64::NAN;
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        let next = sys.apply_inverse(&data.sub(&sys.apply_m_kappa(&x, kappa)?));
        let du = next.sub(&x).max_abs();
        let nx = next.max_abs().max(f64::MIN_POSITIVE);
        x = next;
        if first.is_nan() {
            first = du;
        }
        if !du.is_finite() || du > 1e6 * first.max(f64::MIN_POSITIVE) {
            return Err(Error::NonContraction(format!(
                "Neumann series for L_kappa diverges at kappa = {kappa}"
            )));
        }
        // stagnation at roundoff level also ends the series
        if du <= tol * nx || (du >= prev && du <= 1e-10 * nx) {
            return Ok(x);
        }
        prev = du;
    }
    Err(Error::NonContraction(format!(
        "Neumann series for L_kappa did not reach {tol:.1e} in {max_iter} steps at kappa = {kappa}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, Factor, Lattice, VerticalGrid};
    use crate::linear::data::random_state;
    use crate::symbols::SymbolOptions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn system(b: f64) -> LinearSystem {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 16)], b, 0.0, 1.0, 1.0).unwrap();
        let lattice = Lattice::from_factors(&spec.factors, &[4]).unwrap();
        let grid = VerticalGrid::new(b, 24);
        LinearSystem::new(&spec, &lattice, &grid, &SymbolOptions::default()).unwrap()
    }

    #[test]
    fn budget_branches() {
        let b2 = budget(1.0, 2.0, 0.1);
        let expect = 2f64.powf(3.5) * 0.01 + (2f64.powf(1.5) + 4.0) * 0.1;
        assert!((b2 - expect).abs() < 1e-15);
        let b05 = budget(1.0, 0.5, 0.1);
        let expect = 0.5f64.sqrt() * 0.01 + (0.5f64.sqrt() + 1.0) * 0.1;
        assert!((b05 - expect).abs() < 1e-15);
        assert_eq!(budget(3.0, 1.5, 0.0), 0.0);
        let k0 = kappa0_from_budget(2.0, 3.0, 1.0, 2.0);
        assert!((2.0 * budget(1.0, 2.0, k0) * 3.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_norms_match_field_ratios() {
        let sys = system(1.0);
        let ops = BlockOperators::new(&sys, 0.0).unwrap();
        let nrm = ops.norms(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (lat, grid) = (sys.lattice(), sys.grid());
        for _ in 0..5 {
            let x = random_state(&mut rng, lat, grid, 2, 10, 4);
            let y = sys.apply_m_kappa(&x, 0.05).unwrap();
            let r = crate::linear::data::ys_data_norm(&y, lat, grid, 0.0) / xs_state_norm(&x, lat, grid, 0.0);
            assert!(r <= nrm.m_norm * (1.0 + 1e-10), "{r} {}", nrm.m_norm);
            let z = sys.apply_inverse(&y);
            let r = xs_state_norm(&z, lat, grid, 0.0) / xs_state_norm(&x, lat, grid, 0.0);
            assert!(r <= nrm.composite_norm * (1.0 + 1e-10));
        }
        assert!(nrm.spectral_radius <= nrm.composite_norm * (1.0 + 1e-12));
        assert!(nrm.composite_norm <= nrm.inverse_norm * nrm.m_norm * (1.0 + 1e-12));
    }

    #[test]
    fn neumann_matches_direct_solution() {
        let sys = system(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (lat, grid) = (sys.lattice(), sys.grid());
        let x = random_state(&mut rng, lat, grid, 2, 4, 4);
        let kappa = 1e-3;
        let d = sys.apply_l_kappa(&x, kappa).unwrap();
        let rep = solve_l_kappa(&sys, None, &d, kappa, &NeumannOptions::default()).unwrap();
        assert!(rep.iterations <= 30);
        assert!(rep.residual < 1e-8, "{}", rep.residual);
        let err = xs_state_norm(&rep.solution.sub(&x), lat, grid, 0.0) / xs_state_norm(&x, lat, grid, 0.0);
        assert!(err < 1e-8, "{err}");
        let d0 = sys.apply_upsilon(&x).unwrap();
        let r0 = solve_l_kappa(&sys, None, &d0, 0.0, &NeumannOptions::default()).unwrap();
        assert_eq!(r0.solution, sys.solve_upsilon(&d0).unwrap());
    }
}
