use super::residual::NonlinearSystem;
use crate::error::{Error, Result};
use crate::linear::{data_weights, neumann_inverse, xs_state_norm, ys_rows_norm, DataTuple, SolutionTriple};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Iteration used by [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Picard,
    Newton,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Method::Picard),
            "newton" => Ok(Method::Newton),
            other => Err(Error::Config(format!(
                "method: unknown solver '{other}' (picard|newton)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    /// Target for the `Y^s` norm of the masked residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Sobolev index of the residual and state norms.
    pub s: f64,
    /// Largest admissible `max |eta|` of the first correction, as a fraction of `b`.
    pub gate: f64,
    /// Krylov dimension per Newton step.
    pub krylov: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Picard,
            tol: 1e-9,
            max_iter: 60,
            s: 0.0,
            gate: 0.25,
            krylov: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// Residual norm at the start of every iteration, last entry final.
    pub history: Vec<f64>,
    pub final_residual: f64,
    /// Filled by the Eulerian check when requested.
    pub final_unflattened_residual: Option<f64>,
    pub converged: bool,
    /// `|h^(0)|` of the unmasked kinematic row at the final state.
    pub kinematic_mean: f64,
    /// `max |eta| / b` after the first correction.
    pub first_step_ratio: f64,
    pub state_norm: f64,
    /// Newton only: whether the run finished with Picard steps.
    pub fallback: bool,
    pub warnings: Vec<String>,
}

const NEUMANN_TOL: f64 = 1e-14;
const NEUMANN_ITERS: usize = 400;

fn surface_sup(sys: &NonlinearSystem, x: &SolutionTriple) -> f64 {
    sys.nodal()
        .surface_to_nodal(x.eta.comp(0))
        .iter()
        .map(|v| v.re.abs())
        .fold(0.0, f64::max)
}

fn residual_norm(sys: &NonlinearSystem, r: &DataTuple, s: f64) -> f64 {
    ys_rows_norm(r, sys.lattice(), sys.grid(), s)
}

fn precondition(sys: &NonlinearSystem, r: &DataTuple) -> Result<SolutionTriple> {
    let mut x = neumann_inverse(sys.linear(), r, sys.kappa(), NEUMANN_TOL, NEUMANN_ITERS)?;
    x.symmetrize(sys.lattice());
    Ok(x)
}

struct Run {
    report: SolveReport,
    grow_streak: usize,
}

impl Run {
    fn new(method: Method) -> Self {
        Run {
            report: SolveReport {
                method,
                iterations: 0,
                history: Vec::new(),
                final_residual: f64::NAN,
                final_unflattened_residual: None,
                converged: false,
                kinematic_mean: f64::NAN,
                first_step_ratio: 0.0,
                state_norm: 0.0,
                fallback: false,
                warnings: Vec::new(),
            },
            grow_streak: 0,
        }
    }

    /// Records a residual; errors after three consecutive increases.
    fn record(&mut self, rn: f64) -> Result<()> {
        if !rn.is_finite() {
            return Err(Error::NonContraction(format!(
                "residual became {rn} after {} steps",
                self.report.iterations
            )));
        }
        if let Some(&prev) = self.report.history.last() {
            if rn > prev {
                self.grow_streak += 1;
            } else {
                self.grow_streak = 0;
            }
        }
        self.report.history.push(rn);
        if self.grow_streak >= 3 {
            return Err(Error::NonContraction(format!(
                "residual grew three consecutive times; history {:?}",
                self.report.history
            )));
        }
        Ok(())
    }

    fn gate(&mut self, sys: &NonlinearSystem, dx: &SolutionTriple, opts: &SolveOptions) -> Result<()> {
        if self.report.iterations == 1 {
            let b = sys.instance().spec.depth;
            let ratio = surface_sup(sys, dx) / b;
            self.report.first_step_ratio = ratio;
            if ratio > opts.gate {
                return Err(Error::Amplitude(format!(
                    "first correction has max |eta| = {:.4e} b, above the gate {} b; reduce the forcing",
                    ratio, opts.gate
                )));
            }
        }
        Ok(())
    }
}

/// Solves `Xi(x) = 0` from `x = 0` with the method in `opts`.
pub fn solve(sys: &NonlinearSystem, opts: &SolveOptions) -> Result<(SolutionTriple, SolveReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {}", opts.tol)));
    }
    match opts.method {
        Method::Picard => picard_solve(sys, opts),
        Method::Newton => newton_solve(sys, opts),
    }
}

/// Frozen-Jacobian iteration `x <- x - L_kappa^-1 Xi(x)`.
pub fn picard_solve(sys: &NonlinearSystem, opts: &SolveOptions) -> Result<(SolutionTriple, SolveReport)> {
    let mut run = Run::new(Method::Picard);
    let x = sys.linear().zero_state();
    let x = picard_loop(sys, opts, x, &mut run)?;
    Ok(finish(sys, x, run, opts))
}

fn picard_loop(
    sys: &NonlinearSystem,
    opts: &SolveOptions,
    mut x: SolutionTriple,
    run: &mut Run,
) -> Result<SolutionTriple> {
    while run.report.iterations < opts.max_iter {
        run.report.iterations += 1;
        let r = sys.masked_residual(&x)?;
        let rn = residual_norm(sys, &r, opts.s);
        run.record(rn)?;
        if rn <= opts.tol {
            run.report.converged = true;
            return Ok(x);
        }
        let dx = precondition(sys, &r)?;
        run.gate(sys, &dx, opts)?;
        x = x.sub(&dx);
    }
    Ok(x)
}

fn finish(
    sys: &NonlinearSystem,
    x: SolutionTriple,
    mut run: Run,
    opts: &SolveOptions,
) -> (SolutionTriple, SolveReport) {
    let full = sys.residual(&x);
    let (rn, mean) = match &full {
        Ok(r) => {
            let mut m = r.clone();
            super::residual::mask_rows(&mut m, sys.lattice());
            (
                residual_norm(sys, &m, opts.s),
                r.h.get(0, sys.lattice().zero_index()).norm(),
            )
        }
        Err(_) => (f64::NAN, f64::NAN),
    };
    run.report.final_residual = rn;
    run.report.kinematic_mean = mean;
    run.report.state_norm = xs_state_norm(&x, sys.lattice(), sys.grid(), opts.s);
    if !run.report.converged {
        run.report
            .warnings
            .push(format!("not converged after {} iterations", run.report.iterations));
    }
    (x, run.report)
}

/// Real-linear vector space of conjugate-symmetric data tuples, flattened per frequency.
struct Krylov<'a> {
    sys: &'a NonlinearSystem,
    weights: Vec<f64>,
}

impl<'a> Krylov<'a> {
    fn new(sys: &'a NonlinearSystem, s: f64) -> Self {
        let lat = sys.lattice();
        let n = sys.instance().n();
        let weights = (0..lat.len())
            .flat_map(|l| data_weights(lat.xi(l), lat.weight(l), s, n, sys.grid()))
            .collect();
        Krylov { sys, weights }
    }

    fn pack(&self, d: &DataTuple) -> Vec<C64> {
        (0..d.nlat()).flat_map(|l| d.gather(l)).collect()
    }

    fn unpack(&self, v: &[C64]) -> DataTuple {
        let mut d = self.sys.linear().zero_data();
        let len = v.len() / d.nlat();
        for l in 0..d.nlat() {
            d.scatter(l, &v[l * len..(l + 1) * len]);
        }
        d
    }

    fn dot(&self, a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| w * (x.conj() * y).re)
            .sum()
    }

    fn norm(&self, a: &[C64]) -> f64 {
        self.dot(a, a).sqrt()
    }
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

/// `(Xi(x + e v) - Xi(x - e v)) / 2e` on the masked rows.
fn jacobian_action(sys: &NonlinearSystem, x: &SolutionTriple, v: &SolutionTriple) -> Result<DataTuple> {
    let vmax = v.max_abs();
    if vmax == 0.0 {
        return Ok(sys.linear().zero_data());
    }
    let eps = 1e-6 * (1.0 + x.max_abs()) / vmax;
    let plus = sys.masked_residual(&x.add(&v.scaled(eps)))?;
    let minus = sys.masked_residual(&x.sub(&v.scaled(eps)))?;
    Ok(plus.sub(&minus).scaled(0.5 / eps))
}

/// Right-preconditioned GMRES for `J(x) P y = rhs` with `P = L_kappa^-1`.
/// Returns `P y` and the relative residual reached.
fn gmres(
    sys: &NonlinearSystem,
    kr: &Krylov,
    x: &SolutionTriple,
    rhs: &DataTuple,
    rtol: f64,
    maxdim: usize,
) -> Result<(SolutionTriple, f64)> {
    let b = kr.pack(rhs);
    let beta = kr.norm(&b);
    if beta == 0.0 {
        return Ok((sys.linear().zero_state(), 0.0));
    }
    let mut basis: Vec<Vec<C64>> = vec![b.iter().map(|v| v / beta).collect()];
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut rel = 1.0;
    for k in 0..maxdim {
        let z = precondition(sys, &kr.unpack(&basis[k]))?;
        let mut w = kr.pack(&jacobian_action(sys, x, &z)?);
        let mut col = vec![0.0; k + 2];
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = kr.dot(q, &w);
                col[i] += c;
                axpy(&mut w, -c, q);
            }
        }
        let wn = kr.norm(&w);
        col[k + 1] = wn;
        for (i, &(c, s)) in cs.iter().enumerate() {
            let (a, bb) = (col[i], col[i + 1]);
            col[i] = c * a + s * bb;
            col[i + 1] = -s * a + c * bb;
        }
        let (a, bb) = (col[k], col[k + 1]);
        let r = a.hypot(bb);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, bb / r) };
        col[k] = r;
        col[k + 1] = 0.0;
        cs.push((c, s));
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        h.push(col);
        rel = g[k + 1].abs() / beta;
        if rel <= rtol || wn <= 1e-14 * beta {
            break;
        }
        basis.push(w.iter().map(|v| v / wn).collect());
    }
    let m = h.len();
    let mut yv = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for j in i + 1..m {
            acc -= h[j][i] * yv[j];
        }
        yv[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
    }
    let mut comb = vec![C64::new(0.0, 0.0); b.len()];
    for (j, q) in basis.iter().take(m).enumerate() {
        axpy(&mut comb, yv[j], q);
    }
    Ok((precondition(sys, &kr.unpack(&comb))?, rel))
}

/// Newton iteration with finite-difference Jacobian actions and GMRES
/// preconditioned by `L_kappa^-1`; stagnation hands over to Picard.
pub fn newton_solve(sys: &NonlinearSystem, opts: &SolveOptions) -> Result<(SolutionTriple, SolveReport)> {
    let mut run = Run::new(Method::Newton);
    let kr = Krylov::new(sys, opts.s);
    let mut x = sys.linear().zero_state();
    while run.report.iterations < opts.max_iter {
        run.report.iterations += 1;
        let r = sys.masked_residual(&x)?;
        let rn = residual_norm(sys, &r, opts.s);
        run.record(rn)?;
        if rn <= opts.tol {
            run.report.converged = true;
            return Ok(finish(sys, x, run, opts));
        }
        let rtol = (0.1 * rn).clamp(1e-12, 1e-3);
        let (dx, rel) = gmres(sys, &kr, &x, &r, rtol, opts.krylov)?;
        run.gate(sys, &dx, opts)?;
        if rel > 0.5 {
            run.report.fallback = true;
            run.report.warnings.push(format!(
                "Krylov stagnation (relative residual {rel:.2e}); continuing with Picard"
            ));
            let x = picard_loop(sys, opts, x, &mut run)?;
            return Ok(finish(sys, x, run, opts));
        }
        x = x.sub(&dx);
    }
    Ok(finish(sys, x, run, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_lattice, DomainSpec, Factor, SurfaceField};
    use crate::nonlinear::ProblemInstance;

    fn spec() -> DomainSpec {
        DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, 0.1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_forcing_is_one_iteration() {
        let sys = NonlinearSystem::new(ProblemInstance::new(spec()).unwrap(), &[4], 48).unwrap();
        for method in [Method::Picard, Method::Newton] {
            let opts = SolveOptions {
                method,
                ..Default::default()
            };
            let (x, rep) = solve(&sys, &opts).unwrap();
            assert_eq!(rep.iterations, 1);
            assert!(rep.converged);
            assert_eq!(x.max_abs(), 0.0);
        }
    }

    fn forced(a: f64) -> NonlinearSystem {
        let s = spec();
        let lat = build_lattice(&s, &[4]).unwrap();
        let mut lf = SurfaceField::zeros(lat.len(), 2);
        let p = lat.index_of(&[1]).unwrap();
        lf.set(0, p, C64::new(a, 0.5 * a));
        lf.set(0, lat.neg(p), C64::new(a, -0.5 * a));
        lf.set(1, p, C64::new(0.0, a));
        lf.set(1, lat.neg(p), C64::new(0.0, -a));
        let inst = ProblemInstance::new(s).unwrap().with_layer_force(lf).unwrap();
        NonlinearSystem::new(inst, &[4], 48).unwrap()
    }

    #[test]
    fn picard_and_newton_agree() {
        let sys = forced(0.05);
        let (xp, rp) = picard_solve(
            &sys,
            &SolveOptions {
                tol: 1e-11,
                ..Default::default()
            },
        )
        .unwrap();
        let (xn, rn) = newton_solve(
            &sys,
            &SolveOptions {
                tol: 1e-11,
                method: Method::Newton,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rp.converged && rn.converged, "{rp:?} {rn:?}");
        assert!(rn.iterations <= rp.iterations);
        let d = xs_state_norm(&xp.sub(&xn), sys.lattice(), sys.grid(), 0.0);
        assert!(d < 1e-9 * rp.state_norm.max(1.0), "{d}");
        assert!(rp.kinematic_mean < 1e-12, "{}", rp.kinematic_mean);
        assert!(rp.history.windows(2).skip(1).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn large_forcing_trips_the_gate() {
        let sys = forced(40.0);
        let err = picard_solve(&sys, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Amplitude(_) | Error::NonContraction(_)), "{err}");
    }
}
