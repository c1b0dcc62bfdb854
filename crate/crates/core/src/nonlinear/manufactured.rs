use super::eulerian::{dynamic_lhs, momentum_lhs, PointState};
use super::instance::ProblemInstance;
use crate::domain::{DomainSpec, HorizontalFft, Lattice, SurfaceField, VerticalGrid, VolumeField};
use crate::error::{Error, Result};
use crate::geometry::{jet_space, Jet, NodalGrid, PointFn};
use crate::linear::SolutionTriple;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Shape of the manufactured free surface along `x_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceProfile {
    /// `cos(t) + sin(2t) / 2`.
    Band,
    /// `(1 - r^2) / (1 - 2 r cos(t) + r^2) - 1`, with Fourier modes decaying like `r^k`.
    Poisson { r: f64 },
}

/// Smooth exact solution of the Eulerian system for suitably chosen forces.
///
/// The velocity comes from stream functions
/// `psi_1 = (y_n / (b + eta))^2 Phi(eta) + y_n^2 (y_n - b - eta) phi_1` with
/// `Phi(eta) = gamma eta - kappa ((b + eta)^3 - b^3) / 3`, and for `n = 3`
/// `psi_2 = y_n^2 (y_n - b - eta) phi_2`:
/// `v_i = d_n psi_i` for `i < n`, `v_n = -sum_i d_i psi_i - kappa y_n^2 d_1 eta / 2`.
/// This satisfies the divergence, kinematic and bottom rows exactly; the
/// momentum and dynamic rows define the bulk force and bulk stress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub spec: DomainSpec,
    pub amplitude: f64,
    pub profile: SurfaceProfile,
}

impl Manufactured {
    pub fn new(spec: &DomainSpec, amplitude: f64, profile: SurfaceProfile) -> Result<Self> {
        if let SurfaceProfile::Poisson { r } = profile {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Config(format!("profile.r must lie in [0, 1), got {r}")));
            }
        }
        if spec.n() > 3 {
            return Err(Error::Config("manufactured solutions support n <= 3".into()));
        }
        Ok(Manufactured {
            spec: spec.clone(),
            amplitude,
            profile,
        })
    }

    fn angles(&self, y: &[Jet]) -> Vec<Jet> {
        self.spec
            .factors
            .iter()
            .zip(y)
            .map(|(f, yk)| yk.scale(2.0 * PI / f.period()))
            .collect()
    }

    fn eta_jet(&self, t: &[Jet]) -> Jet {
        let e = self.amplitude;
        let mut out = match self.profile {
            SurfaceProfile::Band => &t[0].cos() + &(t[0].scale(2.0)).sin().scale(0.5),
            SurfaceProfile::Poisson { r } => {
                let den = t[0].cos().scale(-2.0 * r).add_const(1.0 + r * r);
                den.recip().scale(1.0 - r * r).add_const(-1.0)
            }
        };
        if t.len() > 1 {
            out = &out + &t[1].cos().scale(0.5);
        }
        out.scale(e)
    }

    fn phi_jets(&self, t: &[Jet]) -> Vec<Jet> {
        let e = self.amplitude;
        let mut phi1 = t[0].sin().scale(0.6).add_const(0.4);
        if t.len() > 1 {
            phi1 = &phi1 + &t[1].cos().scale(0.3);
            let phi2 = &t[0].cos().scale(0.5) + &t[1].sin().scale(0.3);
            vec![phi1.scale(e), phi2.scale(e)]
        } else {
            vec![phi1.scale(e)]
        }
    }

    fn q_jet(&self, t: &[Jet], yn: &Jet) -> Jet {
        let e = self.amplitude;
        let mut q = &t[0].cos().scale(0.3) + &(yn * yn).scale(0.2) * &t[0].sin();
        if t.len() > 1 {
            q = &q + &t[1].cos().scale(0.2);
        }
        q.scale(e)
    }

    /// Exact `eta(y')`.
    pub fn eta(&self, yh: &[f64]) -> f64 {
        let sp = jet_space(yh.len(), 0);
        let y = Jet::variables(sp, yh);
        self.eta_jet(&self.angles(&y)).value()
    }

    /// Exact `(v, q, eta)` with derivatives at `y`.
    pub fn point_state(&self, y: &[f64]) -> PointState {
        let n = y.len();
        let d = n - 1;
        let (b, kappa, gamma) = (self.spec.depth, self.spec.kappa, self.spec.gamma);
        let sp = jet_space(n, 3);
        let yv = Jet::variables(sp, y);
        let t = self.angles(&yv[..d]);
        let eta = self.eta_jet(&t);
        let phi = self.phi_jets(&t);
        let yn = &yv[d];
        let hb = eta.add_const(b);
        let big_phi = &eta.scale(gamma) - &hb.powi(3).add_const(-b * b * b).scale(kappa / 3.0);
        let ratio = yn * &hb.recip();
        let cubic = &(yn * yn) * &(yn - &hb);
        let mut psi = vec![&(&ratio * &ratio) * &big_phi + &cubic * &phi[0]];
        if d > 1 {
            psi.push(&cubic * &phi[1]);
        }
        let mut v: Vec<Jet> = psi.iter().map(|p| p.diff(d)).collect();
        let sp2 = jet_space(n, 2);
        let yn2 = Jet::variable(sp2, d, y[d]);
        let mut vn = (&(&yn2 * &yn2) * &eta.diff(0)).scale(-0.5 * kappa);
        for (i, p) in psi.iter().enumerate() {
            vn = &vn - &p.diff(i);
        }
        v.push(vn);
        let q = self.q_jet(&t, yn).truncate(2);
        PointState::from_jets(y, &v, &q, &eta.truncate(2))
    }

    /// Point on the exact surface above `y'`.
    fn surface_point(&self, yh: &[f64]) -> Vec<f64> {
        let mut y = yh.to_vec();
        y.push(self.spec.depth + self.eta(yh));
        y
    }

    /// Symmetric `T` with `T N = r`, where `r` is the dynamic-row defect of
    /// the exact state on its surface; depends on `y'` only.
    pub fn surface_stress(&self, yh: &[f64]) -> Vec<f64> {
        let y = self.surface_point(yh);
        let st = self.point_state(&y);
        let r = dynamic_lhs(&self.spec, &st);
        let nv = st.normal();
        let n = nv.len();
        let nn: f64 = nv.iter().map(|a| a * a).sum();
        let rn: f64 = r.iter().zip(&nv).map(|(a, b)| a * b).sum();
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[i * n + j] = (r[i] * nv[j] + nv[i] * r[j]) / nn - rn * nv[i] * nv[j] / (nn * nn);
            }
        }
        t
    }

    /// Instance whose exact solution is this state.
    pub fn instance(&self) -> Result<ProblemInstance> {
        let force_src = self.clone();
        let force: Arc<PointFn> = Arc::new(move |y: &[f64]| momentum_lhs(&force_src.spec, &force_src.point_state(y)));
        let stress_src = self.clone();
        let stress: Arc<PointFn> = Arc::new(move |y: &[f64]| stress_src.surface_stress(&y[..y.len() - 1]));
        Ok(ProblemInstance::new(self.spec.clone())?
            .with_bulk_force(force)
            .with_bulk_stress(stress))
    }

    /// Spectral projection of the exact flattened state
    /// `(v o F_eta, q o F_eta, eta)` onto `lattice` and `grid`.
    pub fn exact_state(&self, lattice: &Lattice, grid: &VerticalGrid) -> Result<SolutionTriple> {
        let n = self.spec.n();
        let b = self.spec.depth;
        let dims: Vec<usize> = lattice.cutoffs().iter().map(|&k| (8 * k + 1).max(129)).collect();
        let ng = NodalGrid::with_fft(lattice, grid, HorizontalFft::new(lattice, &dims)?);
        let g = ng.hlen();
        let nlat = lattice.len();
        let nodes = ng.nodes();
        let mut u = VolumeField::zeros(nlat, nodes, n);
        let mut p = VolumeField::zeros(nlat, nodes, 1);
        let mut uvals = vec![vec![C64::new(0.0, 0.0); ng.vlen()]; n];
        let mut pvals = vec![C64::new(0.0, 0.0); ng.vlen()];
        let mut evals = vec![C64::new(0.0, 0.0); g];
        for k in 0..g {
            let xh = ng.point(k).to_vec();
            let e = self.eta(&xh);
            evals[k] = C64::new(e, 0.0);
            for j in 0..nodes {
                let mut y = xh.clone();
                y.push(ng.height(j) * (b + e) / b);
                let st = self.point_state(&y);
                for c in 0..n {
                    uvals[c][j * g + k] = C64::new(st.v[c], 0.0);
                }
                pvals[j * g + k] = C64::new(st.q, 0.0);
            }
        }
        for (c, vals) in uvals.iter().enumerate() {
            ng.volume_from_nodal(vals, &mut u, c);
        }
        ng.volume_from_nodal(&pvals, &mut p, 0);
        let eta = SurfaceField::scalar(ng.surface_from_nodal(&evals));
        let mut x = SolutionTriple { u, p, eta };
        x.symmetrize(lattice);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Factor;
    use crate::nonlinear::eulerian::{divergence_row, kinematic_row};

    fn spec(n: usize) -> DomainSpec {
        let f = vec![Factor::torus(1.0, 33); n - 1];
        DomainSpec::new(f, 1.0, 0.2, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exact_rows_vanish() {
        for n in [2, 3] {
            for profile in [SurfaceProfile::Band, SurfaceProfile::Poisson { r: 0.3 }] {
                let m = Manufactured::new(&spec(n), 0.05, profile).unwrap();
                let yh: Vec<f64> = (0..n - 1).map(|k| 0.13 + 0.3 * k as f64).collect();
                for t in [0.0, 0.4, 1.0] {
                    let mut y = yh.clone();
                    y.push(t * (1.0 + m.eta(&yh)));
                    let st = m.point_state(&y);
                    assert!(divergence_row(&m.spec, &st).abs() < 1e-14);
                    if t == 0.0 {
                        assert!(st.v.iter().all(|v| v.abs() < 1e-15));
                    }
                    if t == 1.0 {
                        assert!(
                            kinematic_row(&m.spec, &st).abs() < 1e-14,
                            "{}",
                            kinematic_row(&m.spec, &st)
                        );
                        let tm = m.surface_stress(&yh);
                        let nv = st.normal();
                        let r = dynamic_lhs(&m.spec, &st);
                        for i in 0..n {
                            let tn: f64 = (0..n).map(|j| tm[i * n + j] * nv[j]).sum();
                            assert!((tn - r[i]).abs() < 1e-14);
                            for j in 0..n {
                                assert_eq!(tm[i * n + j], tm[j * n + i]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn velocity_matches_stream_function_differences() {
        let m = Manufactured::new(&spec(2), 0.05, SurfaceProfile::Band).unwrap();
        let y = [0.37, 0.6];
        let st = m.point_state(&y);
        let h = 1e-5;
        let v = |a: f64, b: f64| m.point_state(&[a, b]).v[0];
        let d = (v(y[0] + h, y[1]) - v(y[0] - h, y[1])) / (2.0 * h);
        assert!((st.dv[0][0] - d).abs() < 1e-8);
    }
}
