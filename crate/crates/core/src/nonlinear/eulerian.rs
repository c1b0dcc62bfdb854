use super::instance::ProblemInstance;
use super::residual::NonlinearSystem;
use crate::domain::{DomainSpec, HorizontalFft, Lattice, VerticalGrid, VolumeField};
use crate::error::Result;
use crate::geometry::{jet_space, Jet, JetSpace, NodalGrid, SurfaceInterpolant};
use crate::linear::SolutionTriple;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Point evaluation of a volume field and its Taylor jets, by Fourier
/// synthesis in `x'` and barycentric interpolation of vertical derivatives.
#[derive(Debug, Clone)]
pub struct VolumeInterpolant {
    lattice: Lattice,
    grid: VerticalGrid,
    ncomp: usize,
    /// `deriv[k][c * nlat + l]` is the profile of `d_n^k` of component `c`.
    deriv: Vec<Vec<Vec<C64>>>,
    scale: f64,
}

impl VolumeInterpolant {
    pub fn new(lattice: &Lattice, grid: &VerticalGrid, field: &VolumeField, order: usize) -> Self {
        let mut deriv: Vec<Vec<Vec<C64>>> = Vec::with_capacity(order + 1);
        let base: Vec<Vec<C64>> = (0..field.ncomp)
            .flat_map(|c| (0..field.nlat).map(move |l| (c, l)))
            .map(|(c, l)| field.profile(c, l).to_vec())
            .collect();
        deriv.push(base);
        for k in 1..=order {
            let next = deriv[k - 1].iter().map(|p| grid.differentiate(p)).collect();
            deriv.push(next);
        }
        VolumeInterpolant {
            lattice: lattice.clone(),
            grid: grid.clone(),
            ncomp: field.ncomp,
            deriv,
            scale: lattice.synthesis_scale(),
        }
    }

    pub fn order(&self) -> usize {
        self.deriv.len() - 1
    }

    pub fn value(&self, c: usize, x: &[f64]) -> f64 {
        self.jet(c, x, jet_space(x.len(), 0)).value()
    }

    /// Taylor jet of component `c` at the flattened point `x = (x', x_n)`.
    pub fn jet(&self, c: usize, x: &[f64], sp: &'static JetSpace) -> Jet {
        assert!(sp.order() <= self.order() && sp.nvars() == x.len());
        let d = self.lattice.dim();
        let z = x[d];
        let w = self.grid.interpolation_weights(z);
        let nlat = self.lattice.len();
        let mut out = vec![0.0; sp.len()];
        let monos: Vec<Vec<u8>> = (0..sp.len()).map(|i| sp.exponents(i).to_vec()).collect();
        for l in 0..nlat {
            let xi = self.lattice.xi(l);
            let th: f64 = 2.0 * PI * xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let phase = C64::from_polar(1.0, th);
            let vert: Vec<C64> = (0..=sp.order())
                .map(|k| {
                    let p = &self.deriv[k][c * nlat + l];
                    p.iter().zip(&w).map(|(a, b)| a * b).sum::<C64>() / factorial(k)
                })
                .collect();
            for (i, e) in monos.iter().enumerate() {
                let deg: u32 = e[..d].iter().map(|&a| a as u32).sum();
                let mut t = C64::new(0.0, 1.0).powu(deg) * phase * vert[e[d] as usize];
                for m in 0..d {
                    t *= (2.0 * PI * xi[m]).powi(e[m] as i32) / factorial(e[m] as usize);
                }
                out[i] += t.re;
            }
        }
        for v in &mut out {
            *v *= self.scale;
        }
        Jet::from_coeffs(sp, out)
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Values and derivatives of an Eulerian state `(v, q, eta)` at one point `y`.
#[derive(Debug, Clone)]
pub struct PointState {
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    /// `dv[i][j] = d_j v_i`.
    pub dv: Vec<Vec<f64>>,
    /// `d2v[i][j][k] = d_j d_k v_i`.
    pub d2v: Vec<Vec<Vec<f64>>>,
    pub q: f64,
    pub dq: Vec<f64>,
    pub eta: f64,
    /// Horizontal derivatives of `eta`.
    pub deta: Vec<f64>,
    pub d2eta: Vec<Vec<f64>>,
}

impl PointState {
    /// Reads values from jets of order at least two in the variables `y`.
    pub fn from_jets(y: &[f64], v: &[Jet], q: &Jet, eta: &Jet) -> Self {
        let n = y.len();
        let d = n - 1;
        PointState {
            y: y.to_vec(),
            v: v.iter().map(Jet::value).collect(),
            dv: v.iter().map(|vi| (0..n).map(|j| vi.d1(j)).collect()).collect(),
            d2v: v
                .iter()
                .map(|vi| (0..n).map(|j| (0..n).map(|k| vi.d2(j, k)).collect()).collect())
                .collect(),
            q: q.value(),
            dq: (0..n).map(|j| q.d1(j)).collect(),
            eta: eta.value(),
            deta: (0..d).map(|j| eta.d1(j)).collect(),
            d2eta: (0..d).map(|j| (0..d).map(|k| eta.d2(j, k)).collect()).collect(),
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    /// Upward normal `(-grad' eta, 1)`.
    pub fn normal(&self) -> Vec<f64> {
        let mut nv: Vec<f64> = self.deta.iter().map(|g| -g).collect();
        nv.push(1.0);
        nv
    }

    /// `div'(grad' eta / sqrt(1 + |grad' eta|^2))`.
    pub fn mean_curvature(&self) -> f64 {
        let q = 1.0 + self.deta.iter().map(|g| g * g).sum::<f64>();
        let d = self.deta.len();
        let lap: f64 = (0..d).map(|i| self.d2eta[i][i]).sum();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += self.deta[i] * self.deta[j] * self.d2eta[i][j];
            }
        }
        lap / q.sqrt() - quad / q.powf(1.5)
    }

    /// `S(q, v) = q I - (grad v + grad v^T)`.
    pub fn stress(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { self.q } else { 0.0 } - self.dv[i][j] - self.dv[j][i])
                    .collect()
            })
            .collect()
    }
}

/// Left side of the Eulerian momentum equation without the forces.
pub fn momentum_lhs(spec: &DomainSpec, st: &PointState) -> Vec<f64> {
    let n = st.n();
    let d = n - 1;
    let (b, kappa, gamma) = (spec.depth, spec.kappa, spec.gamma);
    let yn = st.y[d];
    let ddiv: Vec<f64> = (0..n).map(|i| (0..n).map(|j| st.d2v[j][j][i]).sum()).collect();
    // W = kappa (b y_n - y_n^2 / 2 + y_n eta) e_1
    let wval = kappa * (b * yn - 0.5 * yn * yn + yn * st.eta);
    let dw: Vec<f64> = (0..n)
        .map(|j| {
            if j < d {
                kappa * yn * st.deta[j]
            } else {
                kappa * (b - yn + st.eta)
            }
        })
        .collect();
    let mut w = st.v.clone();
    w[0] += wval;
    let lap_eta: f64 = (0..d).map(|k| st.d2eta[k][k]).sum();
    (0..n)
        .map(|i| {
            let lap: f64 = (0..n).map(|j| st.d2v[i][j][j]).sum();
            let mut r = st.dq[i] - lap - ddiv[i] - gamma * st.dv[i][0];
            for j in 0..n {
                let mut g = st.dv[i][j];
                if i == 0 {
                    g += dw[j];
                }
                r += w[j] * g;
            }
            if i < d {
                r += st.deta[i] - kappa * yn * st.d2eta[i][0];
            } else {
                r -= kappa * st.deta[0];
            }
            if i == 0 {
                r -= gamma * kappa * yn * st.deta[0] + kappa * yn * lap_eta;
            }
            r
        })
        .collect()
}

/// `div v + kappa y_n d_1 eta`.
pub fn divergence_row(spec: &DomainSpec, st: &PointState) -> f64 {
    let n = st.n();
    (0..n).map(|j| st.dv[j][j]).sum::<f64>() + spec.kappa * st.y[n - 1] * st.deta[0]
}

/// `v . N - (-gamma + s(eta + b) + kappa (eta + b) eta) d_1 eta` on the surface.
pub fn kinematic_row(spec: &DomainSpec, st: &PointState) -> f64 {
    let (b, kappa) = (spec.depth, spec.kappa);
    let hb = st.eta + b;
    let s = kappa * (b * hb - 0.5 * hb * hb);
    let nv = st.normal();
    st.v.iter().zip(&nv).map(|(a, c)| a * c).sum::<f64>() - (-spec.gamma + s + kappa * hb * st.eta) * st.deta[0]
}

/// `S(q, v) N - [-sigma H I + kappa (b + eta)(e_1 (x) a + a (x) e_1)] N` with
/// `a = (grad' eta, 0)`; the stresses are not included.
pub fn dynamic_lhs(spec: &DomainSpec, st: &PointState) -> Vec<f64> {
    let n = st.n();
    let d = n - 1;
    let nv = st.normal();
    let s = st.stress();
    let h = st.mean_curvature();
    let c = spec.kappa * (spec.depth + st.eta);
    let mut rhs = vec![vec![0.0; n]; n];
    for (i, row) in rhs.iter_mut().enumerate() {
        row[i] = -spec.sigma * h;
    }
    for j in 0..d {
        rhs[0][j] += c * st.deta[j];
        rhs[j][0] += c * st.deta[j];
    }
    (0..n)
        .map(|i| (0..n).map(|j| (s[i][j] - rhs[i][j]) * nv[j]).sum())
        .collect()
}

/// Where a probe sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Interior,
    Top,
    Bottom,
}

/// Eulerian probe point `y`; interior probes are given by their fraction
/// `t` of the local depth and placed once `eta` is known.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Probe {
    pub kind: ProbeKind,
    pub horizontal: Vec<f64>,
    pub fraction: f64,
}

/// `count` probes, 60% interior, 20% on the surface, 20% on the bottom.
pub fn probe_points(spec: &DomainSpec, count: usize, seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = count / 5;
    let bottom = count / 5;
    (0..count)
        .map(|i| {
            let horizontal = spec.factors.iter().map(|f| rng.random::<f64>() * f.period()).collect();
            let (kind, fraction) = if i < top {
                (ProbeKind::Top, 1.0)
            } else if i < top + bottom {
                (ProbeKind::Bottom, 0.0)
            } else {
                (ProbeKind::Interior, rng.random_range(0.02..0.98))
            };
            Probe {
                kind,
                horizontal,
                fraction,
            }
        })
        .collect()
}

/// Largest defect of every row of the Eulerian system over the probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianReport {
    pub probes: usize,
    pub momentum: f64,
    pub divergence: f64,
    pub kinematic: f64,
    pub dynamic: f64,
    pub bottom: f64,
}

impl EulerianReport {
    pub fn max(&self) -> f64 {
        [
            self.momentum,
            self.divergence,
            self.kinematic,
            self.dynamic,
            self.bottom,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates the solved flattened state in Eulerian coordinates.
#[derive(Debug, Clone)]
pub struct EulerianState {
    spec: DomainSpec,
    eta: SurfaceInterpolant,
    u: VolumeInterpolant,
    p: VolumeInterpolant,
}

impl EulerianState {
    pub fn new(spec: &DomainSpec, lattice: &Lattice, grid: &VerticalGrid, x: &SolutionTriple) -> Self {
        EulerianState {
            spec: spec.clone(),
            eta: SurfaceInterpolant::new(lattice, x.eta.comp(0)),
            u: VolumeInterpolant::new(lattice, grid, &x.u, 2),
            p: VolumeInterpolant::new(lattice, grid, &x.p, 2),
        }
    }

    pub fn surface_height(&self, yh: &[f64]) -> f64 {
        self.spec.depth + self.eta.value(yh)
    }

    /// Position of a probe once the surface is known.
    pub fn place(&self, probe: &Probe) -> Vec<f64> {
        let mut y = probe.horizontal.clone();
        y.push(probe.fraction * self.surface_height(&probe.horizontal));
        y
    }

    /// `v = u o F_eta^-1`, `q = p o F_eta^-1` and `eta` at `y`, with
    /// derivatives up to second order.
    pub fn point_state(&self, y: &[f64]) -> PointState {
        let n = y.len();
        let d = n - 1;
        let b = self.spec.depth;
        let sp = jet_space(n, 2);
        let eta = self.eta.jet(y, sp);
        let mut args = Jet::variables(sp, y);
        args[d] = (&args[d] * &eta.add_const(b).recip()).scale(b);
        let x0: Vec<f64> = args.iter().map(Jet::value).collect();
        let v: Vec<Jet> = (0..n).map(|c| self.u.jet(c, &x0, sp).substitute(&x0, &args)).collect();
        let q = self.p.jet(0, &x0, sp).substitute(&x0, &args);
        PointState::from_jets(y, &v, &q, &eta)
    }
}

/// Pointwise evaluators of the forces of an instance.
pub struct ForceSampler<'a> {
    instance: &'a ProblemInstance,
    layer_force: Option<Vec<SurfaceInterpolant>>,
    layer_stress: Option<Vec<SurfaceInterpolant>>,
}

impl<'a> ForceSampler<'a> {
    pub fn new(instance: &'a ProblemInstance, lattice: &Lattice) -> Self {
        let interp = |f: &crate::domain::SurfaceField| {
            (0..f.ncomp)
                .map(|c| SurfaceInterpolant::new(lattice, f.comp(c)))
                .collect::<Vec<_>>()
        };
        ForceSampler {
            instance,
            layer_force: instance.layer_force.as_ref().map(interp),
            layer_stress: instance.layer_stress.as_ref().map(interp),
        }
    }

    /// `f_bulk(y) + f(y')`.
    pub fn force(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut out = match &self.instance.bulk_force {
            Some(f) => f(y),
            None => vec![0.0; n],
        };
        if let Some(lf) = &self.layer_force {
            for (o, it) in out.iter_mut().zip(lf) {
                *o += it.value(&y[..n - 1]);
            }
        }
        out
    }

    /// `T_bulk(y) + T(y')`, row-major.
    pub fn stress(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut out = match &self.instance.bulk_stress {
            Some(t) => t(y),
            None => vec![0.0; n * n],
        };
        if let Some(ls) = &self.layer_stress {
            for (o, it) in out.iter_mut().zip(ls) {
                *o += it.value(&y[..n - 1]);
            }
        }
        out
    }
}

/// Defects of all rows of the Eulerian system at one point.
fn point_defects(spec: &DomainSpec, forces: &ForceSampler, st: &PointState, kind: ProbeKind) -> [f64; 5] {
    let n = st.n();
    let mut out = [0.0; 5];
    let f = forces.force(&st.y);
    let mom = momentum_lhs(spec, st);
    out[0] = mom.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out[1] = divergence_row(spec, st).abs();
    match kind {
        ProbeKind::Top => {
            out[2] = kinematic_row(spec, st).abs();
            let t = forces.stress(&st.y);
            let nv = st.normal();
            let dynr = dynamic_lhs(spec, st);
            out[3] = (0..n)
                .map(|i| (dynr[i] - (0..n).map(|j| t[i * n + j] * nv[j]).sum::<f64>()).abs())
                .fold(0.0, f64::max);
        }
        ProbeKind::Bottom => {
            out[4] = st.v.iter().map(|v| v.abs()).fold(0.0, f64::max);
        }
        ProbeKind::Interior => {}
    }
    out
}

/// Residual of the Eulerian system for `x` mapped back by the flattening.
pub fn unflattened_residual(sys: &NonlinearSystem, x: &SolutionTriple, probes: &[Probe]) -> Result<EulerianReport> {
    let spec = &sys.instance().spec;
    let state = EulerianState::new(spec, sys.lattice(), sys.grid(), x);
    let forces = ForceSampler::new(sys.instance(), sys.lattice());
    let defects: Vec<[f64; 5]> = probes
        .par_iter()
        .map(|p| {
            let y = state.place(p);
            let st = state.point_state(&y);
            point_defects(spec, &forces, &st, p.kind)
        })
        .collect();
    let mut m = [0.0f64; 5];
    for dft in &defects {
        for k in 0..5 {
            m[k] = m[k].max(dft[k]);
        }
    }
    Ok(EulerianReport {
        probes: probes.len(),
        momentum: m[0],
        divergence: m[1],
        kinematic: m[2],
        dynamic: m[3],
        bottom: m[4],
    })
}

/// Eulerian samples `(y, v(y), q(y))` on the image of the flattened grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianSamples {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

/// Maps the nodal values of `u, p` on the flattened grid to their images
/// `(x', x_n (b + eta) / b)`.
pub fn unflatten_solution(lattice: &Lattice, grid: &VerticalGrid, x: &SolutionTriple) -> EulerianSamples {
    let ng = NodalGrid::with_fft(lattice, grid, HorizontalFft::minimal(lattice));
    let n = x.n();
    let b = grid.depth();
    let eta = ng.surface_to_nodal(x.eta.comp(0));
    let g = ng.hlen();
    let mut points = Vec::with_capacity(g * ng.nodes());
    let mut v = Vec::with_capacity(g * ng.nodes());
    let mut q = Vec::with_capacity(g * ng.nodes());
    for j in 0..ng.nodes() {
        let layers: Vec<Vec<C64>> = (0..n).map(|c| ng.surface_to_nodal(&x.u.layer(c, j))).collect();
        let pl = ng.surface_to_nodal(&x.p.layer(0, j));
        let z = ng.height(j);
        for k in 0..g {
            let mut y = ng.point(k).to_vec();
            y.push(z * (b + eta[k].re) / b);
            points.push(y);
            v.push(layers.iter().map(|l| l[k].re).collect());
            q.push(pl[k].re);
        }
    }
    EulerianSamples { n, points, v, q }
}

/// Largest difference between the samples and the state evaluated at the
/// flattened positions `(y', b y_n / (b + eta(y')))`.
pub fn round_trip_defect(lattice: &Lattice, grid: &VerticalGrid, x: &SolutionTriple, samples: &EulerianSamples) -> f64 {
    let b = grid.depth();
    let eta = SurfaceInterpolant::new(lattice, x.eta.comp(0));
    let u = VolumeInterpolant::new(lattice, grid, &x.u, 0);
    let p = VolumeInterpolant::new(lattice, grid, &x.p, 0);
    let n = samples.n;
    samples
        .points
        .par_iter()
        .enumerate()
        .map(|(i, y)| {
            let mut xf = y.clone();
            xf[n - 1] = b * y[n - 1] / (b + eta.value(&y[..n - 1]));
            let mut e = (p.value(0, &xf) - samples.q[i]).abs();
            for c in 0..n {
                e = e.max((u.value(c, &xf) - samples.v[i][c]).abs());
            }
            e
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_lattice, Factor};
    use crate::linear::random_state;

    fn setup() -> (DomainSpec, Lattice, VerticalGrid) {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 17)], 1.0, 0.2, 1.0, 1.0).unwrap();
        let lat = build_lattice(&spec, &[4]).unwrap();
        (spec, lat, VerticalGrid::new(1.0, 24))
    }

    #[test]
    fn interpolant_jet_matches_finite_differences() {
        let (_, lat, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_state(&mut rng, &lat, &grid, 2, 4, 4);
        let it = VolumeInterpolant::new(&lat, &grid, &x.u, 2);
        let sp = jet_space(2, 2);
        let p = [0.31, 0.47];
        let j = it.jet(1, &p, sp);
        let h = 1e-4;
        let f = |a: f64, b: f64| it.value(1, &[a, b]);
        let dx = (f(p[0] + h, p[1]) - f(p[0] - h, p[1])) / (2.0 * h);
        let dz = (f(p[0], p[1] + h) - f(p[0], p[1] - h)) / (2.0 * h);
        let dxz = (f(p[0] + h, p[1] + h) - f(p[0] + h, p[1] - h) - f(p[0] - h, p[1] + h) + f(p[0] - h, p[1] - h))
            / (4.0 * h * h);
        let scale = j.value().abs().max(1.0);
        assert!((j.d1(0) - dx).abs() < 1e-6 * scale * 10.0, "{} {}", j.d1(0), dx);
        assert!((j.d1(1) - dz).abs() < 1e-6 * scale * 10.0);
        assert!((j.d2(0, 1) - dxz).abs() < 1e-4 * scale * 10.0);
    }

    #[test]
    fn unflatten_round_trip_and_surface() {
        let (_, lat, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = random_state(&mut rng, &lat, &grid, 2, 4, 4);
        x.eta = x.eta.scaled(0.1 / x.eta.max_abs().max(1e-300));
        let s = unflatten_solution(&lat, &grid, &x);
        assert!(round_trip_defect(&lat, &grid, &x, &s) < 1e-10);
        let eta = SurfaceInterpolant::new(&lat, x.eta.comp(0));
        let top = grid.len() - 1;
        let g = s.points.len() / grid.len();
        for k in 0..g {
            let y = &s.points[top * g + k];
            assert!((y[1] - 1.0 - eta.value(&y[..1])).abs() < 1e-13);
        }
        let flat = SolutionTriple {
            eta: crate::domain::SurfaceField::zeros(lat.len(), 1),
            ..x.clone()
        };
        let s0 = unflatten_solution(&lat, &grid, &flat);
        for (k, y) in s0.points.iter().enumerate() {
            assert_eq!(y[1], grid.nodes()[k / g]);
        }
    }

    #[test]
    fn zero_state_has_zero_eulerian_residual() {
        let (spec, _, _) = setup();
        let sys = NonlinearSystem::new(ProblemInstance::new(spec.clone()).unwrap(), &[4], 48).unwrap();
        let probes = probe_points(&spec, 50, 1);
        let rep = unflattened_residual(&sys, &sys.linear().zero_state(), &probes).unwrap();
        assert_eq!(rep.probes, 50);
        assert!(rep.max() < 1e-14, "{rep:?}");
    }
}
