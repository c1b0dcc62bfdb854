use super::instance::ProblemInstance;
use crate::domain::{build_lattice, Lattice, SurfaceField, VerticalGrid, VolumeField};
use crate::error::{Error, Result};
use crate::geometry::{
    background_fields, div_a, div_stress_a, grad_a, mean_curvature_nodal, sample_composed, sample_composed_surface,
    Derivs, GeometryPack, NodalGrid,
};
use crate::linear::{DataTuple, LinearSystem, SolutionTriple};
use crate::symbols::{ignored_rows, SymbolOptions};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Discretized nonlinear problem: the instance, its linearization at the
/// origin and the product grid used for pointwise products.
pub struct NonlinearSystem {
    instance: ProblemInstance,
    linear: LinearSystem,
    ng: NodalGrid,
}

impl std::fmt::Debug for NonlinearSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearSystem")
            .field("instance", &self.instance)
            .field("linear", &self.linear)
            .finish()
    }
}

impl NonlinearSystem {
    /// Discretizes `instance` with horizontal `cutoffs` and `m + 1` vertical nodes.
    pub fn new(instance: ProblemInstance, cutoffs: &[usize], m: usize) -> Result<Self> {
        let lattice = build_lattice(&instance.spec, cutoffs)?;
        let grid = VerticalGrid::new(instance.spec.depth, m);
        Self::with_grids(instance, &lattice, &grid)
    }

    pub fn with_grids(instance: ProblemInstance, lattice: &Lattice, grid: &VerticalGrid) -> Result<Self> {
        let nlat = lattice.len();
        for (name, f) in [
            ("layer force", &instance.layer_force),
            ("layer stress", &instance.layer_stress),
        ] {
            if let Some(f) = f {
                if f.nlat() != nlat {
                    return Err(Error::Shape(format!(
                        "{name} has {} modes, lattice has {nlat}",
                        f.nlat()
                    )));
                }
            }
        }
        let linear = LinearSystem::new(&instance.spec, lattice, grid, &SymbolOptions::default())?;
        let ng = NodalGrid::new(lattice, grid);
        Ok(NonlinearSystem { instance, linear, ng })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn linear(&self) -> &LinearSystem {
        &self.linear
    }

    pub fn nodal(&self) -> &NodalGrid {
        &self.ng
    }

    pub fn lattice(&self) -> &Lattice {
        self.linear.lattice()
    }

    pub fn grid(&self) -> &VerticalGrid {
        self.linear.grid()
    }

    pub fn kappa(&self) -> f64 {
        self.instance.spec.kappa
    }

    /// Flattened residual `Xi(x)` of every row, with dealiased products.
    pub fn residual(&self, x: &SolutionTriple) -> Result<DataTuple> {
        let spec = &self.instance.spec;
        let ng = &self.ng;
        let n = spec.n();
        let d = n - 1;
        let b = spec.depth;
        let (kappa, gamma, sigma) = (spec.kappa, spec.gamma, spec.sigma);
        let pack = GeometryPack::new(&x.eta, spec, ng)?;
        let bg = background_fields(&pack, spec, ng);
        let u: Vec<Derivs> = (0..n).map(|c| ng.volume_derivs(&x.u, c, 2)).collect();
        let p = ng.volume_derivs(&x.p, 0, 1);
        let g = ng.hlen();
        let v = ng.vlen();
        let top = ng.nodes() - 1;
        let sf = &pack.surface;
        let ubg = bg.total();

        // momentum
        let mut f = div_stress_a(&pack, &p, &u);
        let w: Vec<Derivs> = (0..n)
            .map(|i| {
                if i == 0 {
                    Derivs {
                        val: u[0].val.iter().zip(&ubg).map(|(a, b)| a + b).collect(),
                        d1: (0..n)
                            .map(|k| u[0].d1[k].iter().zip(&bg.du[k]).map(|(a, b)| a + b).collect())
                            .collect(),
                        d2: Vec::new(),
                    }
                } else {
                    Derivs {
                        val: u[i].val.clone(),
                        d1: u[i].d1.clone(),
                        d2: Vec::new(),
                    }
                }
            })
            .collect();
        let gw: Vec<Vec<Vec<C64>>> = w.iter().map(|wi| grad_a(&pack, wi)).collect();
        let gu: Vec<Vec<Vec<C64>>> = u.iter().map(|ui| grad_a(&pack, ui)).collect();
        for i in 0..n {
            for idx in 0..v {
                let q = idx % g;
                let height = pack.height[idx];
                let mut r = -gamma * gu[i][0][idx];
                for j in 0..n {
                    r += w[j].val[idx] * gw[i][j][idx];
                }
                if i < d {
                    r += sf.d1[i][q] - kappa * height * sf.d2[i][0][q];
                } else {
                    r -= kappa * sf.d1[0][q];
                }
                if i == 0 {
                    let lap: C64 = (0..d).map(|k| sf.d2[k][k][q]).sum();
                    r -= gamma * kappa * height * sf.d1[0][q] + kappa * height * lap;
                }
                f[i][idx] += r;
            }
        }
        if let Some(force) = &self.instance.bulk_force {
            let s = sample_composed(ng, &pack, force.as_ref(), n);
            for i in 0..n {
                for (a, b) in f[i].iter_mut().zip(&s[i]) {
                    *a -= b;
                }
            }
        }

        // divergence
        let mut gdiv = div_a(&pack, &u);
        for idx in 0..v {
            let q = idx % g;
            gdiv[idx] = pack.j[idx] * (gdiv[idx] + kappa * pack.height[idx] * sf.d1[0][q]);
        }

        // kinematic and dynamic rows at the top node
        let curv = mean_curvature_nodal(sf);
        let bulk_t = self
            .instance
            .bulk_stress
            .as_ref()
            .map(|t| sample_composed_surface(ng, &pack, t.as_ref(), n * n));
        let layer_t: Option<Vec<Vec<C64>>> = self
            .instance
            .layer_stress
            .as_ref()
            .map(|t| (0..n * n).map(|c| ng.surface_to_nodal(t.comp(c))).collect());
        let mut h = vec![ZERO; g];
        let mut k = vec![vec![ZERO; g]; n];
        for q in 0..g {
            let idx = top * g + q;
            let e = sf.val[q];
            let nrm: Vec<C64> = (0..n).map(|c| pack.normal[c][q]).collect();
            let un: C64 = (0..n).map(|c| u[c].val[idx] * nrm[c]).sum();
            let hb = e + b;
            let s_top = kappa * (b * hb - 0.5 * hb * hb);
            h[q] = un - (-gamma + s_top + kappa * hb * e) * sf.d1[0][q];
            // stress S_A(p, u) at the surface
            let mut stress = vec![vec![ZERO; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut dsym = gu[i][j][idx] + gu[j][i][idx];
                    dsym = -dsym;
                    if i == j {
                        dsym += p.val[idx];
                    }
                    stress[i][j] = dsym;
                }
            }
            // right-hand tensor
            let mut rhs = vec![vec![ZERO; n]; n];
            for i in 0..n {
                rhs[i][i] = -sigma * curv[q];
            }
            if let Some(t) = &bulk_t {
                for i in 0..n {
                    for j in 0..n {
                        rhs[i][j] += t[i * n + j][q];
                    }
                }
            }
            if let Some(t) = &layer_t {
                for i in 0..n {
                    for j in 0..n {
                        rhs[i][j] += t[i * n + j][q];
                    }
                }
            }
            for j in 0..d {
                let c = kappa * hb * sf.d1[j][q];
                rhs[0][j] += c;
                rhs[j][0] += c;
            }
            for i in 0..n {
                let mut r = ZERO;
                for j in 0..n {
                    r += (stress[i][j] - rhs[i][j]) * nrm[j];
                }
                k[i][q] = r;
            }
        }

        let nlat = ng.lattice().len();
        let nodes = ng.nodes();
        let mut out = DataTuple::zeros(nlat, nodes, n);
        for i in 0..n {
            ng.volume_from_nodal(&f[i], &mut out.f, i);
        }
        ng.volume_from_nodal(&gdiv, &mut out.g, 0);
        out.h.comp_mut(0).copy_from_slice(&ng.surface_from_nodal(&h));
        for i in 0..n {
            out.k.comp_mut(i).copy_from_slice(&ng.surface_from_nodal(&k[i]));
        }
        if let Some(lf) = &self.instance.layer_force {
            subtract_layer(&mut out.f, lf);
        }
        out.symmetrize(ng.lattice());
        Ok(out)
    }

    /// Residual with the rows ignored by the linear solver set to zero: `f'`
    /// at the bottom and top nodes, `f_n` at the top, `g` at the bottom and
    /// the zero mode of `h`.
    pub fn masked_residual(&self, x: &SolutionTriple) -> Result<DataTuple> {
        let mut r = self.residual(x)?;
        mask_rows(&mut r, self.lattice());
        Ok(r)
    }
}

fn subtract_layer(f: &mut VolumeField, layer: &SurfaceField) {
    for c in 0..f.ncomp {
        for l in 0..f.nlat {
            let v = layer.get(c, l);
            for a in f.profile_mut(c, l) {
                *a -= v;
            }
        }
    }
}

/// Zeroes the rows the linear solver does not see.
pub fn mask_rows(r: &mut DataTuple, lattice: &Lattice) {
    let n = r.n();
    let nodes = r.nodes();
    let (frows, grows) = ignored_rows(n, nodes);
    for l in 0..r.nlat() {
        for &fr in &frows {
            let (c, j) = (fr / nodes, fr % nodes);
            r.f.set(c, l, j, ZERO);
        }
        for &j in &grows {
            r.g.set(0, l, j, ZERO);
        }
    }
    r.h.set(0, lattice.zero_index(), ZERO);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, Factor};
    use crate::linear::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn system(kappa: f64) -> NonlinearSystem {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, kappa, 1.0, 1.0).unwrap();
        NonlinearSystem::new(ProblemInstance::new(spec).unwrap(), &[4], 48).unwrap()
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let sys = system(0.3);
        let r = sys.residual(&sys.linear().zero_state()).unwrap();
        assert!(r.max_abs() < 1e-13, "{}", r.max_abs());
    }

    #[test]
    fn layer_force_only() {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, 0.2, 1.0, 1.0).unwrap();
        let lat = build_lattice(&spec, &[4]).unwrap();
        let mut lf = SurfaceField::zeros(lat.len(), 2);
        let p = lat.index_of(&[1]).unwrap();
        lf.set(0, p, C64::new(0.3, 0.1));
        lf.set(0, lat.neg(p), C64::new(0.3, -0.1));
        let inst = ProblemInstance::new(spec)
            .unwrap()
            .with_layer_force(lf.clone())
            .unwrap();
        let sys = NonlinearSystem::new(inst, &[4], 48).unwrap();
        let r = sys.residual(&sys.linear().zero_state()).unwrap();
        for j in 0..sys.grid().len() {
            assert!((r.f.get(0, p, j) + lf.get(0, p)).norm() < 1e-13);
        }
        assert!(r.g.max_abs() < 1e-13 && r.h.max_abs() < 1e-13 && r.k.max_abs() < 1e-13);
        let bulk = ProblemInstance::new(sys.instance().spec.clone())
            .unwrap()
            .with_bulk_force(Arc::new(|_: &[f64]| vec![1.0, 0.0]));
        let sys = NonlinearSystem::new(bulk, &[4], 48).unwrap();
        let r = sys.residual(&sys.linear().zero_state()).unwrap();
        let z = sys.lattice().zero_index();
        assert!((r.f.get(0, z, 3).re + 1.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_at_origin_is_the_linearization() {
        let sys = system(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_state(&mut rng, sys.lattice(), sys.grid(), 2, 3, 4);
        let lin = sys.linear().apply_l_kappa(&x, 0.2).unwrap();
        let mut ratios = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let r = sys.residual(&x.scaled(eps)).unwrap();
            let defect = r.sub(&lin.scaled(eps)).max_abs();
            ratios.push(defect / (eps * eps));
        }
        assert!(ratios.iter().all(|r| r.is_finite()));
        assert!(ratios[2] < 2.0 * ratios[0] + 1e-6, "{ratios:?}");
        assert!(ratios[0] < 1e3, "{ratios:?}");
    }
}
