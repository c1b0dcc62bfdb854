use super::nodal::NodalGrid;
use super::pack::GeometryPack;
use crate::domain::{DomainSpec, HorizontalFft, Lattice, SurfaceField, VerticalGrid, VolumeField};
use crate::error::Result;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Callable on `Sigma x R` returning a fixed number of components.
pub type PointFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// `s0(z) = b z - z^2 / 2`.
pub fn s0(b: f64, z: f64) -> f64 {
    b * z - 0.5 * z * z
}

/// Shear profile `s(z) = kappa s0(z)`.
pub fn shear(kappa: f64, b: f64, z: f64) -> f64 {
    kappa * s0(b, z)
}

/// Hydrostatic pressure `P_ext - z + b`.
pub fn p_hydro(spec: &DomainSpec, z: f64) -> f64 {
    spec.p_ext - z + spec.depth
}

/// Shear and perturbed-shear fields pulled back to the flat strip.
#[derive(Debug, Clone)]
pub struct BackgroundFields {
    pub s0: Vec<f64>,
    pub s: Vec<f64>,
    pub p_hydro: Vec<f64>,
    /// First component of `U1 = W1 o F`.
    pub u1: Vec<C64>,
    /// First component of `U2 = W2 o F`.
    pub u2: Vec<C64>,
    /// `d_k (U1 + U2)_1` from the closed forms.
    pub du: Vec<Vec<C64>>,
}

impl BackgroundFields {
    /// `U1 + U2` sampled.
    pub fn total(&self) -> Vec<C64> {
        self.u1.iter().zip(&self.u2).map(|(a, b)| a + b).collect()
    }
}

/// Samples `U1`, `U2` and their derivatives.
///
/// With `F = x_n J`, `U1 + U2 = kappa (b F - F^2/2 + F eta) e_1`, so
/// `d_k = kappa J x_n (2b - x_n) / b d_k eta` for horizontal `k` and
/// `d_n = kappa (b - F + eta) J`.
pub fn background_fields(pack: &GeometryPack, spec: &DomainSpec, ng: &NodalGrid) -> BackgroundFields {
    let b = spec.depth;
    let kappa = spec.kappa;
    let n = pack.n();
    let d = n - 1;
    let g = ng.hlen();
    let nodes = ng.nodes();
    let z = ng.vertical().nodes();
    let v = ng.vlen();
    let mut u1 = vec![ZERO; v];
    let mut u2 = vec![ZERO; v];
    let mut du = vec![vec![ZERO; v]; n];
    for jn in 0..nodes {
        let xn = z[jn];
        for p in 0..g {
            let i = jn * g + p;
            let e = pack.surface.val[p];
            let f = pack.height[i];
            let jj = pack.j[i];
            u1[i] = kappa * (b * f - 0.5 * f * f);
            u2[i] = kappa * f * e;
            for q in 0..d {
                du[q][i] = kappa * jj * xn * (2.0 * b - xn) / b * pack.surface.d1[q][p];
            }
            du[d][i] = kappa * (b - f + e) * jj;
        }
    }
    BackgroundFields {
        s0: z.iter().map(|&x| s0(b, x)).collect(),
        s: z.iter().map(|&x| shear(kappa, b, x)).collect(),
        p_hydro: z.iter().map(|&x| p_hydro(spec, x)).collect(),
        u1,
        u2,
        du,
    }
}

/// Samples `F o F_eta` at the flattened volume nodes, one array per component.
pub fn sample_composed(ng: &NodalGrid, pack: &GeometryPack, f: &PointFn, ncomp: usize) -> Vec<Vec<C64>> {
    let g = ng.hlen();
    let n = pack.n();
    let mut out = vec![vec![ZERO; ng.vlen()]; ncomp];
    let mut y = vec![0.0; n];
    for jn in 0..ng.nodes() {
        for p in 0..g {
            let i = jn * g + p;
            y[..n - 1].copy_from_slice(ng.point(p));
            y[n - 1] = pack.height[i].re;
            let vals = f(&y);
            for c in 0..ncomp {
                out[c][i] = C64::new(vals[c], 0.0);
            }
        }
    }
    out
}

/// Samples `F` on the free surface `(x', b + eta(x'))`.
pub fn sample_composed_surface(ng: &NodalGrid, pack: &GeometryPack, f: &PointFn, ncomp: usize) -> Vec<Vec<C64>> {
    let n = pack.n();
    let mut out = vec![vec![ZERO; ng.hlen()]; ncomp];
    let mut y = vec![0.0; n];
    for p in 0..ng.hlen() {
        y[..n - 1].copy_from_slice(ng.point(p));
        y[n - 1] = pack.depth + pack.surface.val[p].re;
        let vals = f(&y);
        for c in 0..ncomp {
            out[c][p] = C64::new(vals[c], 0.0);
        }
    }
    out
}

/// `Lambda(f, eta) = f o F_eta` as spectral coefficients.
pub fn compose_with_flattening(ng: &NodalGrid, pack: &GeometryPack, f: &PointFn, ncomp: usize) -> VolumeField {
    let samples = sample_composed(ng, pack, f, ncomp);
    let mut out = VolumeField::zeros(ng.lattice().len(), ng.nodes(), ncomp);
    for (c, s) in samples.iter().enumerate() {
        ng.volume_from_nodal(s, &mut out, c);
    }
    out.symmetrize(ng.lattice());
    out
}

/// Surface variant of [`compose_with_flattening`], evaluated at `x_n = b`.
pub fn compose_on_surface(ng: &NodalGrid, pack: &GeometryPack, f: &PointFn, ncomp: usize) -> SurfaceField {
    let samples = sample_composed_surface(ng, pack, f, ncomp);
    let nlat = ng.lattice().len();
    let mut out = SurfaceField::zeros(nlat, ncomp);
    for (c, s) in samples.iter().enumerate() {
        out.comp_mut(c).copy_from_slice(&ng.surface_from_nodal(s));
    }
    out.symmetrize(ng.lattice());
    out
}

/// Largest nodal gap between the flux expression
/// `-s(eta+b) d1 eta - kappa (eta+b) eta d1 eta - int_0^b J kappa (x_n + eta x_n/b) d1 eta`
/// and its closed form `-kappa (b^2 d1 eta + b d1(eta^2) + d1(eta^3)/3)`.
///
/// Products are formed on a grid fine enough for cubic terms, and the
/// derivatives of `eta^2`, `eta^3` are taken spectrally.
pub fn cubic_flux_defect(spec: &DomainSpec, lattice: &Lattice, eta: &SurfaceField, m: usize) -> Result<f64> {
    let b = spec.depth;
    let kappa = spec.kappa;
    let wide_cut: Vec<usize> = lattice.cutoffs().iter().map(|&k| 3 * k).collect();
    let wide = Lattice::from_factors(lattice.factors(), &wide_cut)?;
    let dims: Vec<usize> = wide_cut.iter().map(|&k| 2 * k + 2).collect();
    let fft = HorizontalFft::new(&wide, &dims)?;
    let mut embedded = vec![ZERO; wide.len()];
    for l in 0..lattice.len() {
        let w = wide.index_of(&lattice.wavenumbers(l)).expect("sub-lattice");
        embedded[w] = eta.get(0, l);
    }
    let d1 = |c: &[C64]| -> Vec<C64> {
        let c: Vec<C64> = c
            .iter()
            .enumerate()
            .map(|(l, v)| v * C64::new(0.0, 2.0 * PI * wide.xi(l)[0]))
            .collect();
        fft.inverse(&c)
    };
    let e = fft.inverse(&embedded);
    let de = d1(&embedded);
    let e2: Vec<C64> = e.iter().map(|x| x * x).collect();
    let e3: Vec<C64> = e.iter().map(|x| x * x * x).collect();
    let de2 = d1(&fft.forward(&e2));
    let de3 = d1(&fft.forward(&e3));
    let grid = VerticalGrid::new(b, m);
    let mut worst = 0.0f64;
    for p in 0..e.len() {
        let h = e[p];
        let jac = 1.0 + h / b;
        let integrand: Vec<C64> = grid
            .nodes()
            .iter()
            .map(|&xn| jac * kappa * (xn + h * xn / b) * de[p])
            .collect();
        let top = b + h;
        let s_top = kappa * (b * top - 0.5 * top * top);
        let lhs = -s_top * de[p] - kappa * top * h * de[p] - grid.integrate(&integrand);
        let rhs = -kappa * (b * b * de[p] + b * de2[p] + de3[p] / 3.0);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Nodal residuals of the steady shear flow `(W1, p_hydro, 0)` in the
/// unperturbed system with zero forcing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShearReport {
    pub kappa: f64,
    pub depth: f64,
    pub gamma: f64,
    pub momentum: f64,
    pub divergence: f64,
    pub kinematic: f64,
    pub dynamic: f64,
    pub bottom: f64,
}

impl ShearReport {
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

/// Evaluates every row of the free-boundary system at the shear flow on
/// the product grid, with spectral derivatives in every direction.
pub fn shear_residual(spec: &DomainSpec, m: usize) -> Result<ShearReport> {
    let b = spec.depth;
    let kappa = spec.kappa;
    let n = spec.n();
    let lattice = Lattice::from_factors(&spec.factors, &vec![2; n - 1])?;
    let grid = VerticalGrid::new(b, m);
    let ng = NodalGrid::new(&lattice, &grid);
    let nlat = lattice.len();
    let zero = lattice.zero_index();
    let amp = 1.0 / lattice.synthesis_scale();
    let mut w = VolumeField::zeros(nlat, grid.len(), n);
    let mut pf = VolumeField::zeros(nlat, grid.len(), 1);
    for (j, &z) in grid.nodes().iter().enumerate() {
        w.set(0, zero, j, C64::new(shear(kappa, b, z) * amp, 0.0));
        pf.set(0, zero, j, C64::new(p_hydro(spec, z) * amp, 0.0));
    }
    let wd: Vec<_> = (0..n).map(|c| ng.volume_derivs(&w, c, 2)).collect();
    let pd = ng.volume_derivs(&pf, 0, 1);
    let g = ng.hlen();
    let top = grid.len() - 1;
    let (mut momentum, mut divergence, mut kinematic, mut dynamic, mut bottom) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..ng.vlen() {
        let mut div = ZERO;
        for c in 0..n {
            let mut r = pd.d1[c][i];
            for k in 0..n {
                r += wd[k].val[i] * wd[c].d1[k][i] - wd[c].d2[k][k][i];
            }
            if c == 0 {
                r -= kappa;
            }
            if c == n - 1 {
                r += 1.0;
            }
            momentum = momentum.max(r.norm());
            div += wd[c].d1[c][i];
        }
        divergence = divergence.max(div.norm());
    }
    for q in 0..g {
        let it = top * g + q;
        kinematic = kinematic.max(wd[n - 1].val[it].norm());
        for c in 0..n {
            let mut s = -(wd[c].d1[n - 1][it] + wd[n - 1].d1[c][it]);
            if c == n - 1 {
                s += pd.val[it] - spec.p_ext;
            }
            dynamic = dynamic.max(s.norm());
            bottom = bottom.max(wd[c].val[q].norm());
        }
    }
    let scale = 1.0 + kappa.abs() * b * b + b + spec.p_ext.abs();
    Ok(ShearReport {
        kappa,
        depth: b,
        gamma: spec.gamma,
        momentum: momentum / scale,
        divergence: divergence / scale,
        kinematic: kinematic / scale,
        dynamic: dynamic / scale,
        bottom: bottom / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_lattice, Factor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_background_is_the_shear_profile() {
        let s = DomainSpec::new(vec![Factor::torus(1.0, 17)], 1.0, 0.3, 1.0, 1.0).unwrap();
        let lat = build_lattice(&s, &[4]).unwrap();
        let grid = VerticalGrid::new(1.0, 8);
        let ng = NodalGrid::new(&lat, &grid);
        let pack = GeometryPack::new(&SurfaceField::zeros(lat.len(), 1), &s, &ng).unwrap();
        let bg = background_fields(&pack, &s, &ng);
        for j in 0..ng.nodes() {
            let z = ng.height(j);
            for p in 0..ng.hlen() {
                let i = j * ng.hlen() + p;
                assert!((bg.u1[i].re - 0.3 * (z - 0.5 * z * z)).abs() < 1e-15);
                assert!(bg.u2[i].norm() == 0.0);
            }
        }
        assert!((shear(0.3, 1.0, 1.0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn closed_form_derivatives_match_spectral_ones() {
        let s = DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, 0.4, 1.0, 1.0).unwrap();
        let lat = build_lattice(&s, &[8]).unwrap();
        let grid = VerticalGrid::new(1.0, 10);
        let ng = NodalGrid::new(&lat, &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut eta = SurfaceField::zeros(lat.len(), 1);
        for l in 0..lat.len() {
            let k = lat.wavenumbers(l)[0].abs();
            if (1..=4).contains(&k) {
                eta.set(
                    0,
                    l,
                    C64::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)),
                );
            }
        }
        eta.symmetrize(&lat);
        let pack = GeometryPack::new(&eta, &s, &ng).unwrap();
        let bg = background_fields(&pack, &s, &ng);
        let mut u = VolumeField::zeros(lat.len(), grid.len(), 1);
        ng.volume_from_nodal(&bg.total(), &mut u, 0);
        let du = ng.volume_derivs(&u, 0, 1);
        for k in 0..2 {
            let err = du.d1[k]
                .iter()
                .zip(&bg.du[k])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "component {k}: {err}");
        }
    }

    #[test]
    fn composition_of_height_function() {
        let s = DomainSpec::new(vec![Factor::torus(1.0, 17)], 1.0, 0.0, 1.0, 1.0).unwrap();
        let lat = build_lattice(&s, &[4]).unwrap();
        let grid = VerticalGrid::new(1.0, 6);
        let ng = NodalGrid::new(&lat, &grid);
        let mut eta = SurfaceField::zeros(lat.len(), 1);
        let p = lat.index_of(&[1]).unwrap();
        eta.set(0, p, C64::new(0.1, 0.0));
        eta.set(0, lat.neg(p), C64::new(0.1, 0.0));
        let pack = GeometryPack::new(&eta, &s, &ng).unwrap();
        let f = compose_with_flattening(&ng, &pack, &|y: &[f64]| vec![y[1]], 1);
        let expect = crate::geometry::nodal::NodalGrid::new(&lat, &grid);
        let vals = expect.volume_derivative(&f, 0, &[0, 0]);
        for (i, v) in vals.iter().enumerate() {
            assert!((v - pack.height[i]).norm() < 1e-14);
        }
        let c = compose_with_flattening(&ng, &pack, &|_: &[f64]| vec![2.5], 1);
        assert!((c.get(0, lat.zero_index(), 3).re - 2.5).abs() < 1e-14);
    }

    #[test]
    fn cubic_flux_identity_holds() {
        let s = DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, 0.7, 1.0, 1.0).unwrap();
        let lat = build_lattice(&s, &[8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let mut eta = SurfaceField::zeros(lat.len(), 1);
            for l in 0..lat.len() {
                eta.set(
                    0,
                    l,
                    C64::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)),
                );
            }
            eta.symmetrize(&lat);
            assert!(cubic_flux_defect(&s, &lat, &eta, 8).unwrap() < 1e-10);
        }
    }

    #[test]
    fn shear_flow_solves_the_system() {
        let s = DomainSpec::new(vec![Factor::torus(1.0, 17)], 1.7, 0.8, 1.0, 1.0).unwrap();
        assert!(shear_residual(&s, 16).unwrap().max() < 1e-10);
    }
}
