use super::jet::Jet;
use super::nodal::{Derivs, NodalGrid};
use crate::domain::{DomainSpec, Lattice, SurfaceField};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Flattening map `x -> x + (x_n eta(x') / b) e_n` at a point with known
/// surface height `eta = eta(x')`.
pub fn flatten(x: &[f64], eta: f64, b: f64) -> Result<Vec<f64>> {
    check_height(eta, b)?;
    let mut y = x.to_vec();
    let n = y.len();
    y[n - 1] = x[n - 1] * (1.0 + eta / b);
    Ok(y)
}

/// Inverse flattening map `y_n -> b y_n / (b + eta)`.
pub fn unflatten(y: &[f64], eta: f64, b: f64) -> Result<Vec<f64>> {
    check_height(eta, b)?;
    let mut x = y.to_vec();
    let n = x.len();
    x[n - 1] = b * y[n - 1] / (b + eta);
    Ok(x)
}

fn check_height(eta: f64, b: f64) -> Result<()> {
    if !(eta.is_finite() && b + eta > 0.0) {
        return Err(Error::Amplitude(format!(
            "surface height b + eta = {} is not positive",
            b + eta
        )));
    }
    Ok(())
}

/// Point evaluation of a real surface field and of its derivatives.
#[derive(Debug, Clone)]
pub struct SurfaceInterpolant {
    lattice: Lattice,
    coeffs: Vec<C64>,
    scale: f64,
}

impl SurfaceInterpolant {
    pub fn new(lattice: &Lattice, coeffs: &[C64]) -> Self {
        SurfaceInterpolant {
            lattice: lattice.clone(),
            coeffs: coeffs.to_vec(),
            scale: lattice.synthesis_scale(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (l, c) in self.coeffs.iter().enumerate() {
            let th: f64 = 2.0 * PI * self.lattice.xi(l).iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            s += c.re * th.cos() - c.im * th.sin();
        }
        s * self.scale
    }

    /// Jet of the field at `x'`; the jet variables are the full coordinates
    /// and the field does not depend on variables beyond the cross-section.
    pub fn jet(&self, x: &[f64], sp: &'static super::jet::JetSpace) -> Jet {
        let d = self.lattice.dim();
        let mut c = vec![0.0; sp.len()];
        let monos: Vec<(usize, Vec<u8>)> = (0..sp.len())
            .map(|i| (i, sp.exponents(i).to_vec()))
            .filter(|(_, e)| e[d..].iter().all(|&x| x == 0))
            .collect();
        for (l, coef) in self.coeffs.iter().enumerate() {
            let xi = self.lattice.xi(l);
            let th: f64 = 2.0 * PI * xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let base = coef * C64::from_polar(1.0, th);
            for (i, e) in &monos {
                let deg: u32 = e.iter().map(|&a| a as u32).sum();
                let mut w = C64::new(0.0, 1.0).powu(deg) * base;
                for k in 0..d {
                    let a = e[k] as i32;
                    w *= (2.0 * PI * xi[k]).powi(a) / factorial(a as usize);
                }
                c[*i] += w.re;
            }
        }
        for v in &mut c {
            *v *= self.scale;
        }
        Jet::from_coeffs(sp, c)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Nodal geometry of the flattening map on a [`NodalGrid`].
///
/// Matrices are stored entrywise as `a[i][j]` with
/// `(grad_A f)_i = sum_j A_ij d_j f`.
#[derive(Debug, Clone)]
pub struct GeometryPack {
    pub eta: SurfaceField,
    pub depth: f64,
    /// Samples of `eta` with first and second horizontal derivatives.
    pub surface: Derivs,
    /// `J = 1 + eta/b` on the volume grid.
    pub j: Vec<C64>,
    /// `K = b / (b + eta)` on the volume grid.
    pub k: Vec<C64>,
    /// `F = x_n J`, the height of the flattened node.
    pub height: Vec<C64>,
    pub a: Vec<Vec<Vec<C64>>>,
    /// `da[k][i][j] = d_k A_ij`.
    pub da: Vec<Vec<Vec<Vec<C64>>>>,
    /// Unnormalized normal `(-grad' eta, 1)` on the surface grid.
    pub normal: Vec<Vec<C64>>,
}

impl GeometryPack {
    /// Builds the pack; requires `max |eta| <= b/2`.
    pub fn new(eta: &SurfaceField, spec: &DomainSpec, ng: &NodalGrid) -> Result<Self> {
        let b = spec.depth;
        let n = spec.n();
        let d = n - 1;
        let g = ng.hlen();
        let nodes = ng.nodes();
        let surface = ng.surface_derivs(eta.comp(0), 2);
        let max = surface.val.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        if !(max <= 0.5 * b) {
            return Err(Error::Amplitude(format!(
                "max |eta| = {max:.4e} exceeds b/2 = {}",
                0.5 * b
            )));
        }
        let v = g * nodes;
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let mut j = vec![zero; v];
        let mut k = vec![zero; v];
        let mut height = vec![zero; v];
        let mut a = vec![vec![vec![zero; v]; n]; n];
        let mut da = vec![vec![vec![vec![zero; v]; n]; n]; n];
        for jn in 0..nodes {
            let xn = ng.height(jn);
            for p in 0..g {
                let i = jn * g + p;
                let e = surface.val[p];
                let kk = b / (b + e);
                j[i] = one + e / b;
                k[i] = kk;
                height[i] = xn * j[i];
                for q in 0..d {
                    a[q][q][i] = one;
                    a[q][d][i] = -xn * kk * surface.d1[q][p] / b;
                }
                a[d][d][i] = kk;
                for m in 0..d {
                    let dk = -kk * kk * surface.d1[m][p] / b;
                    da[m][d][d][i] = dk;
                    for q in 0..d {
                        da[m][q][d][i] = -(xn / b) * (dk * surface.d1[q][p] + kk * surface.d2[m][q][p]);
                    }
                }
                for q in 0..d {
                    da[d][q][d][i] = -kk * surface.d1[q][p] / b;
                }
            }
        }
        let mut normal = vec![vec![zero; g]; n];
        for p in 0..g {
            for q in 0..d {
                normal[q][p] = -surface.d1[q][p];
            }
            normal[d][p] = one;
        }
        Ok(GeometryPack {
            eta: eta.clone(),
            depth: b,
            surface,
            j,
            k,
            height,
            a,
            da,
            normal,
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_lattice, Factor, VerticalGrid};

    fn spec() -> DomainSpec {
        DomainSpec::new(vec![Factor::torus(1.0, 17)], 1.0, 0.1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn flattening_round_trip_and_top() {
        let y = flatten(&[0.2, 1.0], 0.3, 1.0).unwrap();
        assert!((y[1] - 1.3).abs() < 1e-15);
        let x = unflatten(&y, 0.3, 1.0).unwrap();
        assert!((x[1] - 1.0).abs() < 1e-15);
        assert!(flatten(&[0.0, 0.5], -1.0, 1.0).is_err());
    }

    #[test]
    fn flat_pack_is_identity() {
        let s = spec();
        let lat = build_lattice(&s, &[6]).unwrap();
        let grid = VerticalGrid::new(1.0, 8);
        let ng = NodalGrid::new(&lat, &grid);
        let pack = GeometryPack::new(&SurfaceField::zeros(lat.len(), 1), &s, &ng).unwrap();
        assert!(pack.j.iter().all(|v| (v - 1.0).norm() < 1e-15));
        assert!(pack.a[0][1].iter().all(|v| v.norm() < 1e-15));
        assert!(pack.a[1][1].iter().all(|v| (v - 1.0).norm() < 1e-15));
        assert!(pack.normal[1].iter().all(|v| (v - 1.0).norm() < 1e-15));
    }

    #[test]
    fn single_mode_pack_entries() {
        let s = spec();
        let lat = build_lattice(&s, &[6]).unwrap();
        let grid = VerticalGrid::new(1.0, 8);
        let ng = NodalGrid::new(&lat, &grid);
        let mut eta = SurfaceField::zeros(lat.len(), 1);
        let p = lat.index_of(&[1]).unwrap();
        eta.set(0, p, C64::new(0.1, 0.0));
        eta.set(0, lat.neg(p), C64::new(0.1, 0.0));
        let pack = GeometryPack::new(&eta, &s, &ng).unwrap();
        let interp = SurfaceInterpolant::new(&lat, eta.comp(0));
        let g = ng.hlen();
        for jn in 0..ng.nodes() {
            let xn = ng.height(jn);
            for q in 0..g {
                let x = ng.point(q)[0];
                let e = 0.2 * (2.0 * PI * x).cos();
                let de = -0.4 * PI * (2.0 * PI * x).sin();
                let i = jn * g + q;
                assert!((pack.j[i].re - (1.0 + e)).abs() < 1e-14);
                assert!((pack.j[i] * pack.k[i] - 1.0).norm() < 1e-12);
                let kk = 1.0 / (1.0 + e);
                assert!((pack.a[0][1][i].re + xn * kk * de).abs() < 1e-12);
                assert!((interp.value(&[x]) - e).abs() < 1e-14);
            }
        }
        let big = eta.scaled(3.0);
        assert!(matches!(GeometryPack::new(&big, &s, &ng), Err(Error::Amplitude(_))));
    }

    #[test]
    fn surface_jet_derivatives() {
        let s = spec();
        let lat = build_lattice(&s, &[6]).unwrap();
        let mut eta = SurfaceField::zeros(lat.len(), 1);
        let p = lat.index_of(&[2]).unwrap();
        eta.set(0, p, C64::new(0.0, -0.05));
        eta.set(0, lat.neg(p), C64::new(0.0, 0.05));
        // eta = 0.1 sin(4 pi x)
        let it = SurfaceInterpolant::new(&lat, eta.comp(0));
        let sp = super::super::jet::jet_space(2, 3);
        let x = 0.137;
        let j = it.jet(&[x, 0.4], sp);
        let w = 4.0 * PI;
        assert!((j.value() - 0.1 * (w * x).sin()).abs() < 1e-14);
        assert!((j.d1(0) - 0.1 * w * (w * x).cos()).abs() < 1e-12);
        assert!((j.derivative(&[3, 0]) + 0.1 * w.powi(3) * (w * x).cos()).abs() < 1e-9);
        assert_eq!(j.d1(1), 0.0);
    }
}
