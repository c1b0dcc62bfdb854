//! Differential operators pulled back by the flattening map, evaluated
//! pointwise on the product grid.

use super::nodal::{Derivs, NodalGrid};
use super::pack::GeometryPack;
use crate::domain::{SurfaceField, VolumeField};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `(grad_A f)_i = sum_j A_ij d_j f`.
pub fn grad_a(pack: &GeometryPack, f: &Derivs) -> Vec<Vec<C64>> {
    let n = pack.n();
    (0..n)
        .map(|i| {
            let mut out = vec![ZERO; f.val.len()];
            for j in 0..n {
                for (o, (a, df)) in out.iter_mut().zip(pack.a[i][j].iter().zip(&f.d1[j])) {
                    *o += a * df;
                }
            }
            out
        })
        .collect()
}

/// `div_A u = sum_ij A_ij d_j u_i`.
pub fn div_a(pack: &GeometryPack, u: &[Derivs]) -> Vec<C64> {
    let n = pack.n();
    let mut out = vec![ZERO; u[0].val.len()];
    for i in 0..n {
        for j in 0..n {
            for (o, (a, du)) in out.iter_mut().zip(pack.a[i][j].iter().zip(&u[i].d1[j])) {
                *o += a * du;
            }
        }
    }
    out
}

/// `(grad_A)_p (grad_A)_q f`, including the derivatives of `A`.
pub fn hess_a(pack: &GeometryPack, f: &Derivs, p: usize, q: usize) -> Vec<C64> {
    let n = pack.n();
    let len = f.val.len();
    let mut out = vec![ZERO; len];
    for k in 0..n {
        let apk = &pack.a[p][k];
        for m in 0..n {
            let aqm = &pack.a[q][m];
            let dq = &pack.da[k][q][m];
            let fkm = &f.d2[k][m];
            let fm = &f.d1[m];
            for i in 0..len {
                out[i] += apk[i] * (aqm[i] * fkm[i] + dq[i] * fm[i]);
            }
        }
    }
    out
}

/// `Delta_A f = sum_p (grad_A)_p (grad_A)_p f`.
pub fn laplacian_a(pack: &GeometryPack, f: &Derivs) -> Vec<C64> {
    let mut out = vec![ZERO; f.val.len()];
    for p in 0..pack.n() {
        for (o, h) in out.iter_mut().zip(hess_a(pack, f, p, p)) {
            *o += h;
        }
    }
    out
}

/// Symmetrized gradient `(D_A u)_ij = (grad_A u_i)_j + (grad_A u_j)_i`.
pub fn dsym_a(pack: &GeometryPack, u: &[Derivs]) -> Vec<Vec<Vec<C64>>> {
    let n = pack.n();
    let grads: Vec<Vec<Vec<C64>>> = u.iter().map(|ui| grad_a(pack, ui)).collect();
    let mut out = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = grads[i][j].iter().zip(&grads[j][i]).map(|(a, b)| a + b).collect();
        }
    }
    out
}

/// `S_A(p, u) = p I - D_A u`.
pub fn stress_a(pack: &GeometryPack, p: &[C64], u: &[Derivs]) -> Vec<Vec<Vec<C64>>> {
    let mut s = dsym_a(pack, u);
    for (i, row) in s.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            for (k, v) in e.iter_mut().enumerate() {
                *v = if i == j { p[k] - *v } else { -*v };
            }
        }
    }
    s
}

/// `div_A S_A(p, u) = grad_A p - Delta_A u - grad_A div_A u`.
pub fn div_stress_a(pack: &GeometryPack, p: &Derivs, u: &[Derivs]) -> Vec<Vec<C64>> {
    let n = pack.n();
    let gp = grad_a(pack, p);
    (0..n)
        .map(|i| {
            let mut out = gp[i].clone();
            for (o, l) in out.iter_mut().zip(laplacian_a(pack, &u[i])) {
                *o -= l;
            }
            for (j, uj) in u.iter().enumerate() {
                for (o, h) in out.iter_mut().zip(hess_a(pack, uj, i, j)) {
                    *o -= h;
                }
            }
            out
        })
        .collect()
}

/// Operator selector for [`a_calculus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AOperator {
    Grad,
    Div,
    Laplacian,
    Dsym,
    Stress,
}

/// Applies one pulled-back operator to a spectral field and returns its
/// spectral coefficients (dealiased products, truncated to the lattice).
///
/// `Grad` takes a scalar, `Div` and `Dsym` a vector, `Laplacian` any field
/// componentwise, and `Stress` a vector together with the pressure `p`.
pub fn a_calculus(
    ng: &NodalGrid,
    pack: &GeometryPack,
    field: &VolumeField,
    p: Option<&VolumeField>,
    which: AOperator,
) -> Result<VolumeField> {
    let n = pack.n();
    let nlat = ng.lattice().len();
    let nodes = ng.nodes();
    if field.nlat != nlat || field.nvert != nodes {
        return Err(Error::Shape("field does not match the nodal grid".into()));
    }
    let need_vector = matches!(which, AOperator::Div | AOperator::Dsym | AOperator::Stress);
    if need_vector && field.ncomp != n {
        return Err(Error::Shape(format!(
            "operator needs {n} components, got {}",
            field.ncomp
        )));
    }
    if which == AOperator::Grad && field.ncomp != 1 {
        return Err(Error::Shape("gradient needs a scalar field".into()));
    }
    let order = if which == AOperator::Laplacian { 2 } else { 1 };
    let comps: Vec<Derivs> = (0..field.ncomp).map(|c| ng.volume_derivs(field, c, order)).collect();
    let samples: Vec<Vec<C64>> = match which {
        AOperator::Grad => grad_a(pack, &comps[0]),
        AOperator::Div => vec![div_a(pack, &comps)],
        AOperator::Laplacian => comps.iter().map(|c| laplacian_a(pack, c)).collect(),
        AOperator::Dsym => dsym_a(pack, &comps).into_iter().flatten().collect(),
        AOperator::Stress => {
            let p = p.ok_or_else(|| Error::Shape("stress needs a pressure".into()))?;
            if p.nlat != nlat || p.nvert != nodes || p.ncomp != 1 {
                return Err(Error::Shape("pressure does not match the nodal grid".into()));
            }
            let pv = ng.volume_derivative(p, 0, &vec![0; n]);
            stress_a(pack, &pv, &comps).into_iter().flatten().collect()
        }
    };
    let mut out = VolumeField::zeros(nlat, nodes, samples.len());
    for (c, s) in samples.iter().enumerate() {
        ng.volume_from_nodal(s, &mut out, c);
    }
    Ok(out)
}

/// Samples of `div'(grad' eta / sqrt(1 + |grad' eta|^2))` from the first
/// and second derivatives of `eta`.
pub fn mean_curvature_nodal(surface: &Derivs) -> Vec<C64> {
    let d = surface.d1.len();
    let len = surface.val.len();
    (0..len)
        .map(|i| {
            let mut g2 = C64::new(1.0, 0.0);
            for q in 0..d {
                g2 += surface.d1[q][i] * surface.d1[q][i];
            }
            let w = g2.sqrt();
            let w3 = w * w * w;
            let mut h = ZERO;
            for q in 0..d {
                h += surface.d2[q][q][i] / w;
                for r in 0..d {
                    h -= surface.d1[q][i] * surface.d1[r][i] * surface.d2[q][r][i] / w3;
                }
            }
            h
        })
        .collect()
}

/// Mean-curvature operator of a surface field, dealiased and truncated.
pub fn mean_curvature(ng: &NodalGrid, eta: &SurfaceField) -> SurfaceField {
    let s = ng.surface_derivs(eta.comp(0), 2);
    let mut out = SurfaceField::scalar(ng.surface_from_nodal(&mean_curvature_nodal(&s)));
    out.symmetrize(ng.lattice());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_lattice, DomainSpec, Factor, Lattice, VerticalGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn setup(kappa: f64) -> (DomainSpec, Lattice, VerticalGrid, NodalGrid) {
        let s = DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, kappa, 1.0, 1.0).unwrap();
        let lat = build_lattice(&s, &[8]).unwrap();
        let grid = VerticalGrid::new(1.0, 12);
        let ng = NodalGrid::new(&lat, &grid);
        (s, lat, grid, ng)
    }

    fn random_volume(lat: &Lattice, nodes: usize, ncomp: usize, rng: &mut ChaCha8Rng) -> VolumeField {
        let mut f = VolumeField::zeros(lat.len(), nodes, ncomp);
        for c in 0..ncomp {
            for l in 0..lat.len() {
                if lat.wavenumbers(l)[0].abs() > 3 {
                    continue;
                }
                for j in 0..nodes {
                    f.set(
                        c,
                        l,
                        j,
                        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    );
                }
            }
        }
        f.symmetrize(lat);
        f
    }

    #[test]
    fn flat_operators_reduce_to_spectral_ones() {
        let (s, lat, grid, ng) = setup(0.0);
        let pack = GeometryPack::new(&SurfaceField::zeros(lat.len(), 1), &s, &ng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_volume(&lat, grid.len(), 2, &mut rng);
        let div = a_calculus(&ng, &pack, &u, None, AOperator::Div).unwrap();
        let lap = a_calculus(&ng, &pack, &u, None, AOperator::Laplacian).unwrap();
        for l in 0..lat.len() {
            let a = C64::new(0.0, 2.0 * PI * lat.xi(l)[0]);
            let dz = grid.differentiate(u.profile(1, l));
            let d2z = grid.differentiate(&grid.differentiate(u.profile(0, l)));
            for j in 0..grid.len() {
                let expect = a * u.get(0, l, j) + dz[j];
                assert!((div.get(0, l, j) - expect).norm() < 1e-9);
                let el = a * a * u.get(0, l, j) + d2z[j];
                assert!((lap.get(0, l, j) - el).norm() < 1e-8 * (1.0 + el.norm()));
            }
        }
        let p = random_volume(&lat, grid.len(), 1, &mut rng);
        let zero = VolumeField::zeros(lat.len(), grid.len(), 2);
        let st = a_calculus(&ng, &pack, &zero, Some(&p), AOperator::Stress).unwrap();
        for l in 0..lat.len() {
            for j in 0..grid.len() {
                assert!((st.get(0, l, j) - p.get(0, l, j)).norm() < 1e-13);
                assert!(st.get(1, l, j).norm() < 1e-13);
                assert!((st.get(3, l, j) - p.get(0, l, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn pulled_back_derivative_matches_chain_rule() {
        // v(y) = y_n^2 sin(2 pi y_1), u = v o F, grad_A u = (grad v) o F.
        let (s, lat, grid, ng) = setup(0.0);
        let mut eta = SurfaceField::zeros(lat.len(), 1);
        let p1 = lat.index_of(&[1]).unwrap();
        eta.set(0, p1, C64::new(0.05, 0.0));
        eta.set(0, lat.neg(p1), C64::new(0.05, 0.0));
        let pack = GeometryPack::new(&eta, &s, &ng).unwrap();
        let g = ng.hlen();
        let e = |x: f64| 0.1 * (2.0 * PI * x).cos();
        let mut nodal = vec![C64::new(0.0, 0.0); ng.vlen()];
        for j in 0..ng.nodes() {
            for q in 0..g {
                let x = ng.point(q)[0];
                let yn = ng.height(j) * (1.0 + e(x));
                nodal[j * g + q] = C64::new(yn * yn * (2.0 * PI * x).sin(), 0.0);
            }
        }
        let mut u = VolumeField::zeros(lat.len(), grid.len(), 1);
        ng.volume_from_nodal(&nodal, &mut u, 0);
        let du = ng.volume_derivs(&u, 0, 2);
        let gr = grad_a(&pack, &du);
        let lap = laplacian_a(&pack, &du);
        let mut worst = 0.0f64;
        for j in 0..ng.nodes() {
            for q in 0..g {
                let x = ng.point(q)[0];
                let yn = ng.height(j) * (1.0 + e(x));
                let i = j * g + q;
                let s1 = (2.0 * PI * x).sin();
                let c1 = (2.0 * PI * x).cos();
                worst = worst.max((gr[0][i].re - 2.0 * PI * yn * yn * c1).abs());
                worst = worst.max((gr[1][i].re - 2.0 * yn * s1).abs());
                let l = -4.0 * PI * PI * yn * yn * s1 + 2.0 * s1;
                worst = worst.max((lap[i].re - l).abs());
            }
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn curvature_linearizes_to_laplacian() {
        let lat = Lattice::from_factors(&[Factor::torus(2.0 * PI, 33)], &[8]).unwrap();
        let ng = NodalGrid::new(&lat, &VerticalGrid::new(1.0, 4));
        let a = 1e-3;
        let mut eta = SurfaceField::zeros(lat.len(), 1);
        let p1 = lat.index_of(&[1]).unwrap();
        eta.set(0, p1, C64::new(0.0, -a / 2.0));
        eta.set(0, lat.neg(p1), C64::new(0.0, a / 2.0));
        let h = mean_curvature(&ng, &eta);
        let lap: Vec<C64> = (0..lat.len())
            .map(|l| eta.get(0, l) * (-4.0 * PI * PI * lat.xi(l)[0].powi(2)))
            .collect();
        let err = h
            .coeffs
            .iter()
            .zip(&lap)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm = lap.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 10.0 * a * a * norm);
        assert!(mean_curvature(&ng, &SurfaceField::zeros(lat.len(), 1)).max_abs() == 0.0);
    }
}
