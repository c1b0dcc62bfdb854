use crate::domain::{HorizontalFft, Lattice, VerticalGrid, VolumeField};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Product grid of a zero-padded horizontal grid and the vertical nodes.
///
/// Volume samples are laid out node-major: index `j * G + g` for vertical
/// node `j` and horizontal point `g`.
#[derive(Debug, Clone)]
pub struct NodalGrid {
    lattice: Lattice,
    grid: VerticalGrid,
    fft: HorizontalFft,
    points: Vec<Vec<f64>>,
}

/// Nodal values and derivatives of one scalar.
#[derive(Debug, Clone)]
pub struct Derivs {
    pub val: Vec<C64>,
    /// `d1[k] = d_k f`.
    pub d1: Vec<Vec<C64>>,
    /// `d2[k][m] = d_k d_m f`; empty when not requested.
    pub d2: Vec<Vec<Vec<C64>>>,
}

impl NodalGrid {
    /// Grid obeying the 3/2 rule.
    pub fn new(lattice: &Lattice, grid: &VerticalGrid) -> Self {
        Self::with_fft(lattice, grid, HorizontalFft::dealiased(lattice))
    }

    pub fn with_fft(lattice: &Lattice, grid: &VerticalGrid, fft: HorizontalFft) -> Self {
        let points = (0..fft.grid_len()).map(|g| fft.node(g)).collect();
        NodalGrid {
            lattice: lattice.clone(),
            grid: grid.clone(),
            fft,
            points,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn vertical(&self) -> &VerticalGrid {
        &self.grid
    }

    pub fn fft(&self) -> &HorizontalFft {
        &self.fft
    }

    /// Number of horizontal points.
    pub fn hlen(&self) -> usize {
        self.points.len()
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn vlen(&self) -> usize {
        self.hlen() * self.nodes()
    }

    pub fn point(&self, g: usize) -> &[f64] {
        &self.points[g]
    }

    /// Height of vertical node `j`.
    pub fn height(&self, j: usize) -> f64 {
        self.grid.nodes()[j]
    }

    fn multiplier(&self, alpha: &[u8]) -> Vec<C64> {
        (0..self.lattice.len())
            .map(|l| {
                let xi = self.lattice.xi(l);
                let mut m = C64::new(1.0, 0.0);
                for (k, &a) in alpha.iter().enumerate() {
                    m *= C64::new(0.0, 2.0 * PI * xi[k]).powu(a as u32);
                }
                m
            })
            .collect()
    }

    pub fn surface_to_nodal(&self, coeffs: &[C64]) -> Vec<C64> {
        self.fft.inverse(coeffs)
    }

    /// Horizontal derivative `d^alpha` of a surface field, sampled.
    pub fn surface_derivative(&self, coeffs: &[C64], alpha: &[u8]) -> Vec<C64> {
        let m = self.multiplier(alpha);
        let c: Vec<C64> = coeffs.iter().zip(&m).map(|(a, b)| a * b).collect();
        self.fft.inverse(&c)
    }

    pub fn surface_from_nodal(&self, vals: &[C64]) -> Vec<C64> {
        self.fft.forward(vals)
    }

    /// Surface field with all derivatives up to `order <= 2`.
    pub fn surface_derivs(&self, coeffs: &[C64], order: usize) -> Derivs {
        let d = self.lattice.dim();
        let val = self.surface_to_nodal(coeffs);
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        if order >= 1 {
            for k in 0..d {
                let mut a = vec![0u8; d];
                a[k] = 1;
                d1.push(self.surface_derivative(coeffs, &a));
            }
        }
        if order >= 2 {
            d2 = vec![vec![Vec::new(); d]; d];
            for k in 0..d {
                for m in k..d {
                    let mut a = vec![0u8; d];
                    a[k] += 1;
                    a[m] += 1;
                    let v = self.surface_derivative(coeffs, &a);
                    d2[m][k] = v.clone();
                    d2[k][m] = v;
                }
            }
        }
        Derivs { val, d1, d2 }
    }

    /// Samples `d^alpha` of component `c`; the last entry of `alpha` is the
    /// vertical order.
    pub fn volume_derivative(&self, f: &VolumeField, c: usize, alpha: &[u8]) -> Vec<C64> {
        let d = self.lattice.dim();
        let nodes = self.nodes();
        let m = self.multiplier(&alpha[..d]);
        let vorder = alpha.get(d).copied().unwrap_or(0);
        let mut modal = vec![ZERO; self.lattice.len() * nodes];
        for l in 0..self.lattice.len() {
            let mut prof = f.profile(c, l).to_vec();
            for _ in 0..vorder {
                prof = self.grid.differentiate(&prof);
            }
            for j in 0..nodes {
                modal[j * self.lattice.len() + l] = prof[j] * m[l];
            }
        }
        let g = self.hlen();
        let nlat = self.lattice.len();
        let mut out = vec![ZERO; g * nodes];
        out.par_chunks_mut(g).enumerate().for_each(|(j, chunk)| {
            chunk.copy_from_slice(&self.fft.inverse(&modal[j * nlat..(j + 1) * nlat]));
        });
        out
    }

    /// Component `c` with all derivatives up to `order <= 2`.
    pub fn volume_derivs(&self, f: &VolumeField, c: usize, order: usize) -> Derivs {
        let n = self.lattice.dim() + 1;
        let val = self.volume_derivative(f, c, &vec![0; n]);
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        if order >= 1 {
            for k in 0..n {
                let mut a = vec![0u8; n];
                a[k] = 1;
                d1.push(self.volume_derivative(f, c, &a));
            }
        }
        if order >= 2 {
            d2 = vec![vec![Vec::new(); n]; n];
            for k in 0..n {
                for m in k..n {
                    let mut a = vec![0u8; n];
                    a[k] += 1;
                    a[m] += 1;
                    let v = self.volume_derivative(f, c, &a);
                    d2[m][k] = v.clone();
                    d2[k][m] = v;
                }
            }
        }
        Derivs { val, d1, d2 }
    }

    /// Forward-transforms node-major samples into component `c` of `out`.
    pub fn volume_from_nodal(&self, vals: &[C64], out: &mut VolumeField, c: usize) {
        let g = self.hlen();
        let layers: Vec<Vec<C64>> = vals.par_chunks(g).map(|chunk| self.fft.forward(chunk)).collect();
        for (j, layer) in layers.iter().enumerate() {
            for (l, v) in layer.iter().enumerate() {
                out.set(c, l, j, *v);
            }
        }
    }

    /// Samples at vertical node `j`.
    pub fn layer<'a>(&self, vals: &'a [C64], j: usize) -> &'a [C64] {
        let g = self.hlen();
        &vals[j * g..(j + 1) * g]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Factor;

    #[test]
    fn derivatives_of_a_separable_mode() {
        let lat = Lattice::from_factors(&[Factor::torus(1.0, 9)], &[4]).unwrap();
        let grid = VerticalGrid::new(1.0, 12);
        let ng = NodalGrid::new(&lat, &grid);
        let mut f = VolumeField::zeros(lat.len(), grid.len(), 1);
        let p = lat.index_of(&[2]).unwrap();
        let q = lat.neg(p);
        for (j, &z) in grid.nodes().iter().enumerate() {
            f.set(0, p, j, C64::new(0.5 * z * z, 0.0));
            f.set(0, q, j, C64::new(0.5 * z * z, 0.0));
        }
        // f = z^2 cos(4 pi x)
        let dv = ng.volume_derivs(&f, 0, 2);
        for j in 0..ng.nodes() {
            let z = ng.height(j);
            for g in 0..ng.hlen() {
                let x = ng.point(g)[0];
                let i = j * ng.hlen() + g;
                let c = (4.0 * PI * x).cos();
                let s = (4.0 * PI * x).sin();
                assert!((dv.val[i].re - z * z * c).abs() < 1e-12);
                assert!((dv.d1[0][i].re + 4.0 * PI * z * z * s).abs() < 1e-11);
                assert!((dv.d1[1][i].re - 2.0 * z * c).abs() < 1e-11);
                assert!((dv.d2[0][1][i].re + 8.0 * PI * z * s).abs() < 1e-10);
                assert!((dv.d2[1][1][i].re - 2.0 * c).abs() < 1e-9);
            }
        }
        let mut back = VolumeField::zeros(lat.len(), grid.len(), 1);
        ng.volume_from_nodal(&dv.val, &mut back, 0);
        let err = back
            .coeffs
            .iter()
            .zip(&f.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13);
    }
}
