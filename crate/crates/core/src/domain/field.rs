use super::Lattice;
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Sub};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Spectral coefficients on the dual lattice, one block per component.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub ncomp: usize,
    pub coeffs: Vec<C64>,
    pub is_real: bool,
}

impl SurfaceField {
    pub fn zeros(nlat: usize, ncomp: usize) -> Self {
        SurfaceField {
            ncomp,
            coeffs: vec![ZERO; nlat * ncomp],
            is_real: true,
        }
    }

    pub fn scalar(coeffs: Vec<C64>) -> Self {
        SurfaceField {
            ncomp: 1,
            coeffs,
            is_real: true,
        }
    }

    pub fn nlat(&self) -> usize {
        self.coeffs.len() / self.ncomp.max(1)
    }

    pub fn comp(&self, c: usize) -> &[C64] {
        let n = self.nlat();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [C64] {
        let n = self.nlat();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, l: usize) -> C64 {
        self.coeffs[c * self.nlat() + l]
    }

    pub fn set(&mut self, c: usize, l: usize, v: C64) {
        let n = self.nlat();
        self.coeffs[c * n + l] = v;
    }

    pub fn scaled(&self, a: f64) -> Self {
        SurfaceField {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            ..self.clone()
        }
    }

    /// Largest violation of `c(-xi) = conj c(xi)`.
    pub fn symmetry_defect(&self, lattice: &Lattice) -> f64 {
        conj_defect(&self.coeffs, self.ncomp, 1, lattice)
    }

    /// Projects onto real fields by averaging `c(xi)` with `conj c(-xi)`.
    pub fn symmetrize(&mut self, lattice: &Lattice) {
        symmetrize(&mut self.coeffs, self.ncomp, 1, lattice);
        self.is_real = true;
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Spectral coefficients on lattice x vertical nodes; layout `[comp][xi][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    pub ncomp: usize,
    pub nlat: usize,
    pub nvert: usize,
    pub coeffs: Vec<C64>,
}

impl VolumeField {
    pub fn zeros(nlat: usize, nvert: usize, ncomp: usize) -> Self {
        VolumeField {
            ncomp,
            nlat,
            nvert,
            coeffs: vec![ZERO; nlat * nvert * ncomp],
        }
    }

    fn offset(&self, c: usize, l: usize) -> usize {
        (c * self.nlat + l) * self.nvert
    }

    /// Vertical profile of component `c` at lattice point `l`.
    pub fn profile(&self, c: usize, l: usize) -> &[C64] {
        let o = self.offset(c, l);
        &self.coeffs[o..o + self.nvert]
    }

    pub fn profile_mut(&mut self, c: usize, l: usize) -> &mut [C64] {
        let o = self.offset(c, l);
        &mut self.coeffs[o..o + self.nvert]
    }

    pub fn get(&self, c: usize, l: usize, j: usize) -> C64 {
        self.coeffs[self.offset(c, l) + j]
    }

    pub fn set(&mut self, c: usize, l: usize, j: usize, v: C64) {
        let o = self.offset(c, l);
        self.coeffs[o + j] = v;
    }

    /// Coefficients of component `c` at vertical node `j`, over the lattice.
    pub fn layer(&self, c: usize, j: usize) -> Vec<C64> {
        (0..self.nlat).map(|l| self.get(c, l, j)).collect()
    }

    pub fn set_layer(&mut self, c: usize, j: usize, values: &[C64]) {
        for (l, v) in values.iter().enumerate() {
            self.set(c, l, j, *v);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        VolumeField {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            ..self.clone()
        }
    }

    pub fn symmetry_defect(&self, lattice: &Lattice) -> f64 {
        conj_defect(&self.coeffs, self.ncomp, self.nvert, lattice)
    }

    pub fn symmetrize(&mut self, lattice: &Lattice) {
        symmetrize(&mut self.coeffs, self.ncomp, self.nvert, lattice);
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

fn conj_defect(coeffs: &[C64], ncomp: usize, nvert: usize, lattice: &Lattice) -> f64 {
    let nlat = lattice.len();
    let mut worst: f64 = 0.0;
    for c in 0..ncomp {
        for l in 0..nlat {
            let m = lattice.neg(l);
            for j in 0..nvert {
                let a = coeffs[(c * nlat + l) * nvert + j];
                let b = coeffs[(c * nlat + m) * nvert + j];
                worst = worst.max((a - b.conj()).norm());
            }
        }
    }
    worst
}

fn symmetrize(coeffs: &mut [C64], ncomp: usize, nvert: usize, lattice: &Lattice) {
    let nlat = lattice.len();
    for c in 0..ncomp {
        for l in 0..nlat {
            let m = lattice.neg(l);
            if m < l {
                continue;
            }
            for j in 0..nvert {
                let ia = (c * nlat + l) * nvert + j;
                let ib = (c * nlat + m) * nvert + j;
                let avg = 0.5 * (coeffs[ia] + coeffs[ib].conj());
                coeffs[ia] = avg;
                coeffs[ib] = avg.conj();
            }
        }
    }
}

macro_rules! impl_linear {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                assert_eq!(self.coeffs.len(), rhs.coeffs.len());
                let mut out = self.clone();
                for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
                    *a += b;
                }
                out
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                assert_eq!(self.coeffs.len(), rhs.coeffs.len());
                let mut out = self.clone();
                for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
                    *a -= b;
                }
                out
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, a: f64) -> $t {
                self.scaled(a)
            }
        }
    };
}

impl_linear!(SurfaceField);
impl_linear!(VolumeField);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Factor;

    #[test]
    fn symmetrize_makes_real() {
        let lat = Lattice::from_factors(&[Factor::torus(1.0, 9)], &[3]).unwrap();
        let mut v = VolumeField::zeros(lat.len(), 4, 2);
        for (i, c) in v.coeffs.iter_mut().enumerate() {
            *c = C64::new(i as f64, (i * i) as f64 * 0.1);
        }
        assert!(v.symmetry_defect(&lat) > 0.0);
        v.symmetrize(&lat);
        assert!(v.symmetry_defect(&lat) < 1e-15);
        assert_eq!(v.get(1, lat.zero_index(), 2).im, 0.0);
    }

    #[test]
    fn arithmetic() {
        let a = SurfaceField::scalar(vec![C64::new(1.0, 2.0); 3]);
        let b = &(&a + &a) - &a;
        assert_eq!(b, a);
        assert_eq!((&a * 2.0).coeffs[0], C64::new(2.0, 4.0));
    }
}
