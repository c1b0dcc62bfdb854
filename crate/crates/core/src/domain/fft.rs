use super::lattice::{ravel, unravel};
use super::Lattice;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unitary transform between lattice coefficients and samples on a uniform
/// nodal grid of the cross-section.
///
/// Any grid with at least `2K + 1` points per factor may be used; larger
/// grids serve as zero-padded (dealiased) product grids.
#[derive(Clone)]
pub struct HorizontalFft {
    dims: Vec<usize>,
    lengths: Vec<f64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    positions: Vec<usize>,
    forward_scale: f64,
}

impl std::fmt::Debug for HorizontalFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HorizontalFft").field("dims", &self.dims).finish()
    }
}

impl HorizontalFft {
    pub fn new(lattice: &Lattice, dims: &[usize]) -> Result<Self> {
        if dims.len() != lattice.dim() {
            return Err(Error::Shape(format!(
                "grid has {} axes, lattice has {}",
                dims.len(),
                lattice.dim()
            )));
        }
        for (&n, &k) in dims.iter().zip(lattice.cutoffs()) {
            if n < 2 * k + 1 {
                return Err(Error::Shape(format!("grid size {n} cannot carry cutoff {k}")));
            }
        }
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let positions = (0..lattice.len())
            .map(|idx| {
                let pos: Vec<usize> = lattice
                    .wavenumbers(idx)
                    .iter()
                    .zip(dims)
                    .map(|(&k, &n)| k.rem_euclid(n as i64) as usize)
                    .collect();
                ravel(&pos, dims)
            })
            .collect();
        let forward_scale = lattice
            .factors()
            .iter()
            .zip(dims)
            .map(|(f, &n)| f.normalization() * f.period() / n as f64)
            .product();
        let lengths = lattice.factors().iter().map(|f| f.period()).collect();
        Ok(HorizontalFft {
            dims: dims.to_vec(),
            lengths,
            forward,
            inverse,
            positions,
            forward_scale,
        })
    }

    /// Grid whose size is exactly `2K + 1` per factor.
    pub fn minimal(lattice: &Lattice) -> Self {
        let dims: Vec<usize> = lattice.cutoffs().iter().map(|&k| 2 * k + 1).collect();
        Self::new(lattice, &dims).expect("minimal grid always fits")
    }

    /// Zero-padded grid obeying the 3/2 rule.
    pub fn dealiased(lattice: &Lattice) -> Self {
        let dims: Vec<usize> = lattice.cutoffs().iter().map(|&k| padded_size(k)).collect();
        Self::new(lattice, &dims).expect("padded grid always fits")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn grid_len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Physical coordinates of nodal point `i`.
    pub fn node(&self, i: usize) -> Vec<f64> {
        unravel(i, &self.dims)
            .iter()
            .zip(&self.dims)
            .zip(&self.lengths)
            .map(|((&p, &n), &l)| p as f64 * l / n as f64)
            .collect()
    }

    /// Cell volume of the nodal grid.
    pub fn cell_volume(&self) -> f64 {
        self.dims
            .iter()
            .zip(&self.lengths)
            .map(|(&n, &l)| l / n as f64)
            .product()
    }

    /// Samples to coefficients; modes outside the lattice are discarded.
    pub fn forward(&self, samples: &[C64]) -> Vec<C64> {
        assert_eq!(samples.len(), self.grid_len(), "sample count does not match grid");
        let mut buf = samples.to_vec();
        self.transform(&mut buf, &self.forward);
        self.positions.iter().map(|&p| buf[p] * self.forward_scale).collect()
    }

    pub fn forward_real(&self, samples: &[f64]) -> Vec<C64> {
        let c: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward(&c)
    }

    /// Coefficients to samples.
    pub fn inverse(&self, coeffs: &[C64]) -> Vec<C64> {
        assert_eq!(
            coeffs.len(),
            self.positions.len(),
            "coefficient count does not match lattice"
        );
        let mut buf = vec![C64::new(0.0, 0.0); self.grid_len()];
        let s = 1.0 / (self.forward_scale * self.grid_len() as f64);
        for (&p, &c) in self.positions.iter().zip(coeffs) {
            buf[p] = c * s;
        }
        self.transform(&mut buf, &self.inverse);
        buf
    }

    /// Coefficients to real samples (imaginary parts dropped).
    pub fn inverse_real(&self, coeffs: &[C64]) -> Vec<f64> {
        self.inverse(coeffs).into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, buf: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        let d = self.dims.len();
        for axis in 0..d {
            let n = self.dims[axis];
            let stride: usize = self.dims[axis + 1..].iter().product();
            let outer: usize = self.dims[..axis].iter().product();
            let plan = &plans[axis];
            let mut line = vec![C64::new(0.0, 0.0); n];
            let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (i, l) in line.iter_mut().enumerate() {
                        *l = buf[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, l) in line.iter().enumerate() {
                        buf[base + i * stride] = *l;
                    }
                }
            }
        }
    }
}

/// Smallest FFT-friendly size holding `3K + 1` points.
pub(crate) fn padded_size(k: usize) -> usize {
    let need = 3 * k + 2;
    (need..).find(|&n| is_smooth(n)).unwrap()
}

fn is_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Factor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn dc_and_cosine() {
        let lat = Lattice::from_factors(&[Factor::torus(1.0, 9)], &[4]).unwrap();
        let t = HorizontalFft::minimal(&lat);
        let c = t.forward_real(&[1.0; 9]);
        for (i, ci) in c.iter().enumerate() {
            let expect = if i == lat.zero_index() { 1.0 } else { 0.0 };
            assert!((ci - expect).norm() < 1e-14);
        }
        let samples: Vec<f64> = (0..9).map(|j| (2.0 * PI * t.node(j)[0]).cos()).collect();
        let c = t.forward_real(&samples);
        let p = lat.index_of(&[1]).unwrap();
        let m = lat.index_of(&[-1]).unwrap();
        assert!((c[p] - 0.5).norm() < 1e-14 && (c[m] - 0.5).norm() < 1e-14);
    }

    #[test]
    fn round_trip_and_parseval_mixed() {
        let f = [Factor::real(6.0, 11), Factor::torus(2.0, 7)];
        let lat = Lattice::from_factors(&f, &[5, 3]).unwrap();
        let t = HorizontalFft::new(&lat, &[11, 7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s: Vec<f64> = (0..t.grid_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = t.forward_real(&s);
            let back = t.inverse_real(&c);
            let err = s.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12);
            let e_nodal: f64 = s.iter().map(|x| x * x).sum::<f64>() * t.cell_volume();
            let e_modal: f64 = c.iter().zip(lat.weights()).map(|(c, w)| c.norm_sqr() * w).sum();
            assert!((e_nodal - e_modal).abs() < 1e-12 * e_nodal);
            for i in 0..lat.len() {
                assert!((c[lat.neg(i)] - c[i].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn padded_grid_interpolates() {
        let lat = Lattice::from_factors(&[Factor::torus(1.0, 9)], &[4]).unwrap();
        let t = HorizontalFft::minimal(&lat);
        let p = HorizontalFft::dealiased(&lat);
        assert!(p.dims()[0] >= 14);
        let s: Vec<f64> = (0..9).map(|j| (2.0 * PI * 3.0 * t.node(j)[0]).sin()).collect();
        let c = t.forward_real(&s);
        let fine = p.inverse_real(&c);
        for (j, v) in fine.iter().enumerate() {
            assert!((v - (2.0 * PI * 3.0 * p.node(j)[0]).sin()).abs() < 1e-12);
        }
        let c2 = p.forward_real(&fine);
        assert!(c.iter().zip(&c2).all(|(a, b)| (a - b).norm() < 1e-13));
    }
}
