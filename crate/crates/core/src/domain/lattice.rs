use super::{low_freq_radius_of, validate_factors, DomainSpec, Factor};
use crate::error::{Error, Result};

/// Truncated dual lattice of the cross-section.
///
/// Points are stored row-major over the factors (last factor fastest), with
/// integer index `k_j` in `-K_j..=K_j` mapped to the frequency `k_j / L_j`.
#[derive(Debug, Clone)]
pub struct Lattice {
    factors: Vec<Factor>,
    cutoffs: Vec<usize>,
    shape: Vec<usize>,
    points: Vec<f64>,
    weights: Vec<f64>,
    neg: Vec<usize>,
    zero: usize,
    r: f64,
}

/// Builds the dual lattice of a validated spec. Cutoffs must be at least one
/// and fit the nodal grid of each factor (`2K + 1 <= N`).
pub fn build_lattice(spec: &DomainSpec, cutoffs: &[usize]) -> Result<Lattice> {
    if cutoffs.contains(&0) {
        return Err(Error::Shape("lattice cutoffs must be >= 1".into()));
    }
    let lat = Lattice::from_factors(&spec.factors, cutoffs)?;
    for (f, &k) in spec.factors.iter().zip(cutoffs) {
        if 2 * k + 1 > f.grid() {
            return Err(Error::Shape(format!(
                "cutoff {k} needs at least {} grid points, factor has {}",
                2 * k + 1,
                f.grid()
            )));
        }
    }
    Ok(lat)
}

impl Lattice {
    /// Lattice over an arbitrary ordered product of factors.
    pub fn from_factors(factors: &[Factor], cutoffs: &[usize]) -> Result<Self> {
        validate_factors(factors)?;
        if factors.len() != cutoffs.len() {
            return Err(Error::Shape(format!(
                "{} cutoffs given for {} factors",
                cutoffs.len(),
                factors.len()
            )));
        }
        let d = factors.len();
        let shape: Vec<usize> = cutoffs.iter().map(|&k| 2 * k + 1).collect();
        let len: usize = shape.iter().product();
        let mut points = Vec::with_capacity(len * d);
        let mut weights = Vec::with_capacity(len);
        let w0: f64 = factors.iter().map(Factor::dual_weight).product();
        for idx in 0..len {
            let ks = unravel(idx, &shape);
            for j in 0..d {
                let k = ks[j] as i64 - cutoffs[j] as i64;
                points.push(k as f64 / factors[j].period());
            }
            weights.push(w0);
        }
        let neg = (0..len)
            .map(|idx| {
                let ks = unravel(idx, &shape);
                let flipped: Vec<usize> = ks.iter().zip(&shape).map(|(&k, &s)| s - 1 - k).collect();
                ravel(&flipped, &shape)
            })
            .collect();
        let zero = ravel(cutoffs, &shape);
        Ok(Lattice {
            factors: factors.to_vec(),
            cutoffs: cutoffs.to_vec(),
            shape,
            points,
            weights,
            neg,
            zero,
            r: low_freq_radius_of(factors),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cross-section dimension `d`.
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn xi(&self, idx: usize) -> &[f64] {
        let d = self.dim();
        &self.points[idx * d..(idx + 1) * d]
    }

    pub fn xi_norm(&self, idx: usize) -> f64 {
        self.xi(idx).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Signed integer wavenumbers of a point.
    pub fn wavenumbers(&self, idx: usize) -> Vec<i64> {
        unravel(idx, &self.shape)
            .iter()
            .zip(&self.cutoffs)
            .map(|(&k, &c)| k as i64 - c as i64)
            .collect()
    }

    /// Index of a point from signed wavenumbers, if inside the truncation.
    pub fn index_of(&self, ks: &[i64]) -> Option<usize> {
        let mut pos = Vec::with_capacity(ks.len());
        for (&k, &c) in ks.iter().zip(&self.cutoffs) {
            if k.unsigned_abs() as usize > c {
                return None;
            }
            pos.push((k + c as i64) as usize);
        }
        Some(ravel(&pos, &self.shape))
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of `-xi`.
    pub fn neg(&self, idx: usize) -> usize {
        self.neg[idx]
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    /// Low-frequency radius.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Factor `c` such that a field equals `c * sum_xi f(xi) e^(2 pi i xi.x)`.
    pub fn synthesis_scale(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| 1.0 / (f.normalization() * f.period()))
            .product()
    }

    pub fn is_toroidal(&self) -> bool {
        self.factors.iter().all(|f| !f.is_real())
    }

    /// Lattice with coordinates permuted by `perm` (see `canonical_reorder`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Lattice> {
        let factors: Vec<Factor> = perm.iter().map(|&j| self.factors[j]).collect();
        let cutoffs: Vec<usize> = perm.iter().map(|&j| self.cutoffs[j]).collect();
        Lattice::from_factors(&factors, &cutoffs)
    }
}

pub(crate) fn unravel(mut idx: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for j in (0..shape.len()).rev() {
        out[j] = idx % shape[j];
        idx /= shape[j];
    }
    out
}

pub(crate) fn ravel(pos: &[usize], shape: &[usize]) -> usize {
    pos.iter().zip(shape).fold(0, |acc, (&p, &s)| acc * s + p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(lat: &Lattice) -> Vec<f64> {
        (0..lat.len()).map(|i| lat.xi(i)[0]).collect()
    }

    #[test]
    fn one_dimensional_examples() {
        let l = Lattice::from_factors(&[Factor::torus(1.0, 8)], &[2]).unwrap();
        assert_eq!(coords(&l), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let l = Lattice::from_factors(&[Factor::torus(0.5, 8)], &[1]).unwrap();
        assert_eq!(coords(&l), vec![-2.0, 0.0, 2.0]);
        let l = Lattice::from_factors(&[Factor::real(10.0, 8)], &[3]).unwrap();
        let c = coords(&l);
        for (i, x) in c.iter().enumerate() {
            assert!((x - (i as f64 - 3.0) * 0.1).abs() < 1e-15);
        }
        assert_eq!(l.weight(0), 0.1);
    }

    #[test]
    fn negation_and_zero() {
        let f = [Factor::real(8.0, 9), Factor::torus(2.0, 7)];
        let l = Lattice::from_factors(&f, &[4, 3]).unwrap();
        assert_eq!(l.xi(l.zero_index()), &[0.0, 0.0]);
        for i in 0..l.len() {
            let j = l.neg(i);
            assert_eq!(l.neg(j), i);
            for (a, b) in l.xi(i).iter().zip(l.xi(j)) {
                assert_eq!(*a, -*b);
            }
            assert_eq!(l.index_of(&l.wavenumbers(i)), Some(i));
        }
    }

    #[test]
    fn permutation_round_trip() {
        let f = [Factor::real(8.0, 9), Factor::torus(2.0, 7), Factor::real(4.0, 5)];
        let l = Lattice::from_factors(&f, &[4, 3, 2]).unwrap();
        let p = crate::domain::canonical_reorder_of(&f);
        let q = crate::domain::invert_permutation(&p);
        let back = l.permuted(&p).unwrap().permuted(&q).unwrap();
        for i in 0..l.len() {
            assert_eq!(l.xi(i), back.xi(i));
        }
    }

    #[test]
    fn grid_must_hold_cutoff() {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 8)], 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(build_lattice(&spec, &[3]).is_ok());
        assert!(build_lattice(&spec, &[4]).is_err());
        assert!(build_lattice(&spec, &[0]).is_err());
    }
}
