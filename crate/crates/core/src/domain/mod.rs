//! Cross-section geometry, dual lattices, the vertical Chebyshev grid and
//! the spectral field containers.
//!
//! The cross-section is an ordered product of factors, each either a line
//! (represented by periodization with period `P`) or a circle of length `L`.
//! Fields are stored through their unitary Fourier coefficients on the
//! dual lattice; volume fields additionally carry values at the vertical
//! collocation nodes.

mod fft;
mod field;
mod lattice;
mod vertical;

pub use fft::HorizontalFft;
pub use field::{SurfaceField, VolumeField};
pub use lattice::{build_lattice, Lattice};
pub use vertical::VerticalGrid;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One factor of the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Factor {
    /// A line, periodized with period `period`.
    Real { period: f64, grid: usize },
    /// A circle of length `period`.
    Torus { period: f64, grid: usize },
}

impl Factor {
    pub fn real(period: f64, grid: usize) -> Self {
        Factor::Real { period, grid }
    }

    pub fn torus(period: f64, grid: usize) -> Self {
        Factor::Torus { period, grid }
    }

    /// Line factor with the default periodization `16 b`.
    pub fn real_default(depth: f64, grid: usize) -> Self {
        Factor::Real {
            period: 16.0 * depth,
            grid,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Factor::Real { .. })
    }

    pub fn period(&self) -> f64 {
        match *self {
            Factor::Real { period, .. } | Factor::Torus { period, .. } => period,
        }
    }

    pub fn grid(&self) -> usize {
        match *self {
            Factor::Real { grid, .. } | Factor::Torus { grid, .. } => grid,
        }
    }

    /// Normalization applied to the coefficients: `1/sqrt(L)` on circles, `1` on lines.
    pub(crate) fn normalization(&self) -> f64 {
        match *self {
            Factor::Real { .. } => 1.0,
            Factor::Torus { period, .. } => 1.0 / period.sqrt(),
        }
    }

    /// Quadrature weight of one dual-lattice point along this factor.
    pub(crate) fn dual_weight(&self) -> f64 {
        match *self {
            Factor::Real { period, .. } => 1.0 / period,
            Factor::Torus { .. } => 1.0,
        }
    }
}

/// Physical configuration: cross-section, depth, incline and wave parameters.
///
/// Density, viscosity and gravity are normalized to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpecRaw")]
pub struct DomainSpec {
    pub factors: Vec<Factor>,
    pub depth: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub sigma: f64,
    #[serde(default)]
    pub p_ext: f64,
}

#[derive(Deserialize)]
struct DomainSpecRaw {
    factors: Vec<Factor>,
    depth: f64,
    kappa: f64,
    gamma: f64,
    sigma: f64,
    #[serde(default)]
    p_ext: f64,
}

impl TryFrom<DomainSpecRaw> for DomainSpec {
    type Error = Error;

    fn try_from(raw: DomainSpecRaw) -> Result<Self> {
        let mut spec = DomainSpec::new(raw.factors, raw.depth, raw.kappa, raw.gamma, raw.sigma)?;
        spec.p_ext = raw.p_ext;
        Ok(spec)
    }
}

impl DomainSpec {
    pub fn new(factors: Vec<Factor>, depth: f64, kappa: f64, gamma: f64, sigma: f64) -> Result<Self> {
        validate_factors(&factors)?;
        if factors.len() >= 2 && !factors[0].is_real() && factors[1..].iter().any(Factor::is_real) {
            return Err(Error::InvalidDomain(
                "a line factor may not follow a circle in the first position".into(),
            ));
        }
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::InvalidDomain(format!("depth must be positive, got {depth}")));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidDomain("kappa must be finite".into()));
        }
        if !(gamma.is_finite() && gamma != 0.0) {
            return Err(Error::InvalidDomain(format!("gamma must be nonzero, got {gamma}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidDomain(format!("sigma must be >= 0, got {sigma}")));
        }
        if sigma == 0.0 && factors.len() != 1 {
            return Err(Error::InvalidDomain("sigma = 0 requires n = 2".into()));
        }
        Ok(DomainSpec {
            factors,
            depth,
            kappa,
            gamma,
            sigma,
            p_ext: 0.0,
        })
    }

    /// Spatial dimension `n` of the fluid domain.
    pub fn n(&self) -> usize {
        self.factors.len() + 1
    }

    /// Dimension `d = n - 1` of the cross-section.
    pub fn d(&self) -> usize {
        self.factors.len()
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..self.clone() }
    }

    /// True when every factor is a circle.
    pub fn is_toroidal(&self) -> bool {
        self.factors.iter().all(|f| !f.is_real())
    }
}

pub(crate) fn validate_factors(factors: &[Factor]) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::InvalidDomain("at least one factor is required".into()));
    }
    for f in factors {
        if !(f.period().is_finite() && f.period() > 0.0) {
            return Err(Error::InvalidDomain(format!("factor period must be positive: {f:?}")));
        }
        if f.grid() == 0 {
            return Err(Error::InvalidDomain(format!("factor grid must be positive: {f:?}")));
        }
    }
    Ok(())
}

/// Low-frequency radius `r` of a product of factors.
pub fn low_freq_radius_of(factors: &[Factor]) -> f64 {
    factors
        .iter()
        .filter(|f| !f.is_real())
        .map(|f| 1.0 / f.period())
        .fold(1.0, f64::min)
}

pub fn low_freq_radius(spec: &DomainSpec) -> f64 {
    low_freq_radius_of(&spec.factors)
}

/// Canonical permutation: line indices first in their original order, then
/// circle indices. Returned 0-based: entry `i` is the original index placed
/// at position `i`.
pub fn canonical_reorder_of(factors: &[Factor]) -> Vec<usize> {
    let lines = (0..factors.len()).filter(|&i| factors[i].is_real());
    let circles = (0..factors.len()).filter(|&i| !factors[i].is_real());
    lines.chain(circles).collect()
}

pub fn canonical_reorder(spec: &DomainSpec) -> Vec<usize> {
    canonical_reorder_of(&spec.factors)
}

/// Applies a permutation to a coordinate vector: `out[i] = v[perm[i]]`.
pub fn permute_coords(perm: &[usize], v: &[f64]) -> Vec<f64> {
    perm.iter().map(|&j| v[j]).collect()
}

/// Inverse of a permutation.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &j) in perm.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_examples() {
        assert_eq!(low_freq_radius_of(&[Factor::real(10.0, 8), Factor::real(10.0, 8)]), 1.0);
        assert_eq!(
            low_freq_radius_of(&[Factor::real(10.0, 8), Factor::torus(4.0, 8)]),
            0.25
        );
        assert_eq!(low_freq_radius_of(&[Factor::torus(2.0, 8), Factor::torus(0.5, 8)]), 0.5);
    }

    #[test]
    fn reorder_examples() {
        let rtr = [Factor::real(1.0, 4), Factor::torus(1.0, 4), Factor::real(1.0, 4)];
        assert_eq!(canonical_reorder_of(&rtr), vec![0, 2, 1]);
        let tt = [Factor::torus(1.0, 4), Factor::torus(1.0, 4)];
        assert_eq!(canonical_reorder_of(&tt), vec![0, 1]);
        let rr = [Factor::real(1.0, 4), Factor::real(1.0, 4)];
        assert_eq!(canonical_reorder_of(&rr), vec![0, 1]);
        let p = canonical_reorder_of(&rtr);
        let v = [0.1, 0.2, 0.3];
        assert_eq!(
            permute_coords(&invert_permutation(&p), &permute_coords(&p, &v)),
            v.to_vec()
        );
    }

    #[test]
    fn spec_validation() {
        let t = Factor::torus(1.0, 16);
        let r = Factor::real(16.0, 16);
        assert!(DomainSpec::new(vec![t], 1.0, 0.1, 1.0, 1.0).is_ok());
        assert!(DomainSpec::new(vec![t, r], 1.0, 0.1, 1.0, 1.0).is_err());
        assert!(DomainSpec::new(vec![r, t], 1.0, 0.1, 1.0, 1.0).is_ok());
        assert!(DomainSpec::new(vec![t], 1.0, 0.1, 0.0, 1.0).is_err());
        assert!(DomainSpec::new(vec![t], 1.0, 0.1, 1.0, 0.0).is_ok());
        assert!(DomainSpec::new(vec![t, t], 1.0, 0.1, 1.0, 0.0).is_err());
        assert!(DomainSpec::new(vec![t], -1.0, 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn spec_json_validates() {
        let good = r#"{"factors":[{"kind":"torus","period":1.0,"grid":8}],"depth":1,"kappa":0,"gamma":1,"sigma":1}"#;
        assert!(serde_json::from_str::<DomainSpec>(good).is_ok());
        let bad = r#"{"factors":[{"kind":"torus","period":1.0,"grid":8}],"depth":1,"kappa":0,"gamma":0,"sigma":1}"#;
        assert!(serde_json::from_str::<DomainSpec>(bad).is_err());
    }
}
