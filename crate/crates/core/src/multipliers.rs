//! Anisotropic Fourier multipliers and the norms built from them.
//!
//! The weight `mu(xi) = |xi_1|/|xi| + |xi|` degenerates at low frequency
//! away from the `xi_1` axis, so the space `X^s` normed by
//! `|| mu <xi>^(s-1) f^ ||` is weaker than `H^s` there. Which of the two
//! behaviours occurs depends only on which factors of the cross-section are
//! lines, see [`classify_pattern`].

use crate::domain::{low_freq_radius_of, DomainSpec, Factor, Lattice, SurfaceField};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// `mu(xi) = |xi_1|/|xi| + |xi|`, with `mu(0) = 1`.
pub fn mu(xi: &[f64]) -> f64 {
    let n = norm(xi);
    if n == 0.0 {
        1.0
    } else {
        xi[0].abs() / n + n
    }
}

/// Japanese bracket `(1 + |xi|^2)^(1/2)`.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The split multiplier `omega_s`: `xi_1^2/|xi|^2 + |xi|^2` inside the
/// low-frequency ball of radius `r`, `<xi>^(2s)` outside, and `1` at the origin.
pub fn omega_s(xi: &[f64], s: f64, r: f64) -> f64 {
    let n = norm(xi);
    if n == 0.0 {
        1.0
    } else if n < r {
        xi[0] * xi[0] / (n * n) + n * n
    } else {
        bracket(xi).powf(2.0 * s)
    }
}

/// Weight `mu(xi)^2 <xi>^(2(s-1))` of the `X^s` norm.
pub fn xs_weight(xi: &[f64], s: f64) -> f64 {
    let m = mu(xi);
    m * m * bracket(xi).powf(2.0 * (s - 1.0))
}

/// Weight `<xi>^(2s)` of the `H^s` norm.
pub fn hs_weight(xi: &[f64], s: f64) -> f64 {
    bracket(xi).powf(2.0 * s)
}

fn weighted_norm(f: &SurfaceField, lattice: &Lattice, weight: impl Fn(&[f64]) -> f64) -> f64 {
    let nlat = lattice.len();
    let mut acc = 0.0;
    for c in 0..f.ncomp {
        for l in 0..nlat {
            acc += lattice.weight(l) * weight(lattice.xi(l)) * f.get(c, l).norm_sqr();
        }
    }
    acc.sqrt()
}

/// `X^s` norm, summed over components.
pub fn xs_norm(f: &SurfaceField, lattice: &Lattice, s: f64) -> f64 {
    weighted_norm(f, lattice, |xi| xs_weight(xi, s))
}

/// `H^s` norm, summed over components.
pub fn hs_norm(f: &SurfaceField, lattice: &Lattice, s: f64) -> f64 {
    weighted_norm(f, lattice, |xi| hs_weight(xi, s))
}

/// Value of the homogeneous `H^-1` seminorm; infinity is a flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Seminorm {
    Finite(f64),
    Infinite,
}

impl Seminorm {
    pub fn is_finite(&self) -> bool {
        matches!(self, Seminorm::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Seminorm::Finite(v) => Some(v),
            Seminorm::Infinite => None,
        }
    }
}

/// Homogeneous `H^-1` seminorm of a scalar field.
///
/// On a fully periodic cross-section it is `0` when the mean vanishes
/// (below `zero_tol`) and infinite otherwise. With line factors it is the
/// low-frequency sum of `|f^|^2 / |xi|^2` over the ball `|xi| < r`, where
/// the ball only meets points whose circle coordinates vanish.
pub fn hdot_minus1_tol(f: &[C64], lattice: &Lattice, zero_tol: f64) -> Seminorm {
    if lattice.is_toroidal() {
        if f[lattice.zero_index()].norm() <= zero_tol {
            Seminorm::Finite(0.0)
        } else {
            Seminorm::Infinite
        }
    } else {
        let r = lattice.r();
        let mut acc = 0.0;
        for l in 0..lattice.len() {
            let n = lattice.xi_norm(l);
            if n > 0.0 && n < r {
                acc += lattice.weight(l) * f[l].norm_sqr() / (n * n);
            }
        }
        Seminorm::Finite(acc.sqrt())
    }
}

/// [`hdot_minus1_tol`] with a mean tolerance of `1e-12 * max(1, ||f||)`.
pub fn hdot_minus1(f: &SurfaceField, lattice: &Lattice) -> Seminorm {
    let scale = hs_norm(f, lattice, 0.0).max(1.0);
    hdot_minus1_tol(f.comp(0), lattice, 1e-12 * scale)
}

/// Relation between `X^s` and `H^s` on a given product of factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceClass {
    XsEqualsHs,
    XsStrictlyLarger,
    Incomplete,
}

/// Classifies from the line/circle pattern (`true` = line).
pub fn classify_pattern(is_line: &[bool]) -> SpaceClass {
    let lines: Vec<usize> = (0..is_line.len()).filter(|&i| is_line[i]).collect();
    let first_is_line = is_line.first().copied().unwrap_or(false);
    if lines.is_empty() || (lines.len() == 1 && first_is_line) {
        SpaceClass::XsEqualsHs
    } else if !first_is_line && lines.len() <= 2 {
        SpaceClass::Incomplete
    } else {
        SpaceClass::XsStrictlyLarger
    }
}

pub fn classify_factors(factors: &[Factor]) -> SpaceClass {
    let p: Vec<bool> = factors.iter().map(Factor::is_real).collect();
    classify_pattern(&p)
}

pub fn classify_space(spec: &DomainSpec) -> SpaceClass {
    classify_factors(&spec.factors)
}

/// Splits `f` into the parts supported on `|xi| < t` and `|xi| >= t`.
pub fn low_high_split(f: &SurfaceField, lattice: &Lattice, t: f64) -> (SurfaceField, SurfaceField) {
    let mut low = f.clone();
    let mut high = f.clone();
    for l in 0..lattice.len() {
        let is_low = lattice.xi_norm(l) < t;
        for c in 0..f.ncomp {
            if is_low {
                high.set(c, l, C64::new(0.0, 0.0));
            } else {
                low.set(c, l, C64::new(0.0, 0.0));
            }
        }
    }
    (low, high)
}

/// Embedding and equivalence constants over a finite lattice.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticeConstants {
    /// `max mu(xi)/<xi>`: `||f||_{X^s} <= C ||f||_{H^s}`.
    pub embedding: f64,
    /// `min mu(xi)/<xi>`: `||f||_{X^s} >= c ||f||_{H^s}` on this lattice.
    pub lower: f64,
    /// Gradient constant `max 2 pi |xi| / mu(xi)`.
    pub gradient: f64,
}

pub fn lattice_constants(lattice: &Lattice) -> LatticeConstants {
    let mut embedding: f64 = 0.0;
    let mut lower = f64::INFINITY;
    let mut gradient: f64 = 0.0;
    for l in 0..lattice.len() {
        let xi = lattice.xi(l);
        let ratio = mu(xi) / bracket(xi);
        embedding = embedding.max(ratio);
        lower = lower.min(ratio);
        gradient = gradient.max(2.0 * std::f64::consts::PI * norm(xi) / mu(xi));
    }
    LatticeConstants {
        embedding,
        lower,
        gradient,
    }
}

/// Norms of one field together with the space classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub s: f64,
    pub xs_norm: f64,
    pub hs_norm: f64,
    pub hdot_minus1: Seminorm,
    pub classification: SpaceClass,
    pub constants: LatticeConstants,
    pub low_freq_radius: f64,
}

pub fn norm_report(f: &SurfaceField, lattice: &Lattice, s: f64) -> NormReport {
    NormReport {
        s,
        xs_norm: xs_norm(f, lattice, s),
        hs_norm: hs_norm(f, lattice, s),
        hdot_minus1: hdot_minus1(f, lattice),
        classification: classify_factors(lattice.factors()),
        constants: lattice_constants(lattice),
        low_freq_radius: lattice.r(),
    }
}

/// One row of the incompleteness table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IncompletenessRow {
    pub q: usize,
    pub points: usize,
    pub xs_term: f64,
    pub l1_term: f64,
    pub xs_partial: f64,
    pub l1_partial: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncompletenessTable {
    pub line_count: usize,
    pub s: f64,
    pub radius: f64,
    /// Measure of the unscaled annulus.
    pub annulus_measure: f64,
    /// Largest `q` whose shell still holds enough lattice points.
    pub max_feasible_q: usize,
    pub rows: Vec<IncompletenessRow>,
}

/// Minimum number of lattice points a dyadic shell must contain.
const MIN_SHELL_POINTS: usize = 32;

/// Partial sums for the sequence `G_n = sum_q 2^(q(1+|R|/2))/q 1_{2^-q C}`,
/// where `C` is the annulus `r/2 < |xi_R| < r` with vanishing circle
/// coordinates. Returns squared `X^s` partial norms and low-ball `L^1` partial
/// norms of the Fourier side. Rows stop at the last resolvable shell.
pub fn incompleteness_sequence(factors: &[Factor], n_terms: usize, s: f64) -> Result<IncompletenessTable> {
    let lines: Vec<usize> = (0..factors.len()).filter(|&i| factors[i].is_real()).collect();
    if lines.is_empty() || lines.len() > 2 || factors[0].is_real() {
        return Err(Error::InvalidDomain(
            "sequence needs one or two line factors, none of them first".into(),
        ));
    }
    let r = low_freq_radius_of(factors);
    let periods: Vec<f64> = lines.iter().map(|&i| factors[i].period()).collect();
    let cell: f64 = periods.iter().map(|p| 1.0 / p).product();
    let dim = lines.len() as f64;
    let base_measure = if lines.len() == 1 {
        r
    } else {
        0.75 * std::f64::consts::PI * r * r
    };
    let mut rows = Vec::new();
    let mut xs_partial = 0.0;
    let mut l1_partial = 0.0;
    let mut max_feasible_q = 0;
    for q in 1..=n_terms {
        let scale = 2f64.powi(-(q as i32));
        let (sums, count) = shell_counts(&periods, 0.5 * r * scale, r * scale, s, cell);
        if count < MIN_SHELL_POINTS {
            break;
        }
        max_feasible_q = q;
        let a = 2f64.powf(q as f64 * (1.0 + dim / 2.0)) / q as f64;
        let xs_term = a * a * sums.0;
        let l1_term = a * sums.1;
        xs_partial += xs_term;
        l1_partial += l1_term;
        rows.push(IncompletenessRow {
            q,
            points: count,
            xs_term,
            l1_term,
            xs_partial,
            l1_partial,
        });
    }
    Ok(IncompletenessTable {
        line_count: lines.len(),
        s,
        radius: r,
        annulus_measure: base_measure,
        max_feasible_q,
        rows,
    })
}

/// Sums of `cell * mu^2 <xi>^(2(s-1))` and `cell` over lattice points with
/// `lo < |xi| < hi` (first coordinate zero, so `mu = |xi|`).
fn shell_counts(periods: &[f64], lo: f64, hi: f64, s: f64, cell: f64) -> ((f64, f64), usize) {
    let mut xs = 0.0;
    let mut count = 0usize;
    let mut visit = |n2: f64| {
        let n = n2.sqrt();
        if n > lo && n < hi {
            xs += n2 * (1.0 + n2).powf(s - 1.0);
            count += 1;
        }
    };
    match periods {
        [p] => {
            let kmax = (hi * p).ceil() as i64;
            for k in -kmax..=kmax {
                let x = k as f64 / p;
                visit(x * x);
            }
        }
        [p1, p2] => {
            let k1max = (hi * p1).ceil() as i64;
            for k1 in -k1max..=k1max {
                let x1 = k1 as f64 / p1;
                let rem = hi * hi - x1 * x1;
                if rem <= 0.0 {
                    continue;
                }
                let k2max = (rem.sqrt() * p2).ceil() as i64;
                for k2 in -k2max..=k2max {
                    let x2 = k2 as f64 / p2;
                    visit(x1 * x1 + x2 * x2);
                }
            }
        }
        _ => unreachable!("one or two line factors"),
    }
    ((xs * cell, count as f64 * cell), count)
}
