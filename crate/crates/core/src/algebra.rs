//! Numerical experiments on the algebra property of `X^s`: the trilinear
//! functional
//! `I[F, G, H] = int_{B(0,1)^2} mu(xi + eta) / (mu(xi) mu(eta)) F(xi) G(eta) H(xi + eta)`,
//! its split into the subadditive region `E0` and the near-diagonal region
//! `E1`, and empirical product bounds.

use crate::domain::{Factor, HorizontalFft, Lattice, SurfaceField};
use crate::error::{Error, Result};
use crate::multipliers::{mu, xs_norm};
use crate::report::{all_passed, Check};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radius below which quadrature nodes are dropped.
const ORIGIN_EXCLUSION: f64 = 1e-6;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Tensor midpoint grid on `[-1, 1]^d` restricted to `B(0, 1)`.
///
/// Sums `xi + eta` of two nodes land on the grid with nodes
/// `(k + 1) h - 2`, `0 <= k < 2 res - 1`, which carries `H`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    d: usize,
    res: usize,
    h: f64,
    nodes: Vec<Vec<f64>>,
    norms: Vec<f64>,
    /// Cell averages of `1/mu`.
    inv_mu: Vec<f64>,
    /// Position of each node's contribution in the sum grid.
    offsets: Vec<usize>,
}

impl QuadratureGrid {
    pub fn new(d: usize, res: usize) -> Result<Self> {
        if d == 0 || res < 2 {
            return Err(Error::Config(format!(
                "quadrature needs d >= 1 and res >= 2, got d = {d}, res = {res}"
            )));
        }
        let h = 2.0 / res as f64;
        let sres = 2 * res - 1;
        let total = res.pow(d as u32);
        let mut nodes = Vec::new();
        let mut norms = Vec::new();
        let mut offsets = Vec::new();
        for flat in 0..total {
            let mut rem = flat;
            let mut x = Vec::with_capacity(d);
            let mut off = 0;
            let mut stride = 1;
            for _ in 0..d {
                let i = rem % res;
                rem /= res;
                x.push((i as f64 + 0.5) * h - 1.0);
                off += i * stride;
                stride *= sres;
            }
            let r = norm(&x);
            if (ORIGIN_EXCLUSION..1.0).contains(&r) {
                nodes.push(x);
                norms.push(r);
                offsets.push(off);
            }
        }
        let inv_mu = nodes.par_iter().map(|x| cell_average_inv_mu(x, h)).collect();
        Ok(QuadratureGrid {
            d,
            res,
            h,
            nodes,
            norms,
            inv_mu,
            offsets,
        })
    }

    /// Default resolution: 32 cells per axis for `d = 2`, 12 otherwise.
    pub fn default_for(d: usize) -> Result<Self> {
        Self::new(d, if d <= 2 { 32 } else { 12 })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn resolution(&self) -> usize {
        self.res
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    /// Weight of every node.
    pub fn weight(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn total_weight(&self) -> f64 {
        self.weight() * self.len() as f64
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        self.nodes.par_iter().map(|x| f(x)).collect()
    }

    /// Samples `h` on the sum grid, as zero outside `B(0, 2)`.
    pub fn sample_sum(&self, h: impl Fn(&[f64]) -> f64 + Sync) -> SumField {
        let sres = 2 * self.res - 1;
        let total = sres.pow(self.d as u32);
        let (values, mus): (Vec<f64>, Vec<f64>) = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut rem = flat;
                let x: Vec<f64> = (0..self.d)
                    .map(|_| {
                        let k = rem % sres;
                        rem /= sres;
                        (k as f64 + 1.0) * self.h - 2.0
                    })
                    .collect();
                if norm(&x) < 2.0 {
                    (h(&x), mu(&x))
                } else {
                    (0.0, 0.0)
                }
            })
            .unzip();
        SumField {
            values,
            mus,
            weight: self.weight(),
        }
    }

    /// Discrete `L^2(B(0,1))` norm of nodal values.
    pub fn l2(&self, f: &[f64]) -> f64 {
        (self.weight() * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Discrete `||1/mu||_{L^2(B(0,1))}`.
    pub fn inv_mu_l2(&self) -> f64 {
        let s: f64 = self.nodes.iter().map(|x| mu(x).powi(-2)).sum();
        (self.weight() * s).sqrt()
    }
}

/// Sub-cells per axis used to average `1/mu` over a cell.
const CELL_SUBDIVISION: usize = 8;

/// Mean of `1/mu` over the cube of side `h` centered at `x`.
fn cell_average_inv_mu(x: &[f64], h: f64) -> f64 {
    let d = x.len();
    let s = CELL_SUBDIVISION;
    let total = s.pow(d as u32);
    let mut acc = 0.0;
    let mut y = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for a in 0..d {
            let i = rem % s;
            rem /= s;
            y[a] = x[a] + ((i as f64 + 0.5) / s as f64 - 0.5) * h;
        }
        acc += 1.0 / mu(&y);
    }
    acc / total as f64
}

/// Values of `H` and `mu` on the sum grid of a [`QuadratureGrid`].
#[derive(Debug, Clone)]
pub struct SumField {
    values: Vec<f64>,
    mus: Vec<f64>,
    weight: f64,
}

impl SumField {
    /// Discrete `L^2` norm over the sum grid.
    pub fn l2(&self) -> f64 {
        (self.weight * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        SumField {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }
}

/// Region of a frequency pair in `B(0,1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "lowercase")]
pub enum Region {
    /// `|xi| + |eta| <= 3 ||xi| - |eta||`.
    E0,
    /// The complement, with the dyadic shell `2^(-m-1) <= |xi| <= 2^(-m)` and
    /// `2^(-n+1) <= |xi + eta| <= 2^(-n+2)`; `n` is absent when `xi + eta = 0`.
    E1 { m: u32, n: Option<u32> },
}

pub fn in_e0(a: f64, b: f64) -> bool {
    a + b <= 3.0 * (a - b).abs()
}

pub fn region_membership(xi: &[f64], eta: &[f64]) -> Region {
    let a = norm(xi);
    let b = norm(eta);
    if in_e0(a, b) {
        return Region::E0;
    }
    let m = (-a.log2()).floor().max(0.0) as u32;
    let sum: Vec<f64> = xi.iter().zip(eta).map(|(x, y)| x + y).collect();
    let c = norm(&sum);
    let n = if c > 0.0 {
        Some((2.0 - c.log2()).floor().max(0.0) as u32)
    } else {
        None
    };
    Region::E1 { m, n }
}

/// Parts of the discrete trilinear functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearParts {
    pub total: f64,
    pub e0: f64,
    pub e1: f64,
}

/// Double sum of `I[F, G, H]` split over `E0` and `E1`, with `F`, `G`, `H`
/// and `mu(xi + eta)` sampled at nodes and `1/mu(xi)`, `1/mu(eta)` averaged
/// over cells.
pub fn trilinear_parts(grid: &QuadratureGrid, f: &[f64], g: &[f64], h: &SumField) -> TrilinearParts {
    let w = grid.weight();
    let inv_mu = &grid.inv_mu;
    let gi: Vec<f64> = g.iter().zip(inv_mu).map(|(a, b)| a * b).collect();
    let rows: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let fi = f[i] * inv_mu[i];
            if fi == 0.0 {
                return (0.0, 0.0);
            }
            let (oi, ni) = (grid.offsets[i], grid.norms[i]);
            let mut e0 = 0.0;
            let mut e1 = 0.0;
            for j in 0..grid.len() {
                let k = oi + grid.offsets[j];
                let hv = h.values[k];
                if hv == 0.0 || gi[j] == 0.0 {
                    continue;
                }
                let t = gi[j] * hv * h.mus[k];
                if in_e0(ni, grid.norms[j]) {
                    e0 += t;
                } else {
                    e1 += t;
                }
            }
            (fi * e0, fi * e1)
        })
        .collect();
    let (e0, e1) = rows.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    TrilinearParts {
        total: w * w * (e0 + e1),
        e0: w * w * e0,
        e1: w * w * e1,
    }
}

/// `I[F, G, H]` on the grid.
pub fn trilinear_i(grid: &QuadratureGrid, f: &[f64], g: &[f64], h: &SumField) -> f64 {
    trilinear_parts(grid, f, g, h).total
}

/// Result of [`subadditivity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub d: usize,
    pub samples: usize,
    pub e0_samples: usize,
    /// Pairs in `E0` with `mu(xi + eta) > 3 (mu(xi) + mu(eta))`.
    pub violations: usize,
    /// Largest `mu(xi + eta) - 3 (mu(xi) + mu(eta))` over `E0`.
    pub max_excess: f64,
    /// Pairs where `E1` and `|eta|/2 < |xi| < 2 |eta|` disagree.
    pub equivalence_violations: usize,
    /// Pairs in `E1` with `|xi + eta| >= 3 |xi|`.
    pub triangle_violations: usize,
    /// Pairs in `E1` with dyadic indices `m > n`.
    pub dyadic_violations: usize,
}

fn uniform_ball(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if norm(&x) < 1.0 {
            return x;
        }
    }
}

/// Samples uniform pairs in `B(0,1)^2` and checks the region properties.
pub fn subadditivity_check(d: usize, samples: usize, seed: u64) -> SubadditivityReport {
    const CHUNK: usize = 8192;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<SubadditivityReport> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
            let count = CHUNK.min(samples - c * CHUNK);
            let mut r = SubadditivityReport {
                d,
                samples: count,
                e0_samples: 0,
                violations: 0,
                max_excess: f64::NEG_INFINITY,
                equivalence_violations: 0,
                triangle_violations: 0,
                dyadic_violations: 0,
            };
            for _ in 0..count {
                let xi = uniform_ball(&mut rng, d);
                let eta = uniform_ball(&mut rng, d);
                let (a, b) = (norm(&xi), norm(&eta));
                let sum: Vec<f64> = xi.iter().zip(&eta).map(|(x, y)| x + y).collect();
                let region = region_membership(&xi, &eta);
                let bounded = 0.5 * b < a && a < 2.0 * b;
                match region {
                    Region::E0 => {
                        r.e0_samples += 1;
                        let excess = mu(&sum) - 3.0 * (mu(&xi) + mu(&eta));
                        r.max_excess = r.max_excess.max(excess);
                        if excess > 0.0 {
                            r.violations += 1;
                        }
                        if bounded {
                            r.equivalence_violations += 1;
                        }
                    }
                    Region::E1 { m, n } => {
                        if !bounded {
                            r.equivalence_violations += 1;
                        }
                        if norm(&sum) >= 3.0 * a {
                            r.triangle_violations += 1;
                        }
                        if n.is_some_and(|n| m > n) {
                            r.dyadic_violations += 1;
                        }
                    }
                }
            }
            r
        })
        .collect();
    let mut out = SubadditivityReport {
        d,
        samples: 0,
        e0_samples: 0,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
        equivalence_violations: 0,
        triangle_violations: 0,
        dyadic_violations: 0,
    };
    for p in parts {
        out.samples += p.samples;
        out.e0_samples += p.e0_samples;
        out.violations += p.violations;
        out.max_excess = out.max_excess.max(p.max_excess);
        out.equivalence_violations += p.equivalence_violations;
        out.triangle_violations += p.triangle_violations;
        out.dyadic_violations += p.dyadic_violations;
    }
    out
}

/// Families of nonnegative test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Sums of Gaussian bumps.
    Bumps,
    /// Slabs around the hyperplane `xi_1 = 0`, where `1/mu` is large.
    Slab,
    /// Concentration at the origin.
    Origin,
    /// Thin shells at `|xi| = 1/2`, which lie in `E1`.
    Shell,
}

/// A random nonnegative profile on `B(0, radius)`.
#[derive(Debug, Clone)]
struct Profile {
    family: Family,
    centers: Vec<Vec<f64>>,
    widths: Vec<f64>,
    amps: Vec<f64>,
    radius: f64,
}

impl Profile {
    fn random(rng: &mut ChaCha8Rng, family: Family, d: usize, radius: f64) -> Self {
        let k = match family {
            Family::Bumps => 3,
            _ => 1,
        };
        let mut centers = Vec::new();
        let mut widths = Vec::new();
        let mut amps = Vec::new();
        for _ in 0..k {
            let mut c: Vec<f64> = (0..d).map(|_| rng.random_range(-0.6..0.6) * radius).collect();
            let w = match family {
                Family::Bumps => rng.random_range(0.2..0.5),
                Family::Slab => {
                    c[0] = 0.0;
                    rng.random_range(0.12..0.3)
                }
                Family::Origin => {
                    c.iter_mut().for_each(|v| *v = 0.0);
                    rng.random_range(0.15..0.4)
                }
                Family::Shell => rng.random_range(0.1..0.15),
            };
            centers.push(c);
            widths.push(w);
            amps.push(rng.random_range(0.5..1.5));
        }
        Profile {
            family,
            centers,
            widths,
            amps,
            radius,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x) / self.radius;
        if r >= 1.0 {
            return 0.0;
        }
        let cutoff = (1.0 - r * r).powi(2);
        let mut s = 0.0;
        for ((c, &w), &a) in self.centers.iter().zip(&self.widths).zip(&self.amps) {
            let e = match self.family {
                Family::Bumps | Family::Origin => {
                    x.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / (w * w)
                }
                Family::Slab => {
                    let rest: f64 = x.iter().zip(c).skip(1).map(|(p, q)| (p - q) * (p - q)).sum();
                    x[0] * x[0] / (w * w) + rest / 0.25
                }
                Family::Shell => ((norm(x) - 0.5) / w).powi(2),
            };
            s += a * (-e).exp();
        }
        s * cutoff
    }
}

/// Ratio `I / (||F|| ||G|| ||H||)` of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRatio {
    pub trial: usize,
    pub family: Family,
    pub total: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStats {
    pub d: usize,
    pub resolution: usize,
    pub trials: usize,
    pub max_ratio: f64,
    pub argmax: usize,
    pub mean_ratio: f64,
    pub max_e0_ratio: f64,
    /// `6 ||1/mu||_{L^2(B(0,1))}` on the same grid.
    pub e0_bound: f64,
    pub inv_mu_l2: f64,
    /// Upper bound for the part of `int 1/mu^2` inside the excluded ball.
    pub excluded_tail_bound: f64,
    /// Largest ratio over the shell family alone.
    pub shell_max: f64,
    pub ratios: Vec<TrialRatio>,
}

fn trial_family(t: usize) -> Family {
    [Family::Bumps, Family::Slab, Family::Origin, Family::Shell][t % 4]
}

/// Ratio of one trial on `grid`; profiles depend only on `(seed, t)`.
pub fn trial_ratio(grid: &QuadratureGrid, seed: u64, t: usize) -> TrialRatio {
    let d = grid.dim();
    let family = trial_family(t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(t as u64 + 1)));
    let pf = Profile::random(&mut rng, family, d, 1.0);
    let pg = Profile::random(&mut rng, family, d, 1.0);
    let hfam = if family == Family::Shell { Family::Bumps } else { family };
    let ph = Profile::random(&mut rng, hfam, d, 2.0);
    let f = grid.sample(|x| pf.eval(x));
    let g = grid.sample(|x| pg.eval(x));
    let h = grid.sample_sum(|x| ph.eval(x));
    let den = grid.l2(&f) * grid.l2(&g) * h.l2();
    let parts = trilinear_parts(grid, &f, &g, &h);
    TrialRatio {
        trial: t,
        family,
        total: parts.total / den,
        e0: parts.e0 / den,
    }
}

/// Statistics of `I / (||F|| ||G|| ||H||)` over random and adversarial families.
pub fn empirical_bound_constant(grid: &QuadratureGrid, trials: usize, seed: u64) -> BoundStats {
    let ratios: Vec<TrialRatio> = (0..trials).map(|t| trial_ratio(grid, seed, t)).collect();
    let (argmax, max_ratio) = ratios
        .iter()
        .map(|r| (r.trial, r.total))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let mean_ratio = ratios.iter().map(|r| r.total).sum::<f64>() / trials.max(1) as f64;
    let max_e0_ratio = ratios.iter().map(|r| r.e0).fold(0.0, f64::max);
    let shell_max = ratios
        .iter()
        .filter(|r| r.family == Family::Shell)
        .map(|r| r.total)
        .fold(0.0, f64::max);
    let inv = grid.inv_mu_l2();
    BoundStats {
        d: grid.dim(),
        resolution: grid.resolution(),
        trials,
        max_ratio,
        argmax,
        mean_ratio,
        max_e0_ratio,
        e0_bound: 6.0 * inv,
        inv_mu_l2: inv,
        excluded_tail_bound: excluded_tail_bound(grid.dim()),
        shell_max,
        ratios,
    }
}

/// Bound for `int_{|xi| < eps} mu^-2`. For `d = 2`, integrating
/// `(|cos t| + r)^-2 <= 2 pi / r` over angles gives `2 pi eps`; for `d >= 3`,
/// `mu >= |xi|` gives `|S^(d-1)| eps^(d-2) / (d - 2)`.
pub fn excluded_tail_bound(d: usize) -> f64 {
    let eps = ORIGIN_EXCLUSION;
    match d {
        1 => f64::INFINITY,
        2 => 2.0 * std::f64::consts::PI * eps,
        _ => {
            let sphere = sphere_area(d);
            sphere * eps.powi(d as i32 - 2) / (d as f64 - 2.0)
        }
    }
}

fn sphere_area(d: usize) -> f64 {
    // |S^(d-1)| by the recursion |S^(d+1)| = 2 pi |S^(d-1)| / d
    let pi = std::f64::consts::PI;
    let (mut k, mut a) = if d.is_multiple_of(2) {
        (2, 2.0 * pi)
    } else {
        (3, 4.0 * pi)
    };
    while k < d {
        a *= 2.0 * pi / k as f64;
        k += 2;
    }
    a
}

/// `||1/mu||_{L^2(B(0,1))}` on successively doubled grids.
pub fn inv_mu_l2_sequence(d: usize, base: usize, levels: usize) -> Result<Vec<f64>> {
    (0..levels)
        .map(|k| Ok(QuadratureGrid::new(d, base << k)?.inv_mu_l2()))
        .collect()
}

/// Ratios `||fg||_{X^s} / (||f||_{X^s} ||g||_{X^s})` over random fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductStats {
    pub s: f64,
    pub trials: usize,
    pub periods: Vec<f64>,
    pub cutoffs: Vec<usize>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Spectral Gaussian bump pair, conjugate symmetric.
struct SpectralBump {
    center: Vec<f64>,
    width: f64,
    amp: C64,
}

impl SpectralBump {
    fn eval(&self, xi: &[f64]) -> C64 {
        let g = |sign: f64| {
            let e: f64 = xi
                .iter()
                .zip(&self.center)
                .map(|(x, c)| (x - sign * c).powi(2))
                .sum::<f64>()
                / (self.width * self.width);
            (-e).exp()
        };
        self.amp * g(1.0) + self.amp.conj() * g(-1.0)
    }
}

/// Highest frequency carried by the random product fields.
const PRODUCT_BAND: f64 = 2.7;

fn random_field(rng: &mut ChaCha8Rng, d: usize) -> Vec<SpectralBump> {
    let mut out = Vec::new();
    // low part inside |xi| < 1/2
    let c: Vec<f64> = (0..d).map(|_| rng.random_range(-0.35..0.35)).collect();
    out.push(SpectralBump {
        center: c,
        width: rng.random_range(0.3..0.45),
        amp: C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
    });
    // high part at |xi| in [1.1, 1.4]
    let mut dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dn = norm(&dir).max(1e-12);
    let r = rng.random_range(1.1..1.4);
    dir.iter_mut().for_each(|v| *v *= r / dn);
    out.push(SpectralBump {
        center: dir,
        width: rng.random_range(0.3..0.4),
        amp: C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
    });
    out
}

fn sample_field(lattice: &Lattice, bumps: &[SpectralBump]) -> SurfaceField {
    let coeffs = (0..lattice.len())
        .map(|l| bumps.iter().map(|b| b.eval(lattice.xi(l))).sum())
        .collect();
    SurfaceField::scalar(coeffs)
}

/// Pointwise product through the 3/2-padded grid.
pub fn dealiased_product(lattice: &Lattice, f: &SurfaceField, g: &SurfaceField) -> SurfaceField {
    let fft = HorizontalFft::dealiased(lattice);
    let a = fft.inverse(f.comp(0));
    let b = fft.inverse(g.comp(0));
    let prod: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    SurfaceField {
        ncomp: 1,
        coeffs: fft.forward(&prod),
        is_real: f.is_real && g.is_real,
    }
}

/// Line factors of period `period` for the product test; the cutoff carries
/// frequencies up to twice the band of the random fields.
pub fn product_lattice(d: usize, period: f64) -> Result<Lattice> {
    let k = (2.0 * PRODUCT_BAND * period).ceil() as usize;
    let factors = vec![Factor::real(period, 2 * k + 1); d];
    Lattice::from_factors(&factors, &vec![k; d])
}

/// Empirical `X^s` product ratios on `lattice`, which must contain at least
/// two line factors, the first of them a line.
pub fn xs_product_test(lattice: &Lattice, s: f64, trials: usize, seed: u64) -> Result<ProductStats> {
    let factors = lattice.factors();
    let lines = factors.iter().filter(|f| f.is_real()).count();
    if lines < 2 || !factors[0].is_real() {
        return Err(Error::Config(
            "xs_product_test needs at least two line factors, the first one a line".into(),
        ));
    }
    let d = lattice.dim();
    let ratios: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(t as u64));
            let f = sample_field(lattice, &random_field(&mut rng, d));
            let g = sample_field(lattice, &random_field(&mut rng, d));
            let fg = dealiased_product(lattice, &f, &g);
            xs_norm(&fg, lattice, s) / (xs_norm(&f, lattice, s) * xs_norm(&g, lattice, s))
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / trials.max(1) as f64;
    Ok(ProductStats {
        s,
        trials,
        periods: factors.iter().map(|f| f.period()).collect(),
        cutoffs: lattice.cutoffs().to_vec(),
        max_ratio,
        mean_ratio,
        ratios,
    })
}

/// Relative change `|b - a| / a`.
pub fn drift(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

/// Settings of a full algebra verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraConfig {
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub subadditivity_samples: usize,
    /// Cells per axis of the coarse trilinear grid; refinement doubles it.
    pub resolution: usize,
    /// Coarsest resolution of the `||1/mu||` sequence.
    pub inv_mu_base: usize,
    pub inv_mu_levels: usize,
    pub s: f64,
    /// Period of the coarse product lattice; refinement doubles it.
    pub product_period: f64,
    pub product_trials: usize,
    /// Largest admissible relative change under refinement.
    pub drift_tol: f64,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        AlgebraConfig::for_dim(2)
    }
}

impl AlgebraConfig {
    pub fn for_dim(d: usize) -> Self {
        let two = d <= 2;
        AlgebraConfig {
            d,
            trials: 200,
            seed: 42,
            subadditivity_samples: 1_000_000,
            resolution: if two { 32 } else { 12 },
            inv_mu_base: if two { 64 } else { 16 },
            inv_mu_levels: if two { 4 } else { 3 },
            s: 1.5,
            product_period: if two { 8.0 } else { 3.0 },
            product_trials: 200,
            drift_tol: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("d must be at least 2, got {}", self.d)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.s <= self.d as f64 / 2.0 {
            return Err(Error::Config(format!("s must exceed d/2, got s = {}", self.s)));
        }
        if self.inv_mu_levels < 2 {
            return Err(Error::Config("inv_mu_levels must be at least 2".into()));
        }
        if self.resolution < 2 || self.inv_mu_base < 2 {
            return Err(Error::Config("resolution must be at least 2".into()));
        }
        if !(self.product_period > 0.0) {
            return Err(Error::Config("product_period must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvMuStudy {
    pub resolutions: Vec<usize>,
    pub values: Vec<f64>,
    /// Ratio of the last two values.
    pub cauchy_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub config: AlgebraConfig,
    pub subadditivity: SubadditivityReport,
    pub inv_mu: InvMuStudy,
    pub bound: BoundStats,
    pub bound_refined: BoundStats,
    pub bound_drift: f64,
    pub product: ProductStats,
    pub product_refined: ProductStats,
    pub product_drift: f64,
    pub checks: Vec<Check>,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }
}

/// Runs every algebra experiment of `cfg` and collects the checks.
pub fn verify_algebra(cfg: &AlgebraConfig) -> Result<AlgebraReport> {
    cfg.validate()?;
    let d = cfg.d;
    let subadditivity = subadditivity_check(d, cfg.subadditivity_samples, cfg.seed);
    let resolutions: Vec<usize> = (0..cfg.inv_mu_levels).map(|k| cfg.inv_mu_base << k).collect();
    let values = inv_mu_l2_sequence(d, cfg.inv_mu_base, cfg.inv_mu_levels)?;
    let n = values.len();
    let inv_mu = InvMuStudy {
        cauchy_ratio: values[n - 1] / values[n - 2],
        resolutions,
        values,
    };
    let bound = empirical_bound_constant(&QuadratureGrid::new(d, cfg.resolution)?, cfg.trials, cfg.seed);
    let bound_refined = empirical_bound_constant(&QuadratureGrid::new(d, 2 * cfg.resolution)?, cfg.trials, cfg.seed);
    let bound_drift = drift(bound.max_ratio, bound_refined.max_ratio);
    let product = xs_product_test(
        &product_lattice(d, cfg.product_period)?,
        cfg.s,
        cfg.product_trials,
        cfg.seed,
    )?;
    let product_refined = xs_product_test(
        &product_lattice(d, 2.0 * cfg.product_period)?,
        cfg.s,
        cfg.product_trials,
        cfg.seed,
    )?;
    let product_drift = drift(product.max_ratio, product_refined.max_ratio);
    let e1 = subadditivity.triangle_violations + subadditivity.dyadic_violations;
    let checks = vec![
        Check::at_most("subadditivity_violations", subadditivity.violations as f64, 0.0),
        Check::at_most(
            "e1_equivalence_violations",
            subadditivity.equivalence_violations as f64,
            0.0,
        ),
        Check::at_most("e1_lemma_violations", e1 as f64, 0.0),
        Check::below("inv_mu_cauchy_ratio", inv_mu.cauchy_ratio, 1.05),
        Check::at_most("e0_ratio_vs_bound", bound.max_e0_ratio, bound.e0_bound),
        Check::at_most(
            "e0_ratio_vs_bound_refined",
            bound_refined.max_e0_ratio,
            bound_refined.e0_bound,
        ),
        Check::at_most("shell_ratio_vs_global", bound.shell_max, bound.max_ratio),
        Check::at_most("trilinear_drift", bound_drift, cfg.drift_tol),
        Check::at_most("product_drift", product_drift, cfg.drift_tol),
    ];
    Ok(AlgebraReport {
        config: cfg.clone(),
        subadditivity,
        inv_mu,
        bound,
        bound_refined,
        bound_drift,
        product,
        product_refined,
        product_drift,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::bracket;

    #[test]
    fn grid_volume_and_interior() {
        let g = QuadratureGrid::default_for(2).unwrap();
        assert!((g.total_weight() / std::f64::consts::PI - 1.0).abs() < 0.01);
        assert!(g.nodes().iter().all(|x| norm(x) < 1.0));
        let g3 = QuadratureGrid::new(3, 24).unwrap();
        let vol = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((g3.total_weight() / vol - 1.0).abs() < 0.01);
    }

    #[test]
    fn region_examples() {
        assert_eq!(region_membership(&[0.9, 0.0], &[0.0, 0.1]), Region::E0);
        match region_membership(&[0.5, 0.0], &[0.0, 0.5]) {
            Region::E1 { m, n } => {
                assert_eq!(m, 1);
                // |xi + eta| = 0.707 lies in [2^-1, 2^0]
                assert_eq!(n, Some(2));
            }
            r => panic!("{r:?}"),
        }
        assert!(matches!(
            region_membership(&[0.3, 0.0], &[-0.3, 0.0]),
            Region::E1 { n: None, .. }
        ));
        // xi = (t, 0), eta = (-t/2, 0)
        let t = 0.8;
        assert_eq!(region_membership(&[t, 0.0], &[-t / 2.0, 0.0]), Region::E0);
        assert!(mu(&[t / 2.0, 0.0]) <= 3.0 * (mu(&[t, 0.0]) + mu(&[-t / 2.0, 0.0])));
    }

    #[test]
    fn subadditivity_small_run() {
        let r = subadditivity_check(2, 20_000, 7);
        assert_eq!(r.samples, 20_000);
        assert!(r.e0_samples > 0 && r.e0_samples < r.samples);
        assert_eq!(
            r.violations + r.equivalence_violations + r.triangle_violations + r.dyadic_violations,
            0
        );
        assert!(r.max_excess < 0.0);
    }

    #[test]
    fn trilinear_zero_and_linearity() {
        let g = QuadratureGrid::new(2, 16).unwrap();
        let zero = vec![0.0; g.len()];
        let h0 = g.sample_sum(|_| 0.0);
        assert_eq!(trilinear_i(&g, &zero, &zero, &h0), 0.0);
        let f = g.sample(|x| 1.0 + x[0] * x[0]);
        let gg = g.sample(|x| (-x[1] * x[1]).exp());
        let h = g.sample_sum(|x| 1.0 / (1.0 + norm(x)));
        let base = trilinear_i(&g, &f, &gg, &h);
        let f3: Vec<f64> = f.iter().map(|v| 3.0 * v).collect();
        assert!((trilinear_i(&g, &f3, &gg, &h) / base - 3.0).abs() < 1e-12);
        let parts = trilinear_parts(&g, &f, &gg, &h);
        assert!((parts.e0 + parts.e1 - parts.total).abs() <= 1e-12 * parts.total);
    }

    #[test]
    fn tail_bounds() {
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!(excluded_tail_bound(2) < 1e-5);
        assert!(excluded_tail_bound(3) < 2e-5);
    }

    #[test]
    fn small_verification_passes() {
        let cfg = AlgebraConfig {
            trials: 8,
            subadditivity_samples: 10_000,
            resolution: 12,
            inv_mu_base: 32,
            inv_mu_levels: 2,
            product_period: 3.0,
            product_trials: 4,
            ..AlgebraConfig::for_dim(2)
        };
        let r = verify_algebra(&cfg).unwrap();
        assert_eq!(r.checks.len(), 9);
        assert!(r.checks[..7].iter().all(|c| c.passed), "{:?}", r.checks);
        assert!(verify_algebra(&AlgebraConfig { s: 0.5, ..cfg }).is_err());
    }

    #[test]
    fn single_mode_product_ratio() {
        let lat = Lattice::from_factors(&[Factor::real(4.0, 33), Factor::real(4.0, 33)], &[12, 12]).unwrap();
        let s = 1.5;
        let mut f = SurfaceField::scalar(vec![C64::new(0.0, 0.0); lat.len()]);
        f.is_real = false;
        let mut g = f.clone();
        let a = lat.index_of(&[1, 2]).unwrap();
        let b = lat.index_of(&[2, -1]).unwrap();
        f.set(0, a, C64::new(1.0, 0.0));
        g.set(0, b, C64::new(0.0, 2.0));
        let fg = dealiased_product(&lat, &f, &g);
        let ratio = xs_norm(&fg, &lat, s) / (xs_norm(&f, &lat, s) * xs_norm(&g, &lat, s));
        let (x, y) = (lat.xi(a), lat.xi(b));
        let z: Vec<f64> = x.iter().zip(y).map(|(p, q)| p + q).collect();
        let w = |v: &[f64]| mu(v) * bracket(v).powf(s - 1.0);
        let closed = w(&z) / (w(x) * w(y));
        let normalization = lat.synthesis_scale() / lat.weight(0).sqrt();
        assert!(
            (ratio / (closed * normalization) - 1.0).abs() < 1e-12,
            "{ratio} {closed}"
        );
    }
}
