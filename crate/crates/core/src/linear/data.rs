use crate::domain::{Lattice, SurfaceField, VerticalGrid, VolumeField};
use crate::multipliers::{bracket, hdot_minus1_tol, xs_weight, Seminorm};
use num_complex::Complex64 as C64;
use rand::Rng;

/// Right-hand side `(f, g, h, k)` of the linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTuple {
    pub f: VolumeField,
    pub g: VolumeField,
    pub h: SurfaceField,
    pub k: SurfaceField,
}

/// State `(u, p, eta)` in the flattened frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTriple {
    pub u: VolumeField,
    pub p: VolumeField,
    pub eta: SurfaceField,
}

impl DataTuple {
    pub fn zeros(nlat: usize, nodes: usize, n: usize) -> Self {
        DataTuple {
            f: VolumeField::zeros(nlat, nodes, n),
            g: VolumeField::zeros(nlat, nodes, 1),
            h: SurfaceField::zeros(nlat, 1),
            k: SurfaceField::zeros(nlat, n),
        }
    }

    pub fn n(&self) -> usize {
        self.f.ncomp
    }

    pub fn nlat(&self) -> usize {
        self.f.nlat
    }

    pub fn nodes(&self) -> usize {
        self.f.nvert
    }

    /// `h - int_0^b g`, per lattice point.
    pub fn trace_gap(&self, grid: &VerticalGrid) -> Vec<C64> {
        (0..self.nlat())
            .map(|l| self.h.get(0, l) - grid.integrate(self.g.profile(0, l)))
            .collect()
    }

    /// Homogeneous `H^-1` seminorm of `h - int g`; infinite marks data
    /// violating the toroidal mean condition.
    pub fn divtrace_residual(&self, lattice: &Lattice, grid: &VerticalGrid) -> Seminorm {
        let gap = self.trace_gap(grid);
        let scale = self.max_abs().max(1.0);
        hdot_minus1_tol(&gap, lattice, 1e-10 * scale)
    }

    pub fn max_abs(&self) -> f64 {
        self.f
            .max_abs()
            .max(self.g.max_abs())
            .max(self.h.max_abs())
            .max(self.k.max_abs())
    }

    pub fn scaled(&self, a: f64) -> Self {
        DataTuple {
            f: self.f.scaled(a),
            g: self.g.scaled(a),
            h: self.h.scaled(a),
            k: self.k.scaled(a),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        DataTuple {
            f: &self.f + &o.f,
            g: &self.g + &o.g,
            h: &self.h + &o.h,
            k: &self.k + &o.k,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        DataTuple {
            f: &self.f - &o.f,
            g: &self.g - &o.g,
            h: &self.h - &o.h,
            k: &self.k - &o.k,
        }
    }

    pub fn symmetry_defect(&self, lattice: &Lattice) -> f64 {
        self.f
            .symmetry_defect(lattice)
            .max(self.g.symmetry_defect(lattice))
            .max(self.h.symmetry_defect(lattice))
            .max(self.k.symmetry_defect(lattice))
    }

    pub fn symmetrize(&mut self, lattice: &Lattice) {
        self.f.symmetrize(lattice);
        self.g.symmetrize(lattice);
        self.h.symmetrize(lattice);
        self.k.symmetrize(lattice);
    }

    /// Data vector at lattice point `l`: `[f (n blocks), g, h, k (n)]`.
    pub fn gather(&self, l: usize) -> Vec<C64> {
        let n = self.n();
        let mut v = Vec::with_capacity(block_sizes(n, self.nodes()).1);
        for c in 0..n {
            v.extend_from_slice(self.f.profile(c, l));
        }
        v.extend_from_slice(self.g.profile(0, l));
        v.push(self.h.get(0, l));
        for c in 0..n {
            v.push(self.k.get(c, l));
        }
        v
    }

    pub fn scatter(&mut self, l: usize, v: &[C64]) {
        let n = self.n();
        let nodes = self.nodes();
        for c in 0..n {
            self.f.profile_mut(c, l).copy_from_slice(&v[c * nodes..(c + 1) * nodes]);
        }
        self.g.profile_mut(0, l).copy_from_slice(&v[n * nodes..(n + 1) * nodes]);
        self.h.set(0, l, v[(n + 1) * nodes]);
        for c in 0..n {
            self.k.set(c, l, v[(n + 1) * nodes + 1 + c]);
        }
    }
}

impl SolutionTriple {
    pub fn zeros(nlat: usize, nodes: usize, n: usize) -> Self {
        SolutionTriple {
            u: VolumeField::zeros(nlat, nodes, n),
            p: VolumeField::zeros(nlat, nodes, 1),
            eta: SurfaceField::zeros(nlat, 1),
        }
    }

    pub fn n(&self) -> usize {
        self.u.ncomp
    }

    pub fn nlat(&self) -> usize {
        self.u.nlat
    }

    pub fn nodes(&self) -> usize {
        self.u.nvert
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.p.max_abs()).max(self.eta.max_abs())
    }

    pub fn scaled(&self, a: f64) -> Self {
        SolutionTriple {
            u: self.u.scaled(a),
            p: self.p.scaled(a),
            eta: self.eta.scaled(a),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        SolutionTriple {
            u: &self.u + &o.u,
            p: &self.p + &o.p,
            eta: &self.eta + &o.eta,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        SolutionTriple {
            u: &self.u - &o.u,
            p: &self.p - &o.p,
            eta: &self.eta - &o.eta,
        }
    }

    pub fn symmetry_defect(&self, lattice: &Lattice) -> f64 {
        self.u
            .symmetry_defect(lattice)
            .max(self.p.symmetry_defect(lattice))
            .max(self.eta.symmetry_defect(lattice))
    }

    pub fn symmetrize(&mut self, lattice: &Lattice) {
        self.u.symmetrize(lattice);
        self.p.symmetrize(lattice);
        self.eta.symmetrize(lattice);
    }

    /// Largest `|u|` on the bottom boundary.
    pub fn bottom_trace(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.n() {
            for l in 0..self.nlat() {
                worst = worst.max(self.u.get(c, l, 0).norm());
            }
        }
        worst
    }

    /// State vector at lattice point `l`: `[u (n blocks), p, eta]`.
    pub fn gather(&self, l: usize) -> Vec<C64> {
        let n = self.n();
        let mut v = Vec::with_capacity(block_sizes(n, self.nodes()).0);
        for c in 0..n {
            v.extend_from_slice(self.u.profile(c, l));
        }
        v.extend_from_slice(self.p.profile(0, l));
        v.push(self.eta.get(0, l));
        v
    }

    pub fn scatter(&mut self, l: usize, v: &[C64]) {
        let n = self.n();
        let nodes = self.nodes();
        for c in 0..n {
            self.u.profile_mut(c, l).copy_from_slice(&v[c * nodes..(c + 1) * nodes]);
        }
        self.p.profile_mut(0, l).copy_from_slice(&v[n * nodes..(n + 1) * nodes]);
        self.eta.set(0, l, v[(n + 1) * nodes]);
    }
}

/// Lengths `(state, data)` of the per-frequency vectors.
pub fn block_sizes(n: usize, nodes: usize) -> (usize, usize) {
    ((n + 1) * nodes + 1, (n + 1) * nodes + 1 + n)
}

/// Diagonal of the `X^s` Gram matrix at one frequency: `u` in `H^(s+2)`,
/// `p` in `H^(s+1)`, `eta` in `X^(s+5/2)`, with Clenshaw–Curtis weights
/// in the vertical.
pub fn state_weights(xi: &[f64], cell: f64, s: f64, n: usize, grid: &VerticalGrid) -> Vec<f64> {
    let br = bracket(xi);
    let mut w = Vec::with_capacity(block_sizes(n, grid.len()).0);
    let wu = cell * br.powf(2.0 * (s + 2.0));
    for _ in 0..n {
        w.extend(grid.weights().iter().map(|cw| wu * cw));
    }
    let wp = cell * br.powf(2.0 * (s + 1.0));
    w.extend(grid.weights().iter().map(|cw| wp * cw));
    w.push(cell * xs_weight(xi, s + 2.5));
    w
}

/// Diagonal of the `Y^s` Gram matrix at one frequency: `f` in `H^s`, `g` in
/// `H^(s+1)`, `h` in `H^(s+3/2)`, `k` in `H^(s+1/2)`. The `H^-1` term of
/// the divergence-trace gap is separate, see [`hdot_factor`].
pub fn data_weights(xi: &[f64], cell: f64, s: f64, n: usize, grid: &VerticalGrid) -> Vec<f64> {
    let br = bracket(xi);
    let mut w = Vec::with_capacity(block_sizes(n, grid.len()).1);
    let wf = cell * br.powf(2.0 * s);
    for _ in 0..n {
        w.extend(grid.weights().iter().map(|cw| wf * cw));
    }
    let wg = cell * br.powf(2.0 * (s + 1.0));
    w.extend(grid.weights().iter().map(|cw| wg * cw));
    w.push(cell * br.powf(2.0 * s + 3.0));
    w.extend(std::iter::repeat_n(cell * br.powf(2.0 * s + 1.0), n));
    w
}

/// Weight of `|h - int g|^2` in the `Y^s` norm at lattice point `l`:
/// `cell / |xi|^2` inside the low-frequency ball of a non-toroidal lattice.
pub fn hdot_factor(lattice: &Lattice, l: usize) -> f64 {
    let r = lattice.xi_norm(l);
    if !lattice.is_toroidal() && r > 0.0 && r < lattice.r() {
        lattice.weight(l) / (r * r)
    } else {
        0.0
    }
}

/// Discrete `X^s` norm of a state.
pub fn xs_state_norm(x: &SolutionTriple, lattice: &Lattice, grid: &VerticalGrid, s: f64) -> f64 {
    let n = x.n();
    let mut acc = 0.0;
    for l in 0..lattice.len() {
        let w = state_weights(lattice.xi(l), lattice.weight(l), s, n, grid);
        acc += x.gather(l).iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>();
    }
    acc.sqrt()
}

/// Discrete `Y^s` norm of a data tuple, infinite when the toroidal mean
/// condition fails.
pub fn ys_data_norm(d: &DataTuple, lattice: &Lattice, grid: &VerticalGrid, s: f64) -> f64 {
    let Seminorm::Finite(dt) = d.divtrace_residual(lattice, grid) else {
        return f64::INFINITY;
    };
    let n = d.n();
    let mut acc = dt * dt;
    for l in 0..lattice.len() {
        let w = data_weights(lattice.xi(l), lattice.weight(l), s, n, grid);
        acc += d.gather(l).iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>();
    }
    acc.sqrt()
}

/// Row part of the `Y^s` norm, without the divergence-trace term; used for
/// residuals whose ignored rows are masked.
pub fn ys_rows_norm(d: &DataTuple, lattice: &Lattice, grid: &VerticalGrid, s: f64) -> f64 {
    let n = d.n();
    let mut acc = 0.0;
    for l in 0..lattice.len() {
        let w = data_weights(lattice.xi(l), lattice.weight(l), s, n, grid);
        acc += d.gather(l).iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>();
    }
    acc.sqrt()
}

fn band_limited(lattice: &Lattice, l: usize, band: usize) -> bool {
    lattice.wavenumbers(l).iter().all(|k| k.unsigned_abs() as usize <= band)
}

fn rand_c(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random polynomial of degree `deg` in `z / b`, starting at `z^first`.
fn random_profile(rng: &mut impl Rng, grid: &VerticalGrid, first: usize, deg: usize, amp: f64) -> Vec<C64> {
    let coefs: Vec<C64> = (first..=deg).map(|_| rand_c(rng) * amp).collect();
    grid.nodes()
        .iter()
        .map(|&z| {
            let t = z / grid.depth();
            coefs
                .iter()
                .enumerate()
                .map(|(i, c)| c * t.powi((first + i) as i32))
                .sum()
        })
        .collect()
}

/// Random real state supported on wavenumbers `|k_i| <= band`: vertical
/// profiles are polynomials of degree `deg`, `u` vanishes at the bottom,
/// and `eta^(0) = 0`. Amplitudes decay like `<xi>^-4`.
pub fn random_state(
    rng: &mut impl Rng,
    lattice: &Lattice,
    grid: &VerticalGrid,
    n: usize,
    band: usize,
    deg: usize,
) -> SolutionTriple {
    let mut x = SolutionTriple::zeros(lattice.len(), grid.len(), n);
    for l in 0..lattice.len() {
        if !band_limited(lattice, l, band) {
            continue;
        }
        let amp = bracket(lattice.xi(l)).powi(-4);
        for c in 0..n {
            let prof = random_profile(rng, grid, 1, deg, amp);
            x.u.profile_mut(c, l).copy_from_slice(&prof);
        }
        let prof = random_profile(rng, grid, 0, deg, amp);
        x.p.profile_mut(0, l).copy_from_slice(&prof);
        if l != lattice.zero_index() {
            x.eta.set(0, l, rand_c(rng) * amp);
        }
    }
    x.symmetrize(lattice);
    x
}

/// Random real data with polynomial vertical profiles on wavenumbers
/// `|k_i| <= band`; at `xi = 0` the trace `h` equals `int g`.
pub fn random_data(
    rng: &mut impl Rng,
    lattice: &Lattice,
    grid: &VerticalGrid,
    n: usize,
    band: usize,
    deg: usize,
) -> DataTuple {
    let mut d = DataTuple::zeros(lattice.len(), grid.len(), n);
    for l in 0..lattice.len() {
        if !band_limited(lattice, l, band) {
            continue;
        }
        let amp = bracket(lattice.xi(l)).powi(-4);
        for c in 0..n {
            let prof = random_profile(rng, grid, 0, deg, amp);
            d.f.profile_mut(c, l).copy_from_slice(&prof);
            d.k.set(c, l, rand_c(rng) * amp);
        }
        let prof = random_profile(rng, grid, 0, deg, amp);
        d.g.profile_mut(0, l).copy_from_slice(&prof);
        d.h.set(0, l, rand_c(rng) * amp);
    }
    d.symmetrize(lattice);
    let z = lattice.zero_index();
    let mean = grid.integrate(d.g.profile(0, z));
    d.h.set(0, z, C64::new(mean.re, 0.0));
    d
}

/// Single-mode real surface field with `eta^(xi_l) = a`, `eta^(-xi_l) = conj a`.
pub fn single_mode(lattice: &Lattice, l: usize, a: C64) -> SurfaceField {
    let mut f = SurfaceField::zeros(lattice.len(), 1);
    let m = lattice.neg(l);
    if m == l {
        f.set(0, l, C64::new(a.re, 0.0));
    } else {
        f.set(0, l, a);
        f.set(0, m, a.conj());
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Factor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Lattice, VerticalGrid) {
        (
            Lattice::from_factors(&[Factor::torus(1.0, 8)], &[4]).unwrap(),
            VerticalGrid::new(1.0, 16),
        )
    }

    #[test]
    fn gather_scatter_round_trip() {
        let (lat, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_data(&mut rng, &lat, &grid, 2, 2, 3);
        let x = random_state(&mut rng, &lat, &grid, 2, 2, 3);
        let mut d2 = DataTuple::zeros(lat.len(), grid.len(), 2);
        let mut x2 = SolutionTriple::zeros(lat.len(), grid.len(), 2);
        for l in 0..lat.len() {
            d2.scatter(l, &d.gather(l));
            x2.scatter(l, &x.gather(l));
        }
        assert_eq!(d, d2);
        assert_eq!(x, x2);
    }

    #[test]
    fn random_fields_are_real_and_admissible() {
        let (lat, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = random_data(&mut rng, &lat, &grid, 2, 3, 4);
        assert!(d.symmetry_defect(&lat) < 1e-15);
        assert_eq!(d.divtrace_residual(&lat, &grid), Seminorm::Finite(0.0));
        assert!(ys_data_norm(&d, &lat, &grid, 0.0).is_finite());
        let x = random_state(&mut rng, &lat, &grid, 2, 3, 4);
        assert_eq!(x.bottom_trace(), 0.0);
        assert_eq!(x.eta.get(0, lat.zero_index()), C64::new(0.0, 0.0));
        let mut bad = d.clone();
        bad.h.set(0, lat.zero_index(), C64::new(1.0, 0.0));
        assert!(ys_data_norm(&bad, &lat, &grid, 0.0).is_infinite());
    }

    #[test]
    fn norms_are_homogeneous() {
        let (lat, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_state(&mut rng, &lat, &grid, 2, 3, 4);
        let a = xs_state_norm(&x, &lat, &grid, 1.0);
        let b = xs_state_norm(&x.scaled(-2.5), &lat, &grid, 1.0);
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
    }
}
