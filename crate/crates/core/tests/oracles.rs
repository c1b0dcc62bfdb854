//! Independent oracles for values that have no closed form in the library.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shearwave::algebra::{trilinear_i, verify_algebra, AlgebraConfig, QuadratureGrid};
use shearwave::domain::{build_lattice, DomainSpec, Factor, Lattice, SurfaceField, VerticalGrid};
use shearwave::geometry::{mean_curvature, NodalGrid};
use shearwave::linear::{random_data, solve_l_kappa, xs_state_norm, LinearSystem, NeumannOptions};
use shearwave::nonlinear::{solve, Manufactured, NonlinearSystem, SolveOptions, SurfaceProfile};
use shearwave::symbols::{low_deviation, solve_symbol_bvp, symbol_m, SymbolOptions};
use shearwave::C64;
use std::f64::consts::PI;

/// Richardson-extrapolated finite-difference value of `m(0.5 e_1, 1)` at `b = 1`.
const M_STAR: (f64, f64) = (-0.138_509_715_571_070_7, -0.026_492_061_911_914_666);

fn strip(kappa: f64) -> DomainSpec {
    DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, kappa, 1.0, 1.0).unwrap()
}

#[test]
fn symbol_matches_finite_differences() {
    let spectral = symbol_m(&[0.5], 1.0, 1.0, &SymbolOptions::exact()).unwrap();
    let star = C64::new(M_STAR.0, M_STAR.1);
    let raw = common::fd_symbol_m_raw(&[0.5], 1.0, 1.0, 4000);
    assert!((spectral - raw).norm() / raw.norm() < 1e-7, "{spectral} vs {raw}");
    assert!((spectral - star).norm() / star.norm() < 1e-8, "{spectral} vs {star}");
    let extrapolated = common::fd_symbol_m(&[0.5], 1.0, 1.0, 4000);
    assert!((extrapolated - star).norm() / star.norm() < 1e-12, "{extrapolated}");
}

#[test]
fn psi_matches_trapezoid_rule() {
    let spec = strip(0.1);
    let lattice = build_lattice(&spec, &[4]).unwrap();
    let grid = VerticalGrid::new(1.0, 40);
    let sys = LinearSystem::new(&spec, &lattice, &grid, &SymbolOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = random_data(&mut rng, &lattice, &grid, 2, 4, 6);
    let psi = sys.psi_of_data(&d).unwrap();
    let trapezoid = |l: usize, cells: usize| {
        let e = &sys.table().entries[l];
        let h = 1.0 / cells as f64;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=cells {
            let z = j as f64 * h;
            let w = if j == 0 || j == cells { 0.5 * h } else { h };
            for c in 0..2 {
                acc += w * grid.interpolate(d.f.profile(c, l), z) * grid.interpolate(e.v_comp(c), z).conj();
            }
            acc -= w * grid.interpolate(d.g.profile(0, l), z) * grid.interpolate(&e.q, z).conj();
        }
        let top = grid.len() - 1;
        for c in 0..2 {
            acc -= d.k.get(c, l) * e.v_comp(c)[top].conj();
        }
        acc + d.h.get(0, l)
    };
    let scale = psi.max_abs();
    for l in 0..lattice.len() {
        let oracle = (trapezoid(l, 8000) * 4.0 - trapezoid(l, 4000)) / 3.0;
        assert!((psi.get(0, l) - oracle).norm() <= 1e-8 * scale, "l = {l}");
    }
}

fn evaluate(field: &SurfaceField, lattice: &Lattice, x: f64) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for l in 0..lattice.len() {
        acc += field.get(0, l) * C64::from_polar(1.0, 2.0 * PI * lattice.xi(l)[0] * x);
    }
    acc.re * lattice.synthesis_scale()
}

#[test]
fn mean_curvature_matches_finite_differences() {
    let spec = DomainSpec::new(vec![Factor::torus(1.0, 64)], 1.0, 0.1, 1.0, 1.0).unwrap();
    let lattice = build_lattice(&spec, &[24]).unwrap();
    let grid = VerticalGrid::new(1.0, 8);
    let ng = NodalGrid::new(&lattice, &grid);
    let eta_fn = |x: f64| 0.01 * ((2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin());
    let mut eta = SurfaceField::zeros(lattice.len(), 1);
    let scale = 1.0 / lattice.synthesis_scale();
    eta.set(0, lattice.index_of(&[1]).unwrap(), C64::new(0.005 * scale, 0.0));
    eta.set(0, lattice.index_of(&[-1]).unwrap(), C64::new(0.005 * scale, 0.0));
    eta.set(0, lattice.index_of(&[2]).unwrap(), C64::new(0.0, -0.0025 * scale));
    eta.set(0, lattice.index_of(&[-2]).unwrap(), C64::new(0.0, 0.0025 * scale));
    assert!((evaluate(&eta, &lattice, 0.3) - eta_fn(0.3)).abs() < 1e-15);
    let h = mean_curvature(&ng, &eta);
    let points = 4096;
    let step = 1.0 / points as f64;
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let x = i as f64 / points as f64;
        let e = |k: f64| eta_fn(x + k * step);
        let d1 = (-e(2.0) + 8.0 * e(1.0) - 8.0 * e(-1.0) + e(-2.0)) / (12.0 * step);
        let d2 = (-e(2.0) + 16.0 * e(1.0) - 30.0 * e(0.0) + 16.0 * e(-1.0) - e(-2.0)) / (12.0 * step * step);
        let fd = d2 / (1.0 + d1 * d1).powf(1.5);
        worst = worst.max((evaluate(&h, &lattice, x) - fd).abs());
    }
    assert!(worst < 1e-6, "max deviation {worst:e}");
}

#[test]
fn trilinear_constant_fields_match_fine_quadrature() {
    let value = |res: usize| {
        let grid = QuadratureGrid::new(2, res).unwrap();
        let one = grid.sample(|_| 1.0);
        let h = grid.sample_sum(|x| {
            if x.iter().map(|v| v * v).sum::<f64>() < 4.0 {
                1.0
            } else {
                0.0
            }
        });
        trilinear_i(&grid, &one, &one, &h)
    };
    let coarse = value(32);
    let fine = value(128);
    assert!((coarse - fine).abs() <= 0.02 * fine, "{coarse} vs {fine}");
}

#[test]
fn low_frequency_pressure_remainder_is_stable() {
    let grid = VerticalGrid::new(1.0, 24);
    let ks: Vec<f64> = (0..4)
        .map(|k| {
            let r = 1e-3 / 2f64.powi(k);
            let e = solve_symbol_bvp(&[r], -1.0, 1.0, &grid, &SymbolOptions::exact()).unwrap();
            low_deviation(&e, grid.nodes(), 1.0).q
        })
        .collect();
    let max = ks.iter().copied().fold(0.0, f64::max);
    let min = ks.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && max <= 2.0 * min, "{ks:?}");
}

#[test]
fn rho_small_frequency_envelopes() {
    let grid = VerticalGrid::new(1.0, 24);
    let opts = SymbolOptions::exact();
    let band = |sigma: f64, dirs: &[[f64; 2]], envelope: &dyn Fn(&[f64]) -> f64, d2: bool| {
        let mut ratios = Vec::new();
        for k in 0..12 {
            let t = 0.5 / 2f64.powi(k);
            for dir in dirs {
                let xi: Vec<f64> = if d2 {
                    vec![t * dir[0], t * dir[1]]
                } else {
                    vec![t * dir[0]]
                };
                let e = solve_symbol_bvp(&xi, -1.0, sigma, &grid, &opts).unwrap();
                ratios.push(e.rho.norm_sqr() / envelope(&xi));
            }
        }
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };
    let mixed = |xi: &[f64]| {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        xi[0] * xi[0] + r2 * r2
    };
    let dirs = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]];
    let spread = band(1.0, &dirs, &mixed, true);
    assert!(spread < 50.0, "sigma > 0 spread {spread}");
    let spread = band(0.0, &[[1.0, 0.0]], &|xi: &[f64]| xi[0] * xi[0], false);
    assert!(spread < 2.0, "sigma = 0 spread {spread}");
}

#[test]
fn small_incline_neumann_solve() {
    let spec = strip(1e-3);
    let lattice = build_lattice(&spec, &[6]).unwrap();
    let grid = VerticalGrid::new(1.0, 52);
    let sys = LinearSystem::new(&spec, &lattice, &grid, &SymbolOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = random_data(&mut rng, &lattice, &grid, 2, 4, 4);
    let r = solve_l_kappa(&sys, None, &data, 1e-3, &NeumannOptions::default()).unwrap();
    assert!(
        r.residual <= 1e-8 && r.iterations <= 30,
        "{} after {}",
        r.residual,
        r.iterations
    );
}

#[test]
fn halving_the_forcing_halves_the_solution() {
    let spec = strip(0.1);
    let man = Manufactured::new(&spec, 0.02, SurfaceProfile::Band).unwrap();
    let full = man.instance().unwrap();
    let norm = |inst| {
        let sys = NonlinearSystem::new(inst, &[8], 60).unwrap();
        let (x, _) = solve(&sys, &SolveOptions::default()).unwrap();
        xs_state_norm(&x, sys.lattice(), sys.grid(), 0.0)
    };
    let ratio = norm(full.scaled(0.5)) / norm(full);
    assert!((ratio - 0.5).abs() <= 0.05, "ratio {ratio}");
}

#[test]
fn algebra_reports_are_deterministic() {
    let cfg = AlgebraConfig {
        trials: 8,
        product_trials: 4,
        subadditivity_samples: 20_000,
        resolution: 12,
        inv_mu_base: 16,
        inv_mu_levels: 2,
        product_period: 4.0,
        ..AlgebraConfig::for_dim(2)
    };
    let a = serde_json::to_string(&verify_algebra(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&verify_algebra(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}
