//! Invariants checked on random inputs.

use proptest::prelude::*;
use shearwave::algebra::{in_e0, region_membership, Region};
use shearwave::domain::{Factor, HorizontalFft, Lattice, SurfaceField};
use shearwave::linear::{budget, kappa0_from_budget};
use shearwave::multipliers::{classify_pattern, hs_norm, lattice_constants, mu, xs_norm};
use shearwave::C64;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d)
}

fn mixed_lattice() -> Lattice {
    Lattice::from_factors(&[Factor::real(6.0, 25), Factor::torus(1.0, 9)], &[12, 4]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mu_is_bounded_by_one_plus_norm(xi in point(3)) {
        let m = mu(&xi);
        prop_assert!(m > 0.0);
        prop_assert!(m <= 1.0 + norm(&xi) + 1e-12);
    }

    #[test]
    fn mu_is_subadditive_on_e0(xi in point(2), eta in point(2)) {
        prop_assume!(norm(&xi) < 1.0 && norm(&eta) < 1.0);
        if in_e0(norm(&xi), norm(&eta)) {
            let sum: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a + b).collect();
            prop_assert!(mu(&sum) <= 3.0 * (mu(&xi) + mu(&eta)) + 1e-12);
        }
    }

    #[test]
    fn e1_pairs_are_comparable(xi in point(3), eta in point(3)) {
        let (a, b) = (norm(&xi), norm(&eta));
        prop_assume!(a > 1e-9 && b > 1e-9);
        if let Region::E1 { .. } = region_membership(&xi, &eta) {
            let sum: Vec<f64> = xi.iter().zip(&eta).map(|(x, y)| x + y).collect();
            prop_assert!(0.5 * b < a && a < 2.0 * b);
            prop_assert!(norm(&sum) < 3.0 * a);
        }
    }

    #[test]
    fn fft_round_trip(samples in prop::collection::vec(-1.0f64..1.0, 9 * 25)) {
        let lattice = mixed_lattice();
        let fft = HorizontalFft::minimal(&lattice);
        prop_assume!(fft.grid_len() == samples.len());
        let coeffs = fft.forward_real(&samples);
        let back = fft.inverse_real(&coeffs);
        for (a, b) in samples.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn xs_norm_embeds_in_hs(re in prop::collection::vec(-1.0f64..1.0, 225), im in prop::collection::vec(-1.0f64..1.0, 225), s in 0.0f64..3.0) {
        let lattice = mixed_lattice();
        let coeffs: Vec<C64> = re.iter().zip(&im).take(lattice.len()).map(|(a, b)| C64::new(*a, *b)).collect();
        prop_assume!(coeffs.len() == lattice.len());
        let mut f = SurfaceField::scalar(coeffs);
        f.symmetrize(&lattice);
        let c = lattice_constants(&lattice);
        let (x, h) = (xs_norm(&f, &lattice, s), hs_norm(&f, &lattice, s));
        prop_assert!(x <= c.embedding * h * (1.0 + 1e-12));
        prop_assert!(x >= c.lower * h * (1.0 - 1e-12));
        prop_assert!((xs_norm(&f.scaled(-2.5), &lattice, s) - 2.5 * x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn classification_ignores_order_after_the_first(first in any::<bool>(), rest in prop::collection::vec(any::<bool>(), 0..3)) {
        let mut a = vec![first];
        a.extend(&rest);
        let mut b = vec![first];
        b.extend(rest.iter().rev());
        prop_assert_eq!(classify_pattern(&a), classify_pattern(&b));
    }

    #[test]
    fn budget_is_even_and_kappa0_solves_it(gamma in 0.1f64..3.0, b in 0.2f64..3.0, kappa in -1.0f64..1.0, c in 0.5f64..20.0, inv in 0.1f64..10.0) {
        prop_assert!((budget(gamma, b, kappa) - budget(gamma, b, -kappa)).abs() <= 1e-15);
        prop_assert!(budget(gamma, b, kappa) >= 0.0);
        let k0 = kappa0_from_budget(c, inv, gamma, b);
        prop_assert!(k0 > 0.0);
        prop_assert!((c * inv * budget(gamma, b, k0) - 1.0).abs() < 1e-10);
    }
}
