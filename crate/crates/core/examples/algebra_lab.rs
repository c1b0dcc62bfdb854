//! Numerical experiments behind the `X^s` algebra property.
//!
//! Samples the subadditivity of `mu` on the region `E0`, estimates the
//! bound constant of the trilinear functional on two quadrature grids, and
//! measures `X^s` product ratios of random fields.
//!
//! ```bash
//! cargo run --example algebra_lab
//! ```

use shearwave::algebra::{
    empirical_bound_constant, inv_mu_l2_sequence, product_lattice, subadditivity_check, xs_product_test, QuadratureGrid,
};

fn main() -> shearwave::Result<()> {
    let sub = subadditivity_check(2, 200_000, 42);
    println!(
        "subadditivity: {} of {} pairs in E0, {} violations, max excess {:.4}",
        sub.e0_samples, sub.samples, sub.violations, sub.max_excess
    );
    println!("||1/mu||_L2: {:?}", inv_mu_l2_sequence(2, 64, 3)?);
    for res in [16, 32] {
        let stats = empirical_bound_constant(&QuadratureGrid::new(2, res)?, 40, 42);
        println!(
            "res {res}: max ratio {:.4}, E0 ratio {:.4} <= {:.4}",
            stats.max_ratio, stats.max_e0_ratio, stats.e0_bound
        );
    }
    for period in [4.0, 8.0] {
        let stats = xs_product_test(&product_lattice(2, period)?, 1.5, 20, 42)?;
        println!(
            "period {period}: product ratio max {:.5}, mean {:.5}",
            stats.max_ratio, stats.mean_ratio
        );
    }
    Ok(())
}
