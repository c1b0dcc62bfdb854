//! The linearized problem: the isomorphism `Upsilon` and the incline
//! perturbation `M_kappa`.
//!
//! Round-trips random band-limited states and data through `Upsilon`, then
//! solves `L_kappa x = data` by the Neumann series and compares the observed
//! contraction with the operator-norm product.
//!
//! ```bash
//! cargo run --example linear_solve
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shearwave::domain::{build_lattice, DomainSpec, Factor, VerticalGrid};
use shearwave::linear::{
    random_data, random_state, solve_l_kappa, xs_state_norm, ys_data_norm, BlockOperators, LinearSystem, NeumannOptions,
};
use shearwave::symbols::SymbolOptions;

fn main() -> shearwave::Result<()> {
    let spec = DomainSpec::new(vec![Factor::torus(1.0, 16)], 1.0, 0.05, 1.0, 1.0)?;
    let lattice = build_lattice(&spec, &[6])?;
    let grid = VerticalGrid::new(1.0, 40);
    let sys = LinearSystem::new(&spec, &lattice, &grid, &SymbolOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    let x = random_state(&mut rng, &lattice, &grid, 2, 4, 5);
    let back = sys.solve_upsilon(&sys.apply_upsilon(&x)?)?;
    let err = xs_state_norm(&back.sub(&x), &lattice, &grid, 0.0) / xs_state_norm(&x, &lattice, &grid, 0.0);
    println!("state round trip: {err:.3e}");

    let d = random_data(&mut rng, &lattice, &grid, 2, 4, 5);
    let y = sys.solve_upsilon(&d)?;
    let err =
        ys_data_norm(&sys.apply_upsilon(&y)?.sub(&d), &lattice, &grid, 0.0) / ys_data_norm(&d, &lattice, &grid, 0.0);
    println!("data round trip:  {err:.3e}");
    println!("adjoint residual: {:.3e}", sys.adjoint_compat_residual(&d, &y.eta)?);

    let ops = BlockOperators::new(&sys, 0.0)?;
    let norms = ops.norms(spec.kappa);
    let report = solve_l_kappa(&sys, Some(&ops), &d, spec.kappa, &NeumannOptions::default())?;
    println!(
        "kappa = {}: {} iterations, contraction {:.4}, ||L0^-1|| ||M_kappa|| = {:.4}, residual {:.3e}",
        spec.kappa,
        report.iterations,
        report.observed_contraction,
        norms.inverse_norm * norms.m_norm,
        report.residual
    );
    Ok(())
}
