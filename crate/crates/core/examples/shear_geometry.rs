//! Flattening-map geometry and the steady shear flow.
//!
//! Evaluates the free-boundary system at the shear flow for a few incline
//! parameters, checks the cubic flux identity on a random surface, and
//! computes the mean curvature of a cosine surface.
//!
//! ```bash
//! cargo run --example shear_geometry
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shearwave::domain::{build_lattice, DomainSpec, Factor, SurfaceField, VerticalGrid};
use shearwave::geometry::{cubic_flux_defect, mean_curvature, shear_residual, NodalGrid};
use shearwave::linear::random_state;
use shearwave::C64;

fn main() -> shearwave::Result<()> {
    for (kappa, depth, gamma) in [(0.1, 1.0, 1.0), (-0.3, 0.7, 1.5), (0.45, 1.8, 0.6)] {
        let spec = DomainSpec::new(vec![Factor::torus(1.0, 16)], depth, kappa, gamma, 1.0)?;
        let r = shear_residual(&spec, 40)?;
        println!(
            "kappa {kappa:>5} b {depth:>4} gamma {gamma:>4}: residual {:.3e}",
            r.max()
        );
    }

    let spec = DomainSpec::new(vec![Factor::torus(1.0, 16)], 1.0, 0.2, 1.0, 1.0)?;
    let lattice = build_lattice(&spec, &[6])?;
    let grid = VerticalGrid::new(1.0, 24);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let eta = random_state(&mut rng, &lattice, &grid, 2, 4, 2).eta;
    println!(
        "cubic flux defect: {:.3e}",
        cubic_flux_defect(&spec, &lattice, &eta, 24)?
    );

    let mut wave = SurfaceField::zeros(lattice.len(), 1);
    let p = lattice.index_of(&[1]).expect("mode in lattice");
    wave.set(0, p, C64::new(0.05, 0.0));
    wave.set(0, lattice.neg(p), C64::new(0.05, 0.0));
    let ng = NodalGrid::new(&lattice, &grid);
    let h = mean_curvature(&ng, &wave);
    println!("mean curvature: max |H| = {:.6}", h.max_abs());
    Ok(())
}
