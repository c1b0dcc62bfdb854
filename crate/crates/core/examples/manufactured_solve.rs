//! Nonlinear solve of a manufactured traveling wave.
//!
//! The forces are chosen so that a smooth explicit state solves the
//! flattened system. Picard and Newton iterations recover it, and the
//! solution is checked against the unflattened Eulerian equations.
//!
//! ```bash
//! cargo run --example manufactured_solve
//! ```

use shearwave::domain::{DomainSpec, Factor};
use shearwave::linear::xs_state_norm;
use shearwave::nonlinear::{
    probe_points, solve, unflattened_residual, Manufactured, Method, NonlinearSystem, SolveOptions, SurfaceProfile,
};

fn main() -> shearwave::Result<()> {
    let spec = DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, 0.1, 1.0, 1.0)?;
    let man = Manufactured::new(&spec, 0.02, SurfaceProfile::Band)?;
    let sys = NonlinearSystem::new(man.instance()?, &[8], 60)?;
    let exact = man.exact_state(sys.lattice(), sys.grid())?;
    let probes = probe_points(&spec, 500, 42);
    for method in [Method::Picard, Method::Newton] {
        let opts = SolveOptions {
            method,
            tol: 1e-11,
            ..Default::default()
        };
        let (x, report) = solve(&sys, &opts)?;
        let err = xs_state_norm(&x.sub(&exact), sys.lattice(), sys.grid(), 0.0);
        let eulerian = unflattened_residual(&sys, &x, &probes)?;
        println!(
            "{method:?}: {} iterations, error {err:.3e}, Eulerian defect {:.3e}",
            report.iterations,
            eulerian.max()
        );
        println!("  residual history {:?}", report.history);
    }
    Ok(())
}
