//! Symbols of the gamma-Stokes problem on a periodic strip.
//!
//! Builds the table of `m` and `rho` over a small lattice, then checks the
//! small- and large-frequency behavior of `m` along the `xi_1` axis.
//!
//! ```bash
//! cargo run --example symbol_table
//! ```

use shearwave::domain::{build_lattice, DomainSpec, Factor, VerticalGrid};
use shearwave::symbols::{build_symbol_table, solve_symbol_bvp, suggested_m, SymbolOptions};
use std::f64::consts::PI;

fn main() -> shearwave::Result<()> {
    let spec = DomainSpec::new(vec![Factor::torus(1.0, 17)], 1.0, 0.1, 1.0, 1.0)?;
    let lattice = build_lattice(&spec, &[6])?;
    let grid = VerticalGrid::new(spec.depth, suggested_m(6.0, spec.depth));
    let table = build_symbol_table(&spec, &lattice, &grid, &SymbolOptions::default())?;
    println!("{:>4} {:>24} {:>24}", "k", "m", "rho");
    for (l, e) in table.entries.iter().enumerate() {
        let k = lattice.wavenumbers(l)[0];
        if k >= 0 {
            println!("{k:>4} {:>24.6e} {:>24.6e}", e.m, e.rho);
        }
    }

    let opts = SymbolOptions::exact();
    let low = VerticalGrid::new(1.0, 24);
    for r in [1e-3, 5e-4, 2.5e-4] {
        let e = solve_symbol_bvp(&[r], -1.0, 1.0, &low, &opts)?;
        let lead = -4.0 * PI * PI * r * r / 3.0;
        println!("|xi| = {r:.1e}: m / lead = {:.8}", e.m.re / lead);
    }
    for r in [10.0, 50.0, 100.0] {
        let g = VerticalGrid::new(1.0, suggested_m(r, 1.0));
        let e = solve_symbol_bvp(&[r], -1.0, 1.0, &g, &opts)?;
        let scaled = r * r * (e.m + 1.0 / (4.0 * PI * r)).norm();
        println!("|xi| = {r:>5}: |xi|^2 |m + 1/(4 pi |xi|)| = {scaled:.6}");
    }
    Ok(())
}
