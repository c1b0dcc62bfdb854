//! Anisotropic `X^s` norms on mixed line/circle cross-sections.
//!
//! Compares `X^s` and `H^s` norms of a Gaussian, classifies every factor
//! pattern of dimension at most three, and prints the incompleteness table
//! for the pattern with two lines after a circle.
//!
//! ```bash
//! cargo run --example xs_norms
//! ```

use shearwave::domain::{Factor, HorizontalFft, Lattice, SurfaceField};
use shearwave::multipliers::{classify_pattern, incompleteness_sequence, norm_report};

fn main() -> shearwave::Result<()> {
    let factors = [Factor::real(8.0, 65), Factor::torus(1.0, 9)];
    let lattice = Lattice::from_factors(&factors, &[32, 4])?;
    let fft = HorizontalFft::minimal(&lattice);
    let samples: Vec<f64> = (0..fft.grid_len())
        .map(|i| {
            let x = fft.node(i);
            (-(x[0] - 4.0).powi(2)).exp() * (1.0 + 0.3 * (2.0 * std::f64::consts::PI * x[1]).cos())
        })
        .collect();
    let f = SurfaceField::scalar(fft.forward_real(&samples));
    for s in [0.0, 1.0, 2.5] {
        let r = norm_report(&f, &lattice, s);
        println!(
            "s = {s}: X^s {:.6}  H^s {:.6}  H^-1 {:?}",
            r.xs_norm, r.hs_norm, r.hdot_minus1
        );
    }

    for d in 1..=3usize {
        for bits in 0..(1u32 << d) {
            let pattern: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
            let name: String = pattern.iter().map(|&l| if l { 'R' } else { 'T' }).collect();
            println!("{name:>4}: {:?}", classify_pattern(&pattern));
        }
    }

    let table = incompleteness_sequence(
        &[Factor::torus(1.0, 9), Factor::real(64.0, 9), Factor::real(64.0, 9)],
        8,
        1.0,
    )?;
    println!("{:>3} {:>14} {:>14}", "q", "X^s partial", "L^1 partial");
    for row in &table.rows {
        println!("{:>3} {:>14.6e} {:>14.6e}", row.q, row.xs_partial, row.l1_partial);
    }
    Ok(())
}
