#![allow(dead_code)]

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

type Block = [[C64; 2]; 2];

fn mul(a: &Block, b: &Block) -> Block {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mulv(a: &Block, v: &[C64; 2]) -> [C64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn inv(a: &Block) -> Block {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

fn sub(a: &Block, b: &Block) -> Block {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

/// Second-order finite differences on `cells` uniform cells for the normal
/// velocity at the surface of the gamma-Stokes problem with unit normal
/// stress, written as `w'' - a^2 w = phi`, `phi'' - lambda phi = 0` with
/// `w = u_n`, `a = 2 pi |xi|`, `lambda = a^2 - 2 pi i gamma xi_1`.
pub fn fd_symbol_m_raw(xi: &[f64], gamma: f64, b: f64, cells: usize) -> C64 {
    let a2 = 4.0 * PI * PI * xi.iter().map(|x| x * x).sum::<f64>();
    let beta = 2.0 * PI * xi[0] * gamma;
    let lam = C64::new(a2, -beta);
    let h = b / cells as f64;
    let h2 = h * h;
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let n = cells + 1;
    // Block-tridiagonal rows L_j y_{j-1} + D_j y_j + U_j y_{j+1} = r_j, y_j = (w_j, phi_j).
    let mut lo = vec![[[z; 2]; 2]; n];
    let mut di = vec![[[z; 2]; 2]; n];
    let mut up = vec![[[z; 2]; 2]; n];
    let mut rhs = vec![[z; 2]; n];
    // w_0 = 0 and w'(0) = 0 through a ghost node eliminated by the row at j = 0.
    di[0] = [[one, z], [C64::new(-2.0 - h2 * a2, 0.0), C64::new(-h2, 0.0)]];
    up[0] = [[z, z], [C64::new(2.0, 0.0), z]];
    for j in 1..cells {
        lo[j] = [[one, z], [z, one]];
        di[j] = [
            [C64::new(-2.0 - h2 * a2, 0.0), C64::new(-h2, 0.0)],
            [z, -2.0 - lam * h2],
        ];
        up[j] = [[one, z], [z, one]];
    }
    // phi + 2 a^2 w = 0 and (phi' + i beta w') / a^2 - 2 w' = 1 at the top,
    // central derivatives through ghost nodes eliminated by the rows at j = cells.
    let last = cells;
    let inv2h = 1.0 / (2.0 * h);
    let dw_n = [C64::new((2.0 + h2 * a2) * inv2h, 0.0), C64::new(h2 * inv2h, 0.0)];
    let dw_l = C64::new(-2.0 * inv2h, 0.0);
    let dp_n = (2.0 + lam * h2) * inv2h;
    let dp_l = C64::new(-2.0 * inv2h, 0.0);
    let cw = C64::new(0.0, beta) / a2 - 2.0;
    di[last] = [[C64::new(2.0 * a2, 0.0), one], [cw * dw_n[0], cw * dw_n[1] + dp_n / a2]];
    lo[last] = [[z, z], [cw * dw_l, dp_l / a2]];
    rhs[last] = [z, one];
    // Block Thomas elimination.
    let mut cp = vec![[[z; 2]; 2]; n];
    let mut dp = vec![[z; 2]; n];
    let d0 = inv(&di[0]);
    cp[0] = mul(&d0, &up[0]);
    dp[0] = mulv(&d0, &rhs[0]);
    for j in 1..n {
        let den = inv(&sub(&di[j], &mul(&lo[j], &cp[j - 1])));
        cp[j] = mul(&den, &up[j]);
        let lv = mulv(&lo[j], &dp[j - 1]);
        dp[j] = mulv(&den, &[rhs[j][0] - lv[0], rhs[j][1] - lv[1]]);
    }
    dp[n - 1][0]
}

/// Richardson extrapolation of [`fd_symbol_m_raw`] on `cells` and `2 cells`.
pub fn fd_symbol_m(xi: &[f64], gamma: f64, b: f64, cells: usize) -> C64 {
    let coarse = fd_symbol_m_raw(xi, gamma, b, cells);
    let fine = fd_symbol_m_raw(xi, gamma, b, 2 * cells);
    (fine * 4.0 - coarse) / 3.0
}
