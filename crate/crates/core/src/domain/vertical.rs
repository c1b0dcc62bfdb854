use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Chebyshev–Gauss–Lobatto grid on `[0, b]`, ascending, with the spectral
/// differentiation matrix and Clenshaw–Curtis weights.
#[derive(Debug, Clone)]
pub struct VerticalGrid {
    b: f64,
    m: usize,
    nodes: Vec<f64>,
    diff: DMatrix<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl VerticalGrid {
    /// `m + 1` nodes on `[0, b]`.
    pub fn new(b: f64, m: usize) -> Self {
        assert!(m >= 2, "vertical grid needs at least 3 nodes");
        assert!(b > 0.0);
        let t: Vec<f64> = (0..=m).map(|j| (j as f64 * PI / m as f64).cos()).collect();
        let nodes: Vec<f64> = t.iter().map(|&tj| 0.5 * b * (1.0 - tj)).collect();
        let c = |j: usize| if j == 0 || j == m { 2.0 } else { 1.0 };
        let mut dt = DMatrix::<f64>::zeros(m + 1, m + 1);
        for i in 0..=m {
            for j in 0..=m {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    // t_i - t_j in product form avoids cancellation
                    let diff = 2.0
                        * ((i + j) as f64 * PI / (2.0 * m as f64)).sin()
                        * ((j as f64 - i as f64) * PI / (2.0 * m as f64)).sin();
                    dt[(i, j)] = c(i) / c(j) * sign / diff;
                }
            }
            let row_sum: f64 = (0..=m).filter(|&j| j != i).map(|j| dt[(i, j)]).sum();
            dt[(i, i)] = -row_sum;
        }
        // dz = -(b/2) dt
        let diff = dt * (-2.0 / b);
        let weights = clenshaw_curtis(m).into_iter().map(|w| 0.5 * b * w).collect();
        let bary = (0..=m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        VerticalGrid {
            b,
            m,
            nodes,
            diff,
            weights,
            bary,
        }
    }

    pub fn depth(&self) -> f64 {
        self.b
    }

    /// Polynomial degree `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of nodes `M + 1`.
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Derivative of nodal values.
    pub fn differentiate(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| v[j] * self.diff[(i, j)]).sum()).collect()
    }

    pub fn differentiate_real(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| v[j] * self.diff[(i, j)]).sum()).collect()
    }

    /// Clenshaw–Curtis integral over `[0, b]`.
    pub fn integrate(&self, v: &[C64]) -> C64 {
        v.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn integrate_real(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Barycentric weights `w_j` for interpolation at an arbitrary height.
    pub fn interpolation_weights(&self, z: f64) -> Vec<f64> {
        let n = self.len();
        if let Some(j) = self.nodes.iter().position(|&x| (x - z).abs() < 1e-15 * self.b.max(1.0)) {
            let mut w = vec![0.0; n];
            w[j] = 1.0;
            return w;
        }
        let raw: Vec<f64> = (0..n).map(|j| self.bary[j] / (z - self.nodes[j])).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / s).collect()
    }

    /// Interpolates nodal values at height `z`.
    pub fn interpolate(&self, v: &[C64], z: f64) -> C64 {
        self.interpolation_weights(z).iter().zip(v).map(|(w, a)| a * *w).sum()
    }

    /// Chebyshev coefficients of nodal values (degree `0..=M`).
    pub fn chebyshev_coefficients(&self, v: &[C64]) -> Vec<C64> {
        let m = self.m;
        let mf = m as f64;
        (0..=m)
            .map(|k| {
                let mut s = C64::new(0.0, 0.0);
                for (j, vj) in v.iter().enumerate() {
                    let half = if j == 0 || j == m { 0.5 } else { 1.0 };
                    s += vj * (half * (PI * (j * k) as f64 / mf).cos());
                }
                let scale = if k == 0 || k == m { 1.0 / mf } else { 2.0 / mf };
                s * scale
            })
            .collect()
    }

    /// Relative size of the trailing Chebyshev coefficients, a resolution indicator.
    pub fn tail_ratio(&self, v: &[C64]) -> f64 {
        let c = self.chebyshev_coefficients(v);
        let max = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let tail = c[c.len() - 3..].iter().map(|x| x.norm()).fold(0.0, f64::max);
        tail / max
    }
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the nodes `cos(j pi / m)`.
fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let mut w = vec![0.0; m + 1];
    let theta: Vec<f64> = (0..=m).map(|j| j as f64 * PI / mf).collect();
    let interior: Vec<usize> = (1..m).collect();
    let mut v = vec![1.0; m - 1];
    if m.is_multiple_of(2) {
        w[0] = 1.0 / (mf * mf - 1.0);
        w[m] = w[0];
        for k in 1..m / 2 {
            let kf = k as f64;
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (vi, &j) in v.iter_mut().zip(&interior) {
            *vi -= (mf * theta[j]).cos() / (mf * mf - 1.0);
        }
    } else {
        w[0] = 1.0 / (mf * mf);
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            let kf = k as f64;
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (vi, &j) in v.iter().zip(&interior) {
        w[j] = 2.0 * vi / mf;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_weights_and_constants() {
        for &(b, m) in &[(1.0, 48), (2.5, 17), (0.3, 8)] {
            let g = VerticalGrid::new(b, m);
            assert_eq!(g.nodes()[0], 0.0);
            assert!((g.nodes()[m] - b).abs() < 1e-15);
            let s: f64 = g.weights().iter().sum();
            assert!((s - b).abs() < 1e-13 * b);
            let d = g.differentiate_real(&vec![1.0; m + 1]);
            assert!(d.iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn exact_on_polynomials() {
        let g = VerticalGrid::new(2.0, 12);
        let v: Vec<f64> = g.nodes().iter().map(|z| z.powi(5) - 3.0 * z).collect();
        let dv = g.differentiate_real(&v);
        for (z, d) in g.nodes().iter().zip(&dv) {
            assert!((d - (5.0 * z.powi(4) - 3.0)).abs() < 1e-10);
        }
        let int = g.integrate_real(&v);
        assert!((int - (2f64.powi(6) / 6.0 - 6.0)).abs() < 1e-12);
        let c: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        let z = 0.731;
        assert!((g.interpolate(&c, z).re - (z.powi(5) - 3.0 * z)).abs() < 1e-12);
    }

    #[test]
    fn spectral_integration_of_exponential() {
        let g = VerticalGrid::new(1.0, 32);
        let v: Vec<f64> = g.nodes().iter().map(|z| (3.0 * z).exp()).collect();
        assert!((g.integrate_real(&v) - ((3f64).exp() - 1.0) / 3.0).abs() < 1e-13);
    }
}
