use super::asymptotics::{low_deviation, m_high_scaled, LowDeviation};
use super::table::{solve_symbol_bvp, suggested_m, SymbolOptions};
use crate::domain::VerticalGrid;
use crate::error::{Error, Result};
use crate::report::{all_passed, Check};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Frequencies and tolerances of an asymptotics study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub gamma: f64,
    pub depth: f64,
    pub sigmas: Vec<f64>,
    /// Smallest-scale start `|xi|`, halved `halvings` times.
    pub low_start: f64,
    pub halvings: usize,
    pub low_vertical_m: usize,
    /// Admissible band around one for `m / (-4 pi^2 |xi|^2 b^3 / 3)`.
    pub ratio_tol: f64,
    /// Admissible spread `max / min` of the normalized low remainders.
    pub remainder_spread: f64,
    pub high_min: f64,
    pub high_max: f64,
    pub high_extended: f64,
    pub high_step: f64,
    /// Admissible relative growth of the fitted high constant.
    pub drift_tol: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig {
            gamma: 1.0,
            depth: 1.0,
            sigmas: vec![0.0, 1.0],
            low_start: 1e-3,
            halvings: 3,
            low_vertical_m: 24,
            ratio_tol: 0.02,
            remainder_spread: 2.0,
            high_min: 10.0,
            high_max: 100.0,
            high_extended: 200.0,
            high_step: 10.0,
            drift_tol: 0.05,
        }
    }
}

impl AsymptoticsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma.abs()),
            ("depth", self.depth),
            ("low_start", self.low_start),
            ("high_min", self.high_min),
            ("high_step", self.high_step),
            ("ratio_tol", self.ratio_tol),
            ("drift_tol", self.drift_tol),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive and finite, got {v}")));
            }
        }
        if !(self.high_min < self.high_max && self.high_max <= self.high_extended) {
            return Err(Error::Config("high_min < high_max <= high_extended is required".into()));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("sigmas must be a nonempty list of values >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowStudy {
    pub sigma: f64,
    pub rows: Vec<LowDeviation>,
    /// `max / min` of the `|xi|^3`-normalized remainders of `m`.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HighRow {
    pub xi_norm: f64,
    pub m_scaled: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HighStudy {
    /// Vertical resolution at the largest frequency.
    pub vertical_m: usize,
    pub rows: Vec<HighRow>,
    /// `sup |xi|^2 |m + 1/(4 pi |xi|)|` over `[high_min, high_max]`.
    pub fitted: f64,
    /// The same over `[high_min, high_extended]`.
    pub fitted_extended: f64,
    /// `(fitted_extended - fitted) / fitted`.
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub config: AsymptoticsConfig,
    pub low: Vec<LowStudy>,
    pub high: HighStudy,
    pub checks: Vec<Check>,
}

impl AsymptoticsReport {
    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }
}

/// Small- and large-frequency behavior of `m` along the `xi_1` axis.
///
/// Large frequencies are always solved by collocation, each on the grid
/// suggested for its boundary layer.
pub fn asymptotics_study(cfg: &AsymptoticsConfig) -> Result<AsymptoticsReport> {
    cfg.validate()?;
    let b = cfg.depth;
    let opts = SymbolOptions::exact();
    let low_grid = VerticalGrid::new(b, cfg.low_vertical_m);
    let mut low = Vec::new();
    let mut checks = Vec::new();
    for &sigma in &cfg.sigmas {
        let rows = (0..=cfg.halvings)
            .map(|k| {
                let r = cfg.low_start / f64::powi(2.0, k as i32);
                let e = solve_symbol_bvp(&[r], -cfg.gamma, sigma, &low_grid, &opts)?;
                Ok(low_deviation(&e, low_grid.nodes(), b))
            })
            .collect::<Result<Vec<_>>>()?;
        let max = rows.iter().map(|r| r.m).fold(0.0, f64::max);
        let min = rows.iter().map(|r| r.m).fold(f64::INFINITY, f64::min);
        let spread = if min > 0.0 { max / min } else { f64::INFINITY };
        checks.push(Check::within(
            &format!("low_ratio_sigma_{sigma}"),
            rows[0].m_ratio,
            1.0 - cfg.ratio_tol,
            1.0 + cfg.ratio_tol,
        ));
        checks.push(Check::at_most(
            &format!("low_remainder_spread_sigma_{sigma}"),
            spread,
            cfg.remainder_spread,
        ));
        low.push(LowStudy { sigma, rows, spread });
    }
    let count = ((cfg.high_extended - cfg.high_min) / cfg.high_step).round() as usize;
    let points: Vec<f64> = (0..=count).map(|k| cfg.high_min + k as f64 * cfg.high_step).collect();
    let vertical_m = suggested_m(cfg.high_extended, b);
    let sigma = *cfg.sigmas.last().expect("validated nonempty");
    let rows = points
        .par_iter()
        .map(|&r| {
            let grid = VerticalGrid::new(b, suggested_m(r, b));
            let e = solve_symbol_bvp(&[r], -cfg.gamma, sigma, &grid, &opts)?;
            Ok(HighRow {
                xi_norm: r,
                m_scaled: m_high_scaled(e.m, r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = |hi: f64| {
        rows.iter()
            .filter(|r| r.xi_norm <= hi * (1.0 + 1e-12))
            .map(|r| r.m_scaled)
            .fold(0.0, f64::max)
    };
    let fitted = sup(cfg.high_max);
    let fitted_extended = sup(cfg.high_extended);
    let drift = (fitted_extended - fitted) / fitted;
    checks.push(Check::below("high_fitted_finite", fitted, f64::INFINITY));
    checks.push(Check::at_most("high_fitted_drift", drift, cfg.drift_tol));
    Ok(AsymptoticsReport {
        config: cfg.clone(),
        low,
        high: HighStudy {
            vertical_m,
            rows,
            fitted,
            fitted_extended,
            drift,
        },
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_ranges() {
        let cfg = AsymptoticsConfig {
            high_max: 5.0,
            ..Default::default()
        };
        assert!(matches!(asymptotics_study(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn short_study_passes() {
        let cfg = AsymptoticsConfig {
            high_min: 10.0,
            high_max: 20.0,
            high_extended: 30.0,
            ..Default::default()
        };
        let r = asymptotics_study(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert_eq!(r.low.len(), 2);
        assert_eq!(r.high.rows.len(), 3);
    }
}
