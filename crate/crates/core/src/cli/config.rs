use crate::algebra::AlgebraConfig;
use crate::domain::{DomainSpec, Factor, SurfaceField};
use crate::error::{Error, Result};
use crate::nonlinear::{Method, SurfaceProfile};
use crate::symbols::AsymptoticsConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Settings of the `solve-linear` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub trials: usize,
    /// Largest wavenumber per axis carried by random fields.
    pub band: usize,
    /// Polynomial degree of random vertical profiles.
    pub degree: usize,
    pub roundtrip_tol: f64,
    pub adjoint_tol: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            trials: 10,
            band: 4,
            degree: 6,
            roundtrip_tol: 1e-8,
            adjoint_tol: 1e-10,
        }
    }
}

/// Settings of the `shear-check` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShearConfig {
    /// Random `(kappa, b, gamma)` draws in addition to the configured domain.
    pub draws: usize,
    pub residual_tol: f64,
    /// Random surfaces for the cubic flux identity.
    pub flux_trials: usize,
    pub flux_tol: f64,
}

impl Default for ShearConfig {
    fn default() -> Self {
        ShearConfig {
            draws: 5,
            residual_tol: 1e-10,
            flux_trials: 50,
            flux_tol: 1e-10,
        }
    }
}

/// Resolved configuration of a run; every report embeds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub cutoffs: Vec<usize>,
    pub vertical_m: usize,
    /// Sobolev index of the solver norms.
    pub s: f64,
    pub tol: f64,
    pub method: Method,
    pub max_iter: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool choose.
    pub threads: usize,
    /// Eulerian probe points used to check solutions.
    pub probes: usize,
    pub linear: LinearConfig,
    pub shear: ShearConfig,
    pub asymptotics: AsymptoticsConfig,
    pub algebra: AlgebraConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::new(vec![Factor::torus(1.0, 33)], 1.0, 0.1, 1.0, 1.0).expect("valid default domain"),
            cutoffs: vec![8],
            vertical_m: 60,
            s: 0.0,
            tol: 1e-9,
            method: Method::Picard,
            max_iter: 60,
            seed: 42,
            threads: 0,
            probes: 200,
            linear: LinearConfig::default(),
            shear: ShearConfig::default(),
            asymptotics: AsymptoticsConfig::default(),
            algebra: AlgebraConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.len() != self.domain.d() {
            return Err(Error::Config(format!(
                "cutoffs has {} entries but the domain has {} factors",
                self.cutoffs.len(),
                self.domain.d()
            )));
        }
        if self.cutoffs.contains(&0) {
            return Err(Error::Config("cutoffs must be >= 1".into()));
        }
        if self.vertical_m < 4 {
            return Err(Error::Config(format!(
                "vertical_m must be >= 4, got {}",
                self.vertical_m
            )));
        }
        let tols = [
            ("tol", self.tol),
            ("linear.roundtrip_tol", self.linear.roundtrip_tol),
            ("linear.adjoint_tol", self.linear.adjoint_tol),
            ("shear.residual_tol", self.shear.residual_tol),
            ("shear.flux_tol", self.shear.flux_tol),
        ];
        for (key, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if !self.s.is_finite() {
            return Err(Error::Config("s must be finite".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Parses JSON, reporting the path of the offending key on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Config(format!("{what}: {inner}"))
        } else {
            Error::Config(format!("{what}: key `{path}`: {inner}"))
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{what}: cannot read {}: {e}", path.display())))?;
    parse_json(&text, what)
}

/// Forcing of a `solve` instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Forcing {
    None,
    /// Layer force given by Fourier modes; conjugate modes are added.
    Layer {
        modes: Vec<LayerMode>,
    },
    /// Forces of a manufactured exact solution.
    Manufactured {
        amplitude: f64,
        profile: SurfaceProfile,
    },
}

/// Coefficients `[re, im]` of every component at wavenumber `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerMode {
    pub k: Vec<i64>,
    pub value: Vec<[f64; 2]>,
}

/// Contents of `inst.json`; absent keys fall back to the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default)]
    pub vertical_m: Option<usize>,
    pub forcing: Forcing,
}

/// Contents of a field file for `norms`: the cross-section, cutoffs, and
/// either lattice coefficients `[re, im]` or real samples on the minimal
/// grid in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub factors: Vec<Factor>,
    pub cutoffs: Vec<usize>,
    #[serde(default)]
    pub coeffs: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub samples: Option<Vec<f64>>,
}

impl FieldFile {
    pub fn from_field(factors: &[Factor], cutoffs: &[usize], f: &SurfaceField) -> Self {
        FieldFile {
            factors: factors.to_vec(),
            cutoffs: cutoffs.to_vec(),
            coeffs: Some(f.comp(0).iter().map(|c| [c.re, c.im]).collect()),
            samples: None,
        }
    }
}
