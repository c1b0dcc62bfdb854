use crate::domain::{DomainSpec, SurfaceField};
use crate::error::{Error, Result};
use crate::geometry::PointFn;
use std::fmt;
use std::sync::Arc;

/// Physical parameters together with the generalized forces: a bulk force
/// `f_bulk` on `Sigma x R`, a layer force `f(x')` extended vertically, a
/// surface stress `T_bulk` on `Sigma x R` and a layer stress `T(x')`.
///
/// Stresses are symmetric `n x n` matrices stored row-major.
#[derive(Clone)]
pub struct ProblemInstance {
    pub spec: DomainSpec,
    pub bulk_force: Option<Arc<PointFn>>,
    pub layer_force: Option<SurfaceField>,
    pub bulk_stress: Option<Arc<PointFn>>,
    pub layer_stress: Option<SurfaceField>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("spec", &self.spec)
            .field("bulk_force", &self.bulk_force.is_some())
            .field("layer_force", &self.layer_force.is_some())
            .field("bulk_stress", &self.bulk_stress.is_some())
            .field("layer_stress", &self.layer_stress.is_some())
            .finish()
    }
}

impl ProblemInstance {
    /// Unforced instance. Zero surface tension is accepted only for `n = 2`.
    pub fn new(spec: DomainSpec) -> Result<Self> {
        if spec.sigma == 0.0 && spec.n() != 2 {
            return Err(Error::Config(
                "sigma = 0 requires a one-dimensional cross-section".into(),
            ));
        }
        if spec.gamma == 0.0 {
            return Err(Error::Config("the wave speed gamma must be nonzero".into()));
        }
        Ok(ProblemInstance {
            spec,
            bulk_force: None,
            layer_force: None,
            bulk_stress: None,
            layer_stress: None,
        })
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn with_bulk_force(mut self, f: Arc<PointFn>) -> Self {
        self.bulk_force = Some(f);
        self
    }

    pub fn with_layer_force(mut self, f: SurfaceField) -> Result<Self> {
        if f.ncomp != self.n() {
            return Err(Error::Shape(format!("layer force needs {} components", self.n())));
        }
        self.layer_force = Some(f);
        Ok(self)
    }

    pub fn with_bulk_stress(mut self, t: Arc<PointFn>) -> Self {
        self.bulk_stress = Some(t);
        self
    }

    pub fn with_layer_stress(mut self, t: SurfaceField) -> Result<Self> {
        let n = self.n();
        if t.ncomp != n * n {
            return Err(Error::Shape(format!("layer stress needs {} components", n * n)));
        }
        for i in 0..n {
            for j in 0..i {
                let a = t.comp(i * n + j);
                let b = t.comp(j * n + i);
                let scale = t.max_abs().max(1.0);
                if a.iter().zip(b).any(|(x, y)| (x - y).norm() > 1e-12 * scale) {
                    return Err(Error::Config("layer stress must be symmetric".into()));
                }
            }
        }
        self.layer_stress = Some(t);
        Ok(self)
    }

    /// All forces multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        let scale_fn = |f: &Arc<PointFn>| -> Arc<PointFn> {
            let f = f.clone();
            Arc::new(move |y: &[f64]| f(y).into_iter().map(|v| v * a).collect())
        };
        ProblemInstance {
            spec: self.spec.clone(),
            bulk_force: self.bulk_force.as_ref().map(scale_fn),
            layer_force: self.layer_force.as_ref().map(|f| f.scaled(a)),
            bulk_stress: self.bulk_stress.as_ref().map(scale_fn),
            layer_stress: self.layer_stress.as_ref().map(|t| t.scaled(a)),
        }
    }

    pub fn is_unforced(&self) -> bool {
        self.bulk_force.is_none()
            && self.bulk_stress.is_none()
            && self.layer_force.as_ref().is_none_or(|f| f.max_abs() == 0.0)
            && self.layer_stress.as_ref().is_none_or(|t| t.max_abs() == 0.0)
    }
}
