//! Flattening-map geometry: the pulled-back calculus on the fixed strip,
//! shear background fields, mean curvature and composition with the
//! flattening map.

mod background;
mod calculus;
pub mod jet;
mod nodal;
mod pack;

pub use background::{
    background_fields, compose_on_surface, compose_with_flattening, cubic_flux_defect, p_hydro, s0, sample_composed,
    sample_composed_surface, shear, shear_residual, BackgroundFields, PointFn, ShearReport,
};
pub use calculus::{
    a_calculus, div_a, div_stress_a, dsym_a, grad_a, hess_a, laplacian_a, mean_curvature, mean_curvature_nodal,
    stress_a, AOperator,
};
pub use jet::{jet_space, Jet, JetSpace};
pub use nodal::{Derivs, NodalGrid};
pub use pack::{flatten, unflatten, GeometryPack, SurfaceInterpolant};
