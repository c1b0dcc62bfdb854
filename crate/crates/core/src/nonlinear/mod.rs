//! Full nonlinear residual of the flattened problem, its solution by the
//! frozen-Jacobian iteration or by Newton–Krylov, and the return to
//! Eulerian coordinates.

mod eulerian;
mod instance;
mod manufactured;
mod residual;
mod solve;

pub use eulerian::{
    divergence_row, dynamic_lhs, kinematic_row, momentum_lhs, probe_points, round_trip_defect, unflatten_solution,
    unflattened_residual, EulerianReport, EulerianSamples, EulerianState, ForceSampler, PointState, Probe, ProbeKind,
    VolumeInterpolant,
};
pub use instance::ProblemInstance;
pub use manufactured::{Manufactured, SurfaceProfile};
pub use residual::{mask_rows, NonlinearSystem};
pub use solve::{newton_solve, picard_solve, solve, Method, SolveOptions, SolveReport};
