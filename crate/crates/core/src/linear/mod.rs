//! Data and state spaces of the linearized problem, the isomorphism
//! `Upsilon_{gamma,sigma}` with its inverse, and the incline perturbation
//! `M_kappa` with its operator-norm budget and Neumann-series solve.
//!
//! The inverse builds the free surface first, `eta^ = psi / rho_gamma`,
//! then solves the overdetermined Stokes problem on the modified data.

mod data;
mod kappa;
mod system;

pub use data::{
    block_sizes, data_weights, hdot_factor, random_data, random_state, single_mode, state_weights, xs_state_norm,
    ys_data_norm, ys_rows_norm, DataTuple, SolutionTriple,
};
pub use kappa::{
    budget, budget_coefficients, kappa0_from_budget, kappa_budget, neumann_inverse, power_probe, solve_l_kappa,
    BlockNorms, BlockOperators, KappaBudget, KappaSample, NeumannOptions, NeumannReport, OperatorNorms,
};
pub use system::{LinearSystem, OverdeterminedReport};
