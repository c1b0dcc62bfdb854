//! Frequency-wise symbols of the gamma-Stokes problem with a normal stress
//! at the top, and the surface symbol `rho_gamma` built from them.

mod asymptotics;
mod stokes;
mod study;
mod table;

pub use asymptotics::{
    check_high_asymptotics, check_low_asymptotics, collocation_residual, energy_defect, high_deviation, low_deviation,
    m_high_scaled, symbol_m, HighDeviation, HighReport, LowDeviation, LowReport,
};
pub use stokes::{ignored_rows, stokes_forward, StokesProfile, StokesRhs, StokesSolver};
pub use study::{asymptotics_study, AsymptoticsConfig, AsymptoticsReport, HighRow, HighStudy, LowStudy};
pub use table::{
    build_symbol_table, rho_gamma, solve_symbol_bvp, suggested_m, SymbolEntry, SymbolOptions, SymbolTable,
};
