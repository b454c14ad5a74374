//! Pseudo-spectral toolkit for the semilinear dissipative wave equation
//!
//! ```text
//! u_tt - Lap u + u_t = -|u|^theta u,   x in R^n, n = 1, 2, 3
//! ```
//!
//! on a periodic box `[-L, L)^n`. The linear part is propagated exactly
//! through the Fourier symbol of the Green function; the nonlinearity
//! enters through a Duhamel step with quadrature weights. The core is
//! generic over `f32` and `f64`; `*64` and `*32` aliases name the concrete
//! types.

pub mod analysis;
pub mod error;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod symbols;

pub use analysis::{
    basic_energy, decay_report, decay_target, e0_norm, fit_decay_rate, lp_norm, sobolev_norm,
    weighted_profile, Check, DecayReport, EnergyLedger, Norm, Quantity, Regime, SeriesObserver,
    TimeSeries,
};
pub use error::{Error, Result};
pub use grid::{
    derivative, forward_transform, inverse_transform, make_grid, spectral_derivative, Field, Grid,
    MultiIndex, SpectralField,
};
pub use scalar::Real;
pub use solver::{
    apply_nonlinearity, linear_solution, solve, step_semilinear, Forcing, Integrator, Observer,
    RunRecord, SolverConfig, SolverState, Stepper,
};
pub use symbols::{
    apply_free_wave, build_symbol_table, cutoff, green_band, green_hat, green_hat_dt, green_hat_dtt,
    Band, CutoffSpec, SymbolTable,
};

pub type Grid64 = grid::Grid<f64>;
pub type Field64 = grid::Field<f64>;
pub type SpectralField64 = grid::SpectralField<f64>;
pub type SymbolTable64 = symbols::SymbolTable<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolverState64 = solver::SolverState<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type Field32 = grid::Field<f32>;
pub type SpectralField32 = grid::SpectralField<f32>;
pub type SymbolTable32 = symbols::SymbolTable<f32>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
pub type SolverState32 = solver::SolverState<f32>;
