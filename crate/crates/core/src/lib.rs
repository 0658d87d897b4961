//! Polynomial approximations of H-infinity past and future energy functions
//! for control-affine systems `x' = A x + N (x ⊗ x) + B u`, `y = C x`.
//!
//! Degree-`k` coefficients come from Kronecker-structured linear systems
//! solved by a Schur-based back-substitution; the quadratic terms come from
//! algebraic Riccati equations.

mod dense;
pub mod energy;
pub mod error;
pub mod io;
pub mod kron;
pub mod models;
pub mod polynomial;
pub mod report;
pub mod riccati;
mod schur;
pub mod tensor_solver;

pub use nalgebra::DMatrix;

pub use energy::{approx_energy, approx_future_energy, approx_past_energy, feedback_control, hjb_residual, PolySystem};
pub use error::{Error, Result};
pub use io::{load_coefficients, save_coefficients};
pub use kron::{kron_power, kron_sum_apply, symmetrize, CoeffVector};
pub use models::{FemKind, FemModel, FemModelConfig};
pub use polynomial::{poly_eval, poly_gradient, EnergyCoefficients, EnergyKind};
pub use report::{ModelReport, TableName};
pub use riccati::{gamma_lower_bound, AreProblem, GammaBound};
pub use tensor_solver::{solve_shifted_kron_system, ShiftedKronSolver, ShiftedKronSystem};
