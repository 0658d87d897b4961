//! Shared fixtures for the benchmarks.

use nlbal_core::{DMatrix, FemModelConfig, PolySystem, ShiftedKronSystem};

pub use nlbal_core::models::build_burgers;

/// Degree-`k` tensor system with the Burgers drift at `n` states and a
/// smooth right-hand side.
pub fn burgers_tensor_system(n: usize, k: usize) -> ShiftedKronSystem {
    let model = burgers(n);
    let len = n.pow(k as u32);
    let b = (0..len).map(|i| ((i as f64) * 0.37).sin()).collect();
    ShiftedKronSystem { a: model.a().clone(), m: DMatrix::zeros(n, n), k, b }
}

pub fn burgers(n: usize) -> PolySystem {
    build_burgers(&FemModelConfig::burgers(n)).expect("valid Burgers size").system
}
