//! Benchmark systems: the scalar and planar examples, and finite-element
//! semi-discretizations of the Burgers and Kuramoto-Sivashinsky equations.

mod burgers;
mod examples;
mod fem;
mod ks;

pub use burgers::{assemble_burgers, build_burgers};
pub use examples::{analytic_energy_example1, build_example1, build_example2, Example1Params};
pub use fem::{gauss_legendre, FemMatrices, FemModel};
pub use ks::{assemble_ks, build_ks};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FemKind {
    Burgers,
    KuramotoSivashinsky,
}

/// Discretization parameters for the PDE benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemModelConfig {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub epsilon: f64,
    pub kind: FemKind,
}

impl FemModelConfig {
    /// `n` interior nodes, four inputs and outputs, `epsilon = 1e-3`.
    pub fn burgers(n: usize) -> Self {
        Self { n, m: 4, p: 4, epsilon: 1e-3, kind: FemKind::Burgers }
    }

    /// `n / 2` periodic nodes, five inputs, two outputs, `epsilon = 1/13.0291^2`.
    pub fn ks(n: usize) -> Self {
        Self { n, m: 5, p: 2, epsilon: 1.0 / (13.0291f64 * 13.0291), kind: FemKind::KuramotoSivashinsky }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.m == 0 || self.p == 0 {
            return Err(invalid("models need at least one input and one output"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        match self.kind {
            FemKind::Burgers if self.n < 2 => Err(invalid(format!("Burgers model needs n >= 2, got {}", self.n))),
            FemKind::KuramotoSivashinsky if self.n < 4 || !self.n.is_multiple_of(2) => Err(invalid(format!(
                "Kuramoto-Sivashinsky model needs an even n >= 4, got {}",
                self.n
            ))),
            _ => Ok(()),
        }
    }
}
