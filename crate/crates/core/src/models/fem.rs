//! Shared finite-element plumbing: Gauss rules, exact subdomain integrals and
//! the mass-matrix square-root change of variables.

use nalgebra::DMatrix;

use crate::energy::PolySystem;
use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; points];
    let mut weights = vec![0.0; points];
    for i in 0..points {
        // Chebyshev-type initial guess, then Newton on P_points
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (points as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(points, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(points, x);
        nodes[i] = -x;
        weights[i] = 2.0 / ((1.0 - x * x) * d * d);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule mapped to `[lo, hi]`.
pub(crate) fn mapped_rule(rule: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    rule.0.iter().zip(&rule.1).map(move |(&x, &w)| (mid + half * x, half * w))
}

/// Subdomain `[(j-1)/count, j/count]` containing `x` (zero based).
pub(crate) fn channel_of(x: f64, count: usize) -> usize {
    ((x * count as f64).floor() as usize).min(count - 1)
}

/// Cut `[lo, hi]` at every multiple of `1/m` and `1/p` strictly inside it.
pub(crate) fn split_points(lo: f64, hi: f64, m: usize, p: usize) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for count in [m, p] {
        for j in 1..count {
            let x = j as f64 / count as f64;
            if x > lo + 1e-14 && x < hi - 1e-14 {
                pts.push(x);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    pts
}

/// Raw matrices of `E z' = A z + N (z ⊗ z) + B u`, `y = C z` from assembly.
#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub mass: DMatrix<f64>,
    pub a: DMatrix<f64>,
    /// Sparse entries `(i, j, k, value)` of `N[i, j n + k]`.
    pub n_entries: Vec<(usize, usize, usize, f64)>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Finite-element coefficients of the test initial condition.
    pub z0: Vec<f64>,
}

impl FemMatrices {
    pub fn n(&self) -> usize {
        self.mass.nrows()
    }

    /// Dense `n × n^2` quadratic term.
    pub fn n_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n * n);
        for &(i, j, k, v) in &self.n_entries {
            out[(i, j * n + k)] += v;
        }
        out
    }

    /// Apply `x = S z` with `S` the symmetric square root of the mass matrix.
    pub fn to_standard_form(&self) -> Result<FemModel> {
        let n = self.n();
        let eig = self.mass.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::NumericalFailure("mass matrix is not positive definite".into()));
        }
        let q = &eig.eigenvectors;
        let s = q * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * q.transpose();
        let s_inv = q * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * q.transpose();

        let a = &s_inv * &self.a * &s_inv;
        let b = &s_inv * &self.b;
        let c = &self.c * &s_inv;

        // row i of N~ (S^-1 ⊗ S^-1) is vec_r(S^-1 N~_i S^-1), N~_i the n×n reshape of row i
        let mut right = DMatrix::<f64>::zeros(n, n * n);
        for &(i, j, k, v) in &self.n_entries {
            for r in 0..n {
                let sr = v * s_inv[(j, r)];
                if sr == 0.0 {
                    continue;
                }
                for col in 0..n {
                    right[(i, r * n + col)] += sr * s_inv[(k, col)];
                }
            }
        }
        let n_mat = &s_inv * right;

        let z0 = DMatrix::from_column_slice(n, 1, &self.z0);
        let x0 = (&s * z0).as_slice().to_vec();
        let system = PolySystem::new(a, n_mat, b, c)?;
        Ok(FemModel { system, x0, sqrt_mass: s })
    }
}

/// A benchmark in standard form with its canonical evaluation point.
#[derive(Debug, Clone)]
pub struct FemModel {
    pub system: PolySystem,
    pub x0: Vec<f64>,
    pub sqrt_mass: DMatrix<f64>,
}
