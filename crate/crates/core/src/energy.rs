//! Degree-by-degree computation of past and future energy functions for
//! quadratic systems `x' = A x + N (x ⊗ x) + B u`, `y = C x`.
//!
//! The degree-2 coefficient comes from the Riccati equation. For `k >= 3`
//! the coefficient solves a Kronecker-sum system in the closed-loop matrix
//! (`A - eta B B^T W_2` for the future energy, `A + B B^T V_2` for the past
//! energy), whose right-hand side involves only lower degrees:
//!
//! ```text
//! future: L_k(A_cl^T) w_k = -L_{k-1}(N^T) w_{k-1} + eta/4 sum i j vec(W_i^T B B^T W_j)
//! past:   L_k(A_cl^T) v_k = -L_{k-1}(N^T) v_{k-1} -  1/4  sum i j vec(V_i^T B B^T V_j)
//! ```
//!
//! with the sums over `i, j >= 3`, `i + j = k + 2`, and `W_i` the `n × n^(i-1)`
//! reshape of `w_i`. On symmetric coefficients this is the same system as
//! `[L_k(A^T) - k eta (I ⊗ W_2 B B^T)] w_k = rhs` (resp. `+ k (I ⊗ V_2 B B^T)`),
//! but the closed-loop operator commutes with symmetrization, so solving it
//! and symmetrizing yields the exact symmetric solution.

use nalgebra::DMatrix;

use crate::error::{invalid, mismatch, Error, Result};
use crate::kron::{kron_power, kron_sum_apply, symmetrize_in_place, CoeffVector};
use crate::polynomial::{poly_gradient, EnergyCoefficients, EnergyKind};
use crate::riccati::{solve_future_are, solve_past_are, vec_r, AreProblem};
use crate::tensor_solver::ShiftedKronSolver;

/// Relative residual allowed for each degree's linear system.
pub const DEGREE_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Quadratic control-affine system `x' = A x + N (x ⊗ x) + B u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct PolySystem {
    a: DMatrix<f64>,
    n_mat: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl PolySystem {
    /// `N` is `n × n^2`. Its rows are symmetrized (as degree-2 coefficients),
    /// which leaves the dynamics unchanged.
    pub fn new(a: DMatrix<f64>, n_mat: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(mismatch(format!("A must be square and nonempty, got {}x{}", a.nrows(), a.ncols())));
        }
        if n_mat.shape() != (n, n * n) {
            return Err(mismatch(format!("N must be {n}x{}, got {}x{}", n * n, n_mat.nrows(), n_mat.ncols())));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(mismatch(format!("B must be {n}xm with m >= 1, got {}x{}", b.nrows(), b.ncols())));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(mismatch(format!("C must be px{n} with p >= 1, got {}x{}", c.nrows(), c.ncols())));
        }
        if a.iter().chain(n_mat.iter()).chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("system matrices contain non-finite entries"));
        }
        let mut n_mat = n_mat;
        for r in 0..n {
            let mut row: Vec<f64> = n_mat.row(r).iter().copied().collect();
            symmetrize_in_place(&mut row, n, 2);
            for (j, v) in row.into_iter().enumerate() {
                n_mat[(r, j)] = v;
            }
        }
        Ok(Self { a, n_mat, b, c })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn n_mat(&self) -> &DMatrix<f64> {
        &self.n_mat
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Same system with the quadratic term removed.
    pub fn linearized(&self) -> Self {
        Self { n_mat: DMatrix::zeros(self.n(), self.n() * self.n()), ..self.clone() }
    }

    /// `A x + N (x ⊗ x)`.
    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let xv = DMatrix::from_column_slice(x.len(), 1, x);
        let xx = kron_power(x, 2)?;
        let f = &self.a * &xv + &self.n_mat * DMatrix::from_column_slice(xx.len(), 1, &xx);
        Ok(f.as_slice().to_vec())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(mismatch(format!("point has {} entries, system has n = {}", x.len(), self.n())));
        }
        Ok(())
    }

    fn are_problem(&self, eta: f64) -> Result<AreProblem> {
        AreProblem::new(self.a.clone(), self.b.clone(), self.c.clone(), eta)
    }
}

/// Future (observability-type) energy coefficients up to degree `d`.
pub fn approx_future_energy(sys: &PolySystem, eta: f64, d: usize) -> Result<EnergyCoefficients> {
    approx_energy(sys, eta, d, EnergyKind::Future)
}

/// Past (controllability-type) energy coefficients up to degree `d`.
pub fn approx_past_energy(sys: &PolySystem, eta: f64, d: usize) -> Result<EnergyCoefficients> {
    approx_energy(sys, eta, d, EnergyKind::Past)
}

pub fn approx_energy(sys: &PolySystem, eta: f64, d: usize, kind: EnergyKind) -> Result<EnergyCoefficients> {
    if d < 2 {
        return Err(invalid(format!("energy degree must be at least 2, got {d}")));
    }
    let n = sys.n();
    let bbt = sys.b() * sys.b().transpose();
    let (x2, a_cl, cross_scale) = match kind {
        EnergyKind::Future => {
            let w2 = solve_future_are(&sys.are_problem(eta)?)?;
            let a_cl = sys.a() - &bbt * &w2 * eta;
            (w2, a_cl, eta / 4.0)
        }
        EnergyKind::Past => {
            let v2 = solve_past_are(&sys.are_problem(eta)?)?;
            let a_cl = sys.a() + &bbt * &v2;
            (v2, a_cl, -0.25)
        }
    };
    let mut coeffs = vec![CoeffVector::new(n, 2, vec_r(&x2))?];
    if d == 2 {
        return EnergyCoefficients::new(n, eta, kind, coeffs);
    }

    let solver = ShiftedKronSolver::new(&a_cl, None)?;
    let a_cl_t = a_cl.transpose();
    let n_t = sys.n_mat().transpose();
    // B^T W_j for j >= 3, reused across degrees
    let mut projected: Vec<Option<DMatrix<f64>>> = vec![None; d + 1];

    for k in 3..=d {
        let prev = &coeffs[k - 3];
        let mut rhs = kron_sum_apply(&n_t, prev.data(), k - 1)?;
        rhs.iter_mut().for_each(|v| *v = -*v);
        if cross_scale != 0.0 {
            for i in 3..k {
                let j = k + 2 - i;
                if j < 3 {
                    continue;
                }
                let pi = projected[i].as_ref().expect("lower degree projected");
                let pj = projected[j].as_ref().expect("lower degree projected");
                add_cross_term(&mut rhs, pi, pj, cross_scale * (i * j) as f64);
            }
        }
        symmetrize_in_place(&mut rhs, n, k);

        let mut sol = solver.solve(k, &rhs)?;
        symmetrize_in_place(&mut sol, n, k);
        check_degree_residual(&a_cl_t, &sol, &rhs, k)?;

        projected[k] = Some(project_input(sys.b(), &sol, n, k));
        coeffs.push(CoeffVector::new(n, k, sol)?);
    }
    EnergyCoefficients::new(n, eta, kind, coeffs)
}

/// `B^T W_k` with `W_k` the `n × n^(k-1)` reshape of `w`.
fn project_input(b: &DMatrix<f64>, w: &[f64], n: usize, k: usize) -> DMatrix<f64> {
    let cols = n.pow((k - 1) as u32);
    // row-major n × cols is column-major cols × n
    let wt = DMatrix::from_column_slice(cols, n, w);
    (wt * b).transpose()
}

/// `rhs += scale * vec_r(P_i^T P_j)` where `P = B^T W`.
fn add_cross_term(rhs: &mut [f64], pi: &DMatrix<f64>, pj: &DMatrix<f64>, scale: f64) {
    let cols_j = pj.ncols();
    for r in 0..pi.nrows() {
        let row_j: Vec<f64> = pj.row(r).iter().map(|v| v * scale).collect();
        for (ii, &a) in pi.row(r).iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let dst = &mut rhs[ii * cols_j..(ii + 1) * cols_j];
            for (d, &b) in dst.iter_mut().zip(&row_j) {
                *d += a * b;
            }
        }
    }
}

fn check_degree_residual(a_cl_t: &DMatrix<f64>, sol: &[f64], rhs: &[f64], k: usize) -> Result<()> {
    let applied = kron_sum_apply(a_cl_t, sol, k)?;
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = applied.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if rhs_norm == 0.0 {
        let sol_norm = sol.iter().map(|v| v * v).sum::<f64>().sqrt();
        return if sol_norm == 0.0 {
            Ok(())
        } else {
            Err(Error::NumericalFailure(format!("degree {k}: zero right-hand side gave a nonzero solution")))
        };
    }
    if res > DEGREE_RESIDUAL_TOLERANCE * rhs_norm {
        return Err(Error::NumericalFailure(format!(
            "degree {k}: linear residual {:.3e} exceeds tolerance",
            res / rhs_norm
        )));
    }
    Ok(())
}

/// Left-hand side of the HJB equation the energy function approximates.
///
/// future: `∇E f - eta/2 |B^T ∇E|^2 + 1/2 |C x|^2`
/// past:   `∇E f + 1/2 |B^T ∇E|^2 - eta/2 |C x|^2`
pub fn hjb_residual(sys: &PolySystem, ec: &EnergyCoefficients, x: &[f64]) -> Result<f64> {
    if ec.n() != sys.n() {
        return Err(mismatch(format!("energy function has n = {}, system has n = {}", ec.n(), sys.n())));
    }
    let grad = poly_gradient(ec, x)?;
    let f = sys.drift(x)?;
    let gf: f64 = grad.iter().zip(&f).map(|(a, b)| a * b).sum();
    let g = DMatrix::from_column_slice(grad.len(), 1, &grad);
    let btg = (sys.b().transpose() * g).norm_squared();
    let cx = (sys.c() * DMatrix::from_column_slice(x.len(), 1, x)).norm_squared();
    let eta = ec.eta();
    Ok(match ec.kind() {
        EnergyKind::Future => gf - 0.5 * eta * btg + 0.5 * cx,
        EnergyKind::Past => gf + 0.5 * btg - 0.5 * eta * cx,
    })
}

/// Optimal state feedback `u = -R^{-1} B^T ∇E(x)`.
pub fn feedback_control(sys: &PolySystem, ec: &EnergyCoefficients, x: &[f64], r: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = sys.m();
    if r.shape() != (m, m) {
        return Err(mismatch(format!("weight R must be {m}x{m}, got {}x{}", r.nrows(), r.ncols())));
    }
    if (r - r.transpose()).norm() > 1e-12 * r.norm() {
        return Err(invalid("weight R must be symmetric"));
    }
    let chol = r.clone().cholesky().ok_or_else(|| invalid("weight R must be positive definite"))?;
    if ec.n() != sys.n() {
        return Err(mismatch("energy function and system dimensions differ"));
    }
    let grad = poly_gradient(ec, x)?;
    let btg = sys.b().transpose() * DMatrix::from_column_slice(grad.len(), 1, &grad);
    let u = -chol.solve(&btg);
    Ok(u.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::poly_eval;

    fn example2() -> PolySystem {
        let mut n = DMatrix::zeros(2, 4);
        n[(0, 3)] = -1.0;
        PolySystem::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
            n,
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn n_rows_are_symmetrized() {
        let mut n = DMatrix::zeros(2, 4);
        n[(0, 1)] = 2.0;
        let sys = PolySystem::new(DMatrix::identity(2, 2) * -1.0, n, DMatrix::identity(2, 2), DMatrix::identity(2, 2))
            .unwrap();
        assert_eq!(sys.n_mat()[(0, 1)], 1.0);
        assert_eq!(sys.n_mat()[(0, 2)], 1.0);
        assert_eq!(sys.drift(&[1.0, 3.0]).unwrap(), vec![-1.0 + 6.0, -3.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = DMatrix::identity(2, 2);
        assert!(PolySystem::new(a.clone(), DMatrix::zeros(2, 3), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2)).is_err());
        assert!(PolySystem::new(a.clone(), DMatrix::zeros(2, 4), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2)).is_err());
        assert!(PolySystem::new(a, DMatrix::zeros(2, 4), DMatrix::zeros(2, 1), DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn lti_higher_degrees_vanish() {
        let sys = example2().linearized();
        for kind in [EnergyKind::Future, EnergyKind::Past] {
            let ec = approx_energy(&sys, 0.3, 6, kind).unwrap();
            for k in 3..=6 {
                assert!(ec.coeff(k).unwrap().data().iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn residual_zero_at_origin_and_exact_for_lti() {
        let sys = example2();
        let ec = approx_future_energy(&sys, 0.1, 4).unwrap();
        assert_eq!(hjb_residual(&sys, &ec, &[0.0, 0.0]).unwrap(), 0.0);
        let lti = sys.linearized();
        for kind in [EnergyKind::Future, EnergyKind::Past] {
            let ec = approx_energy(&lti, 0.1, 2, kind).unwrap();
            for x in [[0.3, -0.7], [1.5, 2.0]] {
                let r = hjb_residual(&lti, &ec, &x).unwrap();
                let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(r.abs() <= 1e-10 * (1.0 + nx.powi(4)));
            }
        }
    }

    #[test]
    fn residual_decays_with_order_d_plus_one() {
        let sys = example2();
        let dir = [0.6, -0.8];
        for kind in [EnergyKind::Future, EnergyKind::Past] {
            let ec = approx_energy(&sys, 0.1, 4, kind).unwrap();
            let r = |s: f64| hjb_residual(&sys, &ec, &[s * dir[0], s * dir[1]]).unwrap().abs();
            let slope = (r(0.02) / r(0.01)).log2();
            assert!((slope - 5.0).abs() < 0.2, "{kind} slope {slope}");
        }
    }

    #[test]
    fn matches_literal_system_after_symmetrization() {
        // S [L_k(A^T) - k eta (I ⊗ W2 B B^T)] w_k == S rhs for the computed w_k
        let sys = example2();
        let eta = 0.1;
        let ec = approx_future_energy(&sys, eta, 3).unwrap();
        let w2 = DMatrix::from_row_slice(2, 2, ec.coeff(2).unwrap().data());
        let shift = &w2 * sys.b() * sys.b().transpose() * (-3.0 * eta);
        let w3 = ec.coeff(3).unwrap().data();
        let mut lhs = crate::tensor_solver::shifted_kron_apply(sys.a(), &shift, 3, w3).unwrap();
        symmetrize_in_place(&mut lhs, 2, 3);
        let mut rhs = kron_sum_apply(&sys.n_mat().transpose(), ec.coeff(2).unwrap().data(), 2).unwrap();
        rhs.iter_mut().for_each(|v| *v = -*v);
        symmetrize_in_place(&mut rhs, 2, 3);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn feedback_is_negative_input_gradient() {
        let sys = example2();
        let ec = approx_future_energy(&sys, 0.1, 4).unwrap();
        let x = [0.5, -0.5];
        let u = feedback_control(&sys, &ec, &x, &DMatrix::identity(1, 1)).unwrap();
        let g = poly_gradient(&ec, &x).unwrap();
        assert!((u[0] + g[0] + g[1]).abs() < 1e-15);
        assert_eq!(feedback_control(&sys, &ec, &[0.0, 0.0], &DMatrix::identity(1, 1)).unwrap(), vec![0.0]);
        assert!(feedback_control(&sys, &ec, &x, &DMatrix::from_element(1, 1, -1.0)).is_err());
    }

    #[test]
    fn lti_feedback_is_state_feedback() {
        let sys = example2().linearized();
        let ec = approx_future_energy(&sys, 0.4, 2).unwrap();
        let w2 = DMatrix::from_row_slice(2, 2, ec.coeff(2).unwrap().data());
        let x = DMatrix::from_column_slice(2, 1, &[0.2, 0.9]);
        let expected = -(sys.b().transpose() * w2 * &x);
        let u = feedback_control(&sys, &ec, x.as_slice(), &DMatrix::identity(1, 1)).unwrap();
        assert!((u[0] - expected[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn energies_positive_near_origin() {
        let sys = example2();
        let ec = approx_future_energy(&sys, 0.1, 4).unwrap();
        for i in 0..=10 {
            for j in 0..=10 {
                let x = [-0.5 + 0.1 * i as f64, -0.5 + 0.1 * j as f64];
                assert!(poly_eval(&ec, &x).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn degree_below_two_rejected() {
        assert!(approx_future_energy(&example2(), 0.1, 1).is_err());
    }
}
