//! Algebraic Riccati and Lyapunov equations seeding the quadratic energy terms.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{mismatch, Error, Result};
use crate::schur::{complex_schur, reorder};
use crate::tensor_solver::ShiftedKronSolver;

type C = Complex64;

/// System data and gain parameter `eta = 1 - gamma^-2` for the H-infinity AREs.
#[derive(Debug, Clone)]
pub struct AreProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub eta: f64,
}

impl AreProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, eta: f64) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || c.ncols() != n {
            return Err(mismatch(format!(
                "A is {}x{}, B is {}x{}, C is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta must be finite, got {eta}")));
        }
        Ok(Self { a, b, c, eta })
    }

    fn bbt(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose()
    }

    fn ctc(&self) -> DMatrix<f64> {
        self.c.transpose() * &self.c
    }
}

/// Row-major vectorization, matching the coefficient ordering.
pub(crate) fn vec_r(x: &DMatrix<f64>) -> Vec<f64> {
    x.transpose().as_slice().to_vec()
}

pub(crate) fn unvec_r(v: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

fn symmetric_part(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// Solves `A^T X + X A + Q = 0`. Requires `L_2(A^T)` nonsingular.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(mismatch("Lyapunov equation needs square A and Q of equal size"));
    }
    let solver = ShiftedKronSolver::new(a, None)?;
    let rhs: Vec<f64> = vec_r(q).into_iter().map(|v| -v).collect();
    let x = unvec_r(&solver.solve(2, &rhs)?, n, n);
    Ok(symmetric_part(&x))
}

/// Observability Gramian: `A^T Q + Q A + C^T C = 0`.
pub fn observability_gramian(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_lyapunov(a, &(c.transpose() * c))
}

/// Controllability Gramian: `A P + P A^T + B B^T = 0`.
pub fn controllability_gramian(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_lyapunov(&a.transpose(), &(b * b.transpose()))
}

/// `A^T X + X A + Q - X G X`.
pub fn care_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * x + x * a + q - x * g * x
}

/// Stabilizing solution of `A^T X + X A + Q - X G X = 0` (so `A - G X` is
/// Hurwitz) for symmetric `G`, `Q`, which may be indefinite.
///
/// Stable invariant subspace of the Hamiltonian `[[A, -G], [-Q, -A^T]]` by
/// an ordered complex Schur form, followed by Newton correction.
pub fn solve_care(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || g.shape() != (n, n) || q.shape() != (n, n) {
        return Err(mismatch("Riccati equation needs square A, G, Q of equal size"));
    }
    let mut h = DMatrix::<C>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = C::new(a[(i, j)], 0.0);
            h[(i, j + n)] = C::new(-g[(i, j)], 0.0);
            h[(i + n, j)] = C::new(-q[(i, j)], 0.0);
            h[(i + n, j + n)] = C::new(-a[(j, i)], 0.0);
        }
    }
    let hnorm = h.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut schur = complex_schur(h)?;
    let axis_tol = 1e-10 * hnorm;
    if let Some(l) = schur.t.diagonal().iter().find(|l| l.re.abs() <= axis_tol) {
        return Err(Error::Solvability(format!(
            "Hamiltonian matrix has an eigenvalue on the imaginary axis ({:.3e}{:+.3e}i)",
            l.re, l.im
        )));
    }
    let stable = reorder(&mut schur, |l| l.re < 0.0);
    if stable != n {
        return Err(Error::Solvability(format!("Hamiltonian has {stable} stable eigenvalues, expected {n}")));
    }
    let u11 = schur.z.view((0, 0), (n, n)).into_owned();
    let u21 = schur.z.view((n, 0), (n, n)).into_owned();
    // X = U21 U11^{-1}  <=>  U11^T X^T = U21^T
    let lu = u11.transpose().lu();
    let pivots = lu.u().diagonal().iter().map(|v| v.norm()).fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if n > 0 && pivots.0 <= 1e-12 * pivots.1 {
        return Err(Error::Solvability(
            "stable invariant subspace is not a graph over the state space (U11 singular)".into(),
        ));
    }
    let xt = lu
        .solve(&u21.transpose())
        .ok_or_else(|| Error::Solvability("stable invariant subspace basis is singular".into()))?;
    let xc = xt.transpose();
    let xnorm = xc.norm().max(f64::MIN_POSITIVE);
    let imag = xc.map(|v| v.im).norm();
    if imag > 1e-6 * xnorm {
        return Err(Error::NumericalFailure(format!("Riccati solution has relative imaginary part {:.3e}", imag / xnorm)));
    }
    let mut x = symmetric_part(&xc.map(|v| v.re));

    let scale = a.norm() * x.norm().max(1.0) + q.norm() + g.norm() * x.norm().powi(2);
    for _ in 0..3 {
        let res = care_residual(a, g, q, &x);
        if res.norm() <= 1e-13 * scale {
            break;
        }
        let acl = a - g * &x;
        let delta = match solve_lyapunov(&acl, &res) {
            Ok(d) => d,
            Err(_) => break,
        };
        let candidate = symmetric_part(&(&x + delta));
        if care_residual(a, g, q, &candidate).norm() >= res.norm() {
            break;
        }
        x = candidate;
    }

    let acl = a - g * &x;
    let worst = acl.clone().complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if n > 0 && worst >= 0.0 {
        return Err(Error::Solvability(format!(
            "Riccati solution is not stabilizing (closed-loop eigenvalue with real part {worst:.3e})"
        )));
    }
    Ok(x)
}

/// `W_2` with `A^T W + W A + C^T C - eta W B B^T W = 0` and
/// `A - eta B B^T W` Hurwitz. `eta = 0` reduces to the observability Gramian.
pub fn solve_future_are(p: &AreProblem) -> Result<DMatrix<f64>> {
    if p.eta > 1.0 {
        return Err(Error::InvalidArgument(format!("eta must not exceed 1, got {}", p.eta)));
    }
    if p.eta == 0.0 {
        return observability_gramian(&p.a, &p.c);
    }
    solve_care(&p.a, &(p.bbt() * p.eta), &p.ctc())
}

/// `V_2` with `A^T V + V A - eta C^T C + V B B^T V = 0` and `A + B B^T V`
/// anti-stable, which is the branch `V_2 = Y_inf^{-1}` whenever the filter
/// solution `Y_inf` exists. For `B = 0` the Lyapunov solution is returned.
pub fn solve_past_are(p: &AreProblem) -> Result<DMatrix<f64>> {
    if p.eta > 1.0 {
        return Err(Error::InvalidArgument(format!("eta must not exceed 1, got {}", p.eta)));
    }
    let bbt = p.bbt();
    let q = p.ctc() * p.eta;
    if bbt.iter().all(|v| *v == 0.0) {
        return solve_lyapunov(&p.a, &(-q));
    }
    solve_care(&(-&p.a), &bbt, &q)
}

/// `Y_inf` with `A Y + Y A^T + B B^T - eta Y C^T C Y = 0` and
/// `A - eta Y C^T C` Hurwitz.
pub fn solve_filter_are(p: &AreProblem) -> Result<DMatrix<f64>> {
    if p.eta == 0.0 {
        return controllability_gramian(&p.a, &p.b);
    }
    solve_care(&p.a.transpose(), &(p.ctc() * p.eta), &p.bbt())
}

/// `V_2 = Y_inf^{-1}` computed through the filter equation, with the
/// condition number of `Y_inf`.
pub fn solve_past_are_via_filter(p: &AreProblem) -> Result<(DMatrix<f64>, f64)> {
    let y = solve_filter_are(p)?;
    let eig = y.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 {
        return Err(Error::Solvability(format!(
            "filter Riccati solution is not positive definite (eigenvalues in [{lo:.3e}, {hi:.3e}])"
        )));
    }
    let inv = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l))
        * eig.eigenvectors.transpose();
    Ok((symmetric_part(&inv), hi / lo))
}

/// Estimate of the smallest admissible H-infinity gain from the standard
/// (`eta = 1`) control and filter AREs, with its bracketing interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBound {
    pub gamma_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn gamma_lower_bound(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<GammaBound> {
    let x = solve_care(a, &(b * b.transpose()), &(c.transpose() * c))?;
    let y = solve_care(&a.transpose(), &(c.transpose() * c), &(b * b.transpose()))?;
    let lmax = (x * y).complex_eigenvalues().iter().map(|l| l.re).fold(0.0, f64::max);
    let gamma_hat = (1.0 + lmax).sqrt();
    Ok(GammaBound { gamma_hat, lower: gamma_hat - 1.0, upper: gamma_hat + 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn scalar(a: f64, b: f64, c: f64, eta: f64) -> AreProblem {
        AreProblem::new(m(1, 1, &[a]), m(1, 1, &[b]), m(1, 1, &[c]), eta).unwrap()
    }

    #[test]
    fn scalar_future_and_past() {
        let w = solve_future_are(&scalar(-2.0, 2.0, 2.0, 0.5)).unwrap();
        assert!((w[(0, 0)] - (3f64.sqrt() - 1.0)).abs() < 1e-14);
        let v = solve_past_are(&scalar(-2.0, 2.0, 2.0, 0.5)).unwrap();
        assert!((v[(0, 0)] - (1.0 + 3f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_output_gives_zero() {
        let a = m(2, 2, &[-1.0, 1.0, 0.0, -2.0]);
        let p = AreProblem::new(a.clone(), m(2, 1, &[1.0, 1.0]), DMatrix::zeros(1, 2), 0.5).unwrap();
        assert!(solve_future_are(&p).unwrap().norm() < 1e-14);
        let g = gamma_lower_bound(&a, &m(2, 1, &[1.0, 1.0]), &DMatrix::zeros(1, 2)).unwrap();
        assert!((g.gamma_hat - 1.0).abs() < 1e-14);
        let g = gamma_lower_bound(&a, &DMatrix::zeros(2, 1), &m(1, 2, &[1.0, 1.0])).unwrap();
        assert!((g.gamma_hat - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_gamma_bound() {
        let g = gamma_lower_bound(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
        let x = 2f64.sqrt() - 1.0;
        assert!((g.gamma_hat - (1.0 + x * x).sqrt()).abs() < 1e-13);
        assert!((g.lower - (g.gamma_hat - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_matches_dense_kronecker_solve() {
        let a = m(3, 3, &[-2.0, 1.0, 0.0, 0.3, -1.0, 0.5, 0.0, -0.4, -1.5]);
        let q = m(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 3.0]);
        let x = solve_lyapunov(&a, &q).unwrap();
        let eye = DMatrix::<f64>::identity(3, 3);
        // column-major vec: vec(A^T X + X A) = (I ⊗ A^T + A^T ⊗ I) vec(X)
        let op = eye.kronecker(&a.transpose()) + a.transpose().kronecker(&eye);
        let qv = DMatrix::from_column_slice(9, 1, q.as_slice());
        let dense = op.lu().solve(&(-qv)).unwrap();
        let dense = DMatrix::from_column_slice(3, 3, dense.as_slice());
        assert!((x - dense).norm() < 1e-13);
    }

    #[test]
    fn random_problems_satisfy_residual_and_stability() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for trial in 0..10 {
            let n = 2 + trial % 5;
            let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let top = a.clone().complex_eigenvalues().iter().map(|l| l.re).fold(f64::MIN, f64::max);
            a -= DMatrix::identity(n, n) * (top + 0.3);
            let b = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
            let c = DMatrix::from_fn(2, n, |_, _| rng.gen_range(-1.0..1.0));
            for eta in [0.0, 0.1, 0.5] {
                let p = AreProblem::new(a.clone(), b.clone(), c.clone(), eta).unwrap();
                let w = solve_future_are(&p).unwrap();
                let r = care_residual(&a, &(&b * b.transpose() * eta), &(c.transpose() * &c), &w);
                let scale = a.norm() * w.norm() + c.norm().powi(2);
                assert!(r.norm() <= 1e-10 * scale, "future residual {}", r.norm());
                assert!((&w - w.transpose()).norm() <= 1e-12 * w.norm());

                let v = solve_past_are(&p).unwrap();
                let r = a.transpose() * &v + &v * &a - c.transpose() * &c * eta + &v * &b * b.transpose() * &v;
                assert!(r.norm() <= 1e-10 * (a.norm() * v.norm() + c.norm().powi(2)));
                let (vf, _) = solve_past_are_via_filter(&p).unwrap();
                assert!((&v - vf).norm() <= 1e-8 * v.norm(), "past ARE routes disagree");
            }
        }
    }

    #[test]
    fn eta_zero_limits() {
        let a = m(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let b = m(2, 1, &[1.0, 1.0]);
        let c = m(1, 2, &[1.0, 1.0]);
        let p = AreProblem::new(a.clone(), b.clone(), c.clone(), 0.0).unwrap();
        let v = solve_past_are(&p).unwrap();
        let pg = controllability_gramian(&a, &b).unwrap();
        assert!((v * pg - DMatrix::<f64>::identity(2, 2)).norm() < 1e-10);

        let q = observability_gramian(&a, &c).unwrap();
        let mut prev = f64::INFINITY;
        for eta in [0.1, 0.01, 0.001] {
            let w = solve_future_are(&AreProblem::new(a.clone(), b.clone(), c.clone(), eta).unwrap()).unwrap();
            let dist = (w - &q).norm();
            assert!(dist < prev);
            prev = dist;
        }
    }

    #[test]
    fn past_without_input_is_lyapunov() {
        let a = m(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let c = m(1, 2, &[1.0, 1.0]);
        let p = AreProblem::new(a.clone(), DMatrix::zeros(2, 1), c.clone(), 1.0).unwrap();
        let v = solve_past_are(&p).unwrap();
        let r = a.transpose() * &v + &v * &a - c.transpose() * &c;
        assert!(r.norm() < 1e-13);
    }

    #[test]
    fn unsolvable_reports_error() {
        // 4 W^2 - 4 W + 4 = 0 has no real root
        let p = scalar(-2.0, 2.0, 2.0, -1.0);
        assert!(matches!(solve_future_are(&p), Err(Error::Solvability(_))));
        assert!(solve_future_are(&scalar(-1.0, 1.0, 1.0, 1.5)).is_err());
    }
}
