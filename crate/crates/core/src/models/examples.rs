//! The scalar system `x' = a x + n x^2 + b u`, `y = c x` with its closed-form
//! energies, and a two-state example with a single quadratic term.

use nalgebra::DMatrix;

use crate::energy::PolySystem;
use crate::error::{Error, Result};
use crate::polynomial::EnergyKind;

/// Parameters of the scalar example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Params {
    pub a: f64,
    pub n: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Self { a: -2.0, n: 1.0, b: 2.0, c: 2.0 }
    }
}

pub fn build_example1(a: f64, n_coef: f64, b: f64, c: f64) -> Result<PolySystem> {
    let one = |v: f64| DMatrix::from_element(1, 1, v);
    PolySystem::new(one(a), one(n_coef), one(b), one(c))
}

/// Closed-form past or future energy of the scalar example.
///
/// The HJB equations are quadratic in `E'(x)`. With
/// `q(x) = (a + n x)^2 + eta b^2 c^2`, the root that is smooth through the
/// origin with `E''(0) > 0` is
///
/// ```text
/// future: E'(x) = x ((a + n x) + sqrt q) / (eta b^2)
/// past:   E'(x) = x (-(a + n x) + sqrt q) / b^2
/// ```
///
/// and both integrate in closed form (log term from `∫ sqrt(u^2 + k) du`).
pub fn analytic_energy_example1(x: f64, p: &Example1Params, eta: f64, kind: EnergyKind) -> Result<f64> {
    if p.b == 0.0 {
        return Err(Error::Domain("closed form needs b != 0".into()));
    }
    if kind == EnergyKind::Future && eta == 0.0 {
        return Err(Error::Domain("closed-form future energy needs eta != 0".into()));
    }
    let kappa = eta * p.b * p.b * p.c * p.c;
    let check = |u: f64| -> Result<f64> {
        let q = u * u + kappa;
        if q < 0.0 {
            return Err(Error::Domain(format!("square-root argument {q:.3e} is negative")));
        }
        Ok(q.sqrt())
    };
    // ∫_0^x s sqrt(q(s)) ds
    let root_part = if p.n == 0.0 {
        let r0 = check(p.a)?;
        r0 * x * x / 2.0
    } else {
        // path from 0 to x must stay in the domain: q is a parabola in x, so
        // checking the endpoints and the vertex suffices
        let u0 = p.a;
        let u1 = p.a + p.n * x;
        let r0 = check(u0)?;
        let r1 = check(u1)?;
        if u0 * u1 < 0.0 {
            check(0.0)?;
        }
        let log_arg0 = u0 + r0;
        let log_arg1 = u1 + r1;
        if log_arg0 <= 0.0 || log_arg1 <= 0.0 {
            return Err(Error::Domain("logarithm argument is not positive".into()));
        }
        let anti = |u: f64, r: f64, log_arg: f64| r * r * r / 3.0 - 0.5 * p.a * (u * r + kappa * log_arg.ln());
        (anti(u1, r1, log_arg1) - anti(u0, r0, log_arg0)) / (p.n * p.n)
    };
    let poly_part = p.a * x * x / 2.0 + p.n * x * x * x / 3.0;
    Ok(match kind {
        EnergyKind::Future => (poly_part + root_part) / (eta * p.b * p.b),
        EnergyKind::Past => (root_part - poly_part) / (p.b * p.b),
    })
}

/// `x' = [-x1 + x2; -x2] + [-x2^2; 0] + [1; 1] u`, `y = x1 + x2`.
pub fn build_example2() -> Result<PolySystem> {
    let mut n = DMatrix::zeros(2, 4);
    n[(0, 3)] = -1.0;
    PolySystem::new(
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
        n,
        DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gauss_legendre;
    use rand::{Rng, SeedableRng};

    fn h_future(x: f64, p: &Example1Params, eta: f64) -> f64 {
        let f = p.a * x + p.n * x * x;
        let disc = (f * f + eta * p.b * p.b * p.c * p.c * x * x).sqrt();
        // smooth root: sign of the square root follows x
        (f + x.signum() * disc) / (eta * p.b * p.b)
    }

    fn g_past(x: f64, p: &Example1Params, eta: f64) -> f64 {
        let f = p.a * x + p.n * x * x;
        let disc = (f * f + eta * p.b * p.b * p.c * p.c * x * x).sqrt();
        (-f + x.signum() * disc) / (p.b * p.b)
    }

    fn quad(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let rule = gauss_legendre(20);
        let pieces = 16;
        let mut total = 0.0;
        for s in 0..pieces {
            let lo = x * s as f64 / pieces as f64;
            let hi = x * (s + 1) as f64 / pieces as f64;
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            total += rule.0.iter().zip(&rule.1).map(|(t, w)| w * half * f(mid + half * t)).sum::<f64>();
        }
        total
    }

    #[test]
    fn zero_at_origin() {
        let p = Example1Params::default();
        assert_eq!(analytic_energy_example1(0.0, &p, 0.5, EnergyKind::Future).unwrap(), 0.0);
        assert_eq!(analytic_energy_example1(0.0, &p, 0.5, EnergyKind::Past).unwrap(), 0.0);
    }

    #[test]
    fn matches_quadrature_of_gradient() {
        let p = Example1Params::default();
        for x in [-0.5, -0.1, 0.05, 0.3, 0.5, 2.0, -3.0] {
            let fut = analytic_energy_example1(x, &p, 0.5, EnergyKind::Future).unwrap();
            let q = quad(|s| h_future(s, &p, 0.5), x);
            assert!((fut - q).abs() <= 1e-9 * q.abs().max(1e-3), "future at {x}: {fut} vs {q}");
            let past = analytic_energy_example1(x, &p, 0.5, EnergyKind::Past).unwrap();
            let q = quad(|s| g_past(s, &p, 0.5), x);
            assert!((past - q).abs() <= 1e-9 * q.abs().max(1e-3), "past at {x}: {past} vs {q}");
        }
    }

    #[test]
    fn curvature_at_origin_is_riccati_solution() {
        let p = Example1Params::default();
        let h = 1e-3;
        let e = |x: f64| analytic_energy_example1(x, &p, 0.5, EnergyKind::Future).unwrap();
        let second = (e(h) - 2.0 * e(0.0) + e(-h)) / (h * h);
        assert!((second - (3f64.sqrt() - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn lti_closed_form() {
        let p = Example1Params { a: -1.0, n: 0.0, b: 1.0, c: 1.0 };
        let w = -1.0 + (1.0f64 + 0.5).sqrt();
        let e = analytic_energy_example1(0.7, &p, 0.5, EnergyKind::Future).unwrap();
        assert!((e - 0.5 * w / 0.5 * 0.49).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let p = Example1Params::default();
        assert!(matches!(analytic_energy_example1(0.1, &p, -1.0, EnergyKind::Future), Err(Error::Domain(_))));
        assert!(analytic_energy_example1(0.1, &p, 0.0, EnergyKind::Future).is_err());
    }

    #[test]
    fn example_systems() {
        let s = build_example1(-2.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!((s.n(), s.m(), s.p()), (1, 1, 1));
        assert!(build_example1(-1.0, 0.0, 1.0, 1.0).unwrap().n_mat().iter().all(|v| *v == 0.0));

        let s = build_example2().unwrap();
        assert_eq!(s.a(), &DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]));
        assert_eq!(s.drift(&[0.0, 1.0]).unwrap(), vec![0.0, -1.0]);
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for _ in 0..10 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xy = DMatrix::from_column_slice(2, 1, &x).kronecker(&DMatrix::from_column_slice(2, 1, &y));
            let yx = DMatrix::from_column_slice(2, 1, &y).kronecker(&DMatrix::from_column_slice(2, 1, &x));
            assert!((s.n_mat() * xy - s.n_mat() * yx).norm() < 1e-15);
        }
        let n_only = s.n_mat() * DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(n_only.as_slice(), &[-1.0, 0.0]);
    }
}
