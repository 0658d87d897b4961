//! Polynomial energy functions `E(x) = 1/2 sum_{k=2}^d c_k^T x^{⊗k}`.

use std::fmt;

use crate::error::{invalid, mismatch, Result};
use crate::kron::CoeffVector;

/// Which energy function a coefficient set approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergyKind {
    Past,
    Future,
}

impl fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyKind::Past => f.write_str("past"),
            EnergyKind::Future => f.write_str("future"),
        }
    }
}

impl std::str::FromStr for EnergyKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "past" => Ok(EnergyKind::Past),
            "future" => Ok(EnergyKind::Future),
            other => Err(invalid(format!("unknown energy kind '{other}' (expected past or future)"))),
        }
    }
}

/// Coefficients `c_2, ..., c_d` of a polynomial energy function.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCoefficients {
    n: usize,
    eta: f64,
    kind: EnergyKind,
    /// `coeffs[i]` has degree `i + 2`.
    coeffs: Vec<CoeffVector>,
}

impl EnergyCoefficients {
    /// Coefficients must be given for consecutive degrees starting at 2.
    pub fn new(n: usize, eta: f64, kind: EnergyKind, coeffs: Vec<CoeffVector>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("an energy function needs at least the degree-2 coefficient"));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if c.n() != n {
                return Err(mismatch(format!("coefficient of degree {} has n = {}, expected {n}", c.degree(), c.n())));
            }
            if c.degree() != i + 2 {
                return Err(invalid(format!("coefficient {i} has degree {}, expected {}", c.degree(), i + 2)));
            }
        }
        Ok(Self { n, eta, kind, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Highest degree present.
    pub fn degree(&self) -> usize {
        self.coeffs.len() + 1
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn kind(&self) -> EnergyKind {
        self.kind
    }

    /// Coefficient of degree `k`, if present.
    pub fn coeff(&self, k: usize) -> Option<&CoeffVector> {
        k.checked_sub(2).and_then(|i| self.coeffs.get(i))
    }

    pub fn coeffs(&self) -> &[CoeffVector] {
        &self.coeffs
    }

    /// The same energy function cut off after degree `d`.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        if d < 2 || d > self.degree() {
            return Err(invalid(format!("cannot truncate degree {} coefficients to degree {d}", self.degree())));
        }
        Ok(Self { coeffs: self.coeffs[..d - 1].to_vec(), ..self.clone() })
    }
}

/// `E(x) = 1/2 sum_k c_k^T x^{⊗k}`.
pub fn poly_eval(ec: &EnergyCoefficients, x: &[f64]) -> Result<f64> {
    check_point(ec, x)?;
    let mut total = 0.0;
    for c in &ec.coeffs {
        total += c.evaluate(x)?;
    }
    Ok(0.5 * total)
}

/// `∇E(x) = 1/2 sum_k k mat(c_k; n × n^(k-1)) x^{⊗(k-1)}`. Assumes symmetric coefficients.
pub fn poly_gradient(ec: &EnergyCoefficients, x: &[f64]) -> Result<Vec<f64>> {
    check_point(ec, x)?;
    let mut grad = vec![0.0; ec.n];
    for c in &ec.coeffs {
        let scale = 0.5 * c.degree() as f64;
        let part = c.contract_all_but_first(x)?;
        for (g, p) in grad.iter_mut().zip(part) {
            *g += scale * p;
        }
    }
    Ok(grad)
}

fn check_point(ec: &EnergyCoefficients, x: &[f64]) -> Result<()> {
    if x.len() != ec.n {
        return Err(mismatch(format!("point has {} entries, energy function has n = {}", x.len(), ec.n)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kron::{kron_power, symmetrize};
    use proptest::prelude::*;

    fn quadratic(n: usize, data: Vec<f64>) -> EnergyCoefficients {
        EnergyCoefficients::new(n, 0.5, EnergyKind::Future, vec![CoeffVector::new(n, 2, data).unwrap()]).unwrap()
    }

    #[test]
    fn half_norm_squared() {
        let ec = quadratic(2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(poly_eval(&ec, &[1.0, 2.0]).unwrap(), 2.5);
        assert_eq!(poly_eval(&ec, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_gradient_is_wx() {
        let ec = quadratic(2, vec![2.0, 1.0, 1.0, 3.0]);
        assert_eq!(poly_gradient(&ec, &[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(poly_gradient(&ec, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let ec = quadratic(2, vec![1.0, 0.0, 0.0, 1.0]);
        assert!(poly_eval(&ec, &[1.0]).is_err());
        assert!(poly_gradient(&ec, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn degrees_must_be_consecutive() {
        let c3 = CoeffVector::zeros(2, 3).unwrap();
        assert!(EnergyCoefficients::new(2, 0.0, EnergyKind::Past, vec![c3]).is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("Past".parse::<EnergyKind>().unwrap(), EnergyKind::Past);
        assert!("sideways".parse::<EnergyKind>().is_err());
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn random_symmetric_ec(n: usize, d: usize, seed: &[f64]) -> EnergyCoefficients {
        let mut it = seed.iter().cycle().copied().enumerate();
        let coeffs = (2..=d)
            .map(|k| {
                let len = n.pow(k as u32);
                let data = (0..len).map(|_| {
                    let (i, s) = it.next().unwrap();
                    s * (1.0 + (i % 7) as f64 * 0.1)
                });
                symmetrize(&CoeffVector::new(n, k, data.collect()).unwrap())
            })
            .collect();
        EnergyCoefficients::new(n, 0.3, EnergyKind::Future, coeffs).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn symmetrize_is_idempotent_and_preserves_values(
            n in 1usize..4, k in 2usize..5,
            seed in prop::collection::vec(-1.0f64..1.0, 81),
            x in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let len = n.pow(k as u32);
            let c = CoeffVector::new(n, k, seed[..len].to_vec()).unwrap();
            let s = symmetrize(&c);
            prop_assert_eq!(symmetrize(&s), s.clone());
            let xp = kron_power(&x[..n], k).unwrap();
            let a = dot(c.data(), &xp);
            let b = dot(s.data(), &xp);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            prop_assert!((c.evaluate(&x[..n]).unwrap() - a).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn gradient_matches_central_differences(
            n in 1usize..9, d in 2usize..6,
            seed in prop::collection::vec(-1.0f64..1.0, 1..50),
            x in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            prop_assume!(n.pow(d as u32) <= 40_000);
            let ec = random_symmetric_ec(n, d, &seed);
            let x = &x[..n];
            let grad = poly_gradient(&ec, x).unwrap();
            let h = 1e-5 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            let mut fd = vec![0.0; n];
            for i in 0..n {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (poly_eval(&ec, &xp).unwrap() - poly_eval(&ec, &xm).unwrap()) / (2.0 * h);
            }
            let err: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-6 * scale.max(1e-3), "err {} scale {}", err, scale);
        }
    }
}
