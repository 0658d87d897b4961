//! Kronecker-product algebra on dense coefficient tensors.
//!
//! A degree-`k` coefficient over `n` states is stored as a flat vector of
//! length `n^k` in lexicographic Kronecker order: multi-index
//! `(i_1, ..., i_k)` (zero based) lives at `sum_j i_j * n^(k-j)`, so the
//! first index varies slowest. This is exactly the ordering of
//! `x ⊗ x ⊗ ... ⊗ x` and is part of the on-disk format contract.

use nalgebra::DMatrix;

use crate::dense::{gemm, MatMut, MatRef};

use crate::error::{invalid, mismatch, Result};

/// Dense coefficient vector of a homogeneous degree-`k` polynomial in `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl CoeffVector {
    pub fn new(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        let len = checked_pow(n, k)?;
        if data.len() != len {
            return Err(mismatch(format!(
                "coefficient vector of degree {k} over {n} states needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { n, k, data })
    }

    pub fn zeros(n: usize, k: usize) -> Result<Self> {
        let len = checked_pow(n, k)?;
        Ok(Self { n, k, data: vec![0.0; len] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// `c^T x^{⊗k}` evaluated by successive contractions of the trailing index.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(mismatch(format!("point has {} entries, expected {}", x.len(), self.n)));
        }
        let mut acc = contract_last(&self.data, x);
        for _ in 1..self.k {
            acc = contract_last(&acc, x);
        }
        Ok(acc[0])
    }

    /// `mat(c; n × n^(k-1)) x^{⊗(k-1)}`, the (un-scaled) gradient direction of a
    /// symmetric coefficient.
    pub fn contract_all_but_first(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(mismatch(format!("point has {} entries, expected {}", x.len(), self.n)));
        }
        let mut acc = self.data.clone();
        for _ in 1..self.k {
            acc = contract_last(&acc, x);
        }
        Ok(acc)
    }

    /// Largest absolute difference between this coefficient and any of its
    /// index permutations. Zero for coefficients that are symmetric.
    pub fn asymmetry(&self) -> f64 {
        let sym = symmetrize(self);
        self.data
            .iter()
            .zip(sym.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn checked_pow(n: usize, k: usize) -> Result<usize> {
    n.checked_pow(k as u32)
        .ok_or_else(|| invalid(format!("{n}^{k} overflows the address space")))
}

/// `r[i] = sum_j data[i*n + j] * x[j]`.
fn contract_last(data: &[f64], x: &[f64]) -> Vec<f64> {
    data.chunks_exact(x.len())
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// `x ⊗ x ⊗ ... ⊗ x` with `k` factors.
pub fn kron_power(x: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("Kronecker power needs k >= 1"));
    }
    if x.is_empty() {
        return Err(invalid("Kronecker power of an empty vector"));
    }
    checked_pow(x.len(), k)?;
    let mut out = x.to_vec();
    for _ in 1..k {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for &a in &out {
            next.extend(x.iter().map(|&b| a * b));
        }
        out = next;
    }
    Ok(out)
}

/// Replace every coefficient by the mean over all positions that encode the
/// same monomial. The represented polynomial is unchanged.
pub fn symmetrize(c: &CoeffVector) -> CoeffVector {
    let mut out = c.clone();
    symmetrize_in_place(&mut out.data, c.n, c.k);
    out
}

/// In-place symmetrization of a flat degree-`k` coefficient over `n` states.
///
/// Walks every non-decreasing multi-index once and visits its distinct
/// permutations, so the cost is `O(n^k k)` with no auxiliary storage.
pub fn symmetrize_in_place(data: &mut [f64], n: usize, k: usize) {
    debug_assert_eq!(Some(data.len()), n.checked_pow(k as u32));
    if k <= 1 || n <= 1 {
        return;
    }
    let mut sorted = vec![0usize; k];
    let mut perm = vec![0usize; k];
    let mut positions = Vec::new();
    loop {
        positions.clear();
        perm.copy_from_slice(&sorted);
        loop {
            positions.push(encode(&perm, n));
            if !next_permutation(&mut perm) {
                break;
            }
        }
        let first = data[positions[0]];
        if positions.iter().any(|&p| data[p] != first) {
            let mean = positions.iter().map(|&p| data[p]).sum::<f64>() / positions.len() as f64;
            for &p in &positions {
                data[p] = mean;
            }
        }
        if !next_multiset(&mut sorted, n) {
            break;
        }
    }
}

fn encode(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Advance to the next non-decreasing multi-index in lexicographic order.
fn next_multiset(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut j = k;
    while j > 0 {
        j -= 1;
        if idx[j] + 1 < n {
            let v = idx[j] + 1;
            for slot in idx[j..].iter_mut() {
                *slot = v;
            }
            return true;
        }
    }
    false
}

/// Classic lexicographic next permutation; handles repeated entries.
fn next_permutation(p: &mut [usize]) -> bool {
    let len = p.len();
    if len < 2 {
        return false;
    }
    let mut i = len - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = len - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `L_d(M) v = sum_s (I ⊗ .. ⊗ M ⊗ .. ⊗ I) v` with `M` in slot `s`.
///
/// `M` is `p × q` and may be rectangular (e.g. `N^T`, which is `n^2 × n`);
/// every identity slot then has dimension `q`, so `v` has length `q^d` and
/// the result has length `p q^(d-1)`. No Kronecker matrix is formed.
pub fn kron_sum_apply(m: &DMatrix<f64>, v: &[f64], d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(invalid("Kronecker sum needs at least one slot"));
    }
    let q = m.ncols();
    let p = m.nrows();
    if q == 0 || p == 0 {
        return Err(invalid("Kronecker sum of an empty matrix"));
    }
    let len = checked_pow(q, d)?;
    if v.len() != len {
        return Err(mismatch(format!(
            "Kronecker sum with {d} slots of a {p}x{q} matrix needs a vector of length {len}, got {}",
            v.len()
        )));
    }
    let out_len = p * len / q;
    let mut out = vec![0.0; out_len];
    for s in 0..d {
        let outer = q.pow(s as u32);
        let inner = q.pow((d - 1 - s) as u32);
        slot_gemm(1.0, MatRef::from_dmatrix(m), v, outer, inner, &mut out);
    }
    Ok(out)
}

/// Accumulate `out += alpha (I_outer ⊗ M ⊗ I_inner) data` for a `p × q` matrix `M`.
///
/// Each outer block of `data` is a row-major `q × inner` matrix, so the slot
/// product is one GEMM per block (a single one when `inner == 1`).
pub(crate) fn slot_gemm(alpha: f64, m: MatRef<'_>, data: &[f64], outer: usize, inner: usize, out: &mut [f64]) {
    let (p, q) = (m.rows(), m.cols());
    assert_eq!(data.len(), outer * q * inner);
    assert_eq!(out.len(), outer * p * inner);
    if p == 0 || q == 0 || outer == 0 || inner == 0 {
        return;
    }
    if inner == 1 {
        // column-major q × outer
        gemm(alpha, m, MatRef::new(data, q, outer, 1, q), MatMut::new(out, p, outer, 1, p));
        return;
    }
    for (src, dst) in data.chunks_exact(q * inner).zip(out.chunks_exact_mut(p * inner)) {
        gemm(alpha, m, MatRef::row_major(src, q, inner), MatMut::row_major(dst, p, inner));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_power_examples() {
        assert_eq!(kron_power(&[1.0, 2.0], 2).unwrap(), vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(kron_power(&[3.0], 3).unwrap(), vec![27.0]);
        assert_eq!(
            kron_power(&[1.0, 0.0, 2.0], 2).unwrap(),
            vec![1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 4.0]
        );
    }

    #[test]
    fn kron_power_rejects_bad_input() {
        assert!(kron_power(&[1.0], 0).is_err());
        assert!(kron_power(&[], 2).is_err());
    }

    #[test]
    fn symmetrize_quadratic_splits_cross_term() {
        let c = CoeffVector::new(2, 2, vec![1.0, 3.0, 0.0, 5.0]).unwrap();
        assert_eq!(symmetrize(&c).data(), &[1.0, 1.5, 1.5, 5.0]);
    }

    #[test]
    fn symmetrize_cubic_spreads_over_three_positions() {
        // 6 at (1,1,2) one-based == (0,0,1) zero-based
        let mut data = vec![0.0; 8];
        data[encode(&[0, 0, 1], 2)] = 6.0;
        let out = symmetrize(&CoeffVector::new(2, 3, data).unwrap());
        // brute force: every permutation of (0,0,1)
        let mut expected = vec![0.0; 8];
        for p in [[0, 0, 1], [0, 1, 0], [1, 0, 0]] {
            expected[encode(&p, 2)] = 2.0;
        }
        assert_eq!(out.data(), expected.as_slice());
    }

    #[test]
    fn symmetric_input_is_a_fixed_point() {
        let c = CoeffVector::new(2, 2, vec![1.0, 0.5, 0.5, 2.0]).unwrap();
        assert_eq!(symmetrize(&c), c);
    }

    #[test]
    fn coeff_vector_checks_length() {
        assert!(CoeffVector::new(2, 3, vec![0.0; 7]).is_err());
    }

    #[test]
    fn kron_sum_scalar_and_identity() {
        let m = DMatrix::from_element(1, 1, 3.0);
        assert_eq!(kron_sum_apply(&m, &[2.0], 2).unwrap(), vec![12.0]);

        let eye = DMatrix::<f64>::identity(3, 3);
        let v: Vec<f64> = (0..27).map(|i| i as f64 * 0.5 - 3.0).collect();
        let out = kron_sum_apply(&eye, &v, 3).unwrap();
        for (a, b) in out.iter().zip(&v) {
            assert_eq!(*a, 3.0 * b);
        }
    }

    #[test]
    fn kron_sum_rectangular_shape() {
        // N^T is n^2 x n
        let nt = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        let out = kron_sum_apply(&nt, &[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(out.len(), 8);
        assert!(kron_sum_apply(&nt, &[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn multiset_enumeration_counts() {
        // C(n+k-1, k) sorted tuples
        let mut idx = vec![0; 3];
        let mut count = 1;
        while next_multiset(&mut idx, 4) {
            count += 1;
        }
        assert_eq!(count, 20);
    }
}
