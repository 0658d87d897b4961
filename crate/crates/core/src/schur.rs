//! Complex Schur decomposition `M = Z T Z^*` by Hessenberg reduction and
//! shifted QR, plus reordering of the diagonal of `T`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Unitary `z` and upper-triangular `t` with `m = z t z^*`.
#[derive(Debug, Clone)]
pub(crate) struct ComplexSchur {
    pub z: DMatrix<C>,
    pub t: DMatrix<C>,
}

pub(crate) fn complex_schur(m: DMatrix<C>) -> Result<ComplexSchur> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!("Schur form of a non-square {}x{} matrix", n, m.ncols())));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut t = m;
    let mut z = DMatrix::<C>::identity(n, n);
    hessenberg(&mut t, &mut z);
    qr_iterate(&mut t, &mut z)?;
    Ok(ComplexSchur { z, t })
}

/// Householder reduction to upper Hessenberg form, accumulating into `z`.
fn hessenberg(h: &mut DMatrix<C>, z: &mut DMatrix<C>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![C::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let mut norm2 = 0.0;
        for i in 0..len {
            v[i] = h[(k + 1 + i, k)];
            norm2 += v[i].norm_sqr();
        }
        let tail: f64 = v[1..len].iter().map(|c| c.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let norm = norm2.sqrt();
        let phase = if v[0].norm() == 0.0 { C::new(1.0, 0.0) } else { v[0] / v[0].norm() };
        let alpha = -phase * norm;
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|c| c.norm_sqr()).sum();
        let beta = 2.0 / vnorm2;
        let vs = &v[..len];

        // H <- P H, rows k+1.., all columns from k
        for j in k..n {
            let mut s = C::new(0.0, 0.0);
            for i in 0..len {
                s += vs[i].conj() * h[(k + 1 + i, j)];
            }
            s *= beta;
            for i in 0..len {
                h[(k + 1 + i, j)] -= vs[i] * s;
            }
        }
        // H <- H P and Z <- Z P, columns k+1..
        for mat in [&mut *h, &mut *z] {
            for r in 0..n {
                let mut s = C::new(0.0, 0.0);
                for i in 0..len {
                    s += mat[(r, k + 1 + i)] * vs[i];
                }
                s *= beta;
                for i in 0..len {
                    mat[(r, k + 1 + i)] -= s * vs[i].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = C::new(0.0, 0.0);
        }
    }
}

/// Unitary `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Givens {
    c: f64,
    s: C,
}

impl Givens {
    pub(crate) fn zeroing(a: C, b: C) -> Self {
        let na = a.norm();
        let nb = b.norm();
        if nb == 0.0 {
            return Self { c: 1.0, s: C::new(0.0, 0.0) };
        }
        if na == 0.0 {
            return Self { c: 0.0, s: b.conj() / nb };
        }
        let r = na.hypot(nb);
        Self { c: na / r, s: (a / na) * b.conj() / r }
    }

    /// Rows `i, i+1` of `m` restricted to columns `cols`: `m <- G m`.
    fn apply_left(&self, m: &mut DMatrix<C>, i: usize, cols: std::ops::Range<usize>) {
        let nr = m.nrows();
        let data = m.as_mut_slice();
        for j in cols {
            let h1 = data[i + j * nr];
            let h2 = data[i + 1 + j * nr];
            data[i + j * nr] = h1 * self.c + self.s * h2;
            data[i + 1 + j * nr] = -self.s.conj() * h1 + h2 * self.c;
        }
    }

    /// Columns `i, i+1` of `m` restricted to rows `rows`: `m <- m G^*`.
    fn apply_right_adjoint(&self, m: &mut DMatrix<C>, i: usize, rows: std::ops::Range<usize>) {
        let nr = m.nrows();
        let (left, right) = m.as_mut_slice().split_at_mut((i + 1) * nr);
        let c1 = &mut left[i * nr..];
        let c2 = &mut right[..nr];
        for r in rows {
            let h1 = c1[r];
            let h2 = c2[r];
            c1[r] = h1 * self.c + h2 * self.s.conj();
            c2[r] = -(h1 * self.s) + h2 * self.c;
        }
    }
}

fn l1(c: C) -> f64 {
    c.re.abs() + c.im.abs()
}

fn qr_iterate(t: &mut DMatrix<C>, z: &mut DMatrix<C>) -> Result<()> {
    let n = t.nrows();
    if n <= 1 {
        return Ok(());
    }
    let scale = t.iter().map(|v| l1(*v)).fold(0.0, f64::max);
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let negligible = |t: &DMatrix<C>, i: usize| {
        let sub = l1(t[(i + 1, i)]);
        let diag = l1(t[(i, i)]) + l1(t[(i + 1, i + 1)]);
        sub <= f64::EPSILON * diag || sub <= f64::EPSILON * 1e-3 * scale || sub <= tiny
    };

    let max_total = 60 * n;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut iu = n - 1;
    loop {
        while iu > 0 {
            if !negligible(t, iu - 1) {
                break;
            }
            t[(iu, iu - 1)] = C::new(0.0, 0.0);
            iter = 0;
            iu -= 1;
        }
        if iu == 0 {
            break;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(Error::NumericalFailure(format!(
                "complex QR iteration did not converge after {total} sweeps (n = {n})"
            )));
        }
        let mut il = iu - 1;
        while il > 0 && !negligible(t, il - 1) {
            il -= 1;
        }

        let shift = compute_shift(t, iu, iter);
        let g = Givens::zeroing(t[(il, il)] - shift, t[(il + 1, il)]);
        g.apply_left(t, il, il..n);
        g.apply_right_adjoint(t, il, 0..(il + 2).min(iu) + 1);
        g.apply_right_adjoint(z, il, 0..n);
        for i in il + 1..iu {
            let g = Givens::zeroing(t[(i, i - 1)], t[(i + 1, i - 1)]);
            g.apply_left(t, i, i - 1..n);
            t[(i + 1, i - 1)] = C::new(0.0, 0.0);
            g.apply_right_adjoint(t, i, 0..(i + 2).min(iu) + 1);
            g.apply_right_adjoint(z, i, 0..n);
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C::new(0.0, 0.0);
        }
    }
    Ok(())
}

/// Wilkinson shift from the trailing 2x2 block, with exceptional shifts to
/// break cycles.
fn compute_shift(t: &DMatrix<C>, iu: usize, iter: usize) -> C {
    if iter == 10 || iter == 30 {
        return C::new(
            t[(iu, iu - 1)].re.abs() + if iu >= 2 { t[(iu - 1, iu - 2)].re.abs() } else { 0.0 },
            0.0,
        ) + t[(iu, iu)];
    }
    let a = t[(iu - 1, iu - 1)];
    let b = t[(iu - 1, iu)];
    let c = t[(iu, iu - 1)];
    let d = t[(iu, iu)];
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Swap the adjacent diagonal entries `k`, `k+1` of the Schur form.
fn swap_adjacent(s: &mut ComplexSchur, k: usize) {
    let n = s.t.nrows();
    let t11 = s.t[(k, k)];
    let t22 = s.t[(k + 1, k + 1)];
    let g = Givens::zeroing(s.t[(k, k + 1)], t22 - t11);
    g.apply_left(&mut s.t, k, k..n);
    g.apply_right_adjoint(&mut s.t, k, 0..k + 2);
    g.apply_right_adjoint(&mut s.z, k, 0..n);
    s.t[(k + 1, k)] = C::new(0.0, 0.0);
    s.t[(k, k)] = t22;
    s.t[(k + 1, k + 1)] = t11;
}

/// Move every diagonal entry with `select(t_ii)` to the leading block,
/// preserving relative order. Returns the number of selected entries.
pub(crate) fn reorder(s: &mut ComplexSchur, select: impl Fn(C) -> bool) -> usize {
    let n = s.t.nrows();
    let mut next = 0;
    for i in 0..n {
        if select(s.t[(i, i)]) {
            let mut j = i;
            while j > next {
                swap_adjacent(s, j - 1);
                j -= 1;
            }
            next += 1;
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, seed: u64) -> DMatrix<C> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), 0.0))
    }

    fn check(m: &DMatrix<C>, s: &ComplexSchur) {
        let n = m.nrows();
        let rec = &s.z * &s.t * s.z.adjoint();
        let scale = m.norm().max(1.0);
        assert!((rec - m).norm() <= 1e-12 * scale * (n as f64).sqrt().max(1.0), "reconstruction");
        let orth = s.z.adjoint() * &s.z - DMatrix::<C>::identity(n, n);
        assert!(orth.norm() <= 1e-12 * (n as f64).max(1.0));
        for j in 0..n {
            for i in j + 1..n {
                assert_eq!(s.t[(i, j)], C::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn random_matrices_reconstruct() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (8, 4), (20, 5), (60, 6)] {
            let m = random(n, seed);
            let s = complex_schur(m.clone()).unwrap();
            check(&m, &s);
        }
    }

    #[test]
    fn rotation_matrix_has_imaginary_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]).map(|v| C::new(v, 0.0));
        let s = complex_schur(m.clone()).unwrap();
        check(&m, &s);
        let mut ims = [s.t[(0, 0)].im, s.t[(1, 1)].im];
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jordan_block_converges() {
        let mut m = DMatrix::<C>::zeros(6, 6);
        for i in 0..6 {
            m[(i, i)] = C::new(-1.0, 0.0);
            if i + 1 < 6 {
                m[(i, i + 1)] = C::new(1.0, 0.0);
            }
        }
        let mt = m.transpose();
        let s = complex_schur(mt.clone()).unwrap();
        check(&mt, &s);
    }

    #[test]
    fn reorder_moves_selected_to_front() {
        let m = random(12, 9);
        let mut s = complex_schur(m.clone()).unwrap();
        let count = s.t.diagonal().iter().filter(|v| v.re < 0.0).count();
        let got = reorder(&mut s, |v| v.re < 0.0);
        assert_eq!(got, count);
        check(&m, &s);
        for i in 0..12 {
            assert_eq!(s.t[(i, i)].re < 0.0, i < count);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = random(3, 1);
        m[(1, 1)] = C::new(f64::NAN, 0.0);
        assert!(complex_schur(m).is_err());
    }
}
