//! Solver for shifted Kronecker-sum systems `[L_k(A^T) + I ⊗ M] v = b`.
//!
//! `L_k(A^T) + I_{n^(k-1)} ⊗ M` is rewritten as
//! `L_{k-1}(A^T) ⊗ I + I_{n^(k-1)} ⊗ (A^T + M)`. A complex Schur form of
//! `A^T` handles the first `k-1` slots and a second one of `A^T + M` the last
//! slot, so every diagonal block of the transformed system is triangular.
//! Blocks are resolved by recursive back-substitution over the leading
//! indices in reverse lexicographic order. Cost is `O(k n^(k+1))`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dense::{gemm, MatMut, MatRef};
use crate::error::{invalid, mismatch, Error, Result};
use crate::kron::{checked_pow, slot_gemm};
use crate::schur::complex_schur;

type C = Complex64;

const SINGULAR_CONDITION: f64 = 1e12;
const IMAG_TOLERANCE: f64 = 1e-8;

/// Complex Schur form `A^T = U T U^*` of a real matrix `A`.
#[derive(Debug, Clone)]
pub struct SchurFactorization {
    pub u: DMatrix<C>,
    pub t: DMatrix<C>,
}

impl SchurFactorization {
    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// Eigenvalues of the factored matrix, in Schur order.
    pub fn eigenvalues(&self) -> Vec<C> {
        self.t.diagonal().iter().copied().collect()
    }
}

/// `[L_k(A^T) + I_{n^(k-1)} ⊗ M] v = b`.
#[derive(Debug, Clone)]
pub struct ShiftedKronSystem {
    pub a: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub k: usize,
    pub b: Vec<f64>,
}

/// Complex Schur form of `A^T`.
pub fn schur_decompose(a: &DMatrix<f64>) -> Result<SchurFactorization> {
    if !a.is_square() {
        return Err(mismatch(format!("Schur form of a non-square {}x{} matrix", a.nrows(), a.ncols())));
    }
    let s = complex_schur(a.transpose().map(|v| C::new(v, 0.0)))?;
    Ok(SchurFactorization { u: s.z, t: s.t })
}

/// `(U^{⊗k}) b`, or `(U^{⊗k})^* b` when `adjoint` is set, one slot at a time.
pub fn kron_power_multiply(u: &DMatrix<C>, k: usize, b: &[C], adjoint: bool) -> Result<Vec<C>> {
    if !u.is_square() {
        return Err(mismatch("Kronecker power of a non-square matrix"));
    }
    let n = u.nrows();
    let len = checked_pow(n, k)?;
    if b.len() != len {
        return Err(mismatch(format!("vector of length {} for a Kronecker power of size {len}", b.len())));
    }
    let op = SplitMatrix::new(&if adjoint { u.adjoint() } else { u.clone() });
    let slots = vec![&op; k];
    let (re, im) = apply_slotwise(&slots, b.iter().map(|c| c.re).collect(), b.iter().map(|c| c.im).collect());
    Ok(re.into_iter().zip(im).map(|(r, i)| C::new(r, i)).collect())
}

/// Complex matrix held as separate real and imaginary parts, so products run
/// through real GEMM.
#[derive(Debug, Clone)]
struct SplitMatrix {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl SplitMatrix {
    fn new(m: &DMatrix<C>) -> Self {
        Self { re: m.map(|c| c.re), im: m.map(|c| c.im) }
    }
}

/// `out += alpha M x` on split storage for a slot described by `outer`, `inner`.
#[allow(clippy::too_many_arguments)]
fn complex_slot_gemm(
    alpha: f64,
    m_re: MatRef<'_>,
    m_im: MatRef<'_>,
    x: (&[f64], &[f64]),
    x_is_real: bool,
    outer: usize,
    inner: usize,
    out: (&mut [f64], &mut [f64]),
) {
    let (out_re, out_im) = out;
    slot_gemm(alpha, m_re, x.0, outer, inner, out_re);
    slot_gemm(alpha, m_im, x.0, outer, inner, out_im);
    if !x_is_real {
        slot_gemm(-alpha, m_im, x.1, outer, inner, out_re);
        slot_gemm(alpha, m_re, x.1, outer, inner, out_im);
    }
}

/// Applies `slots[0] ⊗ slots[1] ⊗ ... ⊗ slots[k-1]` (all `n × n`).
fn apply_slotwise(slots: &[&SplitMatrix], mut re: Vec<f64>, mut im: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let k = slots.len();
    let mut real = im.iter().all(|v| *v == 0.0);
    let mut scratch_re = vec![0.0; re.len()];
    let mut scratch_im = vec![0.0; re.len()];
    for (s, m) in slots.iter().enumerate() {
        let n = m.re.nrows();
        let outer = n.pow(s as u32);
        let inner = n.pow((k - 1 - s) as u32);
        scratch_re.fill(0.0);
        scratch_im.fill(0.0);
        complex_slot_gemm(1.0, MatRef::from_dmatrix(&m.re), MatRef::from_dmatrix(&m.im), (&re, &im), real, outer, inner, (&mut scratch_re, &mut scratch_im));
        real = false;
        std::mem::swap(&mut re, &mut scratch_re);
        std::mem::swap(&mut im, &mut scratch_im);
    }
    (re, im)
}

/// Tile edge of the blocked Sylvester solve on the last two slots.
const TILE: usize = 32;
/// Row count below which the halving in the outer slots stops.
const LEAF_ROWS: usize = 4;

/// Schur factors of one slot family in the layout the solver consumes.
#[derive(Debug, Clone)]
struct SlotFactors {
    u: SplitMatrix,
    u_adj: SplitMatrix,
    t: SplitMatrix,
}

impl SlotFactors {
    fn new(f: &SchurFactorization) -> Self {
        Self { u: SplitMatrix::new(&f.u), u_adj: SplitMatrix::new(&f.u.adjoint()), t: SplitMatrix::new(&f.t) }
    }
}

/// Factored operator `L_k(A^T) + I ⊗ M`, reusable across tensor orders `k`.
#[derive(Debug, Clone)]
pub struct ShiftedKronSolver {
    lead: SchurFactorization,
    /// Schur form of `A^T + M`; `None` when `M = 0`.
    last: Option<SchurFactorization>,
    lead_split: SlotFactors,
    last_split: Option<SlotFactors>,
    scale: f64,
}

impl ShiftedKronSolver {
    /// Operator `L_k(A^T) + I ⊗ M`; pass `None` for `M = 0`.
    pub fn new(a: &DMatrix<f64>, m: Option<&DMatrix<f64>>) -> Result<Self> {
        let lead = schur_decompose(a)?;
        let last = match m {
            Some(m) => {
                if m.shape() != a.shape() {
                    return Err(mismatch(format!(
                        "shift block is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        a.nrows(),
                        a.ncols()
                    )));
                }
                if m.iter().all(|v| *v == 0.0) {
                    None
                } else {
                    Some(schur_decompose(&(a + m.transpose()))?)
                }
            }
            None => None,
        };
        let scale = lead.t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(
            last.as_ref().map_or(0.0, |l| l.t.iter().map(|v| v.norm()).fold(0.0, f64::max)),
        );
        let lead_split = SlotFactors::new(&lead);
        let last_split = last.as_ref().map(SlotFactors::new);
        Ok(Self { lead, last, lead_split, last_split, scale })
    }

    pub fn n(&self) -> usize {
        self.lead.n()
    }

    pub fn lead_factorization(&self) -> &SchurFactorization {
        &self.lead
    }

    pub fn solve(&self, k: usize, b: &[f64]) -> Result<Vec<f64>> {
        if k == 0 {
            return Err(invalid("tensor order must be at least 1"));
        }
        let n = self.n();
        let len = checked_pow(n, k)?;
        if b.len() != len {
            return Err(mismatch(format!("right-hand side has length {}, expected {n}^{k} = {len}", b.len())));
        }
        let last = self.last.as_ref().unwrap_or(&self.lead);
        let last_split = self.last_split.as_ref().unwrap_or(&self.lead_split);

        let mut forward = vec![&self.lead_split.u_adj; k - 1];
        forward.push(&last_split.u_adj);
        let (mut zr, mut zi) = apply_slotwise(&forward, b.to_vec(), vec![0.0; len]);

        let mut path = Vec::with_capacity(k);
        let base = Base { t: &last.t, split: &last_split.t };
        self.back_substitute(k - 1, C::new(0.0, 0.0), &mut zr, &mut zi, &base, &mut path)?;

        let mut backward = vec![&self.lead_split.u; k - 1];
        backward.push(&last_split.u);
        let (vr, vi) = apply_slotwise(&backward, zr, zi);

        let norm = vr.iter().chain(&vi).map(|v| v * v).sum::<f64>().sqrt();
        let imag = vi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if imag > IMAG_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalFailure(format!(
                "solution of a real Kronecker system has relative imaginary part {:.3e}",
                imag / norm
            )));
        }
        Ok(vr)
    }

    /// Solves `[sum_{j leading slots} T ⊗ ... + I ⊗ R + shift I] z = y` in place,
    /// where `levels` leading slots remain.
    fn back_substitute(
        &self,
        levels: usize,
        shift: C,
        yr: &mut [f64],
        yi: &mut [f64],
        base: &Base<'_>,
        path: &mut Vec<usize>,
    ) -> Result<()> {
        if levels == 0 {
            return self.triangular_solve(shift, yr, yi, base, path);
        }
        if levels == 1 {
            return self.sylvester_solve(shift, yr, yi, base, path);
        }
        let n = self.n();
        let block = yr.len() / n;
        self.solve_rows(levels, shift, yr, yi, 0, n, block, base, path)
    }

    /// Resolves leading indices `lo..hi` of `y` (rows of length `block`,
    /// slice starting at row `lo`) by halving: the upper half is updated by
    /// one GEMM once the lower half is known.
    #[allow(clippy::too_many_arguments)]
    fn solve_rows(
        &self,
        levels: usize,
        shift: C,
        yr: &mut [f64],
        yi: &mut [f64],
        lo: usize,
        hi: usize,
        block: usize,
        base: &Base<'_>,
        path: &mut Vec<usize>,
    ) -> Result<()> {
        let t = &self.lead.t;
        if hi - lo <= LEAF_ROWS {
            for i in (lo..hi).rev() {
                path.push(i);
                let range = (i - lo) * block..(i - lo + 1) * block;
                self.back_substitute(levels - 1, shift + t[(i, i)], &mut yr[range.clone()], &mut yi[range], base, path)?;
                path.pop();
                let (head_r, tail_r) = yr.split_at_mut((i - lo) * block);
                let (head_i, tail_i) = yi.split_at_mut((i - lo) * block);
                let (src_r, src_i) = (&tail_r[..block], &tail_i[..block]);
                for j in lo..i {
                    let c = t[(j, i)];
                    if c == C::new(0.0, 0.0) {
                        continue;
                    }
                    let dst_r = &mut head_r[(j - lo) * block..(j - lo + 1) * block];
                    let dst_i = &mut head_i[(j - lo) * block..(j - lo + 1) * block];
                    for (((dr, di), &sr), &si) in dst_r.iter_mut().zip(dst_i.iter_mut()).zip(src_r).zip(src_i) {
                        *dr -= c.re * sr - c.im * si;
                        *di -= c.re * si + c.im * sr;
                    }
                }
            }
            return Ok(());
        }
        let mid = (lo + hi) / 2;
        let (head_r, tail_r) = yr.split_at_mut((mid - lo) * block);
        let (head_i, tail_i) = yi.split_at_mut((mid - lo) * block);
        self.solve_rows(levels, shift, tail_r, tail_i, mid, hi, block, base, path)?;
        let ts = &self.lead_split.t;
        let t_re = MatRef::from_dmatrix(&ts.re).sub(lo, mid, mid - lo, hi - mid);
        let t_im = MatRef::from_dmatrix(&ts.im).sub(lo, mid, mid - lo, hi - mid);
        complex_slot_gemm(-1.0, t_re, t_im, (tail_r, tail_i), false, 1, block, (head_r, head_i));
        self.solve_rows(levels, shift, head_r, head_i, lo, mid, block, base, path)
    }

    /// `(T ⊗ I + I ⊗ R + shift I) z = y` for the last two slots, i.e. the
    /// triangular Sylvester equation `T Z + Z R^T + shift Z = Y` on the
    /// row-major `n × n` reshape, solved tile by tile.
    fn sylvester_solve(&self, shift: C, yr: &mut [f64], yi: &mut [f64], base: &Base<'_>, path: &mut Vec<usize>) -> Result<()> {
        let n = self.n();
        let t = &self.lead.t;
        let ts = &self.lead_split.t;
        let r = base.t;
        let (rr, ri) = (base.split.re.as_slice(), base.split.im.as_slice());
        let mut zr = vec![0.0; TILE * TILE];
        let mut zi = vec![0.0; TILE * TILE];
        let mut hi = n;
        while hi > 0 {
            let lo = hi.saturating_sub(TILE);
            let h = hi - lo;
            for i in lo..hi {
                path.push(i);
                let checked = self.check_pivots(shift + t[(i, i)], r, path);
                path.pop();
                checked?;
            }
            let mut c1 = n;
            while c1 > 0 {
                let c0 = c1.saturating_sub(TILE);
                let w = c1 - c0;
                for i in (lo..hi).rev() {
                    let sigma = shift + t[(i, i)];
                    let row = i * n;
                    for j in (c0..c1).rev() {
                        let z = C::new(yr[row + j], yi[row + j]) / (sigma + r[(j, j)]);
                        yr[row + j] = z.re;
                        yi[row + j] = z.im;
                        let (cr, ci) = (&rr[j * n + c0..j * n + j], &ri[j * n + c0..j * n + j]);
                        let (dr, di) = (&mut yr[row + c0..row + j], &mut yi[row + c0..row + j]);
                        for (((a, b), &pr), &pi) in dr.iter_mut().zip(di.iter_mut()).zip(cr).zip(ci) {
                            *a -= pr * z.re - pi * z.im;
                            *b -= pr * z.im + pi * z.re;
                        }
                    }
                    // coupling through T inside the tile
                    for j in lo..i {
                        let c = t[(j, i)];
                        if c == C::new(0.0, 0.0) {
                            continue;
                        }
                        for col in c0..c1 {
                            let (sr, si) = (yr[row + col], yi[row + col]);
                            yr[j * n + col] -= c.re * sr - c.im * si;
                            yi[j * n + col] -= c.re * si + c.im * sr;
                        }
                    }
                }
                if c0 > 0 {
                    // Y[lo..hi, ..c0] -= Z[lo..hi, c0..c1] R[..c0, c0..c1]^T
                    for (a, i) in (lo..hi).enumerate() {
                        zr[a * w..(a + 1) * w].copy_from_slice(&yr[i * n + c0..i * n + c1]);
                        zi[a * w..(a + 1) * w].copy_from_slice(&yi[i * n + c0..i * n + c1]);
                    }
                    let z_re = MatRef::row_major(&zr[..h * w], h, w);
                    let z_im = MatRef::row_major(&zi[..h * w], h, w);
                    let rt_re = MatRef::from_dmatrix(&base.split.re).sub(0, c0, c0, w).transpose();
                    let rt_im = MatRef::from_dmatrix(&base.split.im).sub(0, c0, c0, w).transpose();
                    gemm(-1.0, z_re, rt_re, MatMut::new(&mut yr[lo * n..], h, c0, n, 1));
                    gemm(1.0, z_im, rt_im, MatMut::new(&mut yr[lo * n..], h, c0, n, 1));
                    gemm(-1.0, z_re, rt_im, MatMut::new(&mut yi[lo * n..], h, c0, n, 1));
                    gemm(-1.0, z_im, rt_re, MatMut::new(&mut yi[lo * n..], h, c0, n, 1));
                }
                c1 = c0;
            }
            if lo > 0 {
                let (head_r, tail_r) = yr.split_at_mut(lo * n);
                let (head_i, tail_i) = yi.split_at_mut(lo * n);
                let src = (&tail_r[..h * n], &tail_i[..h * n]);
                let t_re = MatRef::from_dmatrix(&ts.re).sub(0, lo, lo, h);
                let t_im = MatRef::from_dmatrix(&ts.im).sub(0, lo, lo, h);
                complex_slot_gemm(-1.0, t_re, t_im, src, false, 1, n, (head_r, head_i));
            }
            hi = lo;
        }
        Ok(())
    }

    /// Rejects `shift I + R` when its condition estimate exceeds the threshold.
    fn check_pivots(&self, shift: C, r: &DMatrix<C>, path: &[usize]) -> Result<()> {
        let n = self.n();
        let mut min_pivot = f64::INFINITY;
        let mut worst = 0;
        for i in 0..n {
            let p = (shift + r[(i, i)]).norm();
            if p < min_pivot {
                min_pivot = p;
                worst = i;
            }
        }
        let condition = (self.scale * (path.len() + 1) as f64 + shift.norm()) / min_pivot;
        if !(condition <= SINGULAR_CONDITION) {
            let mut multi_index = path.to_vec();
            multi_index.push(worst);
            let s = shift + r[(worst, worst)];
            return Err(Error::SingularSystem { multi_index, shift_re: s.re, shift_im: s.im, condition });
        }
        Ok(())
    }

    /// `(shift I + R) z = y` with `R` upper triangular.
    fn triangular_solve(&self, shift: C, yr: &mut [f64], yi: &mut [f64], base: &Base<'_>, path: &[usize]) -> Result<()> {
        let n = self.n();
        let r = base.t;
        self.check_pivots(shift, r, path)?;
        let (rr, ri) = (base.split.re.as_slice(), base.split.im.as_slice());
        for i in (0..n).rev() {
            let z = C::new(yr[i], yi[i]) / (shift + r[(i, i)]);
            yr[i] = z.re;
            yi[i] = z.im;
            // column i of R, rows above the diagonal
            let (cr, ci) = (&rr[i * n..i * n + i], &ri[i * n..i * n + i]);
            for (((a, b), &pr), &pi) in yr[..i].iter_mut().zip(yi[..i].iter_mut()).zip(cr).zip(ci) {
                *a -= pr * z.re - pi * z.im;
                *b -= pr * z.im + pi * z.re;
            }
        }
        Ok(())
    }
}

/// Triangular factor of the last slot, complex and split.
struct Base<'a> {
    t: &'a DMatrix<C>,
    split: &'a SplitMatrix,
}

/// One-shot solve of a shifted Kronecker-sum system.
pub fn solve_shifted_kron_system(sys: &ShiftedKronSystem) -> Result<Vec<f64>> {
    if sys.k < 2 {
        return Err(invalid(format!("tensor order must be at least 2, got {}", sys.k)));
    }
    let solver = ShiftedKronSolver::new(&sys.a, Some(&sys.m))?;
    solver.solve(sys.k, &sys.b)
}

/// `[L_k(A^T) + I ⊗ M] v`, applied without forming the operator.
pub fn shifted_kron_apply(a: &DMatrix<f64>, m: &DMatrix<f64>, k: usize, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = crate::kron::kron_sum_apply(&a.transpose(), v, k)?;
    if m.shape() != a.shape() {
        return Err(mismatch("shift block and A differ in shape"));
    }
    let n = a.nrows();
    let outer = n.pow((k - 1) as u32);
    slot_gemm(1.0, MatRef::from_dmatrix(m), v, outer, 1, &mut out);
    Ok(out)
}
