//! Bounds-checked strided views over `f64` slices and a GEMM on them.

use nalgebra::DMatrix;

/// Read-only `rows × cols` matrix at `data[i * rs + j * cs]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

/// Mutable counterpart of [`MatRef`].
#[derive(Debug)]
pub(crate) struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

fn span_fits(len: usize, rows: usize, cols: usize, rs: usize, cs: usize) -> bool {
    rows == 0 || cols == 0 || (rows - 1) * rs + (cols - 1) * cs < len
}

impl<'a> MatRef<'a> {
    pub(crate) fn new(data: &'a [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        assert!(span_fits(data.len(), rows, cols, rs, cs), "strided view exceeds its slice");
        Self { data, rows, cols, rs, cs }
    }

    /// Row-major `rows × cols` block.
    pub(crate) fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self::new(data, rows, cols, cols, 1)
    }

    pub(crate) fn from_dmatrix(m: &'a DMatrix<f64>) -> Self {
        Self::new(m.as_slice(), m.nrows(), m.ncols(), 1, m.nrows())
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn sub(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatRef<'a> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "sub-view out of range");
        if rows == 0 || cols == 0 {
            return Self { data: &[], rows, cols, rs: self.rs, cs: self.cs };
        }
        let start = r0 * self.rs + c0 * self.cs;
        Self::new(&self.data[start..], rows, cols, self.rs, self.cs)
    }

    pub(crate) fn transpose(&self) -> MatRef<'a> {
        Self { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }
}

impl<'a> MatMut<'a> {
    pub(crate) fn new(data: &'a mut [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        assert!(span_fits(data.len(), rows, cols, rs, cs), "strided view exceeds its slice");
        Self { data, rows, cols, rs, cs }
    }

    pub(crate) fn row_major(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        Self::new(data, rows, cols, cols, 1)
    }
}

/// `c += alpha a b`.
pub(crate) fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, c: MatMut<'_>) {
    assert_eq!(a.cols, b.rows, "gemm inner dimensions differ");
    assert_eq!((a.rows, b.cols), (c.rows, c.cols), "gemm output shape differs");
    if c.rows == 0 || c.cols == 0 || a.cols == 0 {
        return;
    }
    // SAFETY: every view was checked to address only elements inside its
    // slice, and `c` is borrowed mutably so it aliases neither input.
    unsafe {
        matrixmultiply::dgemm(
            c.rows,
            a.cols,
            c.cols,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            1.0,
            c.data.as_mut_ptr(),
            c.rs as isize,
            c.cs as isize,
        );
    }
}
