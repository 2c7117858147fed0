//! Thin wrappers around the system BLAS/LAPACK (OpenBLAS) for the few dense
//! operations that dominate the run time: real SVD, Hermitian eigenvalues,
//! and matrix products.
//!
//! All public functions take and return row-major `ndarray` arrays; the
//! column-major conversion is handled internally by operating on transposes.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const CBLAS_ROW_MAJOR: i32 = 101;
const CBLAS_NO_TRANS: i32 = 111;
const CBLAS_TRANS: i32 = 112;
const CBLAS_CONJ_TRANS: i32 = 113;

extern "C" {
    fn dgesdd_(
        jobz: *const u8,
        m: *const i32,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        s: *mut f64,
        u: *mut f64,
        ldu: *const i32,
        vt: *mut f64,
        ldvt: *const i32,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        info: *mut i32,
    );

    fn zheev_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );

    fn cblas_dgemm(
        layout: i32,
        transa: i32,
        transb: i32,
        m: i32,
        n: i32,
        k: i32,
        alpha: f64,
        a: *const f64,
        lda: i32,
        b: *const f64,
        ldb: i32,
        beta: f64,
        c: *mut f64,
        ldc: i32,
    );

    fn cblas_zgemm(
        layout: i32,
        transa: i32,
        transb: i32,
        m: i32,
        n: i32,
        k: i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: i32,
        b: *const Complex64,
        ldb: i32,
        beta: *const Complex64,
        c: *mut Complex64,
        ldc: i32,
    );
}

/// Which operation to apply to a GEMM operand.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Op {
    None,
    Transpose,
    ConjTranspose,
}

impl Op {
    fn cblas(self) -> i32 {
        match self {
            Op::None => CBLAS_NO_TRANS,
            Op::Transpose => CBLAS_TRANS,
            Op::ConjTranspose => CBLAS_CONJ_TRANS,
        }
    }
}

fn as_contiguous_f64(a: &Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a.to_owned()
    } else {
        Array2::from_shape_vec(a.dim(), a.iter().copied().collect()).expect("shape")
    }
}

/// Thin SVD of a real matrix: `a = u * diag(s) * vt`, singular values descending.
///
/// Uses LAPACK `dgesdd`. The input is fed as its transpose (the row-major
/// buffer reinterpreted column-major), so the roles of U and Vᵀ come back
/// swapped and are un-swapped here.
pub fn svd_thin(a: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("svd of empty matrix".into()));
    }
    let k = m.min(n);
    // Column-major view of the buffer is aᵀ with dims (n, m).
    let mut buf = as_contiguous_f64(a);
    let (lm, ln) = (n as i32, m as i32); // dims of aᵀ
    let mut s = vec![0.0f64; k];
    let mut u_t = vec![0.0f64; n * k]; // LAPACK U of aᵀ: n×k col-major → row-major (k,n) = vt of a
    let mut vt_t = vec![0.0f64; k * m]; // LAPACK Vᵀ of aᵀ: k×m col-major → row-major (m,k) = u of a
    let mut iwork = vec![0i32; 8 * k];
    let mut info = 0i32;
    let jobz = b'S';

    // Workspace query.
    let mut work_query = [0.0f64];
    let lwork_query = -1i32;
    unsafe {
        dgesdd_(
            &jobz,
            &lm,
            &ln,
            buf.as_mut_ptr(),
            &lm,
            s.as_mut_ptr(),
            u_t.as_mut_ptr(),
            &lm,
            vt_t.as_mut_ptr(),
            &(k as i32),
            work_query.as_mut_ptr(),
            &lwork_query,
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("dgesdd workspace query failed (info={info})")));
    }
    let lwork = work_query[0] as i32;
    let mut work = vec![0.0f64; lwork as usize];
    unsafe {
        dgesdd_(
            &jobz,
            &lm,
            &ln,
            buf.as_mut_ptr(),
            &lm,
            s.as_mut_ptr(),
            u_t.as_mut_ptr(),
            &lm,
            vt_t.as_mut_ptr(),
            &(k as i32),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("dgesdd did not converge (info={info})")));
    }

    let u = Array2::from_shape_vec((m, k), vt_t).expect("u shape");
    let vt = Array2::from_shape_vec((k, n), u_t).expect("vt shape");
    Ok((u, Array1::from_vec(s), vt))
}

/// Eigenvalues (ascending) of a complex Hermitian matrix via LAPACK `zheev`.
///
/// Only the eigenvalues are computed. For a Hermitian matrix the row-major /
/// column-major transpose is a complex conjugate, which leaves the (real)
/// spectrum unchanged, so no conversion is needed.
pub fn eigvals_hermitian(a: &Array2<Complex64>) -> Result<Array1<f64>> {
    let (m, n) = a.dim();
    if m != n {
        return Err(Error::InvalidArgument("eigvals_hermitian: matrix not square".into()));
    }
    if m == 0 {
        return Ok(Array1::zeros(0));
    }
    let mut buf: Vec<Complex64> = a.iter().copied().collect();
    let nn = n as i32;
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; 3 * n];
    let mut info = 0i32;
    let jobz = b'N';
    let uplo = b'L';

    let mut work_query = [Complex64::new(0.0, 0.0)];
    let lwork_query = -1i32;
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &lwork_query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zheev workspace query failed (info={info})")));
    }
    let lwork = work_query[0].re as i32;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zheev did not converge (info={info})")));
    }
    Ok(Array1::from_vec(w))
}

/// `op_a(a) · op_b(b)` for real matrices through CBLAS dgemm.
pub fn dgemm(op_a: Op, a: &Array2<f64>, op_b: Op, b: &Array2<f64>) -> Array2<f64> {
    assert!(op_a != Op::ConjTranspose && op_b != Op::ConjTranspose);
    let (am, an) = a.dim();
    let (bm, bn) = b.dim();
    let (m, k) = if op_a == Op::None { (am, an) } else { (an, am) };
    let (kb, n) = if op_b == Op::None { (bm, bn) } else { (bn, bm) };
    assert_eq!(k, kb, "dgemm inner dimensions");
    let a = as_contiguous_f64(a);
    let b = as_contiguous_f64(b);
    let mut c = Array2::<f64>::zeros((m, n));
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    unsafe {
        cblas_dgemm(
            CBLAS_ROW_MAJOR,
            op_a.cblas(),
            op_b.cblas(),
            m as i32,
            n as i32,
            k as i32,
            1.0,
            a.as_ptr(),
            an as i32,
            b.as_ptr(),
            bn as i32,
            0.0,
            c.as_mut_ptr(),
            n as i32,
        );
    }
    c
}

fn as_contiguous_z(a: &Array2<Complex64>) -> Array2<Complex64> {
    if a.is_standard_layout() {
        a.to_owned()
    } else {
        Array2::from_shape_vec(a.dim(), a.iter().copied().collect()).expect("shape")
    }
}

/// `op_a(a) · op_b(b)` for complex matrices through CBLAS zgemm.
pub fn zgemm(op_a: Op, a: &Array2<Complex64>, op_b: Op, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (am, an) = a.dim();
    let (bm, bn) = b.dim();
    let (m, k) = if op_a == Op::None { (am, an) } else { (an, am) };
    let (kb, n) = if op_b == Op::None { (bm, bn) } else { (bn, bm) };
    assert_eq!(k, kb, "zgemm inner dimensions");
    let a = as_contiguous_z(a);
    let b = as_contiguous_z(b);
    let mut c = Array2::<Complex64>::zeros((m, n));
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    unsafe {
        cblas_zgemm(
            CBLAS_ROW_MAJOR,
            op_a.cblas(),
            op_b.cblas(),
            m as i32,
            n as i32,
            k as i32,
            &one,
            a.as_ptr(),
            an as i32,
            b.as_ptr(),
            bn as i32,
            &zero,
            c.as_mut_ptr(),
            n as i32,
        );
    }
    c
}
