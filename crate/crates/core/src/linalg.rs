//! Thin safe wrappers over the LAPACK drivers used by the spectral code.
//! All matrices are column-major.

use std::os::raw::c_int;

use lapack_sys::__BindgenComplex;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric matrix (divide and conquer).
/// Returns ascending eigenvalues and the eigenvector matrix.
pub fn symmetric_eigen(n: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    let ni = to_int(n)?;
    let mut w = vec![0.0; n];
    let mut info: c_int = 0;
    let mut work_query = 0.0;
    let mut iwork_query: c_int = 0;
    unsafe {
        lapack_sys::dsyevd_(
            c"V".as_ptr(),
            c"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut work_query,
            &-1,
            &mut iwork_query,
            &-1,
            &mut info,
        );
    }
    check_info("dsyevd (workspace query)", info)?;
    let lwork = work_query as c_int;
    let liwork = iwork_query;
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            c"V".as_ptr(),
            c"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    check_info("dsyevd", info)?;
    Ok((w, a))
}

/// Complex Schur decomposition `A = Z T Z^H`. Returns the diagonal of `T`
/// and the unitary `Z`. For a normal matrix the columns of `Z` are eigenvectors.
pub fn complex_schur(n: usize, mut a: Vec<Complex64>) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let ni = to_int(n)?;
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut z = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rwork = vec![0.0; n];
    let mut sdim: c_int = 0;
    let mut info: c_int = 0;
    let lwork = to_int(4 * n.max(1))?;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack_sys::zgees_(
            c"V".as_ptr(),
            c"N".as_ptr(),
            None,
            &ni,
            as_lapack(&mut a),
            &ni,
            &mut sdim,
            as_lapack(&mut w),
            as_lapack(&mut z),
            &ni,
            as_lapack(&mut work),
            &lwork,
            rwork.as_mut_ptr(),
            std::ptr::null_mut(),
            &mut info,
        );
    }
    check_info("zgees", info)?;
    Ok((w, z))
}

fn as_lapack(v: &mut [Complex64]) -> *mut __BindgenComplex<f64> {
    // Complex64 is #[repr(C)] { re, im }, identical to LAPACK's double complex.
    v.as_mut_ptr().cast()
}

fn to_int(n: usize) -> Result<c_int> {
    c_int::try_from(n).map_err(|_| Error::Numerical(format!("matrix dimension {n} too large")))
}

fn check_info(routine: &str, info: c_int) -> Result<()> {
    match info {
        0 => Ok(()),
        i if i < 0 => Err(Error::Numerical(format!(
            "{routine}: illegal argument {}",
            -i
        ))),
        i => Err(Error::Numerical(format!(
            "{routine}: failed to converge (info = {i})"
        ))),
    }
}
