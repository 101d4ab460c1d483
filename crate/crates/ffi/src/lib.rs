//! C ABI over the real-field sketchlab API.
//!
//! Matrices cross the boundary as opaque `SlMatrix` handles holding a dense
//! column-major `f64` matrix. Every fallible function returns an `SlStatus`;
//! on failure `sl_last_error_message` describes the most recent error on the
//! calling thread. Handles returned through out-pointers are owned by the
//! caller and released with `sl_matrix_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sketchlab::algorithms::{generalized_nystrom, nystrom, randomized_svd, sketch_and_solve};
use sketchlab::embeddings::{EmbeddingKind, EmbeddingSampler, EmbeddingSpec};
use sketchlab::theory::{
    budget_for_epsilon, gn_lower_factor, gn_prefactor, plan_split, rsvd_lower_factor, ss_dimensions,
    ss_ratio_gaussian, ss_ratio_haar, BoundQuery, BudgetMethod, GammaKind, PlanObjective,
};
use sketchlab::{Error, FieldTag, Matrix, RngStream};

/// Dense real matrix.
pub struct SlMatrix {
    inner: Matrix<f64>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidSpec = 4,
    DimensionTooSmall = 5,
    RankDeficient = 6,
    NotPsd = 7,
    InfeasibleBudget = 8,
    Numerical = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlEmbeddingKind {
    Gaussian = 0,
    HaarOrthonormal = 1,
    Sign = 2,
    Uniform = 3,
    SparseIid = 4,
    SparseStack = 5,
    Srtt = 6,
    Givens = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlField {
    Real = 0,
    Complex = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlBound {
    /// Gaussian sketch-and-solve ratio; uses `field`, `r`, `ell`.
    SketchSolveGaussian = 0,
    /// Haar sketch-and-solve ratio; uses `field`, `n`, `r`, `ell`.
    SketchSolveHaar = 1,
    /// Randomized SVD lower factor; uses `field`, `r`, `ell`, `q`.
    RsvdLowerFactor = 2,
    /// Generalized Nyström prefactor; uses `field`, `d`, `ell`, `k`, `gamma_haar`.
    GnPrefactor = 3,
    /// Generalized Nyström lower factor; uses `field`, `d`, `r`, `ell`, `k`, `q`, `gamma_haar`.
    GnLowerFactor = 4,
}

/// Parameters for `sl_bound`; fields a bound does not use are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlBoundQuery {
    pub field: SlField,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub ell: usize,
    pub k: usize,
    pub q: usize,
    /// Nonzero for a Haar left sketch, zero for Gaussian.
    pub gamma_haar: i32,
}

/// A `(k, ell)` split of a matvec budget.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SlSplit {
    pub k: usize,
    pub ell: usize,
    pub objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::DimensionMismatch(_) => SlStatus::DimensionMismatch,
        Error::InvalidSpec(_) | Error::InvalidGrid(_) => SlStatus::InvalidSpec,
        Error::DimensionTooSmall(_)
        | Error::RankExceedsSketch { .. }
        | Error::RankBelowSketch { .. }
        | Error::NoAdmissibleQ
        | Error::ParameterOrderViolation(_) => SlStatus::DimensionTooSmall,
        Error::RankDeficient(_) => SlStatus::RankDeficient,
        Error::NotPsd(_) | Error::NotPositiveDefinite(_) => SlStatus::NotPsd,
        Error::InfeasibleBudget(_) => SlStatus::InfeasibleBudget,
        Error::Numerical(_) | Error::Io(_) => SlStatus::Numerical,
        Error::InvalidArgument(_) => SlStatus::InvalidArgument,
    }
}

struct Fail(SlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for `sl_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlStatus::Panic
        }
    }
}

unsafe fn mat<'a>(p: *const SlMatrix, what: &str) -> Result<&'a Matrix<f64>, Fail> {
    p.as_ref().map(|m| &m.inner).ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Stores a new handle in `out`; nothing is allocated when `out` is null.
unsafe fn put_matrix(out: *mut *mut SlMatrix, m: Matrix<f64>, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(Box::into_raw(Box::new(SlMatrix { inner: m })));
    Ok(())
}

fn field_of(f: SlField) -> FieldTag {
    match f {
        SlField::Real => FieldTag::Real,
        SlField::Complex => FieldTag::Complex,
    }
}

fn kind_of(k: SlEmbeddingKind) -> EmbeddingKind {
    match k {
        SlEmbeddingKind::Gaussian => EmbeddingKind::Gaussian,
        SlEmbeddingKind::HaarOrthonormal => EmbeddingKind::HaarOrthonormal,
        SlEmbeddingKind::Sign => EmbeddingKind::Sign,
        SlEmbeddingKind::Uniform => EmbeddingKind::Uniform,
        SlEmbeddingKind::SparseIid => EmbeddingKind::SparseIid,
        SlEmbeddingKind::SparseStack => EmbeddingKind::SparseStack,
        SlEmbeddingKind::Srtt => EmbeddingKind::Srtt,
        SlEmbeddingKind::Givens => EmbeddingKind::Givens,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next sketchlab call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `rows * cols` column-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut SlMatrix) -> SlStatus {
    guard(|| {
        if data.is_null() && rows * cols > 0 {
            return Err(null("data"));
        }
        let values = if rows * cols == 0 { &[][..] } else { std::slice::from_raw_parts(data, rows * cols) };
        put_matrix(out, Matrix::from_column_slice(rows, cols, values), "out")
    })
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_matrix_rows(m: *const SlMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.nrows())
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_matrix_cols(m: *const SlMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.ncols())
}

/// Copies the entries column-major into `buf`, which holds `len` doubles.
///
/// # Safety
/// `m` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_matrix_copy(m: *const SlMatrix, buf: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let m = mat(m, "matrix")?;
        if len != m.len() {
            return Err(Fail(SlStatus::DimensionMismatch, format!("buffer holds {len} values, matrix has {}", m.len())));
        }
        if len > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            std::slice::from_raw_parts_mut(buf, len).copy_from_slice(m.as_slice());
        }
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_matrix_free(m: *mut SlMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Samples an `n x ell` embedding as a dense matrix from stream `stream` of
/// `seed`. `zeta = 0` selects the default sparsity.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_embedding_sample(
    kind: SlEmbeddingKind,
    n: usize,
    ell: usize,
    zeta: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut SlMatrix,
) -> SlStatus {
    guard(|| {
        let mut spec = EmbeddingSpec::new(kind_of(kind), n, ell);
        if zeta > 0 {
            spec = spec.with_zeta(zeta);
        }
        let omega = EmbeddingSampler::new(spec)?.sample::<f64, _>(&mut RngStream::new(seed, stream).rng())?;
        put_matrix(out, omega.to_dense(), "out")
    })
}

/// `Xhat = (Omega* A)^+ (Omega* B)`; also reports `|B - A Xhat|^2 / |B - A A^+ B|^2 - 1`.
///
/// # Safety
/// Handles must be live; out-pointers writable (`epsilon` may be null).
#[no_mangle]
pub unsafe extern "C" fn sl_sketch_and_solve(
    a: *const SlMatrix,
    b: *const SlMatrix,
    omega: *const SlMatrix,
    xhat: *mut *mut SlMatrix,
    epsilon: *mut f64,
) -> SlStatus {
    guard(|| {
        let res = sketch_and_solve(mat(a, "a")?, mat(b, "b")?, mat(omega, "omega")?)?;
        if !epsilon.is_null() {
            epsilon.write(res.epsilon());
        }
        put_matrix(xhat, res.xhat, "xhat")
    })
}

/// Randomized SVD `A ~ Q (Q* A)`; writes `Q`, `Q* A` and `|A - Q Q* A|_F^2`.
///
/// # Safety
/// Handles must be live; out-pointers writable (`err_sq` may be null).
#[no_mangle]
pub unsafe extern "C" fn sl_randomized_svd(
    a: *const SlMatrix,
    omega: *const SlMatrix,
    q: *mut *mut SlMatrix,
    qa: *mut *mut SlMatrix,
    err_sq: *mut f64,
) -> SlStatus {
    guard(|| {
        if q.is_null() || qa.is_null() {
            return Err(null("output"));
        }
        let res = randomized_svd(mat(a, "a")?, mat(omega, "omega")?)?;
        if !err_sq.is_null() {
            err_sq.write(res.err_sq);
        }
        put_matrix(q, res.left, "q")?;
        put_matrix(qa, res.right, "qa")
    })
}

/// Nyström approximation `H ~ F F*` of a psd `H`; writes `F` and `tr(H - F F*)`.
///
/// # Safety
/// Handles must be live; out-pointers writable (`err` may be null).
#[no_mangle]
pub unsafe extern "C" fn sl_nystrom(
    h: *const SlMatrix,
    omega: *const SlMatrix,
    f: *mut *mut SlMatrix,
    err: *mut f64,
) -> SlStatus {
    guard(|| {
        let res = nystrom(mat(h, "h")?, mat(omega, "omega")?)?;
        if !err.is_null() {
            err.write(res.err_sq);
        }
        put_matrix(f, res.left, "f")
    })
}

/// Generalized Nyström `A Omega (Psi* A Omega)^+ Psi* A`; writes the dense
/// approximation and its squared Frobenius error.
///
/// # Safety
/// Handles must be live; out-pointers writable (`err_sq` may be null).
#[no_mangle]
pub unsafe extern "C" fn sl_generalized_nystrom(
    a: *const SlMatrix,
    omega: *const SlMatrix,
    psi: *const SlMatrix,
    approx: *mut *mut SlMatrix,
    err_sq: *mut f64,
) -> SlStatus {
    guard(|| {
        let res = generalized_nystrom(mat(a, "a")?, mat(omega, "omega")?, mat(psi, "psi")?)?;
        if !err_sq.is_null() {
            err_sq.write(res.err_sq);
        }
        put_matrix(approx, res.approximation(), "approx")
    })
}

/// Evaluates one closed-form bound.
///
/// # Safety
/// `query` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_bound(which: SlBound, query: *const SlBoundQuery, out: *mut f64) -> SlStatus {
    guard(|| {
        let q = query.as_ref().ok_or_else(|| null("query"))?;
        let bq = BoundQuery {
            field: field_of(q.field),
            n: q.n,
            d: q.d,
            r: q.r,
            ell: q.ell,
            k: q.k,
            q: q.q,
            gamma_kind: if q.gamma_haar != 0 { GammaKind::HaarOrthonormal } else { GammaKind::Gaussian },
            ..Default::default()
        };
        let v = match which {
            SlBound::SketchSolveGaussian => ss_ratio_gaussian(&bq)?,
            SlBound::SketchSolveHaar => ss_ratio_haar(&bq)?,
            SlBound::RsvdLowerFactor => rsvd_lower_factor(bq.r, bq.ell, bq.q, bq.field)?,
            SlBound::GnPrefactor => gn_prefactor(&bq)?,
            SlBound::GnLowerFactor => gn_lower_factor(&bq)?,
        };
        put(out, v, "out")
    })
}

/// Best integer split `k + ell = t` for target rank `q`. `real_objective`
/// nonzero selects the real-field offsets.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_plan_split(q: usize, t: usize, real_objective: i32, out: *mut SlSplit) -> SlStatus {
    guard(|| {
        let objective = if real_objective != 0 { PlanObjective::Real } else { PlanObjective::Complex };
        let s = plan_split(q, t, objective)?;
        put(out, SlSplit { k: s.k, ell: s.ell, objective: s.bound }, "out")
    })
}

/// Matvec budget for a `(1 + epsilon)` guarantee at rank `q`; `rsvd` nonzero
/// selects randomized SVD, zero generalized Nyström.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_budget_for_epsilon(q: usize, epsilon: f64, rsvd: i32, out: *mut usize) -> SlStatus {
    guard(|| {
        let method = if rsvd != 0 { BudgetMethod::Rsvd } else { BudgetMethod::GeneralizedNystrom };
        put(out, budget_for_epsilon(q, epsilon, method)?, "out")
    })
}

/// Minimal and sufficient sketch-and-solve embedding dimensions.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_ss_dimensions(
    r: usize,
    field: SlField,
    epsilon: f64,
    ell_min: *mut usize,
    ell_sufficient: *mut usize,
) -> SlStatus {
    guard(|| {
        if ell_min.is_null() || ell_sufficient.is_null() {
            return Err(null("output"));
        }
        let (lo, hi) = ss_dimensions(r, field_of(field), epsilon)?;
        put(ell_min, lo, "ell_min")?;
        put(ell_sufficient, hi, "ell_sufficient")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(sl_last_error_message()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn roundtrip_matrix() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut m = ptr::null_mut();
        unsafe {
            assert_eq!(sl_matrix_new(2, 3, data.as_ptr(), &mut m), SlStatus::Ok);
            assert_eq!((sl_matrix_rows(m), sl_matrix_cols(m)), (2, 3));
            let mut back = [0.0; 6];
            assert_eq!(sl_matrix_copy(m, back.as_mut_ptr(), 6), SlStatus::Ok);
            assert_eq!(back, data);
            assert_eq!(sl_matrix_copy(m, back.as_mut_ptr(), 5), SlStatus::DimensionMismatch);
            sl_matrix_free(m);
        }
    }

    #[test]
    fn null_handles_are_reported() {
        let mut out = 0.0;
        let status = unsafe { sl_bound(SlBound::SketchSolveGaussian, ptr::null(), &mut out) };
        assert_eq!(status, SlStatus::NullPointer);
        assert!(last_error().contains("query"));
    }

    #[test]
    fn panics_do_not_cross_the_boundary() {
        assert_eq!(guard(|| panic!("boom")), SlStatus::Panic);
        assert_eq!(last_error(), "internal panic");
    }

    #[test]
    fn error_codes_follow_variants() {
        assert_eq!(status_of(&Error::NotPsd("x".into())), SlStatus::NotPsd);
        assert_eq!(status_of(&Error::RankExceedsSketch { rank: 3, ell: 2 }), SlStatus::DimensionTooSmall);
        assert_eq!(status_of(&Error::InfeasibleBudget("x".into())), SlStatus::InfeasibleBudget);
    }
}
