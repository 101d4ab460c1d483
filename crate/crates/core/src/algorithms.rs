//! Sketch-and-solve least squares, randomized SVD, Nyström and generalized
//! Nyström approximation, plus the exact algebraic identities used to test
//! them.
//!
//! Every routine takes the embedding through the [`Sketch`] trait, so a dense
//! matrix and a structured [`crate::embeddings::Embedding`] are
//! interchangeable.

use crate::dense::{
    check_psd, frob_sq, hermitian_eigen, hermitian_part, orth_basis, orthogonal_complement,
    pivoted_range, pseudoinverse,
};
use crate::embeddings::Sketch;
use crate::error::{Error, Result};
use crate::field::{Matrix, Scalar};

/// Output of [`sketch_and_solve`].
#[derive(Debug, Clone)]
pub struct SketchSolveResult<T: Scalar> {
    /// `(Omega* A)^+ (Omega* B)`, `d x p`.
    pub xhat: Matrix<T>,
    /// `|B - A Xhat|_F^2` on the original problem.
    pub residual_sq: f64,
    /// `|B - A A^+ B|_F^2`.
    pub optimal_residual_sq: f64,
}

impl<T: Scalar> SketchSolveResult<T> {
    /// `residual_sq / optimal_residual_sq - 1`.
    pub fn epsilon(&self) -> f64 {
        self.residual_sq / self.optimal_residual_sq - 1.0
    }
}

/// A factored approximation `left * right` and its error.
#[derive(Debug, Clone)]
pub struct LowRankResult<T: Scalar> {
    pub left: Matrix<T>,
    pub right: Matrix<T>,
    /// `|A - Ahat|_F^2`, or `tr(H - Hhat)` for Nyström.
    pub err_sq: f64,
}

impl<T: Scalar> LowRankResult<T> {
    pub fn approximation(&self) -> Matrix<T> {
        &self.left * &self.right
    }
}

fn same_rows<T: Scalar>(what: &str, a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {} rows vs {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(())
}

/// `|B - A A^+ B|_F^2`.
pub fn optimal_residual_sq<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<f64> {
    same_rows("least squares", a, b)?;
    let x = pseudoinverse(a)? * b;
    Ok(frob_sq(&(b - a * x)))
}

/// `Xhat = (Omega* A)^+ (Omega* B)` alone.
pub fn sketched_solution<T: Scalar, S: Sketch<T> + ?Sized>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    omega: &S,
) -> Result<Matrix<T>> {
    same_rows("least squares", a, b)?;
    let sa = omega.adjoint_apply(a)?;
    let sb = omega.adjoint_apply(b)?;
    Ok(pseudoinverse(&sa)? * sb)
}

/// Sketch-and-solve with the residual measured on the original problem.
pub fn sketch_and_solve<T: Scalar, S: Sketch<T> + ?Sized>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    omega: &S,
) -> Result<SketchSolveResult<T>> {
    let optimal = optimal_residual_sq(a, b)?;
    sketch_and_solve_with_optimum(a, b, omega, optimal)
}

/// [`sketch_and_solve`] with a precomputed optimal residual.
pub fn sketch_and_solve_with_optimum<T: Scalar, S: Sketch<T> + ?Sized>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    omega: &S,
    optimal_residual_sq: f64,
) -> Result<SketchSolveResult<T>> {
    let xhat = sketched_solution(a, b, omega)?;
    let residual_sq = frob_sq(&(b - a * &xhat));
    Ok(SketchSolveResult { xhat, residual_sq, optimal_residual_sq })
}

/// The two terms `(|(Omega* Q)^+ (Omega* Q_perp) Q_perp* B|^2, |Q_perp* B|^2)`
/// whose sum is the sketch-and-solve residual, with `Q` an orthonormal basis
/// for `range(A)` from a column-pivoted QR.
pub fn residual_decomposition<T: Scalar, S: Sketch<T> + ?Sized>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    omega: &S,
) -> Result<(f64, f64)> {
    same_rows("least squares", a, b)?;
    let q = pivoted_range(a)?;
    let rank = q.ncols();
    if rank > omega.ncols() {
        return Err(Error::RankExceedsSketch { rank, ell: omega.ncols() });
    }
    let q_perp = orthogonal_complement(&q);
    let tail = q_perp.ad_mul(b);
    let optimal = frob_sq(&tail);
    let oq = omega.adjoint_apply(&q)?;
    let oqp = omega.adjoint_apply(&q_perp)?;
    let cross = frob_sq(&(pseudoinverse(&oq)? * (oqp * tail)));
    Ok((cross, optimal))
}

/// Randomized SVD `Ahat = Q (Q* A)` with `Q` an orthonormal basis for
/// `range(A Omega)`.
pub fn randomized_svd<T: Scalar, S: Sketch<T> + ?Sized>(a: &Matrix<T>, omega: &S) -> Result<LowRankResult<T>> {
    let y = omega.apply_right(a)?;
    let q = orth_basis(&y)?;
    let right = q.ad_mul(a);
    let err_sq = frob_sq(&(a - &q * &right));
    Ok(LowRankResult { left: q, right, err_sq })
}

/// Nyström approximation `H<Omega> = F F*` of a psd matrix, with error
/// `tr(H - H<Omega>)`. Validates that `H` is psd.
pub fn nystrom<T: Scalar, S: Sketch<T> + ?Sized>(h: &Matrix<T>, omega: &S) -> Result<LowRankResult<T>> {
    check_psd(h)?;
    nystrom_unchecked(h, omega)
}

/// [`nystrom`] without the psd check on `H`.
pub fn nystrom_unchecked<T: Scalar, S: Sketch<T> + ?Sized>(h: &Matrix<T>, omega: &S) -> Result<LowRankResult<T>> {
    let f = nystrom_factor(h, omega)?;
    let trace: f64 = h.diagonal().iter().map(|x| x.real()).sum();
    let err_sq = trace - frob_sq(&f);
    let right = f.adjoint();
    Ok(LowRankResult { left: f, right, err_sq })
}

/// `F` with `F F* = H Omega (Omega* H Omega)^+ Omega* H`.
///
/// The approximation depends on `Omega` only through its range, so `Omega`
/// is replaced by an orthonormal basis `Q` first; the core `Q* H Q` is then
/// inverted with an eigenvalue cutoff.
fn nystrom_factor<T: Scalar, S: Sketch<T> + ?Sized>(h: &Matrix<T>, omega: &S) -> Result<Matrix<T>> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", h.nrows(), h.ncols())));
    }
    if omega.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} rows, matrix is {}x{}",
            omega.nrows(),
            h.nrows(),
            h.ncols()
        )));
    }
    let q = orth_basis(&omega.to_matrix())?;
    let y = h * &q;
    let core = hermitian_part(&q.ad_mul(&y));
    let (vals, vecs) = hermitian_eigen(&core)?;
    let lmax = vals.first().copied().unwrap_or(0.0);
    let tol = vals.len() as f64 * f64::EPSILON * lmax;
    let keep = vals.iter().take_while(|&&v| v > tol && v > 0.0).count();
    let mut basis = vecs.columns(0, keep).into_owned();
    for (j, v) in vals.iter().take(keep).enumerate() {
        basis.column_mut(j).unscale_mut(v.sqrt());
    }
    Ok(y * basis)
}

/// Schur complement `H / Omega = H - H<Omega>`.
pub fn schur_complement<T: Scalar, S: Sketch<T> + ?Sized>(h: &Matrix<T>, omega: &S) -> Result<Matrix<T>> {
    check_psd(h)?;
    let f = nystrom_factor(h, omega)?;
    Ok(hermitian_part(&(h - &f * f.adjoint())))
}

/// Generalized Nyström `A<Omega, Psi> = A Omega (Psi* A Omega)^+ Psi* A`,
/// factored as `(A Omega (Psi* A Omega)^+, Psi* A)`.
pub fn generalized_nystrom<T: Scalar, S1: Sketch<T> + ?Sized, S2: Sketch<T> + ?Sized>(
    a: &Matrix<T>,
    omega: &S1,
    psi: &S2,
) -> Result<LowRankResult<T>> {
    let y = omega.apply_right(a)?;
    let right = psi.adjoint_apply(a)?;
    let core = psi.adjoint_apply(&y)?;
    let left = y * pseudoinverse(&core)?;
    let err_sq = frob_sq(&(a - &left * &right));
    Ok(LowRankResult { left, right, err_sq })
}
