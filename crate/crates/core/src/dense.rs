//! Dense kernels shared by every other module: Householder QR with a
//! canonical sign convention, truncated SVD, pseudoinverse, Hermitian
//! eigendecomposition helpers and the orthonormal DCT-II matrix.
//!
//! All kernels are deterministic for identical inputs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::{Matrix, Scalar};

/// A Householder reflector `H = I - 2 u u*` acting on rows `offset..` of
/// its operand, with `|u| = 1`. `u` is empty for the identity.
#[derive(Debug, Clone)]
pub struct Reflector<T> {
    pub offset: usize,
    pub u: Vec<T>,
}

impl<T: Scalar> Reflector<T> {
    /// Build the reflector that maps `x` onto `beta e_1`, returning it with
    /// `beta = -phase(x_0) |x|`.
    pub fn annihilating(offset: usize, x: &[T]) -> (Self, T) {
        let norm = x.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (Self { offset, u: Vec::new() }, T::zero());
        }
        let ph = x[0].phase();
        let mut u = x.to_vec();
        u[0] += ph.scale(norm);
        let unorm = u.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt();
        for v in u.iter_mut() {
            *v = v.unscale(unorm);
        }
        (Self { offset, u }, -ph.scale(norm))
    }

    /// `M <- H M` restricted to columns `cols`.
    pub fn apply_left(&self, m: &mut Matrix<T>, cols: std::ops::Range<usize>) {
        if self.u.is_empty() {
            return;
        }
        let nrows = m.nrows();
        let two = T::from_real(2.0);
        let data = m.as_mut_slice();
        for c in cols {
            let col = &mut data[c * nrows + self.offset..c * nrows + self.offset + self.u.len()];
            let mut s = T::zero();
            for (ui, xi) in self.u.iter().zip(col.iter()) {
                s += ui.conjugate() * *xi;
            }
            if s == T::zero() {
                continue;
            }
            let s = s * two;
            for (ui, xi) in self.u.iter().zip(col.iter_mut()) {
                *xi -= *ui * s;
            }
        }
    }
}

fn rank_tolerance(m: usize, n: usize, scale: f64) -> f64 {
    m.max(n) as f64 * f64::EPSILON * scale
}

/// Thin QR factorization `M = Q R` of a full-column-rank matrix.
///
/// `Q` has orthonormal columns and `R` is upper triangular with a real,
/// nonnegative diagonal. Fails with [`Error::RankDeficient`] when a diagonal
/// entry of `R` falls below `max(m, n) * eps * max_i |R_ii|`.
pub fn thin_qr<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (rows, cols) = m.shape();
    if cols > rows {
        return Err(Error::RankDeficient(format!(
            "{rows}x{cols} matrix cannot have full column rank"
        )));
    }
    let mut work = m.clone();
    let mut reflectors = Vec::with_capacity(cols);
    let mut diag = Vec::with_capacity(cols);
    for j in 0..cols {
        let x: Vec<T> = work.column(j).rows_range(j..).iter().copied().collect();
        let (h, beta) = Reflector::annihilating(j, &x);
        h.apply_left(&mut work, j + 1..cols);
        diag.push(beta);
        reflectors.push(h);
    }

    let max_diag = diag.iter().map(|d| d.modulus()).fold(0.0, f64::max);
    let tol = rank_tolerance(rows, cols, max_diag);
    if let Some(j) = diag.iter().position(|d| d.modulus() <= tol || max_diag == 0.0) {
        return Err(Error::RankDeficient(format!(
            "|R[{j},{j}]| = {:.3e} below tolerance {tol:.3e}",
            diag[j].modulus()
        )));
    }

    let mut r = Matrix::<T>::zeros(cols, cols);
    for j in 0..cols {
        let ph = diag[j].phase().conjugate();
        r[(j, j)] = T::from_real(diag[j].modulus());
        for c in j + 1..cols {
            r[(j, c)] = work[(j, c)] * ph;
        }
    }
    let mut q = Matrix::<T>::zeros(rows, cols);
    for j in 0..cols {
        q[(j, j)] = diag[j].phase();
    }
    for h in reflectors.iter().rev() {
        h.apply_left(&mut q, 0..cols);
    }
    Ok((q, r))
}

/// Thin SVD `M = U diag(s) V*` with `s` descending, computed by one-sided
/// Jacobi. `U` is `rows x k` and `V*` is `k x cols` with `k = min(rows, cols)`;
/// columns of `U` belonging to zero singular values are zero.
pub(crate) fn svd_sorted<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, Vec<f64>, Matrix<T>)> {
    let (rows, cols) = m.shape();
    if rows.min(cols) == 0 {
        return Ok((Matrix::zeros(rows, 0), Vec::new(), Matrix::zeros(0, cols)));
    }
    if rows < cols {
        let (u, s, vt) = svd_sorted(&m.adjoint())?;
        return Ok((vt.adjoint(), s, u.adjoint()));
    }
    let (w, v) = jacobi_orthogonalize(m.clone())?;
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = Matrix::<T>::zeros(rows, cols);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.column_mut(k).copy_from(&w.column(j).unscale(norms[j]));
        }
    }
    let vt = Matrix::from_fn(cols, cols, |i, j| v[(j, order[i])].conjugate());
    Ok((u, s, vt))
}

/// One-sided Jacobi: returns `(W, V)` with `W = M V`, `V` unitary and the
/// columns of `W` mutually orthogonal. Requires `rows >= cols`.
fn jacobi_orthogonalize<T: Scalar>(mut w: Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (rows, cols) = w.shape();
    let mut v = Matrix::<T>::identity(cols, cols);
    let eps = f64::EPSILON;
    // columns this small are numerically zero and are left alone
    let negligible = (eps * frob_sq(&w).sqrt()).powi(2);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta, gamma) = {
                    let wp = w.column(p);
                    let wq = w.column(q);
                    (wp.norm_squared(), wq.norm_squared(), wp.dotc(&wq))
                };
                let g = gamma.modulus();
                if g == 0.0 || alpha <= negligible || beta <= negligible || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = gamma.unscale(g).conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s, ph, rows);
                rotate_columns(&mut v, p, q, c, s, ph, cols);
            }
        }
        if !rotated {
            return Ok((w, v));
        }
    }
    Err(Error::Numerical("Jacobi SVD did not converge".into()))
}

/// `[x_p, x_q] <- [c x_p - s ph x_q, s x_p + c ph x_q]`.
fn rotate_columns<T: Scalar>(m: &mut Matrix<T>, p: usize, q: usize, c: f64, s: f64, ph: T, len: usize) {
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * len);
    let xp = &mut head[p * len..(p + 1) * len];
    let xq = &mut tail[..len];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bq = *b * ph;
        let ap = *a;
        *a = ap.scale(c) - bq.scale(s);
        *b = ap.scale(s) + bq.scale(c);
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Result<Vec<f64>> {
    Ok(svd_sorted(m)?.1)
}

/// Best rank-`q` approximation of `m` together with the squared Frobenius
/// norm of the discarded tail, `sum_{i > q} sigma_i^2`.
pub fn truncated_svd<T: Scalar>(m: &Matrix<T>, q: usize) -> Result<(Matrix<T>, f64)> {
    let k = m.nrows().min(m.ncols());
    if q > k {
        return Err(Error::DimensionMismatch(format!("rank {q} exceeds min dimension {k}")));
    }
    let (u, s, vt) = svd_sorted(m)?;
    let tail_sq = s[q..].iter().map(|x| x * x).sum();
    let mut mq = Matrix::<T>::zeros(m.nrows(), m.ncols());
    for i in 0..q {
        let ui = u.column(i) * T::from_real(s[i]);
        mq.ger(T::one(), &ui, &vt.row(i).transpose(), T::one());
    }
    Ok((mq, tail_sq))
}

/// Moore-Penrose pseudoinverse with singular values at or below
/// `max(rows, cols) * eps * sigma_max` treated as zero.
pub fn pseudoinverse<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let (rows, cols) = m.shape();
    let (u, s, vt) = svd_sorted(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(rows, cols, smax);
    let rank = s.iter().take_while(|&&x| x > tol && x > 0.0).count();
    // V_r diag(1/s) U_r^*
    let mut vs = vt.rows(0, rank).adjoint();
    for (j, sj) in s.iter().take(rank).enumerate() {
        vs.column_mut(j).unscale_mut(*sj);
    }
    Ok(vs * u.columns(0, rank).adjoint())
}

/// Numerical rank under the pseudoinverse cutoff.
pub fn numerical_rank<T: Scalar>(m: &Matrix<T>) -> Result<usize> {
    let s = singular_values(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(m.nrows(), m.ncols(), smax);
    Ok(s.iter().take_while(|&&x| x > tol && x > 0.0).count())
}

/// The `n x n` orthonormal DCT-II matrix `C`, where `C x` is the DCT of `x`:
/// `C[k, j] = s_k cos(pi (2j + 1) k / (2n))` with `s_0 = sqrt(1/n)` and
/// `s_k = sqrt(2/n)` otherwise.
pub fn dct_orthonormal(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, j| {
        let s = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        s * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

/// Sum of squared moduli of the entries.
pub fn frob_sq<T: Scalar>(m: &Matrix<T>) -> f64 {
    m.iter().map(|x| x.modulus_squared()).sum()
}

/// `(M + M*) / 2`.
pub(crate) fn hermitian_part<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    (m + m.adjoint()).unscale(2.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Only the Hermitian part of the input is used.
pub fn hermitian_eigen<T: Scalar>(h: &Matrix<T>) -> Result<(Vec<f64>, Matrix<T>)> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", n, h.ncols())));
    }
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(hermitian_part(h), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigensolver failed to converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues<T: Scalar>(h: &Matrix<T>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let vals = SymmetricEigen::try_new(hermitian_part(h), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigensolver failed to converge".into()))?
        .eigenvalues;
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Inverse square root `S = H^{-1/2}` of a Hermitian positive-definite
/// matrix, so that `S = S*` and `S H S = I`.
pub fn psd_inv_sqrt<T: Scalar>(h: &Matrix<T>) -> Result<Matrix<T>> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = vals.len();
    let lmax = vals.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(n, n, lmax.abs());
    let lmin = vals.last().copied().unwrap_or(0.0);
    if n == 0 || lmin <= tol || lmax <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!("minimum eigenvalue {lmin:.3e}")));
    }
    let mut scaled = vecs.clone();
    for (j, l) in vals.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(l.sqrt());
    }
    Ok(hermitian_part(&(scaled * vecs.adjoint())))
}

/// Psd validation: `|H - H*|_F <= 1e-10 |H|_F` and every eigenvalue at
/// least `-1e-10 * lambda_max`. Returns the descending eigenvalues.
pub fn check_psd<T: Scalar>(h: &Matrix<T>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::NotPsd(format!("{}x{} is not square", n, h.ncols())));
    }
    let asym = frob_sq(&(h - h.adjoint())).sqrt();
    let norm = frob_sq(h).sqrt();
    if asym > 1e-10 * norm {
        return Err(Error::NotPsd(format!("asymmetry {asym:.3e} relative to norm {norm:.3e}")));
    }
    let vals = hermitian_eigenvalues(h)?;
    let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&lmin) = vals.last() {
        if lmin < -1e-10 * lmax {
            return Err(Error::NotPsd(format!("eigenvalue {lmin:.3e} below tolerance")));
        }
    }
    Ok(vals)
}

/// Orthonormal basis for the range of `y`. Uses QR when `y` has full column
/// rank and falls back to the left singular vectors above the
/// pseudoinverse cutoff otherwise.
pub fn orth_basis<T: Scalar>(y: &Matrix<T>) -> Result<Matrix<T>> {
    match thin_qr(y) {
        Ok((q, _)) => Ok(q),
        Err(Error::RankDeficient(_)) => {
            let (u, s, _) = svd_sorted(y)?;
            let smax = s.first().copied().unwrap_or(0.0);
            let tol = rank_tolerance(y.nrows(), y.ncols(), smax);
            let rank = s.iter().take_while(|&&x| x > tol && x > 0.0).count();
            Ok(u.columns(0, rank).into_owned())
        }
        Err(e) => Err(e),
    }
}

/// Column-pivoted QR range finder: an orthonormal basis `Q` (n x r) for
/// `range(A)` where `r` is the numerical rank revealed by the pivoted
/// factorization.
pub fn pivoted_range<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let (rows, cols) = a.shape();
    let mut work = a.clone();
    let mut reflectors = Vec::new();
    let mut norms: Vec<f64> = (0..cols).map(|c| work.column(c).norm_squared()).collect();
    let steps = rows.min(cols);
    let mut first = None;
    let mut rank = 0;
    for j in 0..steps {
        let (p, _) = norms[j..]
            .iter()
            .enumerate()
            .fold((j, -1.0), |acc, (i, &v)| if v > acc.1 { (j + i, v) } else { acc });
        if p != j {
            work.swap_columns(j, p);
            norms.swap(j, p);
        }
        // recompute the trailing norm exactly to avoid downdating drift
        let x: Vec<T> = work.column(j).rows_range(j..).iter().copied().collect();
        let exact = x.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt();
        let base = *first.get_or_insert(exact);
        if exact <= rank_tolerance(rows, cols, base) || exact == 0.0 {
            break;
        }
        let (h, _) = Reflector::annihilating(j, &x);
        h.apply_left(&mut work, j + 1..cols);
        for c in j + 1..cols {
            norms[c] = work.column(c).rows_range(j + 1..).norm_squared();
        }
        reflectors.push(h);
        rank += 1;
    }
    let mut q = Matrix::<T>::zeros(rows, rank);
    for j in 0..rank {
        q[(j, j)] = T::one();
    }
    for h in reflectors.iter().rev() {
        h.apply_left(&mut q, 0..rank);
    }
    Ok(q)
}

/// Orthonormal basis `Q_perp` (n x (n - r)) for the orthogonal complement of
/// the range of `q`, which must have orthonormal columns.
pub fn orthogonal_complement<T: Scalar>(q: &Matrix<T>) -> Matrix<T> {
    let (n, r) = q.shape();
    let mut work = Matrix::<T>::zeros(n, r + n);
    work.columns_mut(0, r).copy_from(q);
    work.columns_mut(r, n).fill_with_identity();
    let mut reflectors = Vec::with_capacity(n);
    for j in 0..n.min(r + n) {
        let x: Vec<T> = work.column(j).rows_range(j..).iter().copied().collect();
        let (h, _) = Reflector::annihilating(j, &x);
        h.apply_left(&mut work, j + 1..r + n);
        reflectors.push(h);
    }
    let mut full = Matrix::<T>::identity(n, n);
    for h in reflectors.iter().rev() {
        h.apply_left(&mut full, 0..n);
    }
    full.columns(r, n - r).into_owned()
}
