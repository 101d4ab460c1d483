//! Test problems: the least-squares pair, the psd step/poly family, and the
//! two-level hard instances.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::optimal_residual_sq;
use crate::dense::{dct_orthonormal, hermitian_part, numerical_rank, singular_values};
use crate::embeddings::{EmbeddingKind, EmbeddingSampler, EmbeddingSpec};
use crate::error::{Error, Result};
use crate::field::{lift, Matrix, Scalar};
use crate::theory::SpectrumTail;

/// Coherent (`A = [I 0]*`) or incoherent (first DCT columns) design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LsqKind {
    Coherent,
    Incoherent,
}

impl LsqKind {
    pub fn name(self) -> &'static str {
        match self {
            LsqKind::Coherent => "coherent",
            LsqKind::Incoherent => "incoherent",
        }
    }
}

/// Eigenvector basis of a psd instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Identity,
    Dct,
    /// Conjugated by a Haar-random unitary.
    Random,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Identity => "identity",
            Basis::Dct => "dct",
            Basis::Random => "random",
        }
    }
}

/// Eigenvalue profile of a psd instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    /// Ten unit eigenvalues followed by `1e-5`.
    Step,
    /// `lambda_i = i^{-2}`.
    Poly,
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::Step => "step",
            SpectrumKind::Poly => "poly",
        }
    }

    /// The first `n` eigenvalues, descending.
    pub fn eigenvalues(self, n: usize) -> Result<Vec<f64>> {
        match self {
            SpectrumKind::Step => {
                if n < 10 {
                    return Err(Error::DimensionMismatch(format!("step spectrum needs n >= 10, got {n}")));
                }
                Ok((0..n).map(|i| if i < 10 { 1.0 } else { 1e-5 }).collect())
            }
            SpectrumKind::Poly => Ok((1..=n).map(|i| 1.0 / (i as f64 * i as f64)).collect()),
        }
    }
}

macro_rules! impl_names {
    ($ty:ty, $($variant:expr),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                let key = s.to_ascii_lowercase();
                [$($variant),+]
                    .into_iter()
                    .find(|v: &$ty| v.name() == key)
                    .ok_or_else(|| format!("unknown value '{s}'"))
            }
        }
    };
}

impl_names!(LsqKind, LsqKind::Coherent, LsqKind::Incoherent);
impl_names!(Basis, Basis::Identity, Basis::Dct, Basis::Random);
impl_names!(SpectrumKind, SpectrumKind::Step, SpectrumKind::Poly);

/// `min |B - A X|_F^2` with known rank and optimal residual.
#[derive(Debug, Clone)]
pub struct LeastSquaresInstance<T: Scalar> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub r: usize,
    pub optimal_residual_sq: f64,
}

/// A psd matrix `H = Q diag(lambda) Q*` with known spectrum.
#[derive(Debug, Clone)]
pub struct PsdInstance<T: Scalar> {
    pub h: Matrix<T>,
    /// Eigenvalues of `H`, descending.
    pub spectrum: SpectrumTail,
    pub r: usize,
    pub basis: Basis,
}

impl<T: Scalar> PsdInstance<T> {
    /// Squared singular values of `H` (squared eigenvalues), for
    /// Frobenius-norm low-rank bounds on `H` itself.
    pub fn singular_tail(&self) -> SpectrumTail {
        SpectrumTail::new(self.spectrum.values().iter().map(|l| l * l).collect())
            .expect("squares of a nonincreasing nonnegative sequence")
    }
}

/// A `d x n` matrix with singular values `a` (`q` times), `1` (`r - q`
/// times) and zero otherwise.
#[derive(Debug, Clone)]
pub struct RectInstance<T: Scalar> {
    pub a: Matrix<T>,
    pub scale: f64,
    pub q: usize,
    pub r: usize,
    /// Squared singular values, descending.
    pub spectrum: SpectrumTail,
}

/// Least-squares instance with `B = sum_i i e_i` (1-based) in every column.
pub fn make_lsq<T: Scalar>(kind: LsqKind, n: usize, d: usize, p: usize) -> Result<LeastSquaresInstance<T>> {
    if d == 0 || d > n || p == 0 {
        return Err(Error::DimensionMismatch(format!("need 1 <= d <= n and p >= 1, got n = {n}, d = {d}, p = {p}")));
    }
    let a_real = match kind {
        LsqKind::Coherent => DMatrix::<f64>::identity(n, d),
        LsqKind::Incoherent => dct_orthonormal(n).columns(0, d).into_owned(),
    };
    let a = lift::<T>(&a_real);
    let b = Matrix::<T>::from_fn(n, p, |i, _| T::from_real((i + 1) as f64));
    let r = numerical_rank(&a)?;
    let optimal_residual_sq = optimal_residual_sq(&a, &b)?;
    Ok(LeastSquaresInstance { a, b, r, optimal_residual_sq })
}

fn diagonal<T: Scalar>(values: &[f64]) -> Matrix<T> {
    Matrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| T::from_real(v))))
}

/// `H = Q Lambda Q*` with `Q = I` or the orthonormal DCT.
pub fn make_psd<T: Scalar>(basis: Basis, spectrum: SpectrumKind, n: usize) -> Result<PsdInstance<T>> {
    if n == 0 {
        return Err(Error::DimensionMismatch("empty psd instance".into()));
    }
    let lambda = spectrum.eigenvalues(n)?;
    let h = match basis {
        Basis::Identity => diagonal::<T>(&lambda),
        Basis::Dct => {
            let c = dct_orthonormal(n);
            let mut scaled = c.clone();
            for (j, l) in lambda.iter().enumerate() {
                scaled.column_mut(j).scale_mut(*l);
            }
            lift::<T>(&hermitian_part(&(scaled * c.transpose())))
        }
        Basis::Random => {
            return Err(Error::InvalidArgument("use randomize_basis for a random basis".into()));
        }
    };
    let r = lambda.iter().filter(|l| **l > 0.0).count();
    Ok(PsdInstance { h, spectrum: SpectrumTail::new(lambda)?, r, basis })
}

/// `H = diag(a I_q, b I_{r-q}, 0_{n-r})`.
pub fn make_two_eig<T: Scalar>(a: f64, b: f64, q: usize, r: usize, n: usize) -> Result<PsdInstance<T>> {
    if !(b > 0.0 && b <= a) || q > r || r > n {
        return Err(Error::ParameterOrderViolation(format!(
            "need 0 < b <= a and q <= r <= n, got a = {a}, b = {b}, q = {q}, r = {r}, n = {n}"
        )));
    }
    let lambda: Vec<f64> = (0..n).map(|i| if i < q { a } else if i < r { b } else { 0.0 }).collect();
    Ok(PsdInstance { h: diagonal::<T>(&lambda), spectrum: SpectrumTail::new(lambda)?, r, basis: Basis::Identity })
}

/// The `d x n` matrix `diag(a I_q, I_{r-q}, 0)`.
pub fn make_rect_hard<T: Scalar>(a: f64, q: usize, r: usize, d: usize, n: usize) -> Result<RectInstance<T>> {
    if !(a > 0.0) || q > r || r > d.min(n) {
        return Err(Error::ParameterOrderViolation(format!(
            "need a > 0 and q <= r <= min(d, n), got a = {a}, q = {q}, r = {r}, d = {d}, n = {n}"
        )));
    }
    let mut m = Matrix::<T>::zeros(d, n);
    for i in 0..r {
        m[(i, i)] = T::from_real(if i < q { a } else { 1.0 });
    }
    let sigma: Vec<f64> = (0..d.min(n)).map(|i| if i < q { a } else if i < r { 1.0 } else { 0.0 }).collect();
    Ok(RectInstance { a: m, scale: a, q, r, spectrum: SpectrumTail::from_singular_values(&sigma)? })
}

/// A `d x n` Gaussian-product matrix of the given rank, with its squared
/// singular values computed numerically.
pub fn make_random_low_rank<T: Scalar, R: Rng + ?Sized>(
    d: usize,
    n: usize,
    rank: usize,
    rng: &mut R,
) -> Result<(Matrix<T>, SpectrumTail)> {
    if rank > d.min(n) {
        return Err(Error::ParameterOrderViolation(format!("rank {rank} exceeds min({d}, {n})")));
    }
    let left = Matrix::<T>::from_fn(d, rank, |_, _| T::sample_normal(rng));
    let right = Matrix::<T>::from_fn(rank, n, |_, _| T::sample_normal(rng));
    let a = left * right;
    let mut sigma = singular_values(&a)?;
    sigma.iter_mut().skip(rank).for_each(|s| *s = 0.0);
    Ok((a, SpectrumTail::from_singular_values(&sigma)?))
}

fn haar_unitary<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Matrix<T>> {
    let spec = EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, n, n).with_field(T::FIELD);
    Ok(EmbeddingSampler::new(spec)?.sample::<T, R>(rng)?.to_dense())
}

/// Rotation of an instance by independent Haar unitaries; the spectrum is
/// unchanged.
pub trait RandomizeBasis: Sized {
    fn randomize_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self>;
}

impl<T: Scalar> RandomizeBasis for PsdInstance<T> {
    /// `U H U*`.
    fn randomize_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self> {
        let u = haar_unitary::<T, R>(self.h.nrows(), rng)?;
        let h = hermitian_part(&(&u * &self.h * u.adjoint()));
        Ok(PsdInstance { h, spectrum: self.spectrum.clone(), r: self.r, basis: Basis::Random })
    }
}

impl<T: Scalar> RandomizeBasis for RectInstance<T> {
    /// `U A V*`.
    fn randomize_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self> {
        let u = haar_unitary::<T, R>(self.a.nrows(), rng)?;
        let v = haar_unitary::<T, R>(self.a.ncols(), rng)?;
        Ok(RectInstance { a: u * &self.a * v.adjoint(), ..self.clone() })
    }
}
