//! Scalar fields. Every kernel is generic over [`Scalar`], which is
//! implemented for `f64` (the real field) and `Complex<f64>` (the complex
//! field, stored as interleaved `(re, im)` pairs).

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Real or complex scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Real,
    Complex,
}

impl FieldTag {
    /// The offset `alpha` that appears in every denominator of the sharp
    /// formulas: 1 over the reals, 0 over the complex numbers.
    pub const fn alpha(self) -> usize {
        match self {
            FieldTag::Real => 1,
            FieldTag::Complex => 0,
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldTag::Real => "real",
            FieldTag::Complex => "complex",
        })
    }
}

impl FromStr for FieldTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(FieldTag::Real),
            "complex" | "c" => Ok(FieldTag::Complex),
            other => Err(format!("unknown field '{other}' (expected real or complex)")),
        }
    }
}

/// Dense column-major matrix over a [`Scalar`] field.
pub type Matrix<T> = DMatrix<T>;

/// A scalar field usable by every kernel in the crate.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const FIELD: FieldTag;

    /// One draw from the standard normal distribution over the field. The
    /// complex draw is `(g1 + i g2) / sqrt(2)`.
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unit-modulus phase of `self`; 1 at zero.
    fn phase(self) -> Self {
        let m = self.modulus();
        if m == 0.0 {
            Self::one()
        } else {
            self.unscale(m)
        }
    }
}

impl Scalar for f64 {
    const FIELD: FieldTag = FieldTag::Real;

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const FIELD: FieldTag = FieldTag::Complex;

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Lift a real matrix into the field `T`.
pub fn lift<T: Scalar>(m: &DMatrix<f64>) -> Matrix<T> {
    m.map(T::from_real)
}
