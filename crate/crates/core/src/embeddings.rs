//! Random embeddings and the Wishart / Beta random matrices.
//!
//! An embedding is a tall `n x ell` matrix `Omega`; sketching a matrix `M`
//! means forming `Omega* M` (or `A Omega` from the right). Structured
//! embeddings keep a compact representation and apply themselves without
//! materializing `Omega`; [`Embedding::to_dense`] materializes on demand.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dct_orthonormal, hermitian_part, psd_inv_sqrt, Reflector};
use crate::error::{Error, Result};
use crate::field::{lift, FieldTag, Matrix, Scalar};
use crate::rng::RngStream;

/// Embedding distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    /// iid standard normal entries.
    Gaussian,
    /// Uniformly random matrix with orthonormal columns.
    HaarOrthonormal,
    /// iid uniform signs.
    Sign,
    /// iid uniform on `[-1, 1]`.
    Uniform,
    /// Sparse sign matrix with iid sparsity pattern.
    SparseIid,
    /// Sparse sign matrix built from stacked one-hot blocks.
    SparseStack,
    /// Subsampled randomized trigonometric transform (DCT, two rounds).
    Srtt,
    /// Random Givens rotations followed by coordinate subsampling.
    Givens,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 8] = [
        EmbeddingKind::Gaussian,
        EmbeddingKind::Sign,
        EmbeddingKind::Uniform,
        EmbeddingKind::SparseIid,
        EmbeddingKind::SparseStack,
        EmbeddingKind::HaarOrthonormal,
        EmbeddingKind::Srtt,
        EmbeddingKind::Givens,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmbeddingKind::Gaussian => "gaussian",
            EmbeddingKind::HaarOrthonormal => "haar",
            EmbeddingKind::Sign => "sign",
            EmbeddingKind::Uniform => "uniform",
            EmbeddingKind::SparseIid => "sparse-iid",
            EmbeddingKind::SparseStack => "sparse-stack",
            EmbeddingKind::Srtt => "srtt",
            EmbeddingKind::Givens => "givens",
        }
    }

    /// Whether the embedding belongs to the orthonormal-column class (as
    /// opposed to the iid-entry class).
    pub fn is_orthonormal_class(self) -> bool {
        matches!(self, EmbeddingKind::HaarOrthonormal | EmbeddingKind::Srtt | EmbeddingKind::Givens)
    }

    /// Kinds that are only defined over the reals.
    pub fn real_only(self) -> bool {
        !matches!(self, EmbeddingKind::Gaussian | EmbeddingKind::HaarOrthonormal)
    }

    /// Default sparsity for the sparse kinds (16 for iid, 8 for stacked).
    pub fn default_zeta(self) -> usize {
        match self {
            EmbeddingKind::SparseIid => 16,
            EmbeddingKind::SparseStack => 8,
            _ => 0,
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmbeddingKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        EmbeddingKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .or(match key.as_str() {
                "orthonormal" | "haar-orthonormal" => Some(EmbeddingKind::HaarOrthonormal),
                "sparseiid" => Some(EmbeddingKind::SparseIid),
                "sparsestack" => Some(EmbeddingKind::SparseStack),
                _ => None,
            })
            .ok_or_else(|| format!("unknown embedding '{s}'"))
    }
}

/// Distribution and shape of a random embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub kind: EmbeddingKind,
    /// Ambient dimension (rows of `Omega`).
    pub n: usize,
    /// Embedding dimension (columns of `Omega`).
    pub ell: usize,
    pub field: FieldTag,
    /// Nonzeros per row of `Omega` for the sparse kinds.
    pub zeta: usize,
    /// Number of Givens rotations.
    pub rotations: usize,
}

impl EmbeddingSpec {
    /// A real-field spec with the default sparsity and rotation count.
    pub fn new(kind: EmbeddingKind, n: usize, ell: usize) -> Self {
        Self {
            kind,
            n,
            ell,
            field: FieldTag::Real,
            zeta: kind.default_zeta(),
            rotations: default_rotations(n),
        }
    }

    pub fn with_field(mut self, field: FieldTag) -> Self {
        self.field = field;
        self
    }

    pub fn with_zeta(mut self, zeta: usize) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn with_rotations(mut self, rotations: usize) -> Self {
        self.rotations = rotations;
        self
    }

    pub fn with_ell(mut self, ell: usize) -> Self {
        self.ell = ell;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.ell == 0 {
            return Err(Error::InvalidSpec(format!("empty embedding {}x{}", self.n, self.ell)));
        }
        if self.ell > self.n {
            return Err(Error::InvalidSpec(format!("ell = {} exceeds n = {}", self.ell, self.n)));
        }
        if matches!(self.kind, EmbeddingKind::SparseIid | EmbeddingKind::SparseStack) && self.zeta == 0 {
            return Err(Error::InvalidSpec(format!("{} requires zeta >= 1", self.kind)));
        }
        if self.kind.real_only() && self.field != FieldTag::Real {
            return Err(Error::InvalidSpec(format!("{} embeddings are real-only", self.kind)));
        }
        Ok(())
    }
}

/// `ceil(4 n ln n)`, at least 1.
pub fn default_rotations(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let nf = n as f64;
    (4.0 * nf * nf.ln()).ceil() as usize
}

/// A sampled embedding in whichever representation is cheapest to apply.
#[derive(Debug, Clone)]
pub enum Embedding<T: Scalar> {
    Dense(Matrix<T>),
    /// `Omega = H_1 ... H_ell [I; 0] diag(phases)`.
    Haar {
        n: usize,
        reflectors: Vec<Reflector<T>>,
        phases: Vec<T>,
    },
    /// `Omega* = S C D2 C D1`, with `S` selecting `rows`.
    Srtt {
        d1: Vec<f64>,
        d2: Vec<f64>,
        rows: Vec<usize>,
        dct: Arc<DMatrix<f64>>,
    },
    /// `Omega = G_T ... G_1 [e_{cols[0]} ... e_{cols[ell-1]}]`.
    Givens {
        n: usize,
        rotations: Vec<Rotation>,
        cols: Vec<usize>,
    },
}

/// A plane rotation on coordinates `(i, j)`.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: f64,
}

impl<T: Scalar> Embedding<T> {
    pub fn nrows(&self) -> usize {
        match self {
            Embedding::Dense(m) => m.nrows(),
            Embedding::Haar { n, .. } | Embedding::Givens { n, .. } => *n,
            Embedding::Srtt { d1, .. } => d1.len(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Embedding::Dense(m) => m.ncols(),
            Embedding::Haar { phases, .. } => phases.len(),
            Embedding::Srtt { rows, .. } => rows.len(),
            Embedding::Givens { cols, .. } => cols.len(),
        }
    }

    /// `Omega* M`.
    pub fn adjoint_apply(&self, m: &Matrix<T>) -> Result<Matrix<T>> {
        if m.nrows() != self.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "embedding has {} rows, operand has {}",
                self.nrows(),
                m.nrows()
            )));
        }
        Ok(match self {
            Embedding::Dense(omega) => omega.ad_mul(m),
            Embedding::Haar { reflectors, phases, .. } => {
                let mut w = m.clone();
                let p = w.ncols();
                for h in reflectors {
                    h.apply_left(&mut w, 0..p);
                }
                let mut out = w.rows(0, phases.len()).into_owned();
                for (j, ph) in phases.iter().enumerate() {
                    let c = ph.conjugate();
                    out.row_mut(j).iter_mut().for_each(|x| *x *= c);
                }
                out
            }
            Embedding::Srtt { d1, d2, rows, dct } => {
                let c = lift::<T>(dct);
                let mut w = m.clone();
                scale_rows(&mut w, d1);
                let mut w = &c * w;
                scale_rows(&mut w, d2);
                let w = &c * w;
                w.select_rows(rows.iter())
            }
            Embedding::Givens { rotations, cols, .. } => {
                let mut w = m.clone();
                for g in rotations.iter().rev() {
                    rotate_rows(&mut w, g.i, g.j, g.c, -g.s);
                }
                w.select_rows(cols.iter())
            }
        })
    }

    /// `A Omega`.
    pub fn apply_right(&self, a: &Matrix<T>) -> Result<Matrix<T>> {
        match self {
            Embedding::Dense(omega) => Sketch::apply_right(omega, a),
            _ => Ok(self.adjoint_apply(&a.adjoint())?.adjoint()),
        }
    }

    /// Materialize `Omega`.
    pub fn to_dense(&self) -> Matrix<T> {
        match self {
            Embedding::Dense(m) => m.clone(),
            Embedding::Haar { n, reflectors, phases } => {
                let ell = phases.len();
                let mut e = Matrix::<T>::zeros(*n, ell);
                for (j, ph) in phases.iter().enumerate() {
                    e[(j, j)] = *ph;
                }
                for h in reflectors.iter().rev() {
                    h.apply_left(&mut e, 0..ell);
                }
                e
            }
            Embedding::Srtt { d1, d2, rows, dct } => {
                // Omega = D1 C^T D2 C^T S^T
                let c = lift::<T>(dct);
                let mut w = c.select_rows(rows.iter()).transpose();
                scale_rows(&mut w, d2);
                let mut w = c.tr_mul(&w);
                scale_rows(&mut w, d1);
                w
            }
            Embedding::Givens { n, rotations, cols } => {
                let mut e = Matrix::<T>::zeros(*n, cols.len());
                for (k, &c) in cols.iter().enumerate() {
                    e[(c, k)] = T::one();
                }
                for g in rotations {
                    rotate_rows(&mut e, g.i, g.j, g.c, g.s);
                }
                e
            }
        }
    }
}

/// Anything that can act as an embedding `Omega` in the algorithms.
pub trait Sketch<T: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `Omega* M`.
    fn adjoint_apply(&self, m: &Matrix<T>) -> Result<Matrix<T>>;
    /// `A Omega`.
    fn apply_right(&self, a: &Matrix<T>) -> Result<Matrix<T>>;
    /// `Omega` as a dense matrix.
    fn to_matrix(&self) -> Matrix<T>;
}

impl<T: Scalar> Sketch<T> for Matrix<T> {
    fn nrows(&self) -> usize {
        self.shape().0
    }

    fn ncols(&self) -> usize {
        self.shape().1
    }

    fn adjoint_apply(&self, m: &Matrix<T>) -> Result<Matrix<T>> {
        if m.nrows() != self.shape().0 {
            return Err(Error::DimensionMismatch(format!(
                "embedding has {} rows, operand has {}",
                self.shape().0,
                m.nrows()
            )));
        }
        Ok(self.ad_mul(m))
    }

    fn apply_right(&self, a: &Matrix<T>) -> Result<Matrix<T>> {
        if a.ncols() != self.shape().0 {
            return Err(Error::DimensionMismatch(format!(
                "operand has {} columns, embedding has {} rows",
                a.ncols(),
                self.shape().0
            )));
        }
        Ok(a * self)
    }

    fn to_matrix(&self) -> Matrix<T> {
        self.clone()
    }
}

impl<T: Scalar> Sketch<T> for Embedding<T> {
    fn nrows(&self) -> usize {
        Embedding::nrows(self)
    }

    fn ncols(&self) -> usize {
        Embedding::ncols(self)
    }

    fn adjoint_apply(&self, m: &Matrix<T>) -> Result<Matrix<T>> {
        Embedding::adjoint_apply(self, m)
    }

    fn apply_right(&self, a: &Matrix<T>) -> Result<Matrix<T>> {
        Embedding::apply_right(self, a)
    }

    fn to_matrix(&self) -> Matrix<T> {
        self.to_dense()
    }
}

fn scale_rows<T: Scalar>(m: &mut Matrix<T>, d: &[f64]) {
    for (i, &s) in d.iter().enumerate() {
        m.row_mut(i).iter_mut().for_each(|x| *x = x.scale(s));
    }
}

/// Rows `(i, j)` <- `[c -s; s c] [row_i; row_j]`.
fn rotate_rows<T: Scalar>(m: &mut Matrix<T>, i: usize, j: usize, c: f64, s: f64) {
    let nrows = m.nrows();
    let data = m.as_mut_slice();
    for col in data.chunks_exact_mut(nrows) {
        let xi = col[i];
        let xj = col[j];
        col[i] = xi.scale(c) - xj.scale(s);
        col[j] = xi.scale(s) + xj.scale(c);
    }
}

/// Validated spec plus any precomputed state (the DCT matrix for SRTT).
#[derive(Debug, Clone)]
pub struct EmbeddingSampler {
    spec: EmbeddingSpec,
    dct: Option<Arc<DMatrix<f64>>>,
}

impl EmbeddingSampler {
    pub fn new(spec: EmbeddingSpec) -> Result<Self> {
        spec.validate()?;
        let dct = (spec.kind == EmbeddingKind::Srtt).then(|| Arc::new(dct_orthonormal(spec.n)));
        Ok(Self { spec, dct })
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    /// Same sampler with a different embedding dimension; reuses the DCT.
    pub fn with_ell(&self, ell: usize) -> Result<Self> {
        let spec = self.spec.with_ell(ell);
        spec.validate()?;
        Ok(Self { spec, dct: self.dct.clone() })
    }

    pub fn sample<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Embedding<T>> {
        let EmbeddingSpec { kind, n, ell, zeta, rotations, field } = self.spec;
        if field != T::FIELD {
            return Err(Error::InvalidSpec(format!(
                "spec requests the {field} field, sampler invoked over {}",
                T::FIELD
            )));
        }
        Ok(match kind {
            EmbeddingKind::Gaussian => Embedding::Dense(gaussian_matrix(n, ell, rng)),
            EmbeddingKind::Sign => Embedding::Dense(Matrix::from_fn(n, ell, |_, _| {
                T::from_real(if rng.random::<bool>() { 1.0 } else { -1.0 })
            })),
            EmbeddingKind::Uniform => {
                Embedding::Dense(Matrix::from_fn(n, ell, |_, _| T::from_real(rng.random_range(-1.0..=1.0))))
            }
            EmbeddingKind::SparseIid => {
                let p = (zeta as f64 / ell as f64).min(1.0);
                let v = 1.0 / (zeta.min(ell) as f64).sqrt();
                let mut m = Matrix::<T>::zeros(n, ell);
                for i in 0..n {
                    for j in 0..ell {
                        if rng.random::<f64>() < p {
                            m[(i, j)] = T::from_real(if rng.random::<bool>() { v } else { -v });
                        }
                    }
                }
                Embedding::Dense(m)
            }
            EmbeddingKind::SparseStack => {
                let blocks = zeta.min(ell);
                let v = 1.0 / (blocks as f64).sqrt();
                let mut m = Matrix::<T>::zeros(n, ell);
                for i in 0..n {
                    for b in 0..blocks {
                        let lo = b * ell / blocks;
                        let hi = (b + 1) * ell / blocks;
                        let j = rng.random_range(lo..hi);
                        m[(i, j)] = T::from_real(if rng.random::<bool>() { v } else { -v });
                    }
                }
                Embedding::Dense(m)
            }
            EmbeddingKind::HaarOrthonormal => {
                // Householder QR of a Gaussian matrix, drawing each column
                // directly in the coordinates left by the previous reflectors.
                let mut reflectors = Vec::with_capacity(ell);
                let mut phases = Vec::with_capacity(ell);
                for j in 0..ell {
                    let x: Vec<T> = (j..n).map(|_| T::sample_normal(rng)).collect();
                    let (h, beta) = Reflector::annihilating(j, &x);
                    phases.push(beta.phase());
                    reflectors.push(h);
                }
                Embedding::Haar { n, reflectors, phases }
            }
            EmbeddingKind::Srtt => {
                let sign = |rng: &mut R| if rng.random::<bool>() { 1.0 } else { -1.0 };
                let d1 = (0..n).map(|_| sign(rng)).collect();
                let d2 = (0..n).map(|_| sign(rng)).collect();
                let rows = index::sample(rng, n, ell).into_vec();
                let dct = self.dct.clone().expect("SRTT sampler carries a DCT");
                Embedding::Srtt { d1, d2, rows, dct }
            }
            EmbeddingKind::Givens => {
                let mut rots = Vec::with_capacity(if n >= 2 { rotations } else { 0 });
                if n >= 2 {
                    for _ in 0..rotations {
                        let i = rng.random_range(0..n);
                        let mut j = rng.random_range(0..n - 1);
                        if j >= i {
                            j += 1;
                        }
                        let theta = rng.random_range(0.0..std::f64::consts::TAU);
                        rots.push(Rotation { i, j, c: theta.cos(), s: theta.sin() });
                    }
                }
                let cols = index::sample(rng, n, ell).into_vec();
                Embedding::Givens { n, rotations: rots, cols }
            }
        })
    }
}

fn gaussian_matrix<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::sample_normal(rng))
}

/// Draw a materialized `n x ell` embedding from `spec` using the stream.
pub fn sample_embedding<T: Scalar>(spec: &EmbeddingSpec, stream: RngStream) -> Result<Matrix<T>> {
    let sampler = EmbeddingSampler::new(*spec)?;
    Ok(sampler.sample::<T, _>(&mut stream.rng())?.to_dense())
}

/// `W = G G*` with `G` an `r x ell` standard Gaussian matrix.
pub fn sample_wishart<T: Scalar, R: Rng + ?Sized>(r: usize, ell: usize, rng: &mut R) -> Matrix<T> {
    let g = gaussian_matrix::<T, R>(r, ell, rng);
    hermitian_part(&(&g * g.adjoint()))
}

/// `X = (W1 + W2)^{-1/2} W1 (W1 + W2)^{-1/2}` for independent
/// `W1 ~ Wishart(r, ell)` and `W2 ~ Wishart(r, n - ell)`.
pub fn sample_beta<T: Scalar, R: Rng + ?Sized>(r: usize, ell: usize, n: usize, rng: &mut R) -> Result<Matrix<T>> {
    if r > n || ell > n {
        return Err(Error::DimensionMismatch(format!("Beta({r}, {ell}, {n}) needs r, ell <= n")));
    }
    let w1 = sample_wishart::<T, R>(r, ell, rng);
    let w2 = sample_wishart::<T, R>(r, n - ell, rng);
    let s = psd_inv_sqrt(&(&w1 + &w2))?;
    Ok(hermitian_part(&(&s * w1 * &s)))
}

/// First `r` rows of a sampled Haar embedding; `Omega_1 Omega_1*` is
/// distributed as `Beta(r, ell, n)`.
pub fn haar_block_check<T: Scalar, R: Rng + ?Sized>(spec: &EmbeddingSpec, r: usize, rng: &mut R) -> Result<Matrix<T>> {
    if spec.kind != EmbeddingKind::HaarOrthonormal {
        return Err(Error::InvalidSpec(format!("top-block check needs a Haar embedding, got {}", spec.kind)));
    }
    if r > spec.n {
        return Err(Error::InvalidSpec(format!("block of {r} rows from an embedding with {} rows", spec.n)));
    }
    let emb = EmbeddingSampler::new(*spec)?.sample::<T, R>(rng)?;
    let mut e = Matrix::<T>::zeros(spec.n, r);
    e.fill_diagonal(T::one());
    Ok(emb.adjoint_apply(&e)?.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{frob_sq, hermitian_eigenvalues};
    use num_complex::Complex64;

    fn orthonormality_defect<T: Scalar>(m: &Matrix<T>) -> f64 {
        let k = m.ncols();
        frob_sq(&(m.adjoint() * m - Matrix::<T>::identity(k, k))).sqrt()
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!("sparse_stack".parse::<EmbeddingKind>().unwrap(), EmbeddingKind::SparseStack);
        assert_eq!("Haar".parse::<EmbeddingKind>().unwrap(), EmbeddingKind::HaarOrthonormal);
        assert!("fourier".parse::<EmbeddingKind>().is_err());
        assert!(EmbeddingSpec::new(EmbeddingKind::Gaussian, 3, 4).validate().is_err());
        assert!(EmbeddingSpec::new(EmbeddingKind::Sign, 4, 2).with_field(FieldTag::Complex).validate().is_err());
        assert!(EmbeddingSpec::new(EmbeddingKind::SparseIid, 4, 2).with_zeta(0).validate().is_err());
        assert!(EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, 4, 2).with_field(FieldTag::Complex).validate().is_ok());
        assert_eq!(default_rotations(300), 6845);
    }

    #[test]
    fn field_mismatch_is_rejected() {
        let spec = EmbeddingSpec::new(EmbeddingKind::Gaussian, 4, 2);
        assert!(matches!(sample_embedding::<Complex64>(&spec, RngStream::new(1, 0)), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn square_haar_is_unitary() {
        for seed in 0..5 {
            let spec = EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, 3, 3);
            let q = sample_embedding::<f64>(&spec, RngStream::new(seed, 0)).unwrap();
            assert!(orthonormality_defect(&q) < 1e-12);
            assert!(frob_sq(&(&q * q.transpose() - Matrix::<f64>::identity(3, 3))).sqrt() < 1e-12);
            let qc = sample_embedding::<Complex64>(&spec.with_field(FieldTag::Complex), RngStream::new(seed, 0)).unwrap();
            assert!(orthonormality_defect(&qc) < 1e-12);
        }
    }

    #[test]
    fn orthonormal_kinds_have_orthonormal_columns() {
        for kind in [EmbeddingKind::HaarOrthonormal, EmbeddingKind::Srtt, EmbeddingKind::Givens] {
            for (n, ell) in [(1, 1), (7, 3), (40, 40), (64, 9)] {
                let spec = EmbeddingSpec::new(kind, n, ell);
                let m = sample_embedding::<f64>(&spec, RngStream::new(5, n as u64)).unwrap();
                assert_eq!(m.shape(), (n, ell));
                assert!(orthonormality_defect(&m) <= 1e-10, "{kind} {n}x{ell}");
            }
        }
    }

    #[test]
    fn structured_apply_matches_dense() {
        let mut rng = RngStream::new(99, 0).rng();
        let m: Matrix<f64> = gaussian_matrix(30, 4, &mut rng);
        let a: Matrix<f64> = gaussian_matrix(5, 30, &mut rng);
        for kind in EmbeddingKind::ALL {
            let sampler = EmbeddingSampler::new(EmbeddingSpec::new(kind, 30, 12)).unwrap();
            let emb = sampler.sample::<f64, _>(&mut rng).unwrap();
            let dense = emb.to_dense();
            let left = emb.adjoint_apply(&m).unwrap();
            assert!(frob_sq(&(left - dense.transpose() * &m)).sqrt() < 1e-11, "{kind}");
            let right = emb.apply_right(&a).unwrap();
            assert!(frob_sq(&(right - &a * &dense)).sqrt() < 1e-11, "{kind}");
        }
        let sampler = EmbeddingSampler::new(
            EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, 10, 4).with_field(FieldTag::Complex),
        )
        .unwrap();
        let emb = sampler.sample::<Complex64, _>(&mut rng).unwrap();
        let mc: Matrix<Complex64> = gaussian_matrix(10, 3, &mut rng);
        let dense = emb.to_dense();
        assert!(frob_sq(&(emb.adjoint_apply(&mc).unwrap() - dense.adjoint() * &mc)).sqrt() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        for kind in EmbeddingKind::ALL {
            let spec = EmbeddingSpec::new(kind, 25, 6);
            let a = sample_embedding::<f64>(&spec, RngStream::new(3, 17)).unwrap();
            let b = sample_embedding::<f64>(&spec, RngStream::new(3, 17)).unwrap();
            let c = sample_embedding::<f64>(&spec, RngStream::new(3, 18)).unwrap();
            assert_eq!(a, b, "{kind}");
            assert_ne!(a, c, "{kind}");
        }
    }

    #[test]
    fn sparse_stack_row_counts_are_exact() {
        let spec = EmbeddingSpec::new(EmbeddingKind::SparseStack, 100, 10).with_zeta(8);
        let m = sample_embedding::<f64>(&spec, RngStream::new(8, 0)).unwrap();
        for i in 0..100 {
            assert_eq!(m.row(i).iter().filter(|x| **x != 0.0).count(), 8);
        }
        // blocks of size 1 or 2
        let spec = EmbeddingSpec::new(EmbeddingKind::SparseStack, 50, 20).with_zeta(8);
        let m = sample_embedding::<f64>(&spec, RngStream::new(9, 0)).unwrap();
        for i in 0..50 {
            assert_eq!(m.row(i).iter().filter(|x| **x != 0.0).count(), 8);
            for b in 0..8 {
                let (lo, hi) = (b * 20 / 8, (b + 1) * 20 / 8);
                assert!(hi - lo == 2 || hi - lo == 3);
                assert_eq!((lo..hi).filter(|&j| m[(i, j)] != 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn sparse_iid_counts_are_binomial() {
        // nonzeros per row ~ Binomial(ell, zeta / ell)
        let (n, ell, zeta) = (10_000, 64, 16);
        let spec = EmbeddingSpec::new(EmbeddingKind::SparseIid, n, ell).with_zeta(zeta);
        let m = sample_embedding::<f64>(&spec, RngStream::new(10, 0)).unwrap();
        let counts: Vec<f64> = (0..n).map(|i| m.row(i).iter().filter(|x| **x != 0.0).count() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let p = zeta as f64 / ell as f64;
        let se = (ell as f64 * p * (1.0 - p) / n as f64).sqrt();
        assert!((mean - zeta as f64).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn beta_degenerate_split_is_identity() {
        let mut rng = RngStream::new(4, 0).rng();
        let x = sample_beta::<f64, _>(3, 7, 7, &mut rng).unwrap();
        assert!(frob_sq(&(x - Matrix::<f64>::identity(3, 3))).sqrt() < 1e-10);
    }

    #[test]
    fn beta_samples_are_contractions() {
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..200 {
            let x = sample_beta::<f64, _>(2, 6, 12, &mut rng).unwrap();
            for l in hermitian_eigenvalues(&x).unwrap() {
                assert!((-1e-12..=1.0 + 1e-12).contains(&l));
            }
        }
    }

    #[test]
    fn wishart_scalar_case() {
        let mut a = RngStream::new(6, 0).rng();
        let mut b = RngStream::new(6, 0).rng();
        let w = sample_wishart::<f64, _>(1, 1, &mut a);
        let g = f64::sample_normal(&mut b);
        assert_eq!(w[(0, 0)], g * g);
    }

    #[test]
    fn haar_block_of_full_height_is_a_projection() {
        let spec = EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, 6, 4);
        let mut rng = RngStream::new(7, 0).rng();
        let o1 = haar_block_check::<f64, _>(&spec, 6, &mut rng).unwrap();
        let mut ev = hermitian_eigenvalues(&(&o1 * o1.transpose())).unwrap();
        ev.iter_mut().for_each(|x| *x = (*x * 1e9).round() / 1e9);
        assert_eq!(ev, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let bad = EmbeddingSpec::new(EmbeddingKind::Gaussian, 6, 4);
        assert!(haar_block_check::<f64, _>(&bad, 2, &mut rng).is_err());
    }
}
