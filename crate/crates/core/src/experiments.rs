//! Seeded Monte Carlo engine.
//!
//! A grid is a task, an instance, a list of embedding kinds and a list of
//! sketch dimensions. Each `(embedding, ell)` cell runs `trials` independent
//! trials; trial `t` draws from stream `t` of the master seed (tagged by the
//! cell), so results do not depend on how rayon schedules the work.
//! Aggregation always runs in trial-index order.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{generalized_nystrom, nystrom_unchecked, randomized_svd, sketch_and_solve_with_optimum, sketched_solution};
use crate::dense::{check_psd, pseudoinverse};
use crate::embeddings::{sample_beta, sample_wishart, haar_block_check, EmbeddingKind, EmbeddingSampler, EmbeddingSpec};
use crate::error::{Error, Result};
use crate::field::{FieldTag, Matrix, Scalar};
use crate::instances::{
    make_lsq, make_psd, make_random_low_rank, make_rect_hard, make_two_eig, Basis, LeastSquaresInstance, LsqKind,
    PsdInstance, SpectrumKind,
};
use crate::rng::RngStream;
use crate::theory::{
    default_q_grid, gn_bound, gn_prefactor, inverse_beta_mean, inverse_wishart_mean, rsvd_bound_sharp,
    rsvd_lower_factor, ss_ratio_gaussian, ss_ratio_haar, two_eig_limit, BoundQuery, GammaKind, SpectrumTail,
};

/// The per-trial quantity being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// `residual / optimal residual - 1`.
    SketchSolve,
    /// `|A - Ahat|_F^2`.
    Rsvd,
    /// `tr(H - Hhat)`.
    Nystrom,
    /// `|A - Ahat|_F^2` with a two-sided sketch.
    GenNystrom,
    /// `tr(W^{-1}) / r`.
    WishartInv,
    /// `tr(X^{-1}) / r`.
    BetaInv,
    /// Sum of the real parts of `Xhat - A^+ B` (mean zero).
    Unbiasedness,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::SketchSolve => "sketch-solve",
            Task::Rsvd => "rsvd",
            Task::Nystrom => "nystrom",
            Task::GenNystrom => "gen-nystrom",
            Task::WishartInv => "wishart-inv",
            Task::BetaInv => "beta-inv",
            Task::Unbiasedness => "unbiasedness",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Problem a grid runs on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum InstanceSpec {
    Lsq { kind: LsqKind, n: usize, d: usize, p: usize },
    Psd { basis: Basis, spectrum: SpectrumKind, n: usize },
    TwoEig { a: f64, b: f64, q: usize, r: usize, n: usize },
    RectHard { a: f64, q: usize, r: usize, d: usize, n: usize },
    /// Product of Gaussian factors, drawn once from `seed`.
    RandomRect { d: usize, n: usize, rank: usize, seed: u64 },
    /// `W ~ Wishart(r, ell)`.
    Wishart { r: usize },
    /// `X ~ Beta(r, ell, n)`.
    Beta { r: usize, n: usize },
}

impl InstanceSpec {
    /// Short label used in result tables.
    pub fn label(&self) -> String {
        let coherence = |b: Basis| match b {
            Basis::Identity => "coherent",
            Basis::Dct => "incoherent",
            Basis::Random => "random",
        };
        match *self {
            InstanceSpec::Lsq { kind, .. } => kind.name().to_string(),
            InstanceSpec::Psd { basis, spectrum, .. } => format!("{}/{}", spectrum.name(), coherence(basis)),
            InstanceSpec::TwoEig { .. } => "two-eig".into(),
            InstanceSpec::RectHard { .. } => "rect-hard".into(),
            InstanceSpec::RandomRect { .. } => "random-rect".into(),
            InstanceSpec::Wishart { .. } => "wishart".into(),
            InstanceSpec::Beta { .. } => "beta".into(),
        }
    }

    /// Ambient dimension reported in tables.
    pub fn n(&self) -> usize {
        match *self {
            InstanceSpec::Lsq { n, .. }
            | InstanceSpec::Psd { n, .. }
            | InstanceSpec::TwoEig { n, .. }
            | InstanceSpec::RectHard { n, .. }
            | InstanceSpec::RandomRect { n, .. }
            | InstanceSpec::Beta { n, .. } => n,
            InstanceSpec::Wishart { r } => r,
        }
    }

    /// Column count, basis name, or rank, depending on the instance.
    pub fn d_or_basis(&self) -> String {
        match *self {
            InstanceSpec::Lsq { d, .. } | InstanceSpec::RectHard { d, .. } | InstanceSpec::RandomRect { d, .. } => {
                d.to_string()
            }
            InstanceSpec::Psd { basis, .. } => basis.name().to_string(),
            InstanceSpec::TwoEig { r, .. } | InstanceSpec::Wishart { r } | InstanceSpec::Beta { r, .. } => r.to_string(),
        }
    }

    /// Row count of the right embedding `Omega`, if it is constrained.
    fn sketch_rows(&self) -> Option<usize> {
        match *self {
            InstanceSpec::Wishart { .. } => None,
            other => Some(other.n()),
        }
    }

    fn alpha_rank(&self) -> Option<usize> {
        match *self {
            InstanceSpec::Wishart { r } | InstanceSpec::Beta { r, .. } => Some(r),
            _ => None,
        }
    }
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub task: Task,
    pub field: FieldTag,
    pub instance: InstanceSpec,
    pub embeddings: Vec<EmbeddingKind>,
    pub ell_grid: Vec<usize>,
    /// Left sketch dimension for generalized Nyström.
    pub k: Option<usize>,
    /// Left sketch distribution for generalized Nyström.
    pub psi: EmbeddingKind,
    /// Overrides the per-kind default sparsity.
    pub zeta: Option<usize>,
    pub trials: usize,
    pub master_seed: u64,
}

impl ExperimentGrid {
    pub fn new(task: Task, instance: InstanceSpec, embeddings: Vec<EmbeddingKind>, ell_grid: Vec<usize>) -> Self {
        Self {
            task,
            field: FieldTag::Real,
            instance,
            embeddings,
            ell_grid,
            k: None,
            psi: EmbeddingKind::Gaussian,
            zeta: None,
            trials: 1000,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell_grid.is_empty() || self.ell_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!("ell grid must be nonempty and strictly increasing: {:?}", self.ell_grid)));
        }
        if self.ell_grid[0] == 0 {
            return Err(Error::InvalidGrid("ell must be positive".into()));
        }
        if let Some(n) = self.instance.sketch_rows() {
            if let Some(&ell) = self.ell_grid.iter().find(|&&l| l > n) {
                return Err(Error::InvalidGrid(format!("ell = {ell} exceeds n = {n}")));
            }
        }
        if self.embeddings.is_empty() {
            return Err(Error::InvalidGrid("no embeddings".into()));
        }
        if self.trials < 2 {
            return Err(Error::InvalidGrid("need at least two trials for a standard error".into()));
        }
        let compatible = match (self.task, self.instance) {
            (Task::SketchSolve | Task::Unbiasedness, InstanceSpec::Lsq { .. }) => true,
            (Task::Rsvd, InstanceSpec::Psd { .. } | InstanceSpec::TwoEig { .. }) => true,
            (Task::Rsvd | Task::GenNystrom, InstanceSpec::RectHard { .. } | InstanceSpec::RandomRect { .. }) => true,
            (Task::Nystrom, InstanceSpec::Psd { .. } | InstanceSpec::TwoEig { .. }) => true,
            (Task::WishartInv, InstanceSpec::Wishart { .. }) => true,
            (Task::BetaInv, InstanceSpec::Beta { .. }) => true,
            _ => false,
        };
        if !compatible {
            return Err(Error::InvalidGrid(format!("task {} cannot run on a {} instance", self.task, self.instance.label())));
        }
        match self.task {
            Task::GenNystrom if self.k.is_none() => {
                return Err(Error::InvalidGrid("generalized Nyström needs k".into()));
            }
            Task::WishartInv if self.embeddings.iter().any(|&e| e != EmbeddingKind::Gaussian) => {
                return Err(Error::InvalidGrid("Wishart draws are Gaussian only".into()));
            }
            Task::BetaInv
                if self
                    .embeddings
                    .iter()
                    .any(|&e| !matches!(e, EmbeddingKind::Gaussian | EmbeddingKind::HaarOrthonormal)) =>
            {
                return Err(Error::InvalidGrid("Beta draws come from Gaussian pairs or Haar blocks".into()));
            }
            _ => {}
        }
        Ok(())
    }

    fn spec(&self, kind: EmbeddingKind, n: usize, ell: usize) -> EmbeddingSpec {
        let mut spec = EmbeddingSpec::new(kind, n, ell).with_field(self.field);
        if let Some(z) = self.zeta {
            spec = spec.with_zeta(z);
        }
        spec
    }
}

/// Aggregate of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub task: Task,
    pub instance: String,
    pub embedding: EmbeddingKind,
    pub field: FieldTag,
    pub n: usize,
    pub d_or_basis: String,
    pub ell: usize,
    pub k: Option<usize>,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub median: f64,
    pub theory: Option<f64>,
    pub z_score: Option<f64>,
    /// Optimal rank-`ell` error, for low-rank tasks.
    pub reference: Option<f64>,
    /// `ell - r - alpha <= 2`: the estimator has few finite moments.
    pub heavy_tail: bool,
    /// Set when the cell failed; the statistics are then NaN.
    pub error: Option<String>,
}

impl TrialSummary {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// `|mean - theory| <= rel * |theory| + n_se * stderr`.
    pub fn within(&self, rel: f64, n_se: f64) -> bool {
        match self.theory {
            Some(t) if !self.failed() => (self.mean - t).abs() <= rel * t.abs() + n_se * self.stderr,
            _ => false,
        }
    }
}

/// Mean, standard error and median of a sample, summed in index order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

impl SampleStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, median: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        Self { mean, stderr: (var / n as f64).sqrt(), median }
    }
}

/// `(mean - target)/stderr`, with differences at rounding level counted as
/// exact agreement.
pub fn z_score(mean: f64, target: f64, stderr: f64) -> f64 {
    let diff = mean - target;
    if diff.abs() <= 1e-10 * target.abs().max(1.0) {
        0.0
    } else if stderr > 0.0 {
        diff / stderr
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// The instance after construction, over a concrete field.
enum Prepared<T: Scalar> {
    Lsq { inst: LeastSquaresInstance<T>, xstar: Matrix<T> },
    Psd { inst: PsdInstance<T>, two_eig: Option<(f64, usize)> },
    Rect { a: Matrix<T>, spectrum: SpectrumTail, hard: Option<usize> },
    Moments,
}

fn prepare<T: Scalar>(spec: &InstanceSpec) -> Result<Prepared<T>> {
    Ok(match *spec {
        InstanceSpec::Lsq { kind, n, d, p } => {
            let inst = make_lsq::<T>(kind, n, d, p)?;
            let xstar = pseudoinverse(&inst.a)? * &inst.b;
            Prepared::Lsq { inst, xstar }
        }
        InstanceSpec::Psd { basis, spectrum, n } => {
            let inst = make_psd::<T>(basis, spectrum, n)?;
            check_psd(&inst.h)?;
            Prepared::Psd { inst, two_eig: None }
        }
        InstanceSpec::TwoEig { a, b, q, r, n } => {
            Prepared::Psd { inst: make_two_eig::<T>(a, b, q, r, n)?, two_eig: Some((b, q)) }
        }
        InstanceSpec::RectHard { a, q, r, d, n } => {
            let inst = make_rect_hard::<T>(a, q, r, d, n)?;
            Prepared::Rect { a: inst.a, spectrum: inst.spectrum, hard: Some(q) }
        }
        InstanceSpec::RandomRect { d, n, rank, seed } => {
            let (a, spectrum) = make_random_low_rank::<T, _>(d, n, rank, &mut RngStream::new(seed, 0).rng())?;
            Prepared::Rect { a, spectrum, hard: None }
        }
        InstanceSpec::Wishart { .. } | InstanceSpec::Beta { .. } => Prepared::Moments,
    })
}

fn cell_tag(kind: EmbeddingKind, ell: usize, k: Option<usize>) -> u64 {
    let idx = EmbeddingKind::ALL.iter().position(|&e| e == kind).unwrap_or(0) as u64;
    (idx << 48) | ((ell as u64) << 24) | k.unwrap_or(0) as u64
}

fn trial_stream(grid: &ExperimentGrid, t: usize, tag: u64) -> RngStream {
    RngStream::new(grid.master_seed, t as u64).substream(tag)
}

struct Cell<'a, T: Scalar> {
    grid: &'a ExperimentGrid,
    prepared: &'a Prepared<T>,
    kind: EmbeddingKind,
    ell: usize,
    omega: Option<EmbeddingSampler>,
    psi: Option<EmbeddingSampler>,
}

impl<T: Scalar> Cell<'_, T> {
    fn trial(&self, stream: RngStream) -> Result<f64> {
        let draw_omega = || self.omega.as_ref().expect("sampler").sample::<T, _>(&mut stream.substream(1).rng());
        match (self.grid.task, self.prepared) {
            (Task::SketchSolve, Prepared::Lsq { inst, .. }) => {
                let res = sketch_and_solve_with_optimum(&inst.a, &inst.b, &draw_omega()?, inst.optimal_residual_sq)?;
                Ok(res.epsilon())
            }
            (Task::Unbiasedness, Prepared::Lsq { inst, xstar }) => {
                let xhat = sketched_solution(&inst.a, &inst.b, &draw_omega()?)?;
                Ok((xhat - xstar).iter().map(|v| v.real()).sum())
            }
            (Task::Rsvd, Prepared::Psd { inst, .. }) => Ok(randomized_svd(&inst.h, &draw_omega()?)?.err_sq),
            (Task::Rsvd, Prepared::Rect { a, .. }) => Ok(randomized_svd(a, &draw_omega()?)?.err_sq),
            (Task::Nystrom, Prepared::Psd { inst, .. }) => Ok(nystrom_unchecked(&inst.h, &draw_omega()?)?.err_sq),
            (Task::GenNystrom, Prepared::Rect { a, .. }) => {
                let omega = draw_omega()?;
                let psi = self.psi.as_ref().expect("sampler").sample::<T, _>(&mut stream.substream(2).rng())?;
                Ok(generalized_nystrom(a, &omega, &psi)?.err_sq)
            }
            (Task::WishartInv, Prepared::Moments) => {
                let r = self.grid.instance.alpha_rank().expect("moment instance");
                let w = sample_wishart::<T, _>(r, self.ell, &mut stream.rng());
                Ok(inverse_trace(&w)? / r as f64)
            }
            (Task::BetaInv, Prepared::Moments) => {
                let InstanceSpec::Beta { r, n } = self.grid.instance else { unreachable!("validated") };
                let x = beta_draw::<T>(self.kind, r, self.ell, n, self.grid.field, stream)?;
                Ok(inverse_trace(&x)? / r as f64)
            }
            _ => unreachable!("task/instance pairs are validated"),
        }
    }

    fn theory(&self) -> (Option<f64>, Option<f64>) {
        let g = self.grid;
        let field = g.field;
        let ell = self.ell;
        let grid_q = default_q_grid(ell, field);
        match (g.task, self.prepared) {
            (Task::SketchSolve, Prepared::Lsq { inst, .. }) => {
                let query = BoundQuery { field, n: inst.a.nrows(), r: inst.r, ell, ..Default::default() };
                let ratio = if self.kind.is_orthonormal_class() { ss_ratio_haar(&query) } else { ss_ratio_gaussian(&query) };
                (ratio.ok().map(|v| v - 1.0), None)
            }
            (Task::Unbiasedness, _) => (Some(0.0), None),
            (Task::Rsvd, Prepared::Psd { inst, .. }) => {
                let tail = inst.singular_tail();
                (rsvd_bound_sharp(&grid_q, tail.rank(), ell, field, &tail).ok(), Some(tail.tail(ell)))
            }
            (Task::Rsvd, Prepared::Rect { spectrum, hard, .. }) => {
                let r = spectrum.rank();
                let theory = match hard {
                    Some(q) => rsvd_lower_factor(r, ell, *q, field).ok().map(|f| f * spectrum.tail(*q)),
                    None => rsvd_bound_sharp(&grid_q, r, ell, field, spectrum).ok(),
                };
                (theory, Some(spectrum.tail(ell)))
            }
            (Task::Nystrom, Prepared::Psd { inst, two_eig }) => {
                let theory = match two_eig {
                    Some((b, q)) => two_eig_limit(*b, *q, inst.r, ell, field).ok(),
                    None => rsvd_bound_sharp(&grid_q, inst.spectrum.rank(), ell, field, &inst.spectrum).ok(),
                };
                (theory, Some(inst.spectrum.tail(ell)))
            }
            (Task::GenNystrom, Prepared::Rect { a, spectrum, hard }) => {
                let gamma_kind = match g.psi {
                    EmbeddingKind::Gaussian => Some(GammaKind::Gaussian),
                    EmbeddingKind::HaarOrthonormal => Some(GammaKind::HaarOrthonormal),
                    _ => None,
                };
                let theory = gamma_kind.and_then(|gamma_kind| {
                    let query = BoundQuery {
                        field,
                        n: a.ncols(),
                        d: a.nrows(),
                        r: spectrum.rank(),
                        ell,
                        k: g.k.unwrap_or(0),
                        gamma_kind,
                        ..Default::default()
                    };
                    match hard {
                        Some(q) => {
                            let pre = gn_prefactor(&query).ok()?;
                            let low = rsvd_lower_factor(query.r, ell, *q, field).ok()?;
                            Some(pre * low * spectrum.tail(*q))
                        }
                        None => gn_bound(&query, spectrum).ok(),
                    }
                });
                (theory, Some(spectrum.tail(ell)))
            }
            (Task::WishartInv, _) => {
                (inverse_wishart_mean(g.instance.alpha_rank().unwrap_or(0), ell, field).ok(), None)
            }
            (Task::BetaInv, _) => {
                let InstanceSpec::Beta { r, n } = g.instance else { return (None, None) };
                (inverse_beta_mean(r, ell, n, field).ok(), None)
            }
            _ => (None, None),
        }
    }

    fn heavy_tail(&self) -> bool {
        let alpha = self.grid.field.alpha();
        let r = match (self.grid.task, self.prepared) {
            (Task::SketchSolve | Task::Unbiasedness, Prepared::Lsq { inst, .. }) => inst.r,
            (Task::WishartInv | Task::BetaInv, _) => self.grid.instance.alpha_rank().unwrap_or(0),
            _ => return false,
        };
        self.ell <= r + alpha + 2
    }
}

fn inverse_trace<T: Scalar>(m: &Matrix<T>) -> Result<f64> {
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Numerical("singular matrix in moment trial".into()))?;
    Ok(inv.trace().real())
}

/// One `Beta(r, ell, n)` draw: from two Wisharts for `Gaussian`, from the
/// top block `Omega_1 Omega_1*` of a Haar embedding otherwise.
fn beta_draw<T: Scalar>(
    kind: EmbeddingKind,
    r: usize,
    ell: usize,
    n: usize,
    field: FieldTag,
    stream: RngStream,
) -> Result<Matrix<T>> {
    let mut rng = stream.rng();
    match kind {
        EmbeddingKind::HaarOrthonormal => {
            let spec = EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, n, ell).with_field(field);
            let top = haar_block_check::<T, _>(&spec, r, &mut rng)?;
            Ok(crate::dense::hermitian_part(&(&top * top.adjoint())))
        }
        _ => sample_beta::<T, _>(r, ell, n, &mut rng),
    }
}

/// Run every `(embedding, ell)` cell of the grid. Cell failures are
/// recorded in [`TrialSummary::error`] without aborting the other cells.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<TrialSummary>> {
    grid.validate()?;
    match grid.field {
        FieldTag::Real => run_typed::<f64>(grid),
        FieldTag::Complex => run_typed::<Complex64>(grid),
    }
}

fn run_typed<T: Scalar>(grid: &ExperimentGrid) -> Result<Vec<TrialSummary>> {
    let prepared = prepare::<T>(&grid.instance)?;
    let mut out = Vec::with_capacity(grid.embeddings.len() * grid.ell_grid.len());
    for &kind in &grid.embeddings {
        for &ell in &grid.ell_grid {
            out.push(run_cell(grid, &prepared, kind, ell));
        }
    }
    Ok(out)
}

fn run_cell<T: Scalar>(grid: &ExperimentGrid, prepared: &Prepared<T>, kind: EmbeddingKind, ell: usize) -> TrialSummary {
    let mut summary = TrialSummary {
        task: grid.task,
        instance: grid.instance.label(),
        embedding: kind,
        field: grid.field,
        n: grid.instance.n(),
        d_or_basis: grid.instance.d_or_basis(),
        ell,
        k: grid.k,
        trials: grid.trials,
        mean: f64::NAN,
        stderr: f64::NAN,
        median: f64::NAN,
        theory: None,
        z_score: None,
        reference: None,
        heavy_tail: false,
        error: None,
    };
    let samplers = || -> Result<(Option<EmbeddingSampler>, Option<EmbeddingSampler>)> {
        let omega = match (grid.task, grid.instance.sketch_rows()) {
            (Task::WishartInv | Task::BetaInv, _) | (_, None) => None,
            (_, Some(n)) => Some(EmbeddingSampler::new(grid.spec(kind, n, ell))?),
        };
        let psi = match (grid.task, &grid.instance) {
            (Task::GenNystrom, InstanceSpec::RectHard { d, .. } | InstanceSpec::RandomRect { d, .. }) => {
                let k = grid.k.expect("validated");
                Some(EmbeddingSampler::new(grid.spec(grid.psi, *d, k))?)
            }
            _ => None,
        };
        Ok((omega, psi))
    };
    let (omega, psi) = match samplers() {
        Ok(s) => s,
        Err(e) => {
            summary.error = Some(e.to_string());
            return summary;
        }
    };
    let cell = Cell { grid, prepared, kind, ell, omega, psi };
    let (theory, reference) = cell.theory();
    summary.theory = theory;
    summary.reference = reference;
    summary.heavy_tail = cell.heavy_tail();

    let tag = cell_tag(kind, ell, grid.k);
    let results: Vec<Result<f64>> =
        (0..grid.trials).into_par_iter().map(|t| cell.trial(trial_stream(grid, t, tag))).collect();
    let mut values = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                summary.error = Some(format!("non-finite trial value {v}"));
                return summary;
            }
            Err(e) => {
                summary.error = Some(e.to_string());
                return summary;
            }
        }
    }
    let stats = SampleStats::of(&values);
    summary.mean = stats.mean;
    summary.stderr = stats.stderr;
    summary.median = stats.median;
    summary.z_score = summary.theory.map(|t| z_score(stats.mean, t, stats.stderr));
    summary
}

/// Entrywise Monte Carlo mean of a matrix-valued estimator against a
/// target, with real and imaginary parts scored separately.
#[derive(Debug, Clone)]
pub struct MatrixMoment<T: Scalar> {
    pub mean: Matrix<T>,
    pub target: Matrix<T>,
    /// Entrywise z-scores of the real parts, then the imaginary parts
    /// (complex field only), column-major.
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
    pub trials: usize,
}

impl<T: Scalar> MatrixMoment<T> {
    fn from_samples(samples: &[Matrix<T>], target: Matrix<T>) -> Self {
        let parts: Vec<(bool, fn(f64, f64) -> f64)> = match T::FIELD {
            FieldTag::Real => vec![(false, |re, _| re)],
            FieldTag::Complex => vec![(false, |re, _| re), (true, |_, im| im)],
        };
        let split = |v: T| {
            let c: Complex64 = Complex64::new(v.real(), v.imaginary());
            (c.re, c.im)
        };
        let mut z_scores = Vec::new();
        for (_, pick) in &parts {
            for idx in 0..target.len() {
                let values: Vec<f64> = samples.iter().map(|s| { let (re, im) = split(s[idx]); pick(re, im) }).collect();
                let stats = SampleStats::of(&values);
                let (tre, tim) = split(target[idx]);
                z_scores.push(z_score(stats.mean, pick(tre, tim), stats.stderr));
            }
        }
        let mut mean = Matrix::<T>::zeros(target.nrows(), target.ncols());
        for s in samples {
            mean += s;
        }
        mean.unscale_mut(samples.len() as f64);
        let max_abs_z = z_scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        Self { mean, target, z_scores, max_abs_z, trials: samples.len() }
    }
}

fn parallel_draws<T: Scalar>(
    trials: usize,
    seed: u64,
    tag: u64,
    draw: impl Fn(RngStream) -> Result<Matrix<T>> + Sync,
) -> Result<Vec<Matrix<T>>> {
    let results: Vec<Result<Matrix<T>>> =
        (0..trials).into_par_iter().map(|t| draw(RngStream::new(seed, t as u64).substream(tag))).collect();
    results.into_iter().collect()
}

/// Compare the entrywise mean of `Xhat` with `A^+ B`.
pub fn estimate_unbiasedness<T: Scalar>(
    instance: &LeastSquaresInstance<T>,
    spec: &EmbeddingSpec,
    trials: usize,
    seed: u64,
) -> Result<MatrixMoment<T>> {
    if !matches!(spec.kind, EmbeddingKind::Gaussian | EmbeddingKind::HaarOrthonormal) {
        return Err(Error::InvalidSpec(format!("unbiasedness holds for Gaussian and Haar embeddings, not {}", spec.kind)));
    }
    if spec.ell <= instance.r + spec.field.alpha() {
        return Err(Error::DimensionTooSmall(format!(
            "ell = {} must exceed r + alpha = {}",
            spec.ell,
            instance.r + spec.field.alpha()
        )));
    }
    if trials < 2 {
        return Err(Error::InvalidGrid("need at least two trials".into()));
    }
    let sampler = EmbeddingSampler::new(*spec)?;
    let xstar = pseudoinverse(&instance.a)? * &instance.b;
    let samples = parallel_draws(trials, seed, cell_tag(spec.kind, spec.ell, None), |s| {
        sketched_solution(&instance.a, &instance.b, &sampler.sample::<T, _>(&mut s.substream(1).rng())?)
    })?;
    Ok(MatrixMoment::from_samples(&samples, xstar))
}

/// Entrywise mean of `W^{-1}` for `W ~ Wishart(r, ell)` against
/// `I / (ell - r - alpha)`.
pub fn inverse_wishart_moment<T: Scalar>(r: usize, ell: usize, trials: usize, seed: u64) -> Result<MatrixMoment<T>> {
    let diag = inverse_wishart_mean(r, ell, T::FIELD)?;
    let samples = parallel_draws(trials, seed, 0, |s| {
        let w = sample_wishart::<T, _>(r, ell, &mut s.rng());
        w.try_inverse().ok_or_else(|| Error::Numerical("singular Wishart draw".into()))
    })?;
    Ok(MatrixMoment::from_samples(&samples, Matrix::<T>::identity(r, r).scale(diag)))
}

/// Entrywise mean of `X^{-1}` for `X ~ Beta(r, ell, n)` against
/// `(1 + (n - ell)/(ell - r - alpha)) I`. `source` selects two Wisharts
/// (`Gaussian`) or the top block of a Haar embedding.
pub fn inverse_beta_moment<T: Scalar>(
    source: EmbeddingKind,
    r: usize,
    ell: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MatrixMoment<T>> {
    let diag = inverse_beta_mean(r, ell, n, T::FIELD)?;
    let samples = parallel_draws(trials, seed, cell_tag(source, ell, None), |s| {
        let x = beta_draw::<T>(source, r, ell, n, T::FIELD, s)?;
        x.try_inverse().ok_or_else(|| Error::Numerical("singular Beta draw".into()))
    })?;
    Ok(MatrixMoment::from_samples(&samples, Matrix::<T>::identity(r, r).scale(diag)))
}

/// Which figure to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    /// Sketch-and-solve accuracy against the embedding dimension.
    Fig1,
    /// Randomized SVD error on the psd family.
    Fig2,
}

impl Figure {
    pub fn number(self) -> u8 {
        match self {
            Figure::Fig1 => 1,
            Figure::Fig2 => 2,
        }
    }
}

impl FromStr for Figure {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim_start_matches("fig") {
            "1" => Ok(Figure::Fig1),
            "2" => Ok(Figure::Fig2),
            other => Err(format!("unknown figure '{other}' (expected 1 or 2)")),
        }
    }
}

/// Problem size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// `n = 1000`, 1000 trials.
    Paper,
    /// `n = 300`, 300 trials.
    Desk,
}

impl FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(format!("unknown scale '{other}' (expected paper or desk)")),
        }
    }
}

impl Scale {
    pub fn n(self) -> usize {
        match self {
            Scale::Paper => 1000,
            Scale::Desk => 300,
        }
    }

    pub fn trials(self) -> usize {
        match self {
            Scale::Paper => 1000,
            Scale::Desk => 300,
        }
    }
}

/// Column count of the least-squares design.
pub const FIG1_D: usize = 10;

/// Sketch dimensions used for the sketch-and-solve figure. The desk grid
/// covers `d + 2 ..= n - 1` with emphasis on both ends; the `Paper` preset uses
/// 25 roughly log-spaced points over the same range.
pub fn fig1_ell_grid(scale: Scale) -> Vec<usize> {
    match scale {
        Scale::Desk => vec![12, 13, 15, 20, 30, 50, 75, 110, 140, 170, 200, 240, 280, 299],
        Scale::Paper => log_grid(FIG1_D + 2, scale.n() - 1, 25),
    }
}

/// Sketch dimensions used for the randomized SVD figure.
pub fn fig2_ell_grid(scale: Scale) -> Vec<usize> {
    match scale {
        Scale::Desk => vec![2, 5, 10, 15, 20, 30, 50, 75, 100],
        Scale::Paper => vec![2, 5, 10, 15, 20, 30, 50, 75, 100, 150, 200, 300],
    }
}

/// Roughly geometric grid from `lo` to `hi` inclusive, deduplicated.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let (l, h) = (lo as f64, hi as f64);
    let mut out: Vec<usize> = (0..points)
        .map(|i| (l * (h / l).powf(i as f64 / (points.max(2) - 1) as f64)).round() as usize)
        .collect();
    out.dedup();
    out
}

/// The sketch dimensions in the middle third of `{lo, ..., hi}`:
/// `lo + (hi - lo)/3 <= ell <= lo + 2 (hi - lo)/3`.
pub fn middle_third(grid: &[usize], lo: usize, hi: usize) -> Vec<usize> {
    let span = (hi - lo) as f64;
    let (a, b) = (lo as f64 + span / 3.0, lo as f64 + 2.0 * span / 3.0);
    grid.iter().copied().filter(|&l| l as f64 >= a && l as f64 <= b).collect()
}

/// Embeddings shown in the randomized SVD figure (Haar and Givens are
/// left out).
pub const FIG2_EMBEDDINGS: [EmbeddingKind; 6] = [
    EmbeddingKind::Gaussian,
    EmbeddingKind::Sign,
    EmbeddingKind::Uniform,
    EmbeddingKind::SparseIid,
    EmbeddingKind::SparseStack,
    EmbeddingKind::Srtt,
];

/// The grids that make up a figure, one per instance.
pub fn figure_grids(fig: Figure, scale: Scale, seed: u64, trials: Option<usize>) -> Vec<ExperimentGrid> {
    let n = scale.n();
    let trials = trials.unwrap_or(scale.trials());
    let with = |mut g: ExperimentGrid| {
        g.trials = trials;
        g.master_seed = seed;
        g
    };
    match fig {
        Figure::Fig1 => [LsqKind::Coherent, LsqKind::Incoherent]
            .into_iter()
            .map(|kind| {
                with(ExperimentGrid::new(
                    Task::SketchSolve,
                    InstanceSpec::Lsq { kind, n, d: FIG1_D, p: 1 },
                    EmbeddingKind::ALL.to_vec(),
                    fig1_ell_grid(scale),
                ))
            })
            .collect(),
        Figure::Fig2 => [SpectrumKind::Step, SpectrumKind::Poly]
            .into_iter()
            .flat_map(|spectrum| [Basis::Identity, Basis::Dct].into_iter().map(move |basis| (spectrum, basis)))
            .map(|(spectrum, basis)| {
                with(ExperimentGrid::new(
                    Task::Rsvd,
                    InstanceSpec::Psd { basis, spectrum, n },
                    FIG2_EMBEDDINGS.to_vec(),
                    fig2_ell_grid(scale),
                ))
            })
            .collect(),
    }
}

/// Agreement of one embedding's curve with the two predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub instance: String,
    pub embedding: EmbeddingKind,
    /// Mean absolute relative deviation from the Gaussian prediction over
    /// the comparison range. For randomized SVD the prediction is the
    /// empirical Gaussian curve on the same instance, so the Gaussian row
    /// itself reports 0.
    pub gaussian_deviation: f64,
    /// Same against the Haar prediction (sketch-and-solve only).
    pub haar_deviation: Option<f64>,
    /// The class whose prediction is closer.
    pub closer_to_haar: bool,
    /// Sketch-and-solve: every compared cell lies within `5% + 3 SE` of the
    /// prediction for the embedding's own class. Randomized SVD: every
    /// compared cell lies within `5% + 3 SE` (both standard errors) of the
    /// Gaussian cell, and Gaussian cells stay below the sharp bound.
    pub within_tolerance: bool,
    pub compared_ells: Vec<usize>,
}

/// Output of [`universality_report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub figure: Figure,
    pub rows: Vec<TrialSummary>,
    pub verdicts: Vec<ClassVerdict>,
}

/// Relative tolerance of the universality comparison.
pub const UNIVERSALITY_REL_TOL: f64 = 0.05;
/// Standard-error multiple of the universality comparison.
pub const UNIVERSALITY_SE: f64 = 3.0;

/// Run a full figure and classify each embedding's curve.
///
/// For the sketch-and-solve figure, the comparison range is the middle third
/// of `{d + 2, ..., n - 1}` and each curve is compared with both the
/// Gaussian and Haar formulas. For the randomized SVD figure, every `ell`
/// with `ell >= 20` is compared with the sharp bound; no class split exists.
pub fn universality_report(fig: Figure, scale: Scale, seed: u64, trials: Option<usize>) -> Result<UniversalityReport> {
    let mut rows = Vec::new();
    for grid in figure_grids(fig, scale, seed, trials) {
        rows.extend(run_grid(&grid)?);
    }
    let verdicts = classify(fig, scale, &rows);
    Ok(UniversalityReport { figure: fig, rows, verdicts })
}

/// Classification step of [`universality_report`], exposed for reuse on
/// stored rows.
pub fn classify(fig: Figure, scale: Scale, rows: &[TrialSummary]) -> Vec<ClassVerdict> {
    let compared: Vec<usize> = match fig {
        Figure::Fig1 => middle_third(&fig1_ell_grid(scale), FIG1_D + 2, scale.n() - 1),
        Figure::Fig2 => fig2_ell_grid(scale).into_iter().filter(|&l| l >= 20).collect(),
    };
    let mut instances: Vec<String> = rows.iter().map(|r| r.instance.clone()).collect();
    instances.dedup();
    let mut verdicts = Vec::new();
    for inst in instances {
        let mut kinds: Vec<EmbeddingKind> = rows.iter().filter(|r| r.instance == inst).map(|r| r.embedding).collect();
        kinds.dedup();
        for kind in kinds {
            let cells: Vec<&TrialSummary> = rows
                .iter()
                .filter(|r| r.instance == inst && r.embedding == kind && compared.contains(&r.ell))
                .collect();
            if cells.is_empty() {
                continue;
            }
            let dev = |pred: &dyn Fn(&TrialSummary) -> Option<f64>| -> f64 {
                let devs: Vec<f64> =
                    cells.iter().filter_map(|c| pred(c).map(|p| ((c.mean - p) / p).abs())).collect();
                if devs.is_empty() { f64::NAN } else { devs.iter().sum::<f64>() / devs.len() as f64 }
            };
            let (gaussian_deviation, haar_deviation, within_tolerance) = match fig {
                Figure::Fig1 => {
                    let ss = |haar: bool| {
                        move |c: &TrialSummary| {
                            let d: usize = c.d_or_basis.parse().ok()?;
                            let q = BoundQuery { field: c.field, n: c.n, r: d, ell: c.ell, ..Default::default() };
                            let v = if haar { ss_ratio_haar(&q) } else { ss_ratio_gaussian(&q) };
                            v.ok().map(|v| v - 1.0)
                        }
                    };
                    let within = cells.iter().all(|c| c.within(UNIVERSALITY_REL_TOL, UNIVERSALITY_SE));
                    (dev(&ss(false)), Some(dev(&ss(true))), within)
                }
                Figure::Fig2 => {
                    let gaussian_cell = |c: &TrialSummary| {
                        rows.iter().find(|g| {
                            g.instance == c.instance && g.embedding == EmbeddingKind::Gaussian && g.ell == c.ell
                        })
                    };
                    let within = cells.iter().all(|c| match gaussian_cell(c) {
                        Some(g) if kind == EmbeddingKind::Gaussian => {
                            g.theory.is_some_and(|t| g.mean <= t * (1.0 + UNIVERSALITY_REL_TOL) + UNIVERSALITY_SE * g.stderr)
                        }
                        Some(g) => {
                            let se = (c.stderr.powi(2) + g.stderr.powi(2)).sqrt();
                            (c.mean - g.mean).abs() <= UNIVERSALITY_REL_TOL * g.mean.abs() + UNIVERSALITY_SE * se
                        }
                        None => false,
                    });
                    (dev(&|c: &TrialSummary| gaussian_cell(c).map(|g| g.mean)), None, within)
                }
            };
            verdicts.push(ClassVerdict {
                instance: inst.clone(),
                embedding: kind,
                gaussian_deviation,
                haar_deviation,
                closer_to_haar: haar_deviation.is_some_and(|h| h < gaussian_deviation),
                within_tolerance,
                compared_ells: cells.iter().map(|c| c.ell).collect(),
            });
        }
    }
    verdicts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lsq_grid(kind: EmbeddingKind, ell: Vec<usize>, trials: usize) -> ExperimentGrid {
        let mut g = ExperimentGrid::new(
            Task::SketchSolve,
            InstanceSpec::Lsq { kind: LsqKind::Coherent, n: 200, d: 5, p: 1 },
            vec![kind],
            ell,
        );
        g.trials = trials;
        g.master_seed = 5;
        g
    }

    #[test]
    fn stats_basics() {
        let s = SampleStats::of(&[1.0, 2.0, 3.0, 10.0]);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        assert!((s.stderr - (50.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(SampleStats::of(&[7.0]).stderr, 0.0);
        assert_eq!(z_score(1.0, 1.0 + 1e-14, 0.0), 0.0);
        assert_eq!(z_score(2.0, 1.0, 0.0), f64::INFINITY);
        assert_eq!(z_score(2.0, 1.0, 0.5), 2.0);
    }

    #[test]
    fn gaussian_sketch_solve_matches_formula() {
        let rows = run_grid(&lsq_grid(EmbeddingKind::Gaussian, vec![20], 2000)).unwrap();
        let r = &rows[0];
        assert!((r.theory.unwrap() - 5.0 / 14.0).abs() < 1e-12);
        assert!(r.within(0.0, 3.0), "{r:?}");
        assert!(!r.heavy_tail);
    }

    #[test]
    fn full_haar_sketch_is_exact() {
        let rows = run_grid(&lsq_grid(EmbeddingKind::HaarOrthonormal, vec![200], 20)).unwrap();
        assert!(rows[0].mean.abs() < 1e-10 && rows[0].median.abs() < 1e-10);
        assert_eq!(rows[0].theory, Some(0.0));
        assert_eq!(rows[0].z_score, Some(0.0));
    }

    #[test]
    fn heavy_tail_flag_and_failed_cells() {
        let rows = run_grid(&lsq_grid(EmbeddingKind::Gaussian, vec![3, 8, 9], 10)).unwrap();
        // ell = 3 < r: the sketched problem is underdetermined, theory absent
        assert!(rows[0].theory.is_none());
        assert!(rows[1].heavy_tail && !rows[2].heavy_tail);

        let mut g = lsq_grid(EmbeddingKind::SparseIid, vec![10], 10);
        g.zeta = Some(0);
        let rows = run_grid(&g).unwrap();
        assert!(rows[0].failed() && rows[0].mean.is_nan());
    }

    #[test]
    fn grid_validation() {
        assert!(run_grid(&lsq_grid(EmbeddingKind::Gaussian, vec![20, 20], 10)).is_err());
        assert!(run_grid(&lsq_grid(EmbeddingKind::Gaussian, vec![201], 10)).is_err());
        assert!(run_grid(&lsq_grid(EmbeddingKind::Gaussian, vec![20], 1)).is_err());
        let mut g = lsq_grid(EmbeddingKind::Gaussian, vec![20], 10);
        g.task = Task::Nystrom;
        assert!(run_grid(&g).is_err());
        g.task = Task::GenNystrom;
        g.instance = InstanceSpec::RandomRect { d: 20, n: 30, rank: 20, seed: 1 };
        assert!(run_grid(&g).is_err());
    }

    #[test]
    fn bitwise_reproducible() {
        let g = lsq_grid(EmbeddingKind::Srtt, vec![10, 40], 50);
        let a = run_grid(&g).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| run_grid(&g).unwrap());
        assert_eq!(a, b);
        let mut other = g.clone();
        other.master_seed += 1;
        assert_ne!(a[0].mean, run_grid(&other).unwrap()[0].mean);
    }

    #[test]
    fn two_eig_nystrom_near_limit() {
        let mut g = ExperimentGrid::new(
            Task::Nystrom,
            InstanceSpec::TwoEig { a: 1e6, b: 1.0, q: 5, r: 50, n: 60 },
            vec![EmbeddingKind::Gaussian],
            vec![20],
        );
        g.trials = 500;
        let r = &run_grid(&g).unwrap()[0];
        assert!((r.theory.unwrap() - 30.0 * 19.0 / 14.0).abs() < 1e-12);
        assert!(r.within(0.02, 3.0), "{r:?}");
        assert_eq!(r.reference, Some(30.0));
    }

    #[test]
    fn moment_grids() {
        let mut g = ExperimentGrid::new(Task::WishartInv, InstanceSpec::Wishart { r: 3 }, vec![EmbeddingKind::Gaussian], vec![12]);
        g.trials = 2000;
        let r = &run_grid(&g).unwrap()[0];
        assert_eq!(r.theory, Some(0.125));
        assert!(r.within(0.0, 4.0), "{r:?}");

        let mut g = ExperimentGrid::new(
            Task::BetaInv,
            InstanceSpec::Beta { r: 3, n: 50 },
            vec![EmbeddingKind::Gaussian, EmbeddingKind::HaarOrthonormal],
            vec![10],
        );
        g.trials = 2000;
        for r in run_grid(&g).unwrap() {
            assert!((r.theory.unwrap() - 23.0 / 3.0).abs() < 1e-12);
            assert!(r.within(0.0, 4.0), "{r:?}");
        }
    }

    #[test]
    fn consistent_system_is_unbiased_exactly() {
        let mut inst = make_lsq::<f64>(LsqKind::Incoherent, 30, 3, 2).unwrap();
        inst.b = &inst.a * Matrix::<f64>::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let spec = EmbeddingSpec::new(EmbeddingKind::Gaussian, 30, 8);
        let m = estimate_unbiasedness(&inst, &spec, 50, 1).unwrap();
        assert_eq!(m.max_abs_z, 0.0);
        assert!(estimate_unbiasedness(&inst, &EmbeddingSpec::new(EmbeddingKind::Sign, 30, 8), 50, 1).is_err());
        assert!(estimate_unbiasedness(&inst, &EmbeddingSpec::new(EmbeddingKind::Gaussian, 30, 4), 50, 1).is_err());
    }

    #[test]
    fn grids_and_ranges() {
        assert_eq!(middle_third(&fig1_ell_grid(Scale::Desk), 12, 299), vec![110, 140, 170, 200]);
        let p = fig1_ell_grid(Scale::Paper);
        assert_eq!((p[0], *p.last().unwrap()), (12, 999));
        assert!(p.windows(2).all(|w| w[0] < w[1]) && p.len() >= 20);
        let grids = figure_grids(Figure::Fig2, Scale::Desk, 1, Some(10));
        assert_eq!(grids.len(), 4);
        assert!(grids.iter().all(|g| g.validate().is_ok() && g.embeddings.len() == 6));
        assert_eq!(figure_grids(Figure::Fig1, Scale::Paper, 1, None)[0].trials, 1000);
        assert_eq!("2".parse::<Figure>().unwrap(), Figure::Fig2);
    }

    #[test]
    fn complex_grid_runs() {
        let mut g = lsq_grid(EmbeddingKind::HaarOrthonormal, vec![20], 500);
        g.field = FieldTag::Complex;
        let r = &run_grid(&g).unwrap()[0];
        assert!((r.theory.unwrap() - (180.0 / 195.0) / 3.0).abs() < 1e-12);
        assert!(r.within(0.0, 4.0), "{r:?}");
    }
}
