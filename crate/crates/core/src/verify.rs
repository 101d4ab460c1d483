//! Verification battery. Each check reproduces one numbered acceptance
//! criterion with its tolerance fixed below; suites group the checks for the
//! command line.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use crate::algorithms::{nystrom, randomized_svd, residual_decomposition, schur_complement, sketch_and_solve};
use crate::dense::{frob_sq, hermitian_eigenvalues, hermitian_part, pseudoinverse};
use crate::embeddings::{EmbeddingKind, EmbeddingSampler, EmbeddingSpec};
use crate::error::Result;
use crate::experiments::{
    estimate_unbiasedness, figure_grids, inverse_beta_moment, inverse_wishart_moment, run_grid, universality_report,
    ExperimentGrid, Figure, InstanceSpec, MatrixMoment, Scale, Task, TrialSummary,
};
use crate::field::{FieldTag, Matrix, Scalar};
use crate::instances::{make_lsq, make_psd, Basis, LsqKind, SpectrumKind};
use crate::output::csv_string;
use crate::rng::RngStream;
use crate::theory::{
    budget_for_epsilon, default_q_grid, plan_split, rsvd_bound_hmt, BudgetMethod, PlanObjective,
};

/// Relative slack allowed on top of `3 SE` for the sketch-and-solve and
/// two-eigenvalue means.
pub const MEAN_REL_TOL: f64 = 0.02;
/// Standard-error multiple for mean gates.
pub const SE_MULT: f64 = 3.0;
/// Entrywise `|z|` bound for the unbiasedness check.
pub const UNBIASED_MAX_Z: f64 = 4.0;
/// Entrywise `|z|` bound for the inverse Wishart and Beta checks.
pub const MOMENT_MAX_Z: f64 = 3.0;
/// Relative tolerance of the residual decomposition and the Gram trace
/// identity.
pub const IDENTITY_REL_TOL: f64 = 1e-8;
/// Entrywise tolerance of the Gram correspondence.
pub const GRAM_ENTRY_TOL: f64 = 1e-8;
/// Smallest admissible eigenvalue (or inequality) slack.
pub const SLACK_TOL: f64 = -1e-9;
/// Extra relative slack for the generalized Nyström lower prediction.
pub const GN_LOWER_REL_TOL: f64 = 0.03;

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
}

impl Check {
    /// Within the runtime target, if any.
    pub fn on_time(&self) -> bool {
        self.time_limit.is_none_or(|t| self.elapsed <= t)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let limit = self.time_limit.map(|t| format!(", limit {}s", t.as_secs())).unwrap_or_default();
        write!(
            f,
            "[{status}] {:>2} {}: {} ({:.1}s{limit})",
            self.criterion,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Named group of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    SketchSolve,
    Wishart,
    Beta,
    Algebraic,
    Nystrom,
    Bounds,
    Planner,
    Universality,
    Determinism,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 10] = [
        "sketch-solve",
        "wishart",
        "beta",
        "algebraic",
        "nystrom",
        "bounds",
        "planner",
        "universality",
        "determinism",
        "all",
    ];

    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::SketchSolve => vec![1, 2, 3, 4],
            Suite::Wishart => vec![6],
            Suite::Beta => vec![7],
            Suite::Algebraic => vec![5, 8, 9, 10],
            Suite::Nystrom => vec![11],
            Suite::Bounds => vec![12, 13],
            Suite::Planner => vec![14],
            Suite::Universality => vec![15],
            Suite::Determinism => vec![16],
            Suite::All => (1..=16).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let all = [
            Suite::SketchSolve,
            Suite::Wishart,
            Suite::Beta,
            Suite::Algebraic,
            Suite::Nystrom,
            Suite::Bounds,
            Suite::Planner,
            Suite::Universality,
            Suite::Determinism,
            Suite::All,
        ];
        Suite::NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| all[i])
            .ok_or_else(|| format!("unknown suite '{s}' (expected one of {})", Suite::NAMES.join(", ")))
    }
}

/// Seed and optional trial-count override shared by every check.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Replaces the default trial count of every Monte Carlo check.
    pub trials: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 7, trials: None }
    }
}

impl VerifyOptions {
    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

/// Run every check of a suite in criterion order.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    suite.criteria().into_iter().map(|c| run_criterion(c, opts)).collect()
}

/// Run a single numbered check. Internal errors count as failures.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Check {
    let start = Instant::now();
    let (name, limit, outcome): (&'static str, Option<u64>, Result<(bool, String)>) = match id {
        1 => ("sketch-solve gaussian (real)", Some(20), sketch_solve_mean(opts, FieldTag::Real, &[EmbeddingKind::Gaussian])),
        2 => ("sketch-solve haar (real)", Some(30), sketch_solve_mean(opts, FieldTag::Real, &[EmbeddingKind::HaarOrthonormal])),
        3 => (
            "sketch-solve gaussian and haar (complex)",
            Some(60),
            sketch_solve_mean(opts, FieldTag::Complex, &[EmbeddingKind::Gaussian, EmbeddingKind::HaarOrthonormal]),
        ),
        4 => ("sketched solution is unbiased", None, unbiasedness(opts)),
        5 => ("residual decomposition identity", None, decomposition_identity(opts)),
        6 => ("inverse wishart mean", None, inverse_wishart(opts)),
        7 => ("inverse beta mean", None, inverse_beta(opts)),
        8 => ("weighting never helps", None, weighting(opts)),
        9 => ("gram correspondence", None, gram(opts)),
        10 => ("schur complement properties", None, schur(opts)),
        11 => ("two-eigenvalue nystrom limit", Some(60), two_eig(opts)),
        12 => ("rsvd sharp bound validity", None, rsvd_bound_check(opts)),
        13 => ("generalized nystrom bounds", None, gn_check(opts)),
        14 => ("budget planner", None, planner()),
        15 => ("sketch-solve universality (desk)", None, universality(opts)),
        16 => ("deterministic csv", None, determinism(opts)),
        other => ("unknown criterion", None, Ok((false, format!("no check numbered {other}")))),
    };
    let elapsed = start.elapsed();
    let time_limit = limit.map(Duration::from_secs);
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let mut check = Check { criterion: id, name, passed, detail, elapsed, time_limit };
    if !check.on_time() {
        check.passed = false;
        check.detail.push_str("; over the runtime target");
    }
    check
}

fn mean_gate(row: &TrialSummary, shift: f64) -> Result<(bool, String)> {
    let Some(theory) = row.theory else {
        return Ok((false, format!("{} {}: no theory value ({:?})", row.embedding, row.field, row.error)));
    };
    let (mean, target) = (row.mean + shift, theory + shift);
    let tol = (SE_MULT * row.stderr).max(MEAN_REL_TOL * target.abs());
    let ok = !row.failed() && (mean - target).abs() <= tol;
    Ok((ok, format!("{} {}: {:.5} vs {:.5} (tol {:.5}, se {:.5})", row.embedding, row.field, mean, target, tol, row.stderr)))
}

fn combine(parts: Vec<(bool, String)>) -> (bool, String) {
    let ok = parts.iter().all(|p| p.0);
    (ok, parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

/// Criteria 1-3: mean residual ratio at `n = 200, d = r = 5, ell = 20`.
fn sketch_solve_mean(opts: &VerifyOptions, field: FieldTag, kinds: &[EmbeddingKind]) -> Result<(bool, String)> {
    let mut grid = ExperimentGrid::new(
        Task::SketchSolve,
        InstanceSpec::Lsq { kind: LsqKind::Coherent, n: 200, d: 5, p: 1 },
        kinds.to_vec(),
        vec![20],
    );
    grid.field = field;
    grid.trials = opts.trials(5000);
    grid.master_seed = opts.seed;
    let parts = run_grid(&grid)?.iter().map(|r| mean_gate(r, 1.0)).collect::<Result<Vec<_>>>()?;
    Ok(combine(parts))
}

/// Criterion 4.
fn unbiasedness(opts: &VerifyOptions) -> Result<(bool, String)> {
    let inst = make_lsq::<f64>(LsqKind::Incoherent, 50, 3, 2)?;
    let mut parts = Vec::new();
    for kind in [EmbeddingKind::Gaussian, EmbeddingKind::HaarOrthonormal] {
        let m = estimate_unbiasedness(&inst, &EmbeddingSpec::new(kind, 50, 10), opts.trials(5000), opts.seed)?;
        parts.push((m.max_abs_z < UNBIASED_MAX_Z, format!("{kind}: max |z| {:.3}", m.max_abs_z)));
    }
    Ok(combine(parts))
}

fn gaussian<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::sample_normal(rng))
}

/// `n x d` matrix of exact rank `r`: columns past `r` repeat earlier ones
/// scaled by integers.
fn exact_rank(n: usize, d: usize, r: usize, rng: &mut impl Rng) -> Matrix<f64> {
    let base = gaussian::<f64, _>(n, r, rng);
    Matrix::from_fn(n, d, |i, j| base[(i, j % r)] * (1 + j / r) as f64)
}

/// Criterion 5: 500 instances, every third one rank-deficient.
fn decomposition_identity(opts: &VerifyOptions) -> Result<(bool, String)> {
    let kinds = [EmbeddingKind::Gaussian, EmbeddingKind::HaarOrthonormal, EmbeddingKind::Sign, EmbeddingKind::Srtt];
    let (mut failures, mut worst, mut deficient) = (0, 0.0f64, 0);
    for t in 0..500u64 {
        let mut rng = RngStream::new(opts.seed, t).substream(5).rng();
        let n = rng.random_range(10..=40);
        let d = rng.random_range(1..=6usize);
        let p = rng.random_range(1..=3);
        let r = if t % 3 == 0 && d > 1 { rng.random_range(1..d) } else { d };
        deficient += usize::from(r < d);
        let a = if r < d { exact_rank(n, d, r, &mut rng) } else { gaussian::<f64, _>(n, d, &mut rng) };
        let b = gaussian::<f64, _>(n, p, &mut rng);
        let ell = rng.random_range(r..=n);
        let kind = kinds[t as usize % kinds.len()];
        let omega = EmbeddingSampler::new(EmbeddingSpec::new(kind, n, ell))?.sample::<f64, _>(&mut rng)?;
        let res = sketch_and_solve(&a, &b, &omega)?;
        let (cross, opt) = residual_decomposition(&a, &b, &omega)?;
        let rel = ((cross + opt) - res.residual_sq).abs() / res.residual_sq;
        worst = worst.max(rel);
        failures += usize::from(!(rel <= IDENTITY_REL_TOL));
    }
    Ok((failures == 0, format!("500 instances ({deficient} rank-deficient), {failures} failures, worst relative gap {worst:.2e}")))
}

fn moment_gate<T: Scalar>(label: &str, m: &MatrixMoment<T>) -> (bool, String) {
    let diag = m.target[(0, 0)].real();
    (m.max_abs_z <= MOMENT_MAX_Z, format!("{label}: target {diag:.5} I, max |z| {:.3} over {} trials", m.max_abs_z, m.trials))
}

/// Criterion 6.
fn inverse_wishart(opts: &VerifyOptions) -> Result<(bool, String)> {
    let trials = opts.trials(10_000);
    let real = inverse_wishart_moment::<f64>(3, 12, trials, opts.seed)?;
    let complex = inverse_wishart_moment::<Complex64>(3, 12, trials, opts.seed)?;
    Ok(combine(vec![moment_gate("real", &real), moment_gate("complex", &complex)]))
}

/// Criterion 7.
fn inverse_beta(opts: &VerifyOptions) -> Result<(bool, String)> {
    let trials = opts.trials(10_000);
    let direct = inverse_beta_moment::<f64>(EmbeddingKind::Gaussian, 3, 10, 50, trials, opts.seed)?;
    let haar = inverse_beta_moment::<f64>(EmbeddingKind::HaarOrthonormal, 3, 10, 50, trials, opts.seed)?;
    Ok(combine(vec![moment_gate("wishart pair", &direct), moment_gate("haar top block", &haar)]))
}

/// `|(R* M)^+ R*|^2 - |M^+|^2` after rescaling `M` so that `|M^+|_F = 1`.
/// Both sides scale as `1/c^2` under `M -> c M`, so the rescaling keeps the
/// inequality and makes an absolute slack meaningful.
fn weighting_slack<T: Scalar>(m: &Matrix<T>, r: &Matrix<T>) -> Result<f64> {
    let m = m.scale(frob_sq(&pseudoinverse(m)?).sqrt());
    let lhs = frob_sq(&pseudoinverse(&m)?);
    let rm = r.adjoint() * &m;
    Ok(frob_sq(&(pseudoinverse(&rm)? * r.adjoint())) - lhs)
}

/// Criterion 8: `|M^+|^2 <= |(R* M)^+ R*|^2`, alternating fields. `M` is
/// `ell x r` Gaussian with `1 <= r <= ell` (the square case is an equality),
/// `R` is `ell x ell` Gaussian.
fn weighting(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for t in 0..1000u64 {
        let mut rng = RngStream::new(opts.seed, t).substream(8).rng();
        let ell = rng.random_range(2..=12usize);
        let r = rng.random_range(1..=ell);
        let slack = if t % 2 == 0 {
            weighting_slack(&gaussian::<f64, _>(ell, r, &mut rng), &gaussian::<f64, _>(ell, ell, &mut rng))?
        } else {
            weighting_slack(&gaussian::<Complex64, _>(ell, r, &mut rng), &gaussian::<Complex64, _>(ell, ell, &mut rng))?
        };
        worst = worst.min(slack);
    }
    Ok((worst >= SLACK_TOL, format!("1000 pairs normalized to |M^+|_F = 1, smallest slack {worst:.3e}")))
}

fn max_abs<T: Scalar>(m: &Matrix<T>) -> f64 {
    m.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// Criterion 9.
fn gram(opts: &VerifyOptions) -> Result<(bool, String)> {
    let (mut entry, mut trace) = (0.0f64, 0.0f64);
    for t in 0..200u64 {
        let mut rng = RngStream::new(opts.seed, t).substream(9).rng();
        let d = rng.random_range(2..=12usize);
        let n = rng.random_range(4..=16usize);
        // keep ell below rank(A) so the error is a genuine positive quantity
        let ell = rng.random_range(1..d.min(n));
        let a = gaussian::<f64, _>(d, n, &mut rng);
        let omega = gaussian::<f64, _>(n, ell, &mut rng);
        let h = a.transpose() * &a;
        let ny = nystrom(&h, &omega)?;
        let rs = randomized_svd(&a, &omega)?;
        let ahat = rs.approximation();
        entry = entry.max(max_abs(&(ny.approximation() - ahat.transpose() * &ahat)));
        trace = trace.max((ny.err_sq - rs.err_sq).abs() / rs.err_sq);
    }
    let ok = entry <= GRAM_ENTRY_TOL && trace <= IDENTITY_REL_TOL;
    Ok((ok, format!("200 pairs, max entry gap {entry:.2e}, max relative trace gap {trace:.2e}")))
}

fn min_eig(m: &Matrix<f64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(&hermitian_part(m))?.last().copied().unwrap_or(0.0))
}

/// Criterion 10: psd, invariance, concavity and monotonicity of `H / Omega`.
fn schur(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = [f64::INFINITY; 4];
    for t in 0..200u64 {
        let mut rng = RngStream::new(opts.seed, t).substream(10).rng();
        let n = rng.random_range(4..=12usize);
        let ell = rng.random_range(1..n);
        let g1 = gaussian::<f64, _>(n, rng.random_range(1..=n), &mut rng);
        let g2 = gaussian::<f64, _>(n, rng.random_range(1..=n), &mut rng);
        let (h1, h2) = (hermitian_part(&(&g1 * g1.transpose())), hermitian_part(&(&g2 * g2.transpose())));
        let omega = gaussian::<f64, _>(n, ell, &mut rng);
        let m = gaussian::<f64, _>(ell, ell, &mut rng);
        let theta: f64 = rng.random_range(0.05..0.95);
        let s1 = schur_complement(&h1, &omega)?;
        let s2 = schur_complement(&h2, &omega)?;
        worst[0] = worst[0].min(min_eig(&s1)?);
        let diff = schur_complement(&h1, &(&omega * &m))? - &s1;
        worst[1] = worst[1].min(min_eig(&diff)?).min(min_eig(&(-diff))?);
        let mix = &h1 * theta + &h2 * (1.0 - theta);
        worst[2] = worst[2].min(min_eig(&(schur_complement(&mix, &omega)? - &s1 * theta - &s2 * (1.0 - theta)))?);
        worst[3] = worst[3].min(min_eig(&(schur_complement(&(&h1 + &h2), &omega)? - &s1))?);
    }
    let ok = worst.iter().all(|w| *w >= SLACK_TOL);
    Ok((
        ok,
        format!(
            "200 triples, smallest eigenvalue slack: psd {:.2e}, invariance {:.2e}, concavity {:.2e}, monotonicity {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

/// Criterion 11.
fn two_eig(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut grid = ExperimentGrid::new(
        Task::Nystrom,
        InstanceSpec::TwoEig { a: 1e6, b: 1.0, q: 5, r: 50, n: 60 },
        vec![EmbeddingKind::Gaussian],
        vec![20],
    );
    grid.trials = opts.trials(5000);
    grid.master_seed = opts.seed;
    mean_gate(&run_grid(&grid)?[0], 0.0)
}

/// Criterion 12.
fn rsvd_bound_check(opts: &VerifyOptions) -> Result<(bool, String)> {
    let n = 100;
    let mut grid = ExperimentGrid::new(
        Task::Rsvd,
        InstanceSpec::Psd { basis: Basis::Identity, spectrum: SpectrumKind::Step, n },
        vec![EmbeddingKind::Gaussian],
        vec![15, 20, 30, 50],
    );
    grid.trials = opts.trials(1000);
    grid.master_seed = opts.seed;
    let tail = make_psd::<f64>(Basis::Identity, SpectrumKind::Step, n)?.singular_tail();
    let mut parts = Vec::new();
    for row in run_grid(&grid)? {
        let sharp = row.theory.unwrap_or(f64::NAN);
        let hmt = rsvd_bound_hmt(&default_q_grid(row.ell, FieldTag::Real), row.ell, FieldTag::Real, &tail)?;
        let ok = !row.failed() && row.mean <= sharp + SE_MULT * row.stderr && sharp <= hmt;
        parts.push((ok, format!("l={}: mean {:.4e} (se {:.1e}) sharp {:.4e} hmt {:.4e}", row.ell, row.mean, row.stderr, sharp, hmt)));
    }
    Ok(combine(parts))
}

/// Criterion 13: upper bound on a random full-rank instance (Gaussian
/// `Psi`), lower prediction on the two-level hard instance (Haar `Psi`).
fn gn_check(opts: &VerifyOptions) -> Result<(bool, String)> {
    let trials = opts.trials(2000);
    let mut upper = ExperimentGrid::new(
        Task::GenNystrom,
        InstanceSpec::RandomRect { d: 60, n: 80, rank: 60, seed: opts.seed },
        vec![EmbeddingKind::Gaussian],
        vec![10],
    );
    upper.k = Some(25);
    upper.trials = trials;
    upper.master_seed = opts.seed;
    let row = &run_grid(&upper)?[0];
    let bound = row.theory.unwrap_or(f64::NAN);
    let up_ok = !row.failed() && row.mean <= bound + SE_MULT * row.stderr;
    let up = format!("gaussian psi: mean {:.4} (se {:.3}) <= bound {:.4}", row.mean, row.stderr, bound);

    let mut lower = ExperimentGrid::new(
        Task::GenNystrom,
        InstanceSpec::RectHard { a: 1e6, q: 5, r: 50, d: 60, n: 80 },
        vec![EmbeddingKind::Gaussian],
        vec![10],
    );
    lower.k = Some(25);
    lower.psi = EmbeddingKind::HaarOrthonormal;
    lower.trials = trials;
    lower.master_seed = opts.seed;
    let row = &run_grid(&lower)?[0];
    let pred = row.theory.unwrap_or(f64::NAN);
    let slack = SE_MULT * row.stderr + GN_LOWER_REL_TOL * pred;
    let low_ok = !row.failed() && row.mean >= pred - slack;
    let low = format!("haar psi, hard instance: mean {:.4} (se {:.3}) >= prediction {:.4} - {:.3}", row.mean, row.stderr, pred, slack);
    Ok(combine(vec![(up_ok, up), (low_ok, low)]))
}

/// Criterion 14.
fn planner() -> Result<(bool, String)> {
    let split = plan_split(16, 80, PlanObjective::Complex)?;
    let alt = PlanObjective::Complex.evaluate(16, 54, 26).unwrap_or(f64::NAN);
    let budget = budget_for_epsilon(10, 0.5, BudgetMethod::Rsvd)?;
    let ok = (split.k, split.ell) == (53, 27) && (split.bound - 5.0035).abs() < 5e-4 && split.bound < alt && budget == 60;
    Ok((
        ok,
        format!(
            "q=16 t=80 -> (k, l) = ({}, {}) objective {:.4} (vs {:.4} at (54, 26)); rsvd budget q=10 eps=0.5 -> {budget}",
            split.k, split.ell, split.bound, alt
        ),
    ))
}

/// Criterion 15.
fn universality(opts: &VerifyOptions) -> Result<(bool, String)> {
    let report = universality_report(Figure::Fig1, Scale::Desk, opts.seed, opts.trials)?;
    let mut bad = Vec::new();
    for v in &report.verdicts {
        let class_ok = v.closer_to_haar == v.embedding.is_orthonormal_class();
        if !(v.within_tolerance && class_ok) {
            bad.push(format!("{}/{}", v.instance, v.embedding));
        }
    }
    let worst = report
        .verdicts
        .iter()
        .map(|v| if v.embedding.is_orthonormal_class() { v.haar_deviation.unwrap_or(f64::NAN) } else { v.gaussian_deviation })
        .fold(0.0f64, f64::max);
    let detail = format!(
        "{} curves on l in {:?}, worst mean relative deviation from own class {:.3}{}",
        report.verdicts.len(),
        report.verdicts.first().map(|v| v.compared_ells.clone()).unwrap_or_default(),
        worst,
        if bad.is_empty() { String::new() } else { format!(", outside tolerance: {}", bad.join(" ")) }
    );
    Ok((bad.is_empty(), detail))
}

/// Criterion 16: repeated runs, including one on a different thread pool,
/// produce byte-identical CSV.
fn determinism(opts: &VerifyOptions) -> Result<(bool, String)> {
    let trials = opts.trials(20);
    let render = || -> Result<String> {
        let mut csv = String::new();
        for grid in figure_grids(Figure::Fig1, Scale::Desk, opts.seed, Some(trials)) {
            csv.push_str(&csv_string(Some(1), &run_grid(&grid)?)?);
        }
        let mut gn = ExperimentGrid::new(
            Task::GenNystrom,
            InstanceSpec::RandomRect { d: 30, n: 40, rank: 30, seed: opts.seed },
            vec![EmbeddingKind::Gaussian, EmbeddingKind::Srtt],
            vec![5, 10],
        );
        gn.k = Some(15);
        gn.trials = trials;
        gn.master_seed = opts.seed;
        csv.push_str(&csv_string(None, &run_grid(&gn)?)?);
        Ok(csv)
    };
    let first = render()?;
    let second = render()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .map_err(|e| crate::error::Error::Numerical(e.to_string()))?;
    let third = pool.install(render)?;
    let ok = first == second && first == third;
    Ok((ok, format!("{} bytes, identical across 3 runs: {ok}", first.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_cover_every_criterion() {
        let mut all: Vec<u8> = Suite::NAMES[..9].iter().flat_map(|n| n.parse::<Suite>().unwrap().criteria()).collect();
        all.sort();
        assert_eq!(all, (1..=16).collect::<Vec<_>>());
        assert_eq!(Suite::All.criteria(), all);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn quick_checks_pass() {
        let opts = VerifyOptions { seed: 3, trials: None };
        for id in [5, 8, 9, 10, 14] {
            let c = run_criterion(id, &opts);
            assert!(c.passed, "{c}");
        }
        let unknown = run_criterion(99, &opts);
        assert!(!unknown.passed);
    }

    #[test]
    fn display_line() {
        let c = Check {
            criterion: 3,
            name: "x",
            passed: false,
            detail: "d".into(),
            elapsed: Duration::from_millis(1500),
            time_limit: Some(Duration::from_secs(60)),
        };
        assert_eq!(c.to_string(), "[FAIL]  3 x: d (1.5s, limit 60s)");
    }
}
