//! Closed-form error formulas, bounds and planning rules.
//!
//! Every formula carries the field offset `alpha` (1 over the reals, 0 over
//! the complex numbers) through [`FieldTag::alpha`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldTag;

/// Distribution of the left sketch `Psi` in generalized Nyström.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaKind {
    Gaussian,
    HaarOrthonormal,
}

/// Parameters shared by the formula evaluators. Fields a formula does not
/// use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub field: FieldTag,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub ell: usize,
    pub k: usize,
    pub q: usize,
    pub gamma_kind: GammaKind,
    pub epsilon: f64,
    pub t: usize,
}

impl Default for BoundQuery {
    fn default() -> Self {
        Self {
            field: FieldTag::Real,
            n: 0,
            d: 0,
            r: 0,
            ell: 0,
            k: 0,
            q: 0,
            gamma_kind: GammaKind::Gaussian,
            epsilon: 0.0,
            t: 0,
        }
    }
}

impl BoundQuery {
    fn alpha(&self) -> usize {
        self.field.alpha()
    }
}

/// Squared singular values `sigma_1^2 >= sigma_2^2 >= ...` with cached tail
/// sums `tail(q) = sum_{i > q} sigma_i^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTail {
    values: Vec<f64>,
    suffix: Vec<f64>,
}

impl SpectrumTail {
    /// From squared singular values, which must be nonnegative and
    /// nonincreasing.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("spectrum entry {v} is not a finite nonnegative number")));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument("spectrum must be nonincreasing".into()));
        }
        let mut suffix = vec![0.0; values.len() + 1];
        for i in (0..values.len()).rev() {
            suffix[i] = suffix[i + 1] + values[i];
        }
        Ok(Self { values, suffix })
    }

    /// From singular values in any order.
    pub fn from_singular_values(sigma: &[f64]) -> Result<Self> {
        let mut sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
        sq.sort_by(|a, b| b.total_cmp(a));
        Self::new(sq)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of strictly positive entries.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    /// `sum_{i > q} sigma_i^2` (1-based `i`); zero past the end.
    pub fn tail(&self, q: usize) -> f64 {
        self.suffix.get(q).copied().unwrap_or(0.0)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    num as f64 / den as f64
}

/// `1 + q / (ell - q - alpha)`; caller guarantees `q + alpha < ell`.
fn oversampling_factor(q: usize, ell: usize, alpha: usize) -> f64 {
    1.0 + ratio(q, ell - q - alpha)
}

fn require_ss(query: &BoundQuery) -> Result<()> {
    if query.ell <= query.r + query.alpha() {
        return Err(Error::DimensionTooSmall(format!(
            "ell = {} must exceed r + alpha = {}",
            query.ell,
            query.r + query.alpha()
        )));
    }
    Ok(())
}

/// Expected residual ratio of sketch-and-solve with a Gaussian embedding:
/// `1 + r / (ell - r - alpha)`.
pub fn ss_ratio_gaussian(query: &BoundQuery) -> Result<f64> {
    require_ss(query)?;
    Ok(1.0 + ratio(query.r, query.ell - query.r - query.alpha()))
}

/// Expected residual ratio with a random orthonormal embedding, which is
/// also the minimax value over all embeddings:
/// `1 + (n - ell)/(n - r) * r/(ell - r - alpha)`.
pub fn ss_ratio_haar(query: &BoundQuery) -> Result<f64> {
    require_ss(query)?;
    if query.n < query.ell {
        return Err(Error::ParameterOrderViolation(format!("n = {} is below ell = {}", query.n, query.ell)));
    }
    let shrink = ratio(query.n - query.ell, query.n - query.r);
    Ok(1.0 + shrink * ratio(query.r, query.ell - query.r - query.alpha()))
}

/// All comparison ranks `0 <= q < ell - alpha`.
pub fn default_q_grid(ell: usize, field: FieldTag) -> Vec<usize> {
    (0..ell.saturating_sub(field.alpha())).collect()
}

fn admissible(q_grid: &[usize], ell: usize, field: FieldTag) -> impl Iterator<Item = usize> + '_ {
    let alpha = field.alpha();
    q_grid.iter().copied().filter(move |&q| q + alpha < ell)
}

fn minimize(terms: impl Iterator<Item = f64>) -> Result<f64> {
    terms.fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t)))).ok_or(Error::NoAdmissibleQ)
}

/// Classical randomized SVD bound
/// `min_q (1 + q/(ell - q - alpha)) tail(q)` over admissible `q` in the grid.
pub fn rsvd_bound_hmt(q_grid: &[usize], ell: usize, field: FieldTag, tail: &SpectrumTail) -> Result<f64> {
    let alpha = field.alpha();
    minimize(admissible(q_grid, ell, field).map(|q| oversampling_factor(q, ell, alpha) * tail.tail(q)))
}

/// Sharp randomized SVD bound
/// `min_q (r - ell)/(r - q) (1 + q/(ell - q - alpha)) tail(q)`.
pub fn rsvd_bound_sharp(q_grid: &[usize], r: usize, ell: usize, field: FieldTag, tail: &SpectrumTail) -> Result<f64> {
    if r < ell {
        return Err(Error::RankBelowSketch { rank: r, ell });
    }
    let alpha = field.alpha();
    minimize(
        admissible(q_grid, ell, field)
            .map(|q| ratio(r - ell, r - q) * oversampling_factor(q, ell, alpha) * tail.tail(q)),
    )
}

/// Minimax lower-bound factor `(r - ell)/(r - q) (1 + q/(ell - q - alpha))`.
pub fn rsvd_lower_factor(r: usize, ell: usize, q: usize, field: FieldTag) -> Result<f64> {
    let alpha = field.alpha();
    if q + alpha >= ell || ell > r {
        return Err(Error::ParameterOrderViolation(format!(
            "need q + alpha < ell <= r, got q = {q}, alpha = {alpha}, ell = {ell}, r = {r}"
        )));
    }
    Ok(ratio(r - ell, r - q) * oversampling_factor(q, ell, alpha))
}

/// `gamma = 1` for a Gaussian `Psi`, `(d - k)/(d - ell)` for a Haar `Psi`.
pub fn gn_gamma(kind: GammaKind, d: usize, k: usize, ell: usize) -> Result<f64> {
    match kind {
        GammaKind::Gaussian => Ok(1.0),
        GammaKind::HaarOrthonormal => {
            if k > d || ell >= d {
                return Err(Error::ParameterOrderViolation(format!(
                    "need ell < d and k <= d, got ell = {ell}, k = {k}, d = {d}"
                )));
            }
            Ok(ratio(d - k, d - ell))
        }
    }
}

/// `1 + gamma ell/(k - ell - alpha)`.
pub fn gn_prefactor(query: &BoundQuery) -> Result<f64> {
    let alpha = query.alpha();
    if query.ell + alpha >= query.k {
        return Err(Error::ParameterOrderViolation(format!(
            "need ell + alpha < k, got ell = {}, alpha = {alpha}, k = {}",
            query.ell, query.k
        )));
    }
    let gamma = gn_gamma(query.gamma_kind, query.d, query.k, query.ell)?;
    Ok(1.0 + gamma * ratio(query.ell, query.k - query.ell - alpha))
}

/// Generalized Nyström upper bound: the prefactor times the sharp randomized
/// SVD bound, minimized over all admissible `q`.
pub fn gn_bound(query: &BoundQuery, tail: &SpectrumTail) -> Result<f64> {
    if query.k > query.r {
        return Err(Error::ParameterOrderViolation(format!("need k <= r, got k = {}, r = {}", query.k, query.r)));
    }
    let pre = gn_prefactor(query)?;
    let grid = default_q_grid(query.ell, query.field);
    Ok(pre * rsvd_bound_sharp(&grid, query.r, query.ell, query.field, tail)?)
}

/// Generalized Nyström minimax lower-bound factor
/// `(1 + (d - k)/(d - ell) ell/(k - ell - alpha)) (r - ell)/(r - q) (1 + q/(ell - q - alpha))`.
pub fn gn_lower_factor(query: &BoundQuery) -> Result<f64> {
    if query.k > query.r {
        return Err(Error::ParameterOrderViolation(format!("need k <= r, got k = {}, r = {}", query.k, query.r)));
    }
    let haar = BoundQuery { gamma_kind: GammaKind::HaarOrthonormal, ..*query };
    Ok(gn_prefactor(&haar)? * rsvd_lower_factor(query.r, query.ell, query.q, query.field)?)
}

/// Limit of the expected Nyström trace error on the two-eigenvalue instance
/// as the top eigenvalue grows: `b (r - ell)(1 + q/(ell - q - alpha))`.
pub fn two_eig_limit(b: f64, q: usize, r: usize, ell: usize, field: FieldTag) -> Result<f64> {
    Ok(b * (r - q) as f64 * rsvd_lower_factor(r, ell, q, field)?)
}

/// Diagonal value of `E[W^{-1}]` for `W ~ Wishart(r, ell)`: `1/(ell - r - alpha)`.
pub fn inverse_wishart_mean(r: usize, ell: usize, field: FieldTag) -> Result<f64> {
    let alpha = field.alpha();
    if ell <= r + alpha {
        return Err(Error::DimensionTooSmall(format!("ell = {ell} must exceed r + alpha = {}", r + alpha)));
    }
    Ok(1.0 / (ell - r - alpha) as f64)
}

/// Diagonal value of `E[X^{-1}]` for `X ~ Beta(r, ell, n)`:
/// `1 + (n - ell)/(ell - r - alpha)`.
pub fn inverse_beta_mean(r: usize, ell: usize, n: usize, field: FieldTag) -> Result<f64> {
    if n < ell {
        return Err(Error::ParameterOrderViolation(format!("n = {n} is below ell = {ell}")));
    }
    Ok(1.0 + (n - ell) as f64 * inverse_wishart_mean(r, ell, field)?)
}

/// Objective used to rank `(k, ell)` splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanObjective {
    /// `(1 + ell/(k - ell))(1 + q/(ell - q))`.
    Complex,
    /// The same with the real-field offsets, `(1 + ell/(k - ell - 1))(1 + q/(ell - q - 1))`.
    Real,
}

impl PlanObjective {
    fn alpha(self) -> usize {
        match self {
            PlanObjective::Complex => 0,
            PlanObjective::Real => 1,
        }
    }

    /// Objective value, or `None` when the split is infeasible.
    pub fn evaluate(self, q: usize, k: usize, ell: usize) -> Option<f64> {
        let a = self.alpha();
        if q + a >= ell || ell + a >= k {
            return None;
        }
        Some((1.0 + ratio(ell, k - ell - a)) * oversampling_factor(q, ell, a))
    }
}

/// A budget split `k + ell = t` with its objective value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub k: usize,
    pub ell: usize,
    pub bound: f64,
}

/// Continuous optimum of the ratio `k / ell = sqrt(t - q) / sqrt(q)`.
pub fn continuous_ratio(q: usize, t: usize) -> f64 {
    ((t - q) as f64).sqrt() / (q as f64).sqrt()
}

/// Best split of a budget of `t` products for target rank `q`: the
/// continuous optimum rounded both ways, keeping the better one (ties go to
/// the larger `k`). If both roundings are infeasible, every feasible split
/// is searched.
pub fn plan_split(q: usize, t: usize, objective: PlanObjective) -> Result<Split> {
    if q == 0 || q >= t {
        return Err(Error::InfeasibleBudget(format!("need 0 < q < t, got q = {q}, t = {t}")));
    }
    let rho = continuous_ratio(q, t);
    let ell_star = t as f64 / (1.0 + rho);
    let lo = (ell_star.floor() as usize).min(t);
    let hi = (ell_star.ceil() as usize).min(t);
    let best = |cands: &mut dyn Iterator<Item = usize>| -> Option<Split> {
        let mut best: Option<Split> = None;
        for ell in cands {
            let k = t - ell;
            if let Some(bound) = objective.evaluate(q, k, ell) {
                let better = match best {
                    None => true,
                    Some(b) => bound < b.bound || (bound == b.bound && k > b.k),
                };
                if better {
                    best = Some(Split { k, ell, bound });
                }
            }
        }
        best
    };
    best(&mut [lo, hi].into_iter())
        .or_else(|| best(&mut (0..=t)))
        .ok_or_else(|| Error::InfeasibleBudget(format!("no split of t = {t} satisfies q < ell < k for q = {q}")))
}

/// Which low-rank method a matvec budget is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMethod {
    GeneralizedNystrom,
    Rsvd,
}

/// `ceil` that ignores rounding noise just above an integer.
fn ceil_clean(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Matrix-vector products needed for a `(1 + epsilon)` guarantee at rank `q`.
/// Generalized Nyström: `ceil(2(1/eps + 1)(1/eps + sqrt(1/eps^2 + 2/eps) + 1) q)`;
/// randomized SVD: `ceil((2/eps + 2) q)`.
pub fn budget_for_epsilon(q: usize, epsilon: f64, method: BudgetMethod) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) || q == 0 {
        return Err(Error::InvalidArgument(format!("need epsilon > 0 and q >= 1, got epsilon = {epsilon}, q = {q}")));
    }
    let inv = 1.0 / epsilon;
    let qf = q as f64;
    let x = match method {
        BudgetMethod::GeneralizedNystrom => 2.0 * (inv + 1.0) * (inv + (inv * inv + 2.0 * inv).sqrt() + 1.0) * qf,
        BudgetMethod::Rsvd => (2.0 * inv + 2.0) * qf,
    };
    Ok(ceil_clean(x))
}

/// Minimal (`r + 1 + alpha`) and sufficient (`ceil(r/eps + r + alpha)`)
/// sketch-and-solve embedding dimensions.
pub fn ss_dimensions(r: usize, field: FieldTag, epsilon: f64) -> Result<(usize, usize)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) || r == 0 {
        return Err(Error::InvalidArgument(format!("need epsilon > 0 and r >= 1, got epsilon = {epsilon}, r = {r}")));
    }
    let alpha = field.alpha();
    let sufficient = ceil_clean(r as f64 / epsilon + (r + alpha) as f64);
    Ok((r + 1 + alpha, sufficient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ss(field: FieldTag, n: usize, r: usize, ell: usize) -> BoundQuery {
        BoundQuery { field, n, r, ell, ..Default::default() }
    }

    #[test]
    fn sketch_solve_ratios() {
        let real = FieldTag::Real;
        assert_abs_diff_eq!(ss_ratio_gaussian(&ss(real, 0, 10, 20)).unwrap(), 1.0 + 10.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ss_ratio_gaussian(&ss(real, 0, 10, 12)).unwrap(), 11.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ss_ratio_gaussian(&ss(real, 0, 10, 111)).unwrap(), 1.1, epsilon = 1e-15);
        assert!(matches!(ss_ratio_gaussian(&ss(real, 0, 10, 11)), Err(Error::DimensionTooSmall(_))));
        assert!(ss_ratio_gaussian(&ss(FieldTag::Complex, 0, 10, 11)).is_ok());
        let h = ss_ratio_haar(&ss(real, 1000, 10, 20)).unwrap();
        assert_abs_diff_eq!(h, 1.0 + (980.0 / 990.0) * (10.0 / 9.0), epsilon = 1e-15);
        assert_abs_diff_eq!(h, 2.0999, epsilon = 1e-4);
        assert_eq!(ss_ratio_haar(&ss(real, 50, 10, 50)).unwrap(), 1.0);
        let hc = ss_ratio_haar(&ss(FieldTag::Complex, 1000, 10, 20)).unwrap();
        assert_abs_diff_eq!(hc, 1.9899, epsilon = 1e-4);
        assert_abs_diff_eq!(ss_ratio_gaussian(&ss(FieldTag::Complex, 0, 10, 20)).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rsvd_bounds() {
        let diag = SpectrumTail::new(vec![9.0, 4.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(diag.tail(0), 14.0);
        assert_eq!(diag.tail(3), 0.0);
        let grid = default_q_grid(5, FieldTag::Real);
        assert_eq!(grid, vec![0, 1, 2, 3]);
        // q terms: 14, 5 * 1.25, 1 * 2, 0 * 4
        assert_eq!(rsvd_bound_hmt(&[0], 5, FieldTag::Real, &diag).unwrap(), 14.0);
        assert_eq!(rsvd_bound_hmt(&[0, 1, 2], 5, FieldTag::Real, &diag).unwrap(), 2.0);
        assert_eq!(rsvd_bound_hmt(&grid, 5, FieldTag::Real, &diag).unwrap(), 0.0);
        assert_eq!(rsvd_bound_hmt(&[7], 5, FieldTag::Real, &diag), Err(Error::NoAdmissibleQ));

        let mut step = vec![1.0; 10];
        step.extend(std::iter::repeat(1e-5).take(90));
        let step = SpectrumTail::new(step).unwrap();
        let hmt = rsvd_bound_hmt(&default_q_grid(20, FieldTag::Real), 20, FieldTag::Real, &step).unwrap();
        assert_abs_diff_eq!(hmt, (1.0 + 10.0 / 9.0) * 90.0 * 1e-5, epsilon = 1e-15);

        let flat = SpectrumTail::new(vec![1.0 / 90.0; 100]).unwrap();
        // r=100, ell=20, q=10 with tail(10) = 1
        let term = rsvd_lower_factor(100, 20, 10, FieldTag::Real).unwrap() * flat.tail(10);
        assert_abs_diff_eq!(term, (80.0 / 90.0) * (19.0 / 9.0), epsilon = 1e-12);
        assert_abs_diff_eq!(term, 1.8765, epsilon = 1e-4);
        assert_eq!(rsvd_bound_sharp(&[0, 5], 20, 20, FieldTag::Real, &flat).unwrap(), 0.0);
        assert_eq!(
            rsvd_bound_sharp(&[0], 10, 20, FieldTag::Real, &flat),
            Err(Error::RankBelowSketch { rank: 10, ell: 20 })
        );
    }

    #[test]
    fn lower_factors() {
        assert_abs_diff_eq!(rsvd_lower_factor(50, 20, 5, FieldTag::Real).unwrap(), (30.0 / 45.0) * (1.0 + 5.0 / 14.0), epsilon = 1e-15);
        assert_abs_diff_eq!(rsvd_lower_factor(50, 20, 5, FieldTag::Real).unwrap(), 0.9048, epsilon = 1e-4);
        assert_abs_diff_eq!(rsvd_lower_factor(50, 20, 5, FieldTag::Complex).unwrap(), 0.8889, epsilon = 1e-4);
        assert_abs_diff_eq!(rsvd_lower_factor(50, 20, 0, FieldTag::Real).unwrap(), 30.0 / 50.0, epsilon = 1e-15);
        assert!(rsvd_lower_factor(50, 20, 19, FieldTag::Real).is_err());
        assert!(rsvd_lower_factor(10, 20, 5, FieldTag::Real).is_err());
    }

    #[test]
    fn generalized_nystrom_formulas() {
        let base = BoundQuery { field: FieldTag::Real, d: 200, k: 40, ell: 20, r: 100, q: 10, ..Default::default() };
        assert_eq!(gn_gamma(GammaKind::Gaussian, 7, 5, 2).unwrap(), 1.0);
        let haar = BoundQuery { gamma_kind: GammaKind::HaarOrthonormal, ..base };
        let pre = gn_prefactor(&haar).unwrap();
        assert_abs_diff_eq!(pre, 1.0 + (160.0 / 180.0) * (20.0 / 19.0), epsilon = 1e-15);
        assert_abs_diff_eq!(pre, 1.9357, epsilon = 1e-4);
        let lower = gn_lower_factor(&base).unwrap();
        assert_abs_diff_eq!(lower, pre * (80.0 / 90.0) * (19.0 / 9.0), epsilon = 1e-12);
        assert_abs_diff_eq!(lower, 3.632373, epsilon = 1e-6);

        let wide = BoundQuery { field: FieldTag::Complex, d: 1_000_000_000, ..base };
        let pre = gn_prefactor(&BoundQuery { gamma_kind: GammaKind::HaarOrthonormal, ..wide }).unwrap();
        assert_abs_diff_eq!(pre, 1.0 + 20.0 / 20.0, epsilon = 1e-6);
        let full = BoundQuery { d: 40, ..haar };
        assert_eq!(gn_prefactor(&full).unwrap(), 1.0);

        assert!(gn_prefactor(&BoundQuery { k: 21, ..base }).is_err());
        assert!(gn_lower_factor(&BoundQuery { k: 120, ..base }).is_err());
        assert!(gn_lower_factor(&BoundQuery { q: 19, ..base }).is_err());
    }

    #[test]
    fn two_eigenvalue_limit() {
        assert_abs_diff_eq!(two_eig_limit(1.0, 5, 50, 20, FieldTag::Real).unwrap(), 30.0 * 19.0 / 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(two_eig_limit(1.0, 5, 50, 20, FieldTag::Real).unwrap(), 40.7143, epsilon = 1e-4);
    }

    #[test]
    fn wishart_and_beta_means() {
        assert_abs_diff_eq!(inverse_wishart_mean(3, 10, FieldTag::Real).unwrap(), 1.0 / 6.0);
        assert_abs_diff_eq!(inverse_wishart_mean(3, 12, FieldTag::Complex).unwrap(), 1.0 / 9.0);
        assert_abs_diff_eq!(inverse_beta_mean(3, 10, 50, FieldTag::Real).unwrap(), 1.0 + 40.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inverse_beta_mean(3, 10, 50, FieldTag::Real).unwrap(), 7.6667, epsilon = 1e-4);
        assert!(inverse_wishart_mean(3, 4, FieldTag::Real).is_err());
    }

    #[test]
    fn planner() {
        let s = plan_split(16, 80, PlanObjective::Complex).unwrap();
        assert_eq!((s.k, s.ell), (53, 27));
        assert_abs_diff_eq!(s.bound, (1.0 + 27.0 / 26.0) * (1.0 + 16.0 / 11.0), epsilon = 1e-14);
        assert_abs_diff_eq!(s.bound, 5.0035, epsilon = 1e-4);
        let alt = PlanObjective::Complex.evaluate(16, 54, 26).unwrap();
        assert_abs_diff_eq!(alt, 5.0143, epsilon = 1e-4);
        assert_eq!(continuous_ratio(16, 80), 2.0);
        assert_eq!(continuous_ratio(20, 40), 1.0);
        assert_abs_diff_eq!(continuous_ratio(25, 75), 2f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(plan_split(5, 5, PlanObjective::Complex), Err(Error::InfeasibleBudget(_))));
        assert!(matches!(plan_split(3, 7, PlanObjective::Complex), Err(Error::InfeasibleBudget(_))));
        assert!(plan_split(3, 9, PlanObjective::Complex).is_ok());
        let real = plan_split(16, 80, PlanObjective::Real).unwrap();
        assert_eq!(real.k + real.ell, 80);
    }

    #[test]
    fn budgets_and_dimensions() {
        assert_eq!(budget_for_epsilon(10, 0.5, BudgetMethod::Rsvd).unwrap(), 60);
        assert_eq!(budget_for_epsilon(1, 1.0, BudgetMethod::GeneralizedNystrom).unwrap(), 15);
        let at_100 = 2.0 * 1.01 * (0.01 + (1e-4f64 + 0.02).sqrt() + 1.0);
        assert_eq!(budget_for_epsilon(50, 100.0, BudgetMethod::GeneralizedNystrom).unwrap(), (at_100 * 50.0).ceil() as usize);
        for eps in [0.05, 0.1, 0.5, 1.0, 3.0] {
            let gn = budget_for_epsilon(4, eps, BudgetMethod::GeneralizedNystrom).unwrap() as f64;
            assert!(gn >= (4.0 / (eps * eps) + 2.0) * 4.0 - 1e-9);
        }
        assert!(budget_for_epsilon(1, 0.0, BudgetMethod::Rsvd).is_err());
        assert_eq!(ss_dimensions(10, FieldTag::Real, 0.1).unwrap(), (12, 111));
        assert_eq!(ss_dimensions(10, FieldTag::Complex, 0.1).unwrap().0, 11);
    }

    #[test]
    fn spectrum_validation() {
        assert!(SpectrumTail::new(vec![1.0, 2.0]).is_err());
        assert!(SpectrumTail::new(vec![1.0, -1.0]).is_err());
        let s = SpectrumTail::from_singular_values(&[1.0, 3.0, 0.0]).unwrap();
        assert_eq!(s.values(), &[9.0, 1.0, 0.0]);
        assert_eq!(s.rank(), 2);
        assert_eq!(s.tail(10), 0.0);
    }

    fn spectrum_strategy() -> impl Strategy<Value = SpectrumTail> {
        prop::collection::vec(0.0f64..10.0, 1..40).prop_map(|mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            SpectrumTail::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn sharp_never_exceeds_hmt(tail in spectrum_strategy(), ell in 2usize..30, extra in 0usize..30, complex in any::<bool>()) {
            let field = if complex { FieldTag::Complex } else { FieldTag::Real };
            let r = ell + extra;
            let grid = default_q_grid(ell, field);
            let sharp = rsvd_bound_sharp(&grid, r, ell, field, &tail).unwrap();
            let hmt = rsvd_bound_hmt(&grid, ell, field, &tail).unwrap();
            prop_assert!(sharp <= hmt * (1.0 + 1e-12));
        }

        #[test]
        fn complex_bounds_do_not_exceed_real(tail in spectrum_strategy(), r in 1usize..40, gap in 2usize..30, n_extra in 0usize..50, q in 0usize..10, k_gap in 2usize..10, d_extra in 0usize..50) {
            let ell = r + gap;
            let n = ell + n_extra;
            let (re, co) = (ss(FieldTag::Real, n, r, ell), ss(FieldTag::Complex, n, r, ell));
            prop_assert!(ss_ratio_gaussian(&co).unwrap() <= ss_ratio_gaussian(&re).unwrap());
            prop_assert!(ss_ratio_haar(&co).unwrap() <= ss_ratio_haar(&re).unwrap());
            prop_assert!(ss_ratio_haar(&re).unwrap() <= ss_ratio_gaussian(&re).unwrap());
            prop_assert!(inverse_wishart_mean(r, ell, FieldTag::Complex).unwrap() <= inverse_wishart_mean(r, ell, FieldTag::Real).unwrap());
            // rank-deficient-sketch formulas with ell <= r
            let (l2, r2) = (gap + q, gap + q + r);
            let grid = default_q_grid(l2, FieldTag::Real);
            let sr = rsvd_bound_sharp(&grid, r2, l2, FieldTag::Real, &tail).unwrap();
            let sc = rsvd_bound_sharp(&default_q_grid(l2, FieldTag::Complex), r2, l2, FieldTag::Complex, &tail).unwrap();
            prop_assert!(sc <= sr * (1.0 + 1e-12));
            prop_assert!(rsvd_lower_factor(r2, l2, q, FieldTag::Complex).unwrap() <= rsvd_lower_factor(r2, l2, q, FieldTag::Real).unwrap());
            let k = l2 + k_gap;
            let gq = BoundQuery { field: FieldTag::Real, d: k + d_extra + 1, k, ell: l2, r: r2.max(k), q, ..Default::default() };
            let gc = BoundQuery { field: FieldTag::Complex, ..gq };
            prop_assert!(gn_lower_factor(&gc).unwrap() <= gn_lower_factor(&gq).unwrap());
            prop_assert!(gn_bound(&gc, &tail).unwrap() <= gn_bound(&gq, &tail).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn full_haar_left_sketch_reduces_to_sharp(tail in spectrum_strategy(), ell in 2usize..20, k_gap in 2usize..10, r_extra in 0usize..20) {
            let k = ell + k_gap;
            let query = BoundQuery { field: FieldTag::Real, d: k, k, ell, r: k + r_extra, gamma_kind: GammaKind::HaarOrthonormal, ..Default::default() };
            let sharp = rsvd_bound_sharp(&default_q_grid(ell, FieldTag::Real), query.r, ell, FieldTag::Real, &tail).unwrap();
            prop_assert_eq!(gn_bound(&query, &tail).unwrap(), sharp);
        }

        #[test]
        fn plan_beats_other_rounding(q in 1usize..60, extra in 3usize..200) {
            let t = 2 * q + extra;
            if let Ok(s) = plan_split(q, t, PlanObjective::Complex) {
                let rho = continuous_ratio(q, t);
                let ell_star = t as f64 / (1.0 + rho);
                for ell in [ell_star.floor() as usize, ell_star.ceil() as usize] {
                    if let Some(v) = PlanObjective::Complex.evaluate(q, t - ell, ell) {
                        prop_assert!(s.bound <= v);
                    }
                }
            }
        }
    }
}
