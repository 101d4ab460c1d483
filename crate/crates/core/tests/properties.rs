use proptest::prelude::*;
use sketchlab::algorithms::{randomized_svd, sketch_and_solve};
use sketchlab::dense::singular_values;
use sketchlab::embeddings::{EmbeddingKind, EmbeddingSampler, EmbeddingSpec};
use sketchlab::experiments::{run_grid, ExperimentGrid, InstanceSpec, Task};
use sketchlab::instances::{make_random_low_rank, LsqKind, SpectrumKind, Basis};
use sketchlab::theory::{ss_ratio_gaussian, ss_ratio_haar, BoundQuery};
use sketchlab::{FieldTag, Matrix, RngStream, Scalar};

fn kind_strategy() -> impl Strategy<Value = EmbeddingKind> {
    prop::sample::select(EmbeddingKind::ALL.to_vec())
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut rng = RngStream::new(seed, 99).rng();
    Matrix::from_fn(rows, cols, |_, _| f64::sample_normal(&mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sketched_residual_never_beats_optimum(kind in kind_strategy(), d in 1usize..6, extra in 0usize..10, seed in 0u64..1000) {
        let n = 64;
        let ell = d + 2 + extra;
        let a = random_matrix(n, d, seed);
        let b = random_matrix(n, 1, seed + 1);
        let spec = EmbeddingSpec::new(kind, n, ell);
        let omega = EmbeddingSampler::new(spec).unwrap().sample::<f64, _>(&mut RngStream::new(seed, 1).rng()).unwrap();
        let res = sketch_and_solve(&a, &b, &omega).unwrap();
        prop_assert!(res.residual_sq >= res.optimal_residual_sq * (1.0 - 1e-10));
    }

    #[test]
    fn rsvd_error_at_least_best_tail(kind in kind_strategy(), ell in 2usize..12, seed in 0u64..1000) {
        let (d, n) = (20, 48);
        let mut rng = RngStream::new(seed, 2).rng();
        let (a, _) = make_random_low_rank::<f64, _>(d, n, 15, &mut rng).unwrap();
        let spec = EmbeddingSpec::new(kind, n, ell);
        let omega = EmbeddingSampler::new(spec).unwrap().sample::<f64, _>(&mut rng).unwrap();
        let res = randomized_svd(&a, &omega).unwrap();
        let sv = singular_values(&a).unwrap();
        let tail: f64 = sv.iter().skip(ell).map(|s| s * s).sum();
        prop_assert!(res.err_sq >= tail * (1.0 - 1e-9) - 1e-12);
    }

    #[test]
    fn haar_ratio_never_exceeds_gaussian(r in 1usize..40, extra in 2usize..60, spare in 0usize..200, complex in any::<bool>()) {
        let field = if complex { FieldTag::Complex } else { FieldTag::Real };
        let ell = r + extra;
        let q = BoundQuery { field, r, ell, n: ell + spare, ..Default::default() };
        let g = ss_ratio_gaussian(&q).unwrap();
        let h = ss_ratio_haar(&q).unwrap();
        prop_assert!(h <= g + 1e-12);
        prop_assert!(h >= 1.0);
    }

    #[test]
    fn gaussian_ratio_decreases_in_ell(r in 1usize..40, extra in 2usize..60, complex in any::<bool>()) {
        let field = if complex { FieldTag::Complex } else { FieldTag::Real };
        let at = |ell| ss_ratio_gaussian(&BoundQuery { field, r, ell, ..Default::default() }).unwrap();
        prop_assert!(at(r + extra + 1) < at(r + extra));
    }
}

#[test]
fn empirical_curves_decrease_with_ell() {
    let mut g = ExperimentGrid::new(
        Task::Rsvd,
        InstanceSpec::Psd { basis: Basis::Identity, spectrum: SpectrumKind::Poly, n: 80 },
        vec![EmbeddingKind::Gaussian, EmbeddingKind::Srtt],
        vec![5, 10, 20, 40],
    );
    g.trials = 60;
    g.master_seed = 2;
    let rows = run_grid(&g).unwrap();
    for w in rows.windows(2).filter(|w| w[0].embedding == w[1].embedding) {
        assert!(w[1].mean < w[0].mean, "{:?} ell {} -> {}", w[0].embedding, w[0].ell, w[1].ell);
    }
}

#[test]
fn haar_sketch_solve_beats_gaussian_when_ell_is_a_large_fraction() {
    let run = |kind| {
        let mut g = ExperimentGrid::new(
            Task::SketchSolve,
            InstanceSpec::Lsq { kind: LsqKind::Coherent, n: 60, d: 5, p: 1 },
            vec![kind],
            vec![45],
        );
        g.trials = 400;
        g.master_seed = 8;
        run_grid(&g).unwrap().remove(0)
    };
    let (gauss, haar) = (run(EmbeddingKind::Gaussian), run(EmbeddingKind::HaarOrthonormal));
    let se = (gauss.stderr.powi(2) + haar.stderr.powi(2)).sqrt();
    assert!(haar.mean + 3.0 * se < gauss.mean, "haar {} gaussian {}", haar.mean, gauss.mean);
}

#[test]
fn grids_reproduce_bitwise() {
    let mut g = ExperimentGrid::new(
        Task::Nystrom,
        InstanceSpec::Psd { basis: Basis::Dct, spectrum: SpectrumKind::Step, n: 50 },
        vec![EmbeddingKind::SparseStack, EmbeddingKind::Givens],
        vec![12, 20],
    );
    g.trials = 25;
    let a = run_grid(&g).unwrap();
    let b = run_grid(&g).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.mean.to_bits(), y.mean.to_bits());
        assert_eq!(x.median.to_bits(), y.median.to_bits());
    }
}
