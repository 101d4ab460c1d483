use num_complex::Complex64;
use sketchlab::embeddings::{haar_block_check, sample_wishart, EmbeddingKind, EmbeddingSpec};
use sketchlab::experiments::{run_grid, ExperimentGrid, InstanceSpec};
use sketchlab::instances::LsqKind;
use sketchlab::{FieldTag, Matrix, RngStream, Scalar};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn complex_normal_has_unit_modulus_squared() {
    let mut rng = RngStream::new(1, 0).rng();
    let xs: Vec<f64> = (0..20_000).map(|_| Complex64::sample_normal(&mut rng).norm_sqr()).collect();
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() < 4.0 * se, "mean {m} se {se}");
    let re: Vec<f64> = (0..20_000).map(|_| Complex64::sample_normal(&mut rng).re.powi(2)).collect();
    let (m, se) = mean_se(&re);
    assert!((m - 0.5).abs() < 4.0 * se, "real part variance {m}");
}

#[test]
fn wishart_mean_is_ell_identity() {
    let (r, ell, trials) = (3, 7, 4000);
    let mut rng = RngStream::new(2, 0).rng();
    let draws: Vec<Matrix<f64>> = (0..trials).map(|_| sample_wishart::<f64, _>(r, ell, &mut rng)).collect();
    for i in 0..r {
        for j in 0..r {
            let xs: Vec<f64> = draws.iter().map(|w| w[(i, j)]).collect();
            let (m, se) = mean_se(&xs);
            let target = if i == j { ell as f64 } else { 0.0 };
            assert!((m - target).abs() < 4.0 * se, "entry ({i},{j}) mean {m}");
        }
    }
}

#[test]
fn haar_single_entry_has_mean_one_half() {
    let spec = EmbeddingSpec::new(EmbeddingKind::HaarOrthonormal, 2, 1);
    let mut rng = RngStream::new(3, 0).rng();
    let xs: Vec<f64> = (0..20_000)
        .map(|_| {
            let top = haar_block_check::<f64, _>(&spec, 1, &mut rng).unwrap();
            top[(0, 0)].abs().powi(2)
        })
        .collect();
    let (m, se) = mean_se(&xs);
    assert!((m - 0.5).abs() < 4.0 * se, "mean {m}");
}

#[test]
fn gaussian_sketch_solve_ignores_coherence() {
    let run = |kind| {
        let mut g = ExperimentGrid::new(
            sketchlab::experiments::Task::SketchSolve,
            InstanceSpec::Lsq { kind, n: 120, d: 6, p: 1 },
            vec![EmbeddingKind::Gaussian],
            vec![20],
        );
        g.trials = 600;
        g.master_seed = 9;
        run_grid(&g).unwrap().remove(0)
    };
    let (a, b) = (run(LsqKind::Coherent), run(LsqKind::Incoherent));
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 4.0 * se, "{} vs {}", a.mean, b.mean);
}

#[test]
fn complex_field_grid_matches_complex_prediction() {
    let mut g = ExperimentGrid::new(
        sketchlab::experiments::Task::SketchSolve,
        InstanceSpec::Lsq { kind: LsqKind::Incoherent, n: 100, d: 5, p: 1 },
        vec![EmbeddingKind::Gaussian],
        vec![15],
    );
    g.field = FieldTag::Complex;
    g.trials = 600;
    g.master_seed = 4;
    let row = run_grid(&g).unwrap().remove(0);
    assert!(row.within(0.05, 4.0), "mean {} theory {:?}", row.mean, row.theory);
}
