use std::fs;
use std::process::{Command, Output};

fn sketchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .args(args)
        .env_remove("SKETCHLAB_SEED")
        .output()
        .expect("spawn sketchlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bounds_real_sketch_solve_ratios() {
    let o = sketchlab(&["bounds", "--n", "1000", "--r", "10", "--ell", "20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("sketch-solve ratio, gaussian: 2.1111"), "{text}");
    assert!(text.contains("sketch-solve ratio, haar (minimax): 2.0999"), "{text}");
}

#[test]
fn bounds_reports_missing_parameters_per_formula() {
    let o = sketchlab(&["bounds", "--field", "complex", "--r", "10", "--ell", "20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("gaussian: 2.0000"), "{text}");
    assert!(text.contains("haar (minimax): n/a (requires --n)"), "{text}");
}

#[test]
fn bounds_with_nothing_evaluable_is_a_usage_error() {
    let o = sketchlab(&["bounds"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_reads_spectrum_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.txt");
    let mut lines = vec!["# squared singular values".to_string()];
    lines.extend((0..40).map(|i| if i < 5 { "1".to_string() } else { "0.01".to_string() }));
    fs::write(&path, lines.join("\n")).unwrap();
    let o = sketchlab(&["bounds", "--spectrum", path.to_str().unwrap(), "--ell", "12", "--k", "24"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("rsvd sharp bound (spectrum):"), "{text}");
    assert!(!text.contains("rsvd sharp bound (spectrum): n/a"), "{text}");
}

#[test]
fn missing_spectrum_file_names_the_path() {
    let o = sketchlab(&["bounds", "--spectrum", "/no/such/file.txt", "--ell", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file.txt"));
}

#[test]
fn plan_split_and_budgets() {
    let o = sketchlab(&["plan", "--q", "16", "--budget", "80"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("k = 53, ell = 27"));

    let o = sketchlab(&["plan", "--q", "10", "--epsilon", "0.5", "--method", "rsvd"]);
    assert!(stdout(&o).contains("60 matvecs"));

    let o = sketchlab(&["plan", "--r", "10", "--epsilon", "0.1"]);
    assert!(stdout(&o).contains("ell_min = 12, ell_sufficient = 111"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(sketchlab(&["plan"]).status.code(), Some(2));
    assert_eq!(sketchlab(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(sketchlab(&["figure", "--id", "3"]).status.code(), Some(2));
    assert_eq!(sketchlab(&[]).status.code(), Some(2));
}

#[test]
fn verify_planner_suite_passes() {
    let o = sketchlab(&["verify", "--suite", "planner"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[PASS] 14"));
}

fn run_args(seed: &str, out: &str) -> Vec<String> {
    [
        "--seed", seed, "run", "--task", "sketch-solve", "--instance", "coherent", "--n", "60", "--d", "4", "--ell",
        "8,16", "--embeddings", "gaussian,sign", "--trials", "30", "--out", out,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn run_writes_csv_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv", "c.csv"].iter().map(|f| dir.path().join(f)).collect();
    for (seed, p) in ["3", "3", "4"].iter().zip(&paths) {
        let args = run_args(seed, p.to_str().unwrap());
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert!(sketchlab(&refs).status.success());
    }
    let read = |i: usize| fs::read_to_string(&paths[i]).unwrap();
    let a = read(0);
    assert!(a.starts_with("figure,instance,embedding,n,d_or_basis,ell,trials,mean,stderr,median,theory,z,reference,note"));
    assert_eq!(a.lines().count(), 5);
    assert_eq!(a, read(1));
    assert_ne!(a, read(2));
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("env.json"), dir.path().join("flag.json"));
    let common = ["run", "--task", "rsvd", "--instance", "step-coherent", "--n", "40", "--ell", "12", "--trials", "10", "--format", "json"];
    let env_run = Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .args(common)
        .args(["--out", p1.to_str().unwrap()])
        .env("SKETCHLAB_SEED", "11")
        .status()
        .unwrap();
    assert!(env_run.success());
    let mut flag_args = vec!["--seed", "11"];
    flag_args.extend(common);
    flag_args.extend(["--out", p2.to_str().unwrap()]);
    assert!(sketchlab(&flag_args).status.success());
    let a = fs::read_to_string(&p1).unwrap();
    assert_eq!(a, fs::read_to_string(&p2).unwrap());
    let rows: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
}

#[test]
fn unwritable_output_exits_with_one() {
    let o = sketchlab(&[
        "run", "--task", "rsvd", "--instance", "step-coherent", "--n", "20", "--ell", "12", "--trials", "4", "--out",
        "/no/such/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/dir/out.csv"));
}
