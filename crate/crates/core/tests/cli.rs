use std::path::PathBuf;
use std::process::{Command, Output};

fn mindiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mindiv")).args(args).output().expect("run mindiv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_file(name: &str, values: &[f64]) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, format!("# sample\n{text}")).unwrap();
    path
}

fn column(csv: &str, i: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn estimate_mle_json() {
    let path = data_file("pm1.txt", &[-1.0, 1.0]);
    let o = mindiv(&["estimate", "--family", "normal", "--estimator", "mle", "--data", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["theta_hat"], serde_json::json!([0.0, 1.0]));
    assert_eq!(v["converged"], serde_json::json!(true));
    assert!(v.get("criterion_value").is_some() && v.get("iterations").is_some());
}

#[test]
fn estimate_renyi_scale_on_a_large_sample() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let xs = mindiv::Family::NormalScale.sample(&mindiv::Parameter::scalar(2.0), 10_000, &mut rng);
    let path = data_file("scale2.txt", &xs);
    let o = mindiv(&[
        "estimate", "--family", "normal-scale", "--estimator", "renyi", "--alpha", "0.5", "--data", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let sigma = v["theta_hat"][0].as_f64().unwrap();
    assert!((sigma - 2.0).abs() < 0.1, "{sigma}");
}

#[test]
fn estimate_input_errors() {
    let path = data_file("small.txt", &[0.5, 1.5, 2.5]);
    let p = path.to_str().unwrap();
    let o = mindiv(&["estimate", "--family", "normal-scale", "--estimator", "superdivergence", "--alpha", "1.5", "--data", p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[0, 1)"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let o = mindiv(&["estimate", "--family", "normal-loc", "--estimator", "subdivergence", "--alpha", "0.5", "--data", p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--escort"));
    let o = mindiv(&["estimate", "--family", "normal-loc", "--estimator", "mle", "--data", "/nonexistent/file"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mindiv(&["estimate", "--family", "gamma", "--estimator", "mle", "--data", p]);
    assert_eq!(o.status.code(), Some(1));
    let o = mindiv(&["estimate", "--family", "normal"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_reports_non_convergence() {
    let path = data_file("nc.txt", &[0.3, -1.2, 2.2, 0.9, -0.4]);
    let o = mindiv(&[
        "estimate", "--family", "normal", "--estimator", "renyi", "--alpha", "0.5", "--max-iter", "1", "--data",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["converged"], serde_json::json!(false));
}

#[test]
fn influence_csv() {
    let o = mindiv(&["influence", "--family", "normal-loc", "--estimator", "mle", "--theta", "0", "--grid", "-3:3:7"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("x,if_component_1\n"));
    assert_eq!(column(&csv, 0), column(&csv, 1));
    let o = mindiv(&["influence", "--family", "normal-loc", "--estimator", "mle", "--theta", "0", "--grid", "3:-3:7"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mindiv(&["influence", "--family", "normal", "--estimator", "renyi", "--alpha", "0.5", "--theta", "0,1", "--grid", "-2:2:3"]);
    assert!(stdout(&o).starts_with("x,if_component_1,if_component_2\n"));
}

#[test]
fn influence_closed_form_matches_numeric() {
    let base = ["influence", "--family", "normal-scale", "--estimator", "pseudo", "--alpha", "0.5", "--theta", "1.5", "--grid", "-9:9:13"];
    let closed = mindiv(&base);
    let mut with_numeric = base.to_vec();
    with_numeric.push("--numeric");
    let numeric = mindiv(&with_numeric);
    assert_eq!(numeric.status.code(), Some(0), "{}", stderr(&numeric));
    for (a, b) in column(&stdout(&closed), 1).iter().zip(column(&stdout(&numeric), 1)) {
        assert!((a - b).abs() < 1e-3);
    }
    let sub = [
        "influence", "--family", "normal-loc", "--estimator", "subdivergence", "--alpha", "0.5", "--escort", "1", "--theta", "0",
        "--grid", "-6:6:7",
    ];
    let c = mindiv(&sub);
    let mut n = sub.to_vec();
    n.push("--numeric");
    let m = mindiv(&n);
    for (a, b) in column(&stdout(&c), 1).iter().zip(column(&stdout(&m), 1)) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--epsilon", "0.1", "--contaminant", "cauchy", "--n", "30", "--reps", "1", "--seed", "7", "--alphas", "0.5"];
    let a = mindiv(&args);
    let b = mindiv(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stderr(&a).is_empty());
    let csv = stdout(&a);
    assert_eq!(csv.lines().count(), 4);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let j = mindiv(&json_args);
    let v: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(v["seed"], serde_json::json!(7));
}

#[test]
fn simulate_errors_and_seed_echo() {
    let o = mindiv(&["simulate", "--epsilon", "0.6", "--contaminant", "cauchy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0, 0.5)"));
    let o = mindiv(&["simulate", "--epsilon", "0.1", "--contaminant", "uniform", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mindiv(&["simulate", "--epsilon", "0.1", "--contaminant", "logistic", "--n", "10", "--reps", "2", "--alphas", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).starts_with("seed: "));
}
