use std::path::Path;
use std::process::{Command, Output};

fn smallp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: [&str; 7] = ["--reps", "4", "--n", "1000", "--m", "1000", "--no-timing"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(SMALL).collect()
}

#[test]
fn reports_are_byte_reproducible() {
    let args = with_small(&[
        "simulate",
        "chisq",
        "--df",
        "3",
        "--targets=-6,-12",
        "--seed",
        "5",
    ]);
    let a = smallp(&args);
    let b = smallp(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "target_log10_p,mean_log10_p,ARE,SMSE_literal,rel_RMSE,sd,seconds"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("-6,"));
    assert!(rows[1].ends_with(",0"));
}

#[test]
fn seed_changes_the_report() {
    let a = smallp(&with_small(&[
        "simulate",
        "chisq",
        "--df",
        "3",
        "--targets=-6",
        "--seed",
        "1",
    ]));
    let b = smallp(&with_small(&[
        "simulate",
        "chisq",
        "--df",
        "3",
        "--targets=-6",
        "--seed",
        "2",
    ]));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn json_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = smallp(&with_small(&[
        "simulate",
        "cauchy",
        "--targets=-6",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let row = &v[0];
    assert_eq!(row["target_log10_p"], serde_json::json!(-6.0));
    assert!(row["ARE"].as_f64().unwrap() < 0.5);
    assert!(row["seconds"].as_f64().unwrap() == 0.0);
}

#[test]
fn eigenvalue_csv_with_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "l.csv", "lambda,q\n1,40\n1,\n1,\n");
    let o = smallp(&with_small(&[
        "estimate",
        "quadform",
        "--lambdas",
        &f,
        "--truth",
        "chisq:3",
    ]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mean: f64 = row[1].parse().unwrap();
    let truth: f64 = row[0].parse().unwrap();
    assert!((mean - truth).abs() < 0.2, "{mean} vs {truth}");
}

#[test]
fn matrices_route_runs() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.csv", "a,b\n1,0\n0,1\n1,1\n2,-1\n");
    let r = write(dir.path(), "r.csv", "r\n1\n-1\n2\n0\n");
    let o = smallp(&with_small(&[
        "estimate",
        "quadform",
        "--features",
        &z,
        "--residual",
        &r,
        "--scale-by-n",
    ]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "");
    let log10_p: f64 = row[1].parse().unwrap();
    assert!(log10_p < 0.0 && log10_p > -3.0);
}

#[test]
fn imhof_baseline_flags_deep_tails() {
    let o = smallp(&[
        "baseline",
        "imhof",
        "--df",
        "2",
        "--targets=-4,-30",
        "--no-timing",
    ]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("outside the method's reliable range"));
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn bad_csv_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.csv", "lambda\n1\nabc\n");
    let o = smallp(&["estimate", "quadform", "--lambdas", &f, "--q", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let f = write(dir.path(), "nocol.csv", "x\n1\n");
    let o = smallp(&["estimate", "quadform", "--lambdas", &f, "--q", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatched_matrices_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.csv", "a\n1\n2\n");
    let r = write(dir.path(), "r.csv", "r\n1\n2\n3\n");
    let o = smallp(&[
        "estimate",
        "quadform",
        "--features",
        &z,
        "--residual",
        &r,
        "--q",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_and_bad_options() {
    assert_eq!(
        smallp(&[
            "estimate",
            "quadform",
            "--lambdas",
            "/no/such/file.csv",
            "--q",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        smallp(&["estimate", "quadform", "--lambdas", "1,1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        smallp(&["estimate", "quadform", "--lambdas", "1,-1", "--q", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        smallp(&[
            "estimate",
            "quadform",
            "--lambdas",
            "1,1",
            "--q",
            "3",
            "--rho",
            "1.5"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        smallp(&["estimate", "ratio", "--q", "3", "--method", "imhof"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn multilevel_degeneracy_is_a_numerical_error() {
    let o = smallp(&[
        "estimate",
        "quadform",
        "--df",
        "2",
        "--q",
        "200",
        "--method",
        "multilevel-ce",
        "--n",
        "5",
        "--reps",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn two_sided_ratio_mc() {
    let o = smallp(&[
        "estimate",
        "ratio",
        "--q",
        "2",
        "--method",
        "mc",
        "--two-sided",
        "--m",
        "20000",
        "--reps",
        "2",
        "--no-timing",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let log10_p: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(log10_p < 0.0 && log10_p > -1.5);
}
