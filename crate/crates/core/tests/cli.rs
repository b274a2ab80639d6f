use std::path::Path;
use std::process::{Command, Output};

use kacstroock::levy::{levy_exponent, JumpLaw, LevyTriplet};
use kacstroock::report::{Manifest, MANIFEST};

fn run(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kacstroock"));
    cmd.args(args).env_remove("KACSTROOCK_OUT_DIR");
    if let Some(dir) = out_dir {
        cmd.arg("--out-dir").arg(dir);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST)).unwrap()).unwrap()
}

#[test]
fn classify_prints_the_class() {
    let o = run(&["classify", "--family", "poisson", "--rate", "1", "--theta", "3.14159265"], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "RealDegenerate");
    let o = run(&["classify", "--family", "poisson", "--rate", "1", "--theta", "1.5707963267948966,1.0471975511965976"], None);
    assert!(stdout(&o).ends_with("admissible\n"), "{}", stdout(&o));
    let o = run(&["classify", "--family", "brownian", "--theta=-3"], None);
    assert_eq!(stdout(&o).trim(), "ComplexAdmissible");
}

#[test]
fn exponent_prints_full_precision() {
    let o = run(&["exponent", "--family", "compound-poisson", "--rate", "2", "--jumps", "-1:0.5,1:0.5", "--u-steps", "9"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,a,b,c"));
    let tr = LevyTriplet::compound_poisson(2.0, JumpLaw::symmetric(1.0).unwrap()).unwrap();
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let u: f64 = f[0].parse().unwrap();
        let e = levy_exponent(u, &tr).unwrap();
        assert_eq!(f[1].parse::<f64>().unwrap().to_bits(), e.a_part.to_bits());
        assert_eq!(f[2].parse::<f64>().unwrap().to_bits(), e.b_part.to_bits());
        if e.a_part > 1e-12 {
            assert_eq!(f[3].parse::<f64>().unwrap().to_bits(), e.normalization().to_bits());
        } else {
            assert_eq!(f[3], "");
        }
        rows += 1;
    }
    assert_eq!(rows, 9);
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--config", "missing.json"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(run(&["--help"], None).status.code(), Some(0));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"triplet\": {\"family\": \"poisson\", \"params\": {\"rate\": 1}},\n  \"thetas\": [1.0],\n  \"epsilon\": 0,\n  \"T\": 1, \"replicas\": 100\n}\n").unwrap();
    let o = run(&["verify", "--config", bad.to_str().unwrap()], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("epsilon"), "{}", stderr(&o));
}

#[test]
fn degenerate_angles_are_refused_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "--family", "poisson", "--rate", "1", "--epsilon", "0.1", "--replicas", "2"];
    let o = run(&[&base[..], &["--theta", "6.283185307179586"]].concat(), Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NullDegenerate"), "{}", stderr(&o));
    let o = run(&[&base[..], &["--theta", "1.5707963267948966,1.5707963267948966"]].concat(), Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a(θ1−θ2)"), "{}", stderr(&o));
    assert!(!dir.path().join(MANIFEST).exists());
}

#[test]
fn verify_writes_reproducible_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let args = ["verify", "--preset", "poisson-pi-half", "--replicas", "600", "--seed", "3", "--workers", "1"];
    let a = root.path().join("a");
    let b = root.path().join("b");
    let oa = run(&args, Some(&a));
    assert_eq!(oa.status.code(), Some(0), "{}{}", stdout(&oa), stderr(&oa));
    let ob = run(&["verify", "--preset", "poisson-pi-half", "--replicas", "600", "--seed", "3", "--workers", "2"], Some(&b));
    assert_eq!(ob.status.code(), Some(0));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma, mb);
    let names: Vec<&str> = ma.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["report.json", "summary.csv", "variance_profile.csv", "ks.csv"]);
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("name,estimate,standard_error,target,tolerance,kind,verdict\n"));
    assert!(stdout(&oa).lines().any(|l| l.starts_with("var_re") && l.ends_with("pass")));

    // Refuses to overwrite, then succeeds with --force.
    let again = run(&args, Some(&a));
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));
    let forced = run(&[&args[..], &["--force"]].concat(), Some(&a));
    assert_eq!(forced.status.code(), Some(0));
    assert_eq!(manifest(&a), ma);
}

#[test]
fn failed_verdicts_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // Far from the limit: ε = 1 leaves visible bias in the variance.
    let o = run(
        &["verify", "--family", "poisson", "--rate", "1", "--theta", "1.5707963267948966", "--epsilon", "1", "--T", "0.5", "--replicas", "2000"],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_kacstroock"))
        .args(["simulate", "--family", "poisson", "--rate", "1", "--theta", "1.5707963267948966", "--epsilon", "0.2"])
        .args(["--replicas", "3", "--n-out", "4", "--dump-driver"])
        .env("KACSTROOCK_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<String> = manifest(&target).files.into_iter().map(|f| f.path).collect();
    assert_eq!(names, ["paths.csv", "paths.json", "driver_0.csv", "driver_1.csv", "driver_2.csv"]);
    let paths = std::fs::read_to_string(target.join("paths.csv")).unwrap();
    let mut lines = paths.lines();
    assert_eq!(lines.next(), Some("replica,t,re,im"));
    assert_eq!(lines.count(), 3 * 5);
    assert!(std::fs::read_to_string(target.join("driver_0.csv")).unwrap().starts_with("t,X\n0,0\n"));
}

#[test]
fn hypothesis_prints_json_rows() {
    let o = run(
        &["hypothesis", "--family", "poisson", "--rate", "1", "--theta", "1.5707963267948966", "--eps-ladder", "0.2,0.1", "--mode", "closed"],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["quadrature"].is_null()));
    assert!(stderr(&o).contains("H2 gap ε-exponent"));
}
