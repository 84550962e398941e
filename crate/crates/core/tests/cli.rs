use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn permuton(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permuton")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn star12_uniform_grid_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = permuton(dir.path(), &["star12", "--rho", "0.5", "--grid", "8", "--out", "g.csv", "--manifest", "run.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let man = json(&dir.path().join("run.json"));
    assert_eq!(man["command"], "star12");
    assert_eq!(man["scalars"]["entropy"], 0.0);
    assert_eq!(man["scalars"]["exit_code"], 0);
    let text = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(text.starts_with("m=8\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').all(|v| v == "1.5625000000000000e-2")));
    let side = json(&dir.path().join("g.json"));
    assert_eq!(side["m"], 8);
    assert_eq!(side["densities"]["12"], 0.5);
}

#[test]
fn grid_files_flow_between_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(permuton(d, &["star12", "--rho", "0.3", "--grid", "32", "--out", "g.csv"]).status.success());
    let o = permuton(d, &["entropy", "--in", "g.csv", "--levels", "32,16,8"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("m = 8: entropy"));
    let o = permuton(d, &["heatflow", "--in", "g.csv", "--t", "0.05", "--out", "s.csv"]);
    assert!(o.status.success());
    let o = permuton(d, &["density", "--in", "s.csv", "--pattern", "12,123"]);
    assert!(o.status.success() && stdout(&o).contains("123 = "));
    let o = permuton(d, &["insertion", "--in", "g.csv", "--my", "32", "--out", "f.csv"]);
    assert!(o.status.success());
    let o = permuton(d, &["insertion", "--family", "f.csv", "--reconstruct", "16", "--out", "back.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = permuton(d, &["pde-check", "--in", "g.csv", "--model", "12"]);
    assert!(o.status.success() && stdout(&o).contains("rms_residual"));
    let o = permuton(d, &["optimize", "--constraints", "12=0.3", "--grid", "16", "--out", "opt.csv", "--pgm", "opt.pgm"]);
    assert!(o.status.success());
    assert!(fs::read(d.join("opt.pgm")).unwrap().starts_with(b"P5\n16 16\n255\n"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a", "b"] {
        let out = format!("{name}.csv");
        assert!(permuton(d, &["--seed", "11", "sweep-ab", "--na", "3", "--nb", "2", "--trials", "1e4", "--out", &out]).status.success());
        let out = format!("{name}.txt");
        assert!(permuton(d, &["sample", "--star12-rho", "0.3", "--grid", "64", "--n", "40", "--seed", "5", "--out", &out]).status.success());
        let out = format!("{name}-opt.csv");
        assert!(permuton(d, &["optimize", "--constraints", "12=0.6,123=0.25", "--grid", "12", "--out", &out]).status.success());
    }
    for (a, b) in [("a.csv", "b.csv"), ("a.txt", "b.txt"), ("a-opt.csv", "b-opt.csv"), ("a-opt.json", "b-opt.json")] {
        assert_eq!(fs::read(d.join(a)).unwrap(), fs::read(d.join(b)).unwrap(), "{a} vs {b}");
    }
    let other = permuton(d, &["sample", "--star12-rho", "0.3", "--grid", "64", "--n", "40", "--seed", "6"]);
    assert_ne!(stdout(&other).trim(), fs::read_to_string(d.join("a.txt")).unwrap().trim());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = permuton(d, &["star12", "--unknown-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(permuton(d, &["density", "--in", "missing.csv"]).status.code(), Some(1));
    assert_eq!(permuton(d, &["ldp", "--rho", "1.5", "--eps", "0.05"]).status.code(), Some(2));
    assert_eq!(permuton(d, &["solve-star", "--terms", "1,0;2,0", "--targets", "0.5,0.2"]).status.code(), Some(3));
    let o = permuton(d, &["optimize", "--constraints", "12=0.4,123=0.25", "--grid", "12", "--max-iter", "300", "--manifest", "m.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("converged = false"));
    assert_eq!(json(&d.join("m.json"))["scalars"]["exit_code"], 3);
}

#[test]
fn spec_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = permuton(d, &["ldp", "--rho", "0.4", "--eps", "0.05", "--n", "200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("estimate = -0.0201") && text.contains("limit = -0.0457"), "{text}");
    let o = permuton(d, &["ldp", "--rho", "0.4", "--eps", "0.05", "--n", "50,100", "--json"]);
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["points"].as_array().unwrap().len(), 2);
    let o = permuton(d, &["solve-star", "--classes", "*2,**3", "--targets", "0.5,0.53", "--out", "sol.json"]);
    assert!(o.status.success());
    assert_eq!(json(&d.join("sol.json"))["alpha"].as_array().unwrap().len(), 2);
    let o = permuton(d, &["region", "--model", "star23", "--samples", "50", "--out", "c.csv"]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(d.join("c.csv")).unwrap().lines().count(), 101);
    let o = permuton(d, &["region", "--model", "123-321", "--samples", "20"]);
    assert!(o.status.success() && stdout(&o).contains("F1: (0.000000, 1.000000) -> (1.000000, 0.000000)"));
    let o = permuton(d, &["density", "--perm", "2413", "--pattern", "12,**3"]);
    assert!(stdout(&o).contains("12 = 0.5"), "{}", stdout(&o));
    let o = permuton(d, &["density", "--gamma", "0.5,0.25", "--pattern", "12", "--mc", "2e4"]);
    assert!(o.status.success() && stdout(&o).contains("±"));
}
