use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn glocal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glocal")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = glocal(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn column(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

const K3: &str = "0 1\n1 2\n0 2\n";
const TWO_COMPONENTS: &str = "0 1\n1 2\n3 4\n";

#[test]
fn compute_degree_of_k3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "k3.edges", K3);
    let out = dir.path().join("out");
    ok(&["compute", "--input", &input, "--invariants", "deg", "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(out.join("degree.csv")).unwrap(), "vertex,degree\n0,2\n1,2\n2,2\n");
}

#[test]
fn compute_with_lcc_records_vertex_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "two.edges", TWO_COMPONENTS);
    let out = dir.path().join("out");
    ok(&["compute", "--input", &input, "--lcc", "--invariants", "deg", "--out", out.to_str().unwrap()]);
    assert_eq!(column(&out.join("degree.csv")).len(), 3);
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["vertex_map"], serde_json::json!([0, 1, 2]));
    assert_eq!(meta["lcc"], true);
}

#[test]
fn compute_nl3_of_k3_full_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "k3.edges", K3);
    let out = dir.path().join("out");
    ok(&["compute", "--input", &input, "--invariants", "nl3", "--eigs", "3", "--out", out.to_str().unwrap()]);
    for x in column(&out.join("nl3.csv")) {
        assert!((x - 1.0).abs() < 1e-9);
    }
}

#[test]
fn compute_is_deterministic_and_lcc_is_identity_on_connected_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "k4.edges", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n3 4\n");
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["compute", "--input", &input, "--eigs", "3", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        ok(&args);
        out
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    let c = run("c", &["--lcc"]);
    for f in ["degree.csv", "ss1.csv", "nl3.csv", "cc.csv", "lp.csv", "invariants.csv", "eigenvalues.csv", "metadata.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    for f in ["degree.csv", "ss1.csv", "nl3.csv", "cc.csv", "lp.csv", "eigenvalues.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn lcc_command() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "two.edges", TWO_COMPONENTS);
    let out = dir.path().join("lcc");
    ok(&["lcc", "--input", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(out.join("lcc.edges")).unwrap(), "%n 3\n0 1\n1 2\n");
    assert_eq!(fs::read_to_string(out.join("vertex_map.csv")).unwrap(), "vertex,original\n0,0\n1,1\n2,2\n");

    let input = write(dir.path(), "k3.edges", K3);
    let out = dir.path().join("lcc3");
    ok(&["lcc", "--input", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(out.join("lcc.edges")).unwrap(), "%n 3\n0 1\n0 2\n1 2\n");

    let empty = write(dir.path(), "empty.edges", "# no edges\n");
    let status = glocal(&["lcc", "--input", &empty, "--out", out.to_str().unwrap()]).status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn convert_command() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "degree.csv", "vertex,degree\n0,2\n1,3\n");
    let glcv = dir.path().join("degree.glcv");
    let back = dir.path().join("back.csv");
    ok(&["convert", "-i", &csv, "-o", glcv.to_str().unwrap()]);
    ok(&["convert", "-i", glcv.to_str().unwrap(), "-o", back.to_str().unwrap()]);
    assert_eq!(fs::read(&back).unwrap(), fs::read(&csv).unwrap());

    let el = write(dir.path(), "g.edges", "0 1\n1 2\n");
    let mtx = dir.path().join("g.mtx");
    ok(&["convert", "-i", &el, "-o", mtx.to_str().unwrap()]);
    let text = fs::read_to_string(&mtx).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate pattern symmetric"));

    let status = glocal(&["convert", "-i", &csv, "-o", dir.path().join("x.mtx").to_str().unwrap()]).status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_command() {
    let dir = tempfile::tempdir().unwrap();
    let k4 = write(dir.path(), "k4.edges", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let out = ok(&["verify", "--input", &k4]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ss1         max |deviation| = 0e0"), "{text}");

    let random = dir.path().join("r.edges");
    ok(&["generate", "-n", "100", "-p", "0.1", "--seed", "5", "--out", random.to_str().unwrap()]);
    ok(&["verify", "--input", random.to_str().unwrap()]);

    let big = write(dir.path(), "big.edges", "%n 5000\n0 1\n");
    assert_eq!(glocal(&["verify", "--input", &big]).status.code(), Some(2));
}

#[test]
fn bench_command() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.edges");
    ok(&["generate", "-n", "500", "-p", "0.05", "--seed", "3", "--out", g.to_str().unwrap()]);
    let report = dir.path().join("r.json");
    ok(&["bench", "--input", g.to_str().unwrap(), "--eigs", "10", "--json", report.to_str().unwrap()]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["chained"]["eigensolver_runs"], 1);
    assert_eq!(r["independent"]["eigensolver_runs"], 3);

    let out = ok(&["bench", "--input", g.to_str().unwrap(), "--invariants", "deg"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("(0 eigensolver runs)"));
}

#[test]
fn exit_codes() {
    assert_eq!(glocal(&["compute"]).status.code(), Some(1));
    assert_eq!(glocal(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(glocal(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.edges", "0 x\n");
    let out = glocal(&["compute", "--input", &bad, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let missing = dir.path().join("missing.edges");
    let out = glocal(&["compute", "--input", missing.to_str().unwrap(), "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let k3 = write(dir.path(), "k3.edges", K3);
    let out = glocal(&["compute", "--input", &k3, "--invariants", "nl3", "--eigs", "3", "--tol", "1e-30", "--max-iter", "2", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
