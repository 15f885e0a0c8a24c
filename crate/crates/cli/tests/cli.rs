use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ogp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ogp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let h = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect())
        .collect();
    (h, rows)
}

fn scheme2_csv() -> String {
    let mut s = String::from("x1,y\n");
    for i in 0..=8 {
        let x = i as f64 / 8.0;
        s += &format!("{x:?},{:?}\n", (2.0 * x).sin());
    }
    s
}

const SE_CONFIG: &str = r#"{
    "schema_version": 1,
    "domain": {"lower": [0.0], "upper": [1.0]},
    "basis": {"type": "linear"},
    "kernel": {"family": "squared_exponential", "lengthscales": [1.0]},
    "method": "OGP"
}"#;

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn fit_scheme2_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &scheme2_csv());
    write(dir.path(), "config.json", SE_CONFIG);
    let o = ogp(&["fit", "--data", "data.csv", "--config", "config.json", "--out", "fit.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = read_json(&dir.path().join("fit.json"));
    let b = floats(&fit["fit"]["beta_hat_original"]);
    assert!((b[0] - 0.22).abs() < 0.005 && (b[1] - 0.98).abs() < 0.005, "{b:?}");
    assert_eq!(fit["fingerprint"].as_str().unwrap().len(), 64);
    assert_eq!(fit["config"]["orthogonalization"]["mode"], "closed_form");
}

#[test]
fn empty_csv_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", "x1,y\n");
    write(dir.path(), "config.json", SE_CONFIG);
    let o = ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no data rows"), "{}", stderr(&o));
}

#[test]
fn malformed_row_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", "x1,y\n0.1,0.2\n0.5,abc\n");
    write(dir.path(), "config.json", SE_CONFIG);
    let o = ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &scheme2_csv());
    write(dir.path(), "config.json", &SE_CONFIG.replace("\"method\"", "\"nugget\": 0, \"method\""));
    let o = ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nugget"), "{}", stderr(&o));
}

#[test]
fn dependent_basis_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &scheme2_csv());
    let cfg = SE_CONFIG.replace(r#"{"type": "linear"}"#, r#"{"type": "affine", "rows": [[1, 2], [2, 4]]}"#);
    write(dir.path(), "config.json", &cfg);
    let o = ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rank deficient"), "{}", stderr(&o));
}

#[test]
fn matern_quadrature_mle_fit_records_mode() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = String::from("x1,x2,y\n");
    for i in 0..12 {
        let a = (i as f64 * 0.37).fract();
        let b = 10.0 + 10.0 * (i as f64 * 0.61).fract();
        data += &format!("{a:?},{b:?},{:?}\n", a * a + (b / 7.0).sin());
    }
    write(dir.path(), "data.csv", &data);
    write(
        dir.path(),
        "config.json",
        r#"{
            "schema_version": 1,
            "domain": {"lower": [0, 10], "upper": [1, 20]},
            "basis": {"type": "monomial", "terms": [[], [1], [2]]},
            "kernel": {"family": "matern32", "lengthscales": [1, 1]},
            "method": "OGP",
            "orthogonalization": {"mode": "quadrature", "order": 24},
            "mle": {"lower": [0.2, 0.2], "upper": [4, 4], "starts": 2, "max_evals": 60}
        }"#,
    );
    let o = ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = read_json(&dir.path().join("fit.json"));
    assert_eq!(fit["config"]["orthogonalization"]["mode"], "quadrature");
    assert_eq!(fit["config"]["orthogonalization"]["order"], 24);
    assert_eq!(fit["config"]["mle"]["tol"], 1e-6);
    assert_eq!(fit["fit"]["diagnostics"]["starts"].as_array().unwrap().len(), 2);
}

#[test]
fn predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &scheme2_csv());
    let cfg = SE_CONFIG.replace("\"OGP\"", "\"UK\"");
    write(dir.path(), "config.json", &cfg);
    assert!(ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path())
        .status
        .success());
    let mut pts = String::from("x1\n");
    for i in 0..=8 {
        pts += &format!("{:?}\n", i as f64 / 8.0);
    }
    for i in 0..20 {
        pts += &format!("{:?}\n", (i as f64 + 0.5) / 20.0);
    }
    write(dir.path(), "points.csv", &pts);
    let o = ogp(&["predict", "--fit", "fit.json", "--points", "points.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("predictions.csv"));
    assert_eq!(header, ["x1", "mean", "variance", "trend", "stochastic"]);

    let fit = read_json(&dir.path().join("fit.json"));
    let beta = floats(&fit["fit"]["beta_hat"]);
    for (i, r) in rows.iter().enumerate() {
        let (x, mean, var, trend, stoch) = (r[0], r[1], r[2], r[3], r[4]);
        if i <= 8 {
            assert!((mean - (2.0 * x).sin()).abs() < 1e-8, "{r:?}");
        }
        assert!(var >= 0.0);
        // trend recomputed from the canonical basis (1, u) with u = 2x - 1
        let u = 2.0 * x - 1.0;
        assert!((trend - (beta[0] + beta[1] * u)).abs() < 1e-12, "{r:?}");
        assert!((mean - trend - stoch).abs() < 1e-12);
    }
}

#[test]
fn predict_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &scheme2_csv());
    write(dir.path(), "config.json", SE_CONFIG);
    assert!(ogp(&["fit", "--data", "data.csv", "--config", "config.json"], dir.path())
        .status
        .success());
    write(dir.path(), "points.csv", "x1,x2\n0.5,0.5\n");
    let o = ogp(&["predict", "--fit", "fit.json", "--points", "points.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eigen_writes_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "config.json", SE_CONFIG);
    let o = ogp(&["eigen", "--config", "config.json", "--k", "3", "--grid-points", "41"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("eigen.csv"));
    assert_eq!(header, ["x1", "f1", "f2", "f3"]);
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[40][0], 1.0);
    let side = read_json(&dir.path().join("eigen.eigenvalues.json"));
    let lam = floats(&side["eigenvalues"]);
    assert_eq!(lam.len(), 3);
    assert!(lam.windows(2).all(|w| w[0] >= w[1]));
    // the leading OGP eigenfunction is even on a symmetric domain
    assert!((rows[0][1] - rows[40][1]).abs() < 1e-8);
}

#[test]
fn unknown_study_lists_choices() {
    let dir = tempfile::tempdir().unwrap();
    let o = ogp(&["bench", "table9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("table1") && e.contains("borehole") && e.contains("multifidelity"), "{e}");
}

#[test]
fn bench_effects_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = ogp(&["bench", "effects-check", "--out-dir", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("matern32") && stdout.contains("max relative error"), "{stdout}");
    let (header, rows) = read_csv_mixed(&dir.path().join("out/effects-check.csv"));
    let cols: Vec<usize> = ["mean", "linear", "im", "ill"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    assert_eq!(rows.len(), 15);
    for r in &rows {
        for &c in &cols {
            assert!(r[c].parse::<f64>().unwrap() <= 1e-8, "{r:?}");
        }
    }
}

fn read_csv_mixed(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let h = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (h, rows)
}

#[test]
fn bench_table1_matches_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let o = ogp(&["bench", "table1", "--out-dir", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rep = read_json(&dir.path().join("table1.json"));
    let rows = rep["report"]["rows"].as_array().unwrap();
    let ogp_se = rows
        .iter()
        .find(|r| r["method"] == "OGP" && r["family"] == "squared_exponential")
        .unwrap();
    let b = floats(&ogp_se["scheme2"]["beta_hat"]);
    assert!((b[0] - 0.22).abs() < 0.005 && (b[1] - 0.98).abs() < 0.005, "{b:?}");
    assert_eq!(rep["schema_version"], 1);
}

#[test]
fn bench_borehole_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench", "borehole", "--n", "20", "--reps", "2", "--seed", "7"];
    for out in ["a", "b"] {
        let mut a = args.to_vec();
        a.extend(["--out-dir", out]);
        let o = ogp(&a, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["borehole.json", "borehole.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let rep = read_json(&dir.path().join("a/borehole.json"));
    assert_eq!(rep["report"]["config"]["seed"], 7);
    assert_eq!(rep["report"]["runs"].as_array().unwrap().len(), 6);
}

#[test]
fn bench_multifidelity_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    let closed = ogp(&["bench", "multifidelity", "--out-dir", "c"], dir.path());
    assert!(closed.status.success(), "{}", stderr(&closed));
    let quad = ogp(&["bench", "multifidelity", "--quadrature", "--out-dir", "q"], dir.path());
    assert!(quad.status.success(), "{}", stderr(&quad));
    let c = read_json(&dir.path().join("c/multifidelity.json"));
    let q = read_json(&dir.path().join("q/multifidelity.json"));
    assert_eq!(c["report"]["orthogonalization"], "closed_form");
    assert_eq!(q["report"]["orthogonalization"], "quadrature");
    assert_ne!(c["fingerprint"], q["fingerprint"]);
    let find = |r: &Value| {
        r["report"]["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|row| row["method"] == "OGP")
            .map(|row| floats(&row["beta_hat"]))
            .unwrap()
    };
    let (bc, bq) = (find(&c), find(&q));
    assert!(bc.iter().zip(&bq).all(|(a, b)| (a - b).abs() < 1e-6), "{bc:?} {bq:?}");
}
