use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn msrg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msrg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = msrg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let h = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (h, rows)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_one_day_emits_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    ok(&["simulate", "--params", s(&fixture("reference_msrg.json")), "--days", "1", "--seed", "3", "--out", s(&out)]);
    let (h, rows) = read_csv(&out);
    assert_eq!(h, ["date", "log_return", "realized_variance", "log_h", "state", "z", "u"]);
    assert_eq!(rows.len(), 1);
}

#[test]
fn simulate_is_deterministic_per_seed_and_measure() {
    let dir = tempfile::tempdir().unwrap();
    let f = |name: &str, seed: &str, m: &str| {
        let out = dir.path().join(name);
        ok(&["simulate", "--params", s(&fixture("reference_msrg.json")), "--days", "50", "--seed", seed, "--measure", m, "--out", s(&out)]);
        std::fs::read(out).unwrap()
    };
    assert_eq!(f("a", "5", "p"), f("b", "5", "p"));
    assert_ne!(f("c", "5", "p"), f("d", "6", "p"));
    assert_ne!(f("e", "5", "p"), f("f", "5", "q"));
}

#[test]
fn martingale_suite_passes_on_reference_fixture() {
    let out = msrg(&["validate", "--suite", "martingale", "--params", s(&fixture("reference_msrg.json"))]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn filter_suite_passes_on_reference_fixture() {
    let out = msrg(&["validate", "--suite", "filter", "--params", s(&fixture("reference_msrg.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn filter_and_vix_cover_every_day() {
    let dir = tempfile::tempdir().unwrap();
    let probs = dir.path().join("probs.csv");
    let vix = dir.path().join("vix.csv");
    let params = fixture("reference_msrg.json");
    let data = fixture("returns_rv.csv");
    ok(&["filter", "--data", s(&data), "--params", s(&params), "--out", s(&probs)]);
    ok(&["vix", "--data", s(&data), "--params", s(&params), "--out", s(&vix)]);
    let (h, rows) = read_csv(&probs);
    assert_eq!(h, ["date", "log_h", "filt_0", "filt_1", "pred_0", "pred_1"]);
    assert_eq!(rows.len(), 10);
    for r in &rows {
        let a: f64 = r[2].parse().unwrap();
        let b: f64 = r[3].parse().unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }
    let (h, rows) = read_csv(&vix);
    assert_eq!(h, ["date", "vix"]);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0));
}

/// The expansion drifts from simulation in the wings, where the
/// state-conditional kurtosis is large; near the money the two methods must
/// agree to a few percent.
#[test]
fn edgeworth_and_mc_agree_near_the_money() {
    let dir = tempfile::tempdir().unwrap();
    let ew = dir.path().join("ew.csv");
    let mc = dir.path().join("mc.csv");
    let (params, quotes, data) = (fixture("reference_msrg.json"), fixture("options.csv"), fixture("returns_rv.csv"));
    let common = ["--params", s(&params), "--quotes", s(&quotes), "--data", s(&data)];
    let mut a = vec!["price", "--method", "edgeworth", "--out", s(&ew)];
    a.extend(common);
    ok(&a);
    let mut b = vec!["price", "--method", "mc", "--paths", "100000", "--seed", "9", "--out", s(&mc)];
    b.extend(common);
    ok(&b);
    let (h, e) = read_csv(&ew);
    assert_eq!(h, ["date", "strike", "kind", "dtm_days", "price", "se", "implied_vol", "floored", "market_price"]);
    let (_, m) = read_csv(&mc);
    assert_eq!(e.len(), 10);
    let mut checked = 0;
    for (x, y) in e.iter().zip(&m) {
        let strike: f64 = x[1].parse().unwrap();
        let pe: f64 = x[4].parse().unwrap();
        let pm: f64 = y[4].parse().unwrap();
        let se: f64 = y[5].parse().unwrap();
        assert!(x[5].is_empty() && se > 0.0);
        if (strike - 100.0).abs() <= 5.0 {
            let tol = (0.10 * pm).max(4.0 * se);
            assert!((pe - pm).abs() <= tol, "K={strike} T={}: edgeworth {pe} vs mc {pm} ± {se}", x[3]);
            checked += 1;
        }
    }
    assert_eq!(checked, 6);
}

#[test]
fn rerun_from_embedded_config_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.csv");
    ok(&["simulate", "--params", s(&fixture("reference_msrg.json")), "--days", "300", "--seed", "21", "--out", s(&sim)]);
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[estimation]\nmode = \"p-only\"\nrestarts = 1\nmax_iters = 300\n").unwrap();
    let first = dir.path().join("fit1.json");
    let second = dir.path().join("fit2.json");
    ok(&["estimate", "--data", s(&sim), "--states", "2", "--config", s(&cfg), "--out", s(&first)]);
    ok(&["estimate", "--data", s(&sim), "--config", s(&first), "--out", s(&second)]);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let art: serde_json::Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    assert_eq!(art["schema_version"], 1);
    assert_eq!(art["config"]["estimation"]["restarts"], 1);
    assert_eq!(art["config"]["data"]["maturity_filter"], true);
    // The fitted artifact feeds the other commands.
    let probs = dir.path().join("p.csv");
    ok(&["filter", "--data", s(&sim), "--params", s(&first), "--out", s(&probs)]);
}

#[test]
fn errors_are_json_on_stderr() {
    let out = msrg(&["filter", "--data", "/nonexistent.csv", "--params", s(&fixture("reference_msrg.json")), "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "io");
    assert!(v["error"]["message"].as_str().unwrap().contains("nonexistent"));

    let out = msrg(&["simulate", "--days", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "usage");
}

#[test]
fn bad_artifact_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("fit.json");
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(fixture("reference_msrg.json")).unwrap()).unwrap();
    v["schema_version"] = 99.into();
    std::fs::write(&p, v.to_string()).unwrap();
    let out = msrg(&["simulate", "--params", s(&p), "--days", "1", "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
}
