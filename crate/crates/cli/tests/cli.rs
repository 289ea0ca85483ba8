use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_colombeau"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// Runs a subcommand and returns the exit code.
fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let o = bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn partial(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            "truncated.json",
            r#"{"eps": {"dyadic": {"first": 4, "last": 24}}, "val": {"nets": ["#,
        ),
        (
            "unknown.json",
            r#"{"eps": {"dyadic": {"first": 4, "last": 24}}, "val": {"nets": []}, "colour": 1}"#,
        ),
        (
            "bad_expr.json",
            r#"{"eps": {"dyadic": {"first": 4, "last": 24}}, "val": {"nets": [{"name": "x", "expr": "eps^^2"}]}}"#,
        ),
        (
            "bad_eps.json",
            r#"{"eps": {"values": [0.1, 0.5]}, "val": {"nets": [{"name": "x", "expr": "eps"}]}}"#,
        ),
        (
            "no_block.json",
            r#"{"eps": {"dyadic": {"first": 4, "last": 24}}}"#,
        ),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let out = tmp.path().join(format!("out_{name}"));
        assert_eq!(run("val", &cfg, &out, &[]), 2, "{name}");
        assert!(
            !out.exists() && !partial(&out).exists(),
            "{name} left output"
        );
    }
    let out = tmp.path().join("missing");
    assert_eq!(run("val", &tmp.path().join("nope.json"), &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn valuations_of_declared_nets() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("val");
    assert_eq!(run("val", &shipped("val.json"), &out, &["--check"]), 0);
    let rs = rows(&out.join("val.csv"));
    let get = |name: &str| rs.iter().find(|r| &r[0] == name).unwrap().clone();
    let sq = get("square");
    assert!((sq[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(&sq[5], "moderate");
    assert_eq!(&get("log")[6], "true");
    assert_eq!(&get("root")[6], "false");
    assert_eq!(&get("inverse")[5], "moderate");
    let rep = report(&out);
    assert_eq!(rep["tool"], "colombeau");
    assert_eq!(rep["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(rep["command"], "val");
    // defaults are recorded
    assert_eq!(rep["config"]["val"]["tail_fraction"], 0.5);
    assert_eq!(rep["config"]["val"]["b_tol"], 0.02);
}

#[test]
fn failed_expectation_exits_4_only_in_check_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "val.json",
        r#"{"eps": {"dyadic": {"first": 4, "last": 24}},
            "val": {"nets": [{"name": "sq", "expr": "eps^2", "expect_b": 3.0}]}}"#,
    );
    let out = tmp.path().join("o");
    assert_eq!(run("val", &cfg, &out, &["--check"]), 4);
    assert!(out.join("val.csv").exists());
    assert_eq!(report(&out)["checks"][0]["pass"], false);
    assert_eq!(run("val", &cfg, &out, &[]), 0);
}

#[test]
fn wave_front_of_delta_and_smooth_embeddings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("delta");
    assert_eq!(run("wf", &shipped("wf_delta.json"), &out, &["--check"]), 0);
    let singular: Vec<f64> = rows(&out.join("wf.csv"))
        .iter()
        .filter(|r| &r[2] == "singular")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert!(
        !singular.is_empty() && singular.iter().all(|&x| x == 0.0),
        "{singular:?}"
    );
    let svg = fs::read_to_string(out.join("wf.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(r#"width="1000" height="700""#));
    // the default band is written back for provenance
    assert!(report(&out)["config"]["wf"]["params"]["band"].is_array());

    let out = tmp.path().join("smooth");
    assert_eq!(run("wf", &shipped("wf_smooth.json"), &out, &["--check"]), 0);
    assert!(rows(&out.join("wf.csv")).iter().all(|r| &r[2] == "regular"));
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(
        run("wf", &shipped("wf_delta.json"), &a, &["--jobs", "1"]),
        0
    );
    assert_eq!(
        run("wf", &shipped("wf_delta.json"), &b, &["--jobs", "3"]),
        0
    );
    for f in ["wf.csv", "wf.svg", "report.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let (a, b) = (tmp.path().join("va"), tmp.path().join("vb"));
    assert_eq!(
        run("symbol", &shipped("symbol.json"), &a, &["--jobs", "1"]),
        0
    );
    assert_eq!(
        run("symbol", &shipped("symbol.json"), &b, &["--jobs", "4"]),
        0
    );
    assert_eq!(
        fs::read(a.join("ellipticity.csv")).unwrap(),
        fs::read(b.join("ellipticity.csv")).unwrap()
    );
}

#[test]
fn constant_field_gives_straight_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    assert_eq!(run("bichar", &shipped("bichar_const.json"), &out, &[]), 0);
    let rs = rows(&out.join("bichar.csv"));
    assert!(rs.len() > 10);
    for r in &rs {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        let (t, x, xi, tau, res) = (f(1), f(2), f(3), f(4), f(5));
        assert!((x - (-1.0 + 2.0 * t)).abs() < 1e-12, "{r:?}");
        assert_eq!((xi, tau), (1.0, -2.0));
        assert_eq!(res, 0.0);
    }
    assert!(fs::read_to_string(out.join("fan.svg"))
        .unwrap()
        .contains("<polyline"));
    assert_eq!(report(&out)["config"]["bichar"]["tau0"], -2.0);
}

#[test]
fn blow_up_truncation_exits_3_with_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    assert_eq!(run("bichar", &shipped("bichar_blowup.json"), &out, &[]), 3);
    let rep = report(&out);
    assert!(rep["guard"].as_str().unwrap().contains("truncated"));
    assert!(rep["summary"]["truncated_at"][0].is_number());
}

#[test]
fn weighted_multiplier_is_elliptic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(
        run("symbol", &shipped("symbol.json"), &out, &["--check"]),
        0
    );
    let rep = report(&out);
    assert_eq!(rep["summary"]["elliptic"], true);
    assert_eq!(rep["summary"]["in_class"], true);
    let rs = rows(&out.join("ellipticity.csv"));
    assert_eq!(rs.len(), 21);
}

#[test]
fn propagation_table_agrees_with_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    assert_eq!(run("prop", &shipped("prop.json"), &out, &["--check"]), 0);
    let rs = rows(&out.join("prop.csv"));
    assert!(rs.iter().any(|r| &r[1] == "flow") && rs.iter().any(|r| &r[1] == "wf"));
}

#[test]
fn resolved_config_runs_again_to_the_same_output() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(run("wf", &shipped("wf_delta.json"), &a, &[]), 0);
    let resolved = serde_json::to_string(&report(&a)["config"]).unwrap();
    let cfg = write_config(tmp.path(), "resolved.json", &resolved);
    let b = tmp.path().join("b");
    assert_eq!(run("wf", &cfg, &b, &[]), 0);
    assert_eq!(
        fs::read(a.join("wf.csv")).unwrap(),
        fs::read(b.join("wf.csv")).unwrap()
    );
}

/// Reduced grid and eps range; the xi-bound rows do not depend on either.
#[test]
fn small_hurd_sattinger_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "hs.json",
        r#"{
            "eps": {"log_gamma": {"lo": 3.0, "hi": 6.0, "count": 10}},
            "grid": [{"min": -2.0, "max": 1.0, "n": 128}, {"min": 0.0, "max": 3.0, "n": 128}],
            "hs": {"s0": 1.5, "ellipticity": false, "heatmap_every": 5, "save_fields": true}
        }"#,
    );
    let out = tmp.path().join("hs");
    let code = run("hs", &cfg, &out, &[]);
    assert_eq!(code, 0);
    for f in [
        "t_eps.csv",
        "bichar.csv",
        "xi_bound.csv",
        "conventions.csv",
        "wf.csv",
        "regions.json",
        "flow_vs_wf.csv",
        "fan.svg",
        "wf.svg",
        "heat_eps_00.svg",
        "heat_eps_05.svg",
        "heat_eps_09.svg",
        "fields/metadata.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let xb = rows(&out.join("xi_bound.csv"));
    assert_eq!(xb.len(), 10);
    assert!(xb.iter().all(|r| &r[4] == "true"));
    let rep = report(&out);
    let check = |name: &str| {
        rep["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap()["pass"]
            .clone()
    };
    assert_eq!(check("xi bound at s0"), true);
    assert_eq!(check("xi = xi0 before s0"), true);
    assert_eq!(check("|xi| >= 10 |xi0| after s0"), true);
    // the resolved setup replaces the top-level blocks
    assert!(rep["config"]["hs"]["setup"]["wf"]["band"].is_array());
    assert!(rep["config"].get("eps").is_none());
    let field = colombeau::io::load_gridfn(&out.join("fields")).unwrap();
    assert_eq!(field.eps().len(), 10);

    // explicit setup plus top-level eps is ambiguous
    let cfg = write_config(
        tmp.path(),
        "both.json",
        &serde_json::json!({
            "eps": {"values": [0.1, 0.01]},
            "hs": rep["config"]["hs"],
        })
        .to_string(),
    );
    let out2 = tmp.path().join("hs2");
    assert_eq!(run("hs", &cfg, &out2, &[]), 2);
    assert!(!out2.exists());
}
