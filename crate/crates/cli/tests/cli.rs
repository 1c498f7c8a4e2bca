use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn riley(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riley"));
    cmd.args(args).env_remove("RILEY_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("RILEY_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_code(out: &Output) -> String {
    json(out)["error"]["code"].as_str().unwrap().to_string()
}

#[test]
fn report_for_six_two() {
    let out = riley(&["report", "--pq", "11", "3", "--samples=-3.9,-1,1,7.9"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["certificates"].as_array().unwrap().len(), 4);
    let interval = &v["claimed_interval"];
    assert_eq!(interval["lo"]["value"], "-4");
    assert_eq!(interval["hi"]["value"], "8");
    for end in ["lo", "hi"] {
        assert_eq!(interval[end]["open"], true);
        assert_eq!(interval[end]["asymptotic"], true);
    }
    assert_eq!(v["irreducibility_basis"], "non_torus_two_bridge");
    let cert = &v["certificates"][2];
    assert_eq!(cert["slope"]["num"], "1");
    assert_eq!(cert["khoi_class"], "real_hyperbolic");
    assert_eq!(cert["lifting"]["family_contains_inverse_integer_slope"], true);
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["certify", "--pq", "11", "3", "--slope", "5/2"];
    let a = riley(&args, None);
    let b = riley(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cache_hit_matches_miss() {
    let dir = tempfile::tempdir().unwrap();
    let plain = riley(&["certify", "--pq", "11", "3", "--slope=-2"], None);
    let miss = riley(&["certify", "--pq", "11", "3", "--slope=-2"], Some(dir.path()));
    let stored: Vec<_> = walk(dir.path());
    assert_eq!(stored.len(), 1, "{stored:?}");
    let hit = riley(&["certify", "--pq", "11", "3", "--slope=-2"], Some(dir.path()));
    assert!(miss.status.success());
    assert_eq!(plain.stdout, miss.stdout);
    assert_eq!(miss.stdout, hit.stdout);
    let poly_miss = riley(&["poly", "--pq", "13", "5"], Some(dir.path()));
    let poly_hit = riley(&["poly", "--pq", "13", "5"], Some(dir.path()));
    assert_eq!(poly_miss.stdout, poly_hit.stdout);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn selftest_passes() {
    let out = riley(&["selftest", "--max-p", "13"], None);
    assert!(out.status.success());
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn transfer_example() {
    let out = riley(&["transfer", "--eps", "1,-1,1", "--c", "0,0"], None);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["d"], 3);
    assert_eq!(v["transferred_interval"]["lo"], "-12");
    assert_eq!(v["transferred_interval"]["hi"], "24");
    let out = riley(&["transfer", "--eps=-1", "--source=-4,8"], None);
    let v = json(&out);
    assert_eq!(v["transferred_interval"]["lo"], "-8");
    assert_eq!(v["transferred_interval"]["hi"], "4");
}

#[test]
fn knot_selectors_agree() {
    let pq = riley(&["poly", "--pq", "11", "3"], None);
    let cf = riley(&["poly", "--cf", "3,1,2"], None);
    assert!(pq.status.success() && cf.status.success());
    assert_eq!(pq.stdout, cf.stdout);
    let both = riley(&["poly", "--pq", "11", "3", "--cf", "3,1,2"], None);
    assert!(!both.status.success());
}

#[test]
fn trace_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    let out = riley(
        &[
            "trace",
            "--pq",
            "11",
            "3",
            "--band",
            "inverse-quartic",
            "--output",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u,residual,slope,dPdu,dPdt"));
    assert!(lines.count() > 100);
}

#[test]
fn exit_statuses() {
    let torus = riley(&["report", "--pq", "3", "1", "--samples", "1"], None);
    assert_eq!(torus.status.code(), Some(1));
    assert_eq!(error_code(&torus), "TorusKnot");

    let endpoint = riley(&["certify", "--pq", "11", "3", "--slope", "8"], None);
    assert_eq!(endpoint.status.code(), Some(1));
    assert_eq!(error_code(&endpoint), "OutOfRange");

    let low = riley(&["--precision", "20", "poly", "--pq", "5", "3"], None);
    assert_eq!(low.status.code(), Some(1));
    assert_eq!(error_code(&low), "InvalidConfig");

    let fold = riley(&["trace", "--pq", "5", "3", "--param", "by-t"], None);
    assert_eq!(fold.status.code(), Some(2));
    assert_eq!(error_code(&fold), "GuardDegenerate");

    let not_knot = riley(&["poly", "--pq", "9", "3"], None);
    assert_eq!(error_code(&not_knot), "NotTwoBridge");

    let t_one = riley(&["slope", "--pq", "11", "3", "--t", "1", "--u", "0.5"], None);
    assert_eq!(error_code(&t_one), "InvalidT");
}
