use std::process::{Command, Output};

use serde_json::Value;

fn conecut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conecut"))
        .args(args)
        .env_remove("CONECUT_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

#[test]
fn nodal_cubic_and_cusp_exceptional_points() {
    let out = conecut(&["resolve-curve", "--poly", "y^2 - x^2*(x+1)", "--samples", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["chart"], 1);
    assert_eq!(v["exceptional_exact"], serde_json::json!(["-1", "1"]));
    assert!(v["cloud"].as_array().unwrap().len() >= 9);
    assert!(v["strict_transform_poly"].is_string());

    let cusp = json(&conecut(&[
        "resolve-curve",
        "--poly",
        "y^2 - x^3",
        "--chart",
        "1",
        "--samples",
        "4",
    ]));
    assert_eq!(cusp["exceptional_exact"], serde_json::json!(["0"]));
    assert_eq!(cusp["multiplicities"], serde_json::json!([2]));
}

#[test]
fn curve_cloud_as_csv() {
    let out = conecut(&["resolve-curve", "--poly", "y", "--samples", "5", "--out", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,s"));
    for line in lines {
        let s: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(s, 0.0);
    }
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.json");
    let out = conecut(&["sphere-demo", "--samples", "50", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, conecut(&["sphere-demo", "--samples", "50"]).stdout);
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let args = [
        "verify",
        "--seed",
        "7",
        "--samples",
        "40",
        "--suite",
        "atlas",
        "--suite",
        "groupoid",
    ];
    let a = conecut(&args);
    let b = conecut(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    let names: Vec<&str> = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["atlas", "groupoid"]);
    assert!(v["max_residuals"]["atlas"].is_f64());
}

#[test]
fn seed_from_environment_and_config_file() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_conecut"))
        .args(["verify", "--samples", "10", "--suite", "models"])
        .env("CONECUT_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(json(&with_env)["seed"], 5);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 11\nsamples = 10\n").unwrap();
    let from_file = json(&conecut(&[
        "verify",
        "--suite",
        "models",
        "--config",
        cfg.to_str().unwrap(),
    ]));
    assert_eq!(
        (from_file["seed"].as_u64(), from_file["samples"].as_u64()),
        (Some(11), Some(10))
    );
    let flag_wins = json(&conecut(&[
        "verify",
        "--suite",
        "models",
        "--seed",
        "3",
        "--config",
        cfg.to_str().unwrap(),
    ]));
    assert_eq!(flag_wins["seed"], 3);
}

#[test]
fn tight_tolerance_reports_named_failures() {
    let out = conecut(&["verify", "--samples", "20", "--suite", "euler", "--tol.euler", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let failed: Vec<&str> = v["suites"][0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"chi_normal_derivative"), "{failed:?}");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    assert_eq!(conecut(&["resolve-curve", "--poly", "y^2 - "]).status.code(), Some(2));
    assert_eq!(
        conecut(&["resolve-curve", "--poly", "y", "--chart", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(conecut(&["verify", "--tol.nosuch", "1"]).status.code(), Some(2));
    assert_eq!(conecut(&["verify", "--suite", "nosuch"]).status.code(), Some(2));
    assert_eq!(conecut(&["sphere-demo", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(conecut(&["bogus"]).status.code(), Some(2));
    let ring = conecut(&["dnc-ring-demo", "--element", "t^-1", "--dim", "2", "--slice-dim", "1"]);
    assert_eq!(ring.status.code(), Some(2));
}

#[test]
fn groupoid_demo_isotropy() {
    let v = json(&conecut(&["groupoid-demo", "--samples", "60"]));
    let iso = v["blowup_isotropy"].as_array().unwrap();
    assert_eq!(
        (iso[0]["isotropy_dim"].as_u64(), iso[0]["orbit_dim"].as_u64()),
        (Some(1), Some(0))
    );
    assert_eq!(
        (iso[1]["isotropy_dim"].as_u64(), iso[1]["orbit_dim"].as_u64()),
        (Some(0), Some(1))
    );
    assert_eq!(v["axioms"].as_array().unwrap().len(), 4);
}

#[test]
fn euler_demo_identity_and_rejection() {
    let out = conecut(&["euler-demo", "--xi", "0.3,-0.2", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["chi_identity_residual"].as_f64().unwrap() <= 1e-10);

    let bad = conecut(&["euler-demo", "--field", "2*x1", "--xi", "0.1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["euler_like"]["normal_block_is_identity"], false);
}

#[test]
fn ring_demo_characters() {
    let v = json(&conecut(&[
        "dnc-ring-demo",
        "--element",
        "x1^2*t^-2 + y1*x1*t^-1 + 3",
        "--dim",
        "2",
        "--slice-dim",
        "1",
        "--x",
        "1/2,3",
        "--s",
        "2",
    ]));
    assert_eq!(v["char_xs"]["value"]["exact"], "6");
    assert_eq!(v["char_yxi"]["value"]["exact"], "5");
}

#[test]
fn dnc_and_check_map() {
    let v = json(&conecut(&["dnc-demo", "--points", "3"]));
    assert_eq!(v["evaluations"].as_array().unwrap().len(), 3);
    assert!(v["continuity"][0]["fit"]["slope"].as_f64().unwrap() >= 0.99);

    let ok = conecut(&[
        "check-map",
        "--map",
        "x1 + x2^2, 3*x2 - x1*x2",
        "--slice-dim",
        "1",
        "--samples",
        "20",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["ranks"]["fiberwise_rank_dn"]["min"], 1);
    let shifted = conecut(&[
        "check-map",
        "--map",
        "x1, x2 + 1",
        "--slice-dim",
        "1",
        "--samples",
        "20",
    ]);
    assert_eq!(shifted.status.code(), Some(1));
}
