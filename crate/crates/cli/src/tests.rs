use std::fs;
use std::path::Path;

use clap::Parser;
use serde_json::{json, Value};
use tempfile::TempDir;

use crate::args::Cli;
use crate::outcome::Status;

fn run_args(args: &[&str]) -> (Status, Value, String) {
    let cli = Cli::try_parse_from(std::iter::once("lipfree").chain(args.iter().copied()))
        .expect("arguments parse");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = super::run(&cli, &mut out, &mut err);
    let value = serde_json::from_slice(&out).unwrap_or(Value::Null);
    (status, value, String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.display().to_string()
}

fn path_space(dir: &Path) -> String {
    write(
        dir,
        "path.json",
        &json!({
            "name": "path",
            "base": "0",
            "points": ["0", "a", "b", "c"],
            "matrix": [[0, 1, 3, 4], [1, 0, 2, 3], [3, 2, 0, 1], [4, 3, 1, 0]],
        }),
    )
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = path_space(dir.path());
    let (s, v, _) = run_args(&["validate", &good]);
    assert_eq!(s, Status::Success);
    assert_eq!(v["valid"], json!(true));
    assert_eq!(v["line"], json!(true));
    assert_eq!(v["diameter"], json!("4"));

    let bad = write(
        dir.path(),
        "bad.json",
        &json!({ "name": "bad", "base": "x", "points": ["x", "y", "z"], "matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]] }),
    );
    let (s, v, _) = run_args(&["validate", &bad]);
    assert_eq!(s, Status::DomainFailure);
    assert_eq!(v["violation"]["axiom"], json!("triangle"));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    let (s, _, err) = run_args(&["validate", garbage.to_str().unwrap()]);
    assert_eq!(s, Status::InputError);
    assert!(err.contains("garbage.json"), "{err}");

    let (s, _, _) = run_args(&[
        "validate",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(s, Status::InputError);
}

#[test]
fn norm_routes_agree() {
    let dir = TempDir::new().unwrap();
    let space = path_space(dir.path());
    let mol = write(
        dir.path(),
        "mu.json",
        &json!({ "space": "path", "terms": [{ "point": "a", "coeff": "1" }, { "point": "c", "coeff": "-1/2" }] }),
    );
    let (s, v, _) = run_args(&["norm", "--space", &space, "--molecule", &mol]);
    assert_eq!(s, Status::Success);
    // a at 1, c at 4: |1 - 1/2| + 1/2·|4 - 1| = 2
    assert_eq!(v["value"], json!("2"));
    assert_eq!(v["line"]["value"], json!("2"));
    assert_eq!(v["agree"], json!(true));
    let (s, v, _) = run_args(&[
        "--mode",
        "float",
        "norm",
        "--space",
        &space,
        "--molecule",
        &mol,
        "--method",
        "flow",
    ]);
    assert_eq!(s, Status::Success);
    assert_eq!(v["value"].as_f64(), Some(2.0));

    let unknown = write(
        dir.path(),
        "u.json",
        &json!({ "space": "path", "terms": [{ "point": "zz", "coeff": 1 }] }),
    );
    assert_eq!(
        run_args(&["norm", "--space", &space, "--molecule", &unknown]).0,
        Status::InputError
    );
}

#[test]
fn operator_identity_and_collapse() {
    let dir = TempDir::new().unwrap();
    let space = path_space(dir.path());
    let id = write(
        dir.path(),
        "id.json",
        &json!({ "domain": "path", "codomain": "path", "assignment": { "0": "0", "a": "a", "b": "b", "c": "c" } }),
    );
    let (s, v, _) = run_args(&[
        "operator",
        "--domain",
        &space,
        "--codomain",
        &space,
        "--map",
        &id,
    ]);
    assert_eq!(s, Status::Success);
    assert_eq!(v["rank"]["injective"], json!(true));
    assert_eq!(v["bilip"]["lower"], json!("1"));
    assert_eq!(v["bilip"]["upper"], json!("1"));
    assert_eq!(v["modulus"]["upper"], json!("1"));

    let collapse = write(
        dir.path(),
        "collapse.json",
        &json!({ "domain": "path", "codomain": "path", "assignment": { "0": "0", "a": "b", "b": "b", "c": "c" } }),
    );
    let (s, v, _) = run_args(&[
        "operator",
        "--domain",
        &space,
        "--codomain",
        &space,
        "--map",
        &collapse,
        "--check",
        "rank,bilip",
    ]);
    assert_eq!(s, Status::Success);
    assert_eq!(v["rank"]["injective"], json!(false));
    assert_eq!(v["rank"]["kernel"].as_array().unwrap().len(), 1);
    assert_eq!(v["bilip"]["collapsing"], json!(["a", "b"]));
    assert!(v.get("modulus").is_none());
}

#[test]
fn construct_svc_round_trips_through_norm() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let (s, v, _) = run_args(&["--out", out, "construct", "svc", "--stage", "3"]);
    assert_eq!(s, Status::Success, "{v:#}");
    let csv = fs::read_to_string(dir.path().join("svc.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().starts_with("1,3/4,"));
    for k in 1..=3 {
        let p = |s: &str| {
            dir.path()
                .join(format!("svc-{k}-{s}.json"))
                .display()
                .to_string()
        };
        assert_eq!(run_args(&["validate", &p("domain")]).0, Status::Success);
        let (s, n, _) = run_args(&["norm", "--space", &p("domain"), "--molecule", &p("witness")]);
        assert_eq!(s, Status::Success);
        assert_eq!(n["value"], v["rows"][k - 1]["norm_mu_exact"]);
        let (_, n, _) = run_args(&["norm", "--space", &p("codomain"), "--molecule", &p("image")]);
        assert_eq!(n["value"], v["rows"][k - 1]["norm_image_exact"]);
        let (s, o, _) = run_args(&[
            "operator",
            "--domain",
            &p("domain"),
            "--codomain",
            &p("codomain"),
            "--map",
            &p("map"),
            "--check",
            "rank",
        ]);
        assert_eq!(s, Status::Success);
        // finite stages are strictly increasing, so f̂ stays injective while ‖f̂μ_k‖ → 0
        assert_eq!(o["rank"]["injective"], json!(true));
    }
}

#[test]
fn construct_snowflake_ratios_decrease() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let (s, v, _) = run_args(&[
        "--out",
        out,
        "construct",
        "snowflake",
        "--alpha",
        "1/2",
        "--stages",
        "6",
    ]);
    assert_eq!(s, Status::Success, "{v:#}");
    let ratios: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["ratio"].as_f64().unwrap())
        .collect();
    assert_eq!(ratios.len(), 6);
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    let p = |s: &str| {
        dir.path()
            .join(format!("snowflake-2-{s}.json"))
            .display()
            .to_string()
    };
    let (s, n, _) = run_args(&[
        "--mode",
        "float",
        "norm",
        "--space",
        &p("domain"),
        "--molecule",
        &p("witness"),
        "--method",
        "lp",
    ]);
    assert_eq!(s, Status::Success);
    assert!(
        (n["value"].as_f64().unwrap() - v["rows"][1]["norm_mu_lp"].as_f64().unwrap()).abs() < 1e-12
    );
}

#[test]
fn construct_rtree_and_xsquared() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let (s, v, _) = run_args(&["--out", out, "construct", "rtree", "--n", "20"]);
    assert_eq!(s, Status::Success, "{v:#}");
    assert_eq!(v["rows"][0]["rank_deficiency"], json!(1));
    let (s, v, _) = run_args(&["--out", out, "construct", "xsquared", "--n", "4,10"]);
    assert_eq!(s, Status::Success, "{v:#}");
    assert_eq!(v["rows"][1]["lower"], json!("1/10"));
}

#[test]
fn construct_input_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        run_args(&["--out", out, "construct", "svc", "--stage", "0"]).0,
        Status::InputError
    );
    assert_eq!(
        run_args(&["--out", out, "construct", "svc", "--stage", "40"]).0,
        Status::InputError
    );
    assert_eq!(
        run_args(&["--out", out, "construct", "snowflake", "--alpha", "3/2"]).0,
        Status::InputError
    );
    assert_eq!(
        run_args(&["--out", out, "construct", "dust", "--epsilon=-1"]).0,
        Status::InputError
    );
}

#[test]
fn verify_report_file_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let r = report.to_str().unwrap();
    let args = [
        "--seed",
        "3",
        "--out",
        r,
        "verify",
        "--suite",
        "metric,support",
        "--limit",
        "10",
    ];
    let (s, v, _) = run_args(&args);
    assert_eq!(s, Status::Success, "{v:#}");
    let first = fs::read_to_string(&report).unwrap();
    run_args(&args);
    assert_eq!(first, fs::read_to_string(&report).unwrap());
    let parsed: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(parsed["seed"], json!(3));

    let (s, v, _) = run_args(&[
        "verify",
        "--suite",
        "injectivity",
        "--limit",
        "5",
        "--inject",
        "false-injective",
    ]);
    assert_eq!(s, Status::DomainFailure);
    assert_eq!(
        v["suites"][0]["failures"][0]["case"],
        json!("fixture:false-injective")
    );
    assert_eq!(
        run_args(&["verify", "--suite", "bogus"]).0,
        Status::InputError
    );
}

#[test]
fn bad_flags_are_usage_errors() {
    let e = Cli::try_parse_from(["lipfree", "--mode", "decimal", "validate", "x"]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = Cli::try_parse_from(["lipfree", "--tol", "-1", "validate", "x"]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
