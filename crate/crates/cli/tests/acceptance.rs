//! The twelve acceptance criteria, one test each. Every test writes a
//! `criterion N: PASS|FAIL` line to stderr before asserting. The line goes to
//! the raw handle, so it shows up without `--nocapture`.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use lipfree_core::constructions::{
    cantor_dust, rtree_example, snowflake_witness, svc_witness, xsquared_grid,
};
use lipfree_core::free::{norm_dual_lp, norm_flow, norm_line};
use lipfree_core::metric::{distance_set_measure, ProductNorm};
use lipfree_core::operators::{
    apply, bilip_constants, embedding_modulus_exact, kernel_basis, linearize,
};
use lipfree_core::scalar::{close, pow_inv, ratio, Rational};
use lipfree_core::Scalar;
use lipfree_harness::verify::{self, VerifyConfig};

fn report(n: u32, ok: bool, detail: &str) {
    let line = format!(
        "criterion {n}: {} {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

/// Runs one verify suite at full size with the default seed.
fn suite(name: &str) -> (bool, String) {
    let cfg = VerifyConfig {
        suites: vec![name.to_string()],
        ..Default::default()
    };
    let rep = verify::run(&cfg).expect("known suite");
    let s = &rep.suites[0];
    let first = s
        .failures
        .first()
        .map(|f| format!("; first failure {}: {}", f.case, f.message))
        .unwrap_or_default();
    (
        s.passed,
        format!(
            "{name}: {} cases, {} failures{first}",
            s.cases,
            s.failures.len()
        ),
    )
}

#[test]
fn criterion_01_svc_kernel_degeneration() {
    let start = Instant::now();
    let mut bad = Vec::new();
    for k in 1..=8usize {
        let w = svc_witness(k).unwrap();
        let tail = pow_inv(2, k as u32 + 1);
        let want_mu = ratio(1, 2) + &tail;
        let mu_line = norm_line(&w.witness).unwrap().0;
        let img_line = norm_line(&w.image()).unwrap().0;
        if mu_line != want_mu || img_line != tail {
            bad.push(format!("k={k}: line {mu_line}, {img_line}"));
        }
        if k == 1 && (mu_line != ratio(3, 4) || img_line != ratio(1, 4)) {
            bad.push("k=1 is not (3/4, 1/4)".into());
        }
        let dom = w.float_domain();
        let mu = w.float_witness(&dom);
        let cod = std::sync::Arc::new(w.codomain.convert::<f64>());
        let img = w.image().convert(&cod);
        let (wm, wi) = (want_mu.to_f64(), tail.to_f64());
        for (route, got_mu, got_img) in [
            (
                "lp",
                norm_dual_lp(&mu).unwrap().value,
                norm_dual_lp(&img).unwrap().value,
            ),
            (
                "flow",
                norm_flow(&mu).unwrap().cost,
                norm_flow(&img).unwrap().cost,
            ),
        ] {
            if !close(&got_mu, &wm, 1e-9) || !close(&got_img, &wi, 1e-9) {
                bad.push(format!("k={k}: {route} {got_mu}, {got_img}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        bad.is_empty() && secs < 30.0,
        &format!("k = 1..8 in {secs:.2}s {bad:?}"),
    );
}

#[test]
fn criterion_02_snowflake_counterexample() {
    let alpha = ratio(1, 2);
    let mut bad = Vec::new();
    let mut ratio_at_2 = f64::NAN;
    for n in 1..=6usize {
        let w = snowflake_witness(&alpha, n).unwrap();
        let dom = w.float_domain();
        let lp = norm_dual_lp(&w.float_witness(&dom)).unwrap().value;
        let img = norm_line(&w.image()).unwrap().0;
        let want = ratio(1, 14) * pow_inv(8, n as u32);
        if lp < 0.5 - 1e-9 {
            bad.push(format!("N={n}: ‖μ‖ = {lp}"));
        }
        if img != want {
            bad.push(format!("N={n}: ‖f̂μ‖ = {img}, want {want}"));
        }
        if n == 2 {
            ratio_at_2 = img.to_f64() / lp;
        }
    }
    let ok = bad.is_empty() && ratio_at_2 < 0.02;
    report(
        2,
        ok,
        &format!("N = 1..6, ratio at N=2 is {ratio_at_2:.5} {bad:?}"),
    );
}

#[test]
fn criterion_03_duality_certification() {
    let (ok, d) = suite("duality");
    report(3, ok, &d);
}

#[test]
fn criterion_04_oracle_equivalence() {
    let (ok, d) = suite("line-oracle");
    report(4, ok, &d);
}

#[test]
fn criterion_05_finite_injectivity() {
    let (ok, d) = suite("injectivity");
    report(5, ok, &d);
}

#[test]
fn criterion_06_support_laws() {
    let (ok, d) = suite("support");
    report(6, ok, &d);
}

#[test]
fn criterion_07_operator_norm_identity() {
    let (ok, d) = suite("operator-norm");
    report(7, ok, &d);
}

#[test]
fn criterion_08_lipschitz_machinery() {
    let (ok, d) = suite("lipschitz");
    report(8, ok, &d);
}

#[test]
fn criterion_09_cantor_dust_contrast() {
    let eps = ratio(1, 1000);
    let l1 = cantor_dust(5, ProductNorm::L1).unwrap();
    let linf = cantor_dust(5, ProductNorm::LInf).unwrap();
    let m1 = distance_set_measure(&l1, l1.base(), &eps).unwrap();
    let minf = distance_set_measure(&linf, linf.base(), &eps).unwrap();
    let ok1 = m1 >= ratio(19, 10);
    let ok2 = minf <= ratio(1, 5);
    report(
        9,
        ok1 && ok2,
        &format!(
            "l1 measure {:.4} (need >= 1.9), linf measure {:.4} (need <= 0.2)",
            m1.to_f64(),
            minf.to_f64()
        ),
    );
}

#[test]
fn criterion_10_rtree_shadow() {
    let r = rtree_example(20).unwrap();
    let pairs = r
        .pairs
        .iter()
        .all(|(src, dst)| apply(&r.map, src).unwrap() == *dst);
    let rank = kernel_basis(&linearize(&r.map)).rank;
    let deficiency = r.codomain.len() - 1 - rank;
    let tail = norm_line(&r.tail).unwrap().0;
    let ok = pairs && deficiency == 1 && tail == ratio(1, 20) && !r.pairs.is_empty();
    report(
        10,
        ok,
        &format!(
            "{} pairs exact: {pairs}, deficiency {deficiency}, tail norm {tail}",
            r.pairs.len()
        ),
    );
}

#[test]
fn criterion_11_bidual_shadow() {
    let mut detail = Vec::new();
    let mut ok = true;
    for n in [10usize, 100, 1000] {
        let g = xsquared_grid(n).unwrap();
        let full = kernel_basis(&linearize(&g.map)).is_injective;
        let a = bilip_constants(&g.map).lower.unwrap();
        ok &= full && a == ratio(1, n as i64);
        detail.push(format!("n={n}: full rank {full}, a(f) = {a}"));
    }
    let g = xsquared_grid(4).unwrap();
    let a = bilip_constants(&g.map).lower.unwrap();
    let m: Rational = embedding_modulus_exact(&g.map).unwrap();
    ok &= g.domain.len() == 5 && m > ratio(0, 1) && m <= a;
    detail.push(format!("5-point modulus {m} <= a(f) = {a}"));
    report(11, ok, &detail.join("; "));
}

#[test]
fn criterion_12_negative_controls() {
    let run = |inject: bool| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lipfree"));
        cmd.args(["verify", "--suite", "metric,injectivity"]);
        if inject {
            cmd.args(["--inject", "triangle-violation,false-injective"]);
        }
        let out = cmd.output().expect("binary runs");
        (out.status.code(), String::from_utf8(out.stdout).unwrap())
    };
    let (clean_code, _) = run(false);
    let (code, first) = run(true);
    let (code2, second) = run(true);
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    let failing: Vec<(String, String)> = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| {
            s["failures"].as_array().unwrap().iter().map(|f| {
                (
                    s["name"].as_str().unwrap().to_string(),
                    f["case"].as_str().unwrap().to_string(),
                )
            })
        })
        .collect();
    let expected = vec![
        (
            "injectivity".to_string(),
            "fixture:false-injective".to_string(),
        ),
        (
            "metric".to_string(),
            "fixture:triangle-violation".to_string(),
        ),
    ];
    let ok = clean_code == Some(0)
        && code == Some(1)
        && code2 == Some(1)
        && first == second
        && failing == expected;
    report(12, ok, &format!("clean exit {clean_code:?}, injected exit {code:?}/{code2:?}, identical {}, failures {failing:?}", first == second));
}
