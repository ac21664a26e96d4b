//! `verify`: seeded property suites over every module.
//!
//! Each suite expands into independent cases keyed by a zero-padded index
//! (or `fixture:<name>` for injected negative controls). Cases run in
//! parallel; the report lists suites by name and failures by key, so it is
//! byte-identical across runs with the same configuration.

use std::collections::BTreeSet;
use std::sync::Arc;

use lipfree_core::constructions::{
    discrete_witness, rtree_example, snowflake_witness, svc_complement_family, svc_stage,
    svc_witness, xsquared_grid, DiscreteVariant, WitnessInstance,
};
use lipfree_core::free::{certify, eval, norm_dual_lp, norm_flow, norm_line, Molecule};
use lipfree_core::lip::{inf_convolve, mcshane_extend, plateau, LipFunction, ModulusFunction};
use lipfree_core::metric::{
    distance_set_measure, random_space, validate_space, FiniteMetricSpace, Generator,
};
use lipfree_core::operators::{
    apply, bilip_constants, check_nonreturning, check_support_preservation, compose_cf,
    composition_support_laws, embedding_modulus, embedding_modulus_exact, kernel_basis, linearize,
    ModulusMethod, PointMap,
};
use lipfree_core::scalar::{close, ratio, Rational};
use lipfree_core::{ArithmeticMode, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::Fixture;
use crate::construct::{witness_stage, witness_verdicts};

type Check = Result<(), String>;

/// What a verification run is allowed to vary.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub mode: ArithmeticMode,
    pub tol: f64,
    pub inject: Vec<Fixture>,
    /// Suite names to run; empty means all.
    pub suites: Vec<String>,
    /// Cap on random cases per suite (fixed cases are never dropped).
    pub limit: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            mode: ArithmeticMode::Exact,
            tol: 1e-9,
            inject: Vec::new(),
            suites: Vec::new(),
            limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseFailure {
    pub case: String,
    /// Reproduces the case with the same suite.
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<CaseFailure>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub mode: String,
    pub tolerance: f64,
    pub injected: Vec<String>,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

struct Case {
    key: String,
    seed: u64,
    check: Box<dyn Fn() -> Check + Send + Sync>,
}

struct Suite {
    name: &'static str,
    /// Random cases at full size.
    count: usize,
    random: fn(&VerifyConfig, u64) -> Check,
    fixed: fn(&VerifyConfig) -> Vec<Case>,
}

fn no_fixed(_: &VerifyConfig) -> Vec<Case> {
    Vec::new()
}

fn never(_: &VerifyConfig, _: u64) -> Check {
    Ok(())
}

const SUITES: &[Suite] = &[
    Suite {
        name: "composition",
        count: 100,
        random: composition_case,
        fixed: no_fixed,
    },
    Suite {
        name: "constructions",
        count: 0,
        random: never,
        fixed: construction_cases,
    },
    Suite {
        name: "duality",
        count: 500,
        random: duality_case,
        fixed: no_fixed,
    },
    Suite {
        name: "injectivity",
        count: 200,
        random: injectivity_random,
        fixed: injectivity_fixtures,
    },
    Suite {
        name: "line-oracle",
        count: 500,
        random: line_oracle_case,
        fixed: no_fixed,
    },
    Suite {
        name: "lipschitz",
        count: 100,
        random: lipschitz_case,
        fixed: no_fixed,
    },
    Suite {
        name: "metric",
        count: 200,
        random: metric_random,
        fixed: metric_fixtures,
    },
    Suite {
        name: "modulus",
        count: 100,
        random: modulus_case,
        fixed: no_fixed,
    },
    Suite {
        name: "nonreturning",
        count: 100,
        random: nonreturning_case,
        fixed: no_fixed,
    },
    Suite {
        name: "operator-norm",
        count: 100,
        random: operator_norm_case,
        fixed: no_fixed,
    },
    Suite {
        name: "support",
        count: 200,
        random: support_random,
        fixed: support_fixed,
    },
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

/// Per-case seed: one ChaCha stream per suite, one word per case.
fn case_seed(seed: u64, suite: usize, i: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite as u64);
    rng.set_word_pos(2 * i as u128);
    rng.gen()
}

pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport, String> {
    let names = suite_names();
    for s in &cfg.suites {
        if !names.contains(&s.as_str()) {
            return Err(format!(
                "unknown suite `{s}`; available: {}",
                names.join(", ")
            ));
        }
    }
    let selected: Vec<(usize, &Suite)> = SUITES
        .iter()
        .enumerate()
        .filter(|(_, s)| cfg.suites.is_empty() || cfg.suites.iter().any(|n| n == s.name))
        .collect();
    let suites = selected
        .into_iter()
        .map(|(idx, suite)| run_suite(cfg, idx, suite))
        .collect::<Vec<_>>();
    let mut injected: Vec<Fixture> = cfg.inject.clone();
    injected.sort();
    injected.dedup();
    Ok(VerifyReport {
        seed: cfg.seed,
        mode: cfg.mode.to_string(),
        tolerance: cfg.tol,
        injected: injected
            .iter()
            .map(|f| fixture_name(*f).to_string())
            .collect(),
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

fn run_suite(cfg: &VerifyConfig, idx: usize, suite: &Suite) -> SuiteReport {
    let count = cfg.limit.map_or(suite.count, |l| l.min(suite.count));
    let random = suite.random;
    let mut cases: Vec<Case> = (0..count)
        .map(|i| {
            let seed = case_seed(cfg.seed, idx, i);
            let cfg = cfg.clone();
            Case {
                key: format!("{i:04}"),
                seed,
                check: Box::new(move || random(&cfg, seed)),
            }
        })
        .collect();
    cases.extend((suite.fixed)(cfg));
    let outcomes: Vec<Check> = cases
        .par_iter()
        .map(|c| {
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (c.check)())).unwrap_or_else(
                |p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                    Err(format!("panicked: {}", msg.unwrap_or_default()))
                },
            )
        })
        .collect();
    let mut failures: Vec<CaseFailure> = cases
        .iter()
        .zip(outcomes)
        .filter_map(|(c, o)| {
            o.err().map(|message| CaseFailure {
                case: c.key.clone(),
                seed: c.seed,
                message,
            })
        })
        .collect();
    failures.sort_by(|a, b| a.case.cmp(&b.case));
    SuiteReport {
        name: suite.name.to_string(),
        cases: cases.len(),
        passed: failures.is_empty(),
        failures,
    }
}

fn fixture_name(f: Fixture) -> &'static str {
    match f {
        Fixture::TriangleViolation => "triangle-violation",
        Fixture::FalseInjective => "false-injective",
    }
}

fn fixture(
    cfg: &VerifyConfig,
    f: Fixture,
    check: impl Fn() -> Check + Send + Sync + 'static,
) -> Option<Case> {
    cfg.inject.contains(&f).then(|| Case {
        key: format!("fixture:{}", fixture_name(f)),
        seed: cfg.seed,
        check: Box::new(check),
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn abs(q: Rational) -> Rational {
    if q < Rational::from_int(0) {
        -q
    } else {
        q
    }
}

// ---------------------------------------------------------------- generators

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn space<S: Scalar>(
    seed: u64,
    n: usize,
    g: Generator,
) -> Result<Arc<FiniteMetricSpace<S>>, String> {
    random_space(seed, n, g).map(Arc::new).map_err(err)
}

fn random_molecule<S: Scalar>(
    rng: &mut ChaCha8Rng,
    space: &Arc<FiniteMetricSpace<S>>,
    max_support: usize,
) -> Molecule<S> {
    let k = rng.gen_range(1..=max_support.max(1));
    Molecule::from_indices(
        space,
        (0..k).map(|_| {
            let q = ratio(rng.gen_range(-12..=12), rng.gen_range(1..=4));
            (rng.gen_range(0..space.len()), S::from_rational(&q))
        }),
    )
}

fn random_map<S: Scalar>(
    rng: &mut ChaCha8Rng,
    dom: &Arc<FiniteMetricSpace<S>>,
    cod: &Arc<FiniteMetricSpace<S>>,
) -> PointMap<S> {
    let a = (0..dom.len())
        .map(|x| {
            if x == dom.base() {
                cod.base()
            } else {
                rng.gen_range(0..cod.len())
            }
        })
        .collect();
    PointMap::new(dom, cod, a).expect("base preserved by construction")
}

/// Requires `|cod| ≥ |dom|`.
fn injective_map<S: Scalar>(
    rng: &mut ChaCha8Rng,
    dom: &Arc<FiniteMetricSpace<S>>,
    cod: &Arc<FiniteMetricSpace<S>>,
) -> PointMap<S> {
    let mut free: Vec<usize> = cod.non_base().collect();
    let a = (0..dom.len())
        .map(|x| {
            if x == dom.base() {
                cod.base()
            } else {
                free.swap_remove(rng.gen_range(0..free.len()))
            }
        })
        .collect();
    PointMap::new(dom, cod, a).expect("base preserved by construction")
}

/// Injectivity by pairwise comparison of image labels.
fn brute_injective<S: Scalar>(f: &PointMap<S>) -> bool {
    let imgs: Vec<&str> = (0..f.domain().len())
        .map(|x| f.codomain().label(f.image(x)))
        .collect();
    imgs.iter().collect::<BTreeSet<_>>().len() == imgs.len()
}

fn random_function<S: Scalar>(
    rng: &mut ChaCha8Rng,
    space: &Arc<FiniteMetricSpace<S>>,
) -> LipFunction<S> {
    let v = (0..space.len())
        .map(|i| {
            if i == space.base() {
                S::zero()
            } else {
                S::from_rational(&ratio(rng.gen_range(-9..=9), 2))
            }
        })
        .collect();
    LipFunction::new(space, v).expect("zero at base")
}

// ---------------------------------------------------------------- metric

/// Brute-force axiom scan and the validator must both accept.
fn metric_matrix_case(m: Vec<Vec<Rational>>) -> Check {
    let n = m.len();
    let zero = Rational::from_int(0);
    for i in 0..n {
        for j in 0..n {
            ensure(m[i][j] == m[j][i], || format!("asymmetric at (p{i},p{j})"))?;
            ensure(i == j || m[i][j] > zero, || {
                format!("non-positive distance at (p{i},p{j})")
            })?;
            for k in 0..n {
                ensure(m[i][j] <= &m[i][k] + &m[k][j], || {
                    format!("triangle violation at (p{i},p{j},p{k})")
                })?;
            }
        }
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    validate_space("case", labels, "p0", m)
        .map(|_| ())
        .map_err(|e| format!("validator rejected a metric: {e}"))
}

fn metric_random(cfg: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=20);
    let g = if r.gen_bool(0.5) {
        Generator::ShortestPath
    } else {
        Generator::Line
    };
    let s = random_space::<Rational>(seed, n, g).map_err(err)?;
    metric_matrix_case(s.matrix())?;
    let t = s.truncate();
    t.check_axioms().map_err(|e| format!("truncation: {e}"))?;
    let (e1, e2) = (
        ratio(r.gen_range(1..20), 64),
        ratio(r.gen_range(20..40), 64),
    );
    let x = r.gen_range(0..n);
    let a = distance_set_measure(&s, x, &e1).map_err(err)?;
    let b = distance_set_measure(&s, x, &e2).map_err(err)?;
    ensure(a <= b, || format!("measure not monotone: {a} > {b}"))?;
    let bound = ratio(2 * n as i64, 1) * &e2 + s.diameter();
    ensure(b <= bound, || format!("measure {b} above 2ε|M| + diam"))?;
    if cfg.mode == ArithmeticMode::Float {
        let e = random_space::<f64>(seed, n, Generator::Euclidean2d).map_err(err)?;
        e.check_axioms().map_err(|e| format!("euclidean: {e}"))?;
    }
    Ok(())
}

fn metric_fixtures(cfg: &VerifyConfig) -> Vec<Case> {
    let seed = cfg.seed;
    fixture(cfg, Fixture::TriangleViolation, move || {
        let s = random_space::<Rational>(seed, 6, Generator::ShortestPath).map_err(err)?;
        let mut m = s.matrix();
        let bumped = &m[0][2] + &m[2][1] + Rational::from_int(1);
        m[0][1] = bumped.clone();
        m[1][0] = bumped;
        metric_matrix_case(m)
    })
    .into_iter()
    .collect()
}

// ---------------------------------------------------------------- norms

fn duality_case(cfg: &VerifyConfig, seed: u64) -> Check {
    match cfg.mode {
        ArithmeticMode::Exact => duality_in::<Rational>(cfg.tol, seed, Generator::ShortestPath),
        ArithmeticMode::Float => {
            let g = if seed.is_multiple_of(2) {
                Generator::Euclidean2d
            } else {
                Generator::ShortestPath
            };
            duality_in::<f64>(cfg.tol, seed, g)
        }
    }
}

fn duality_in<S: Scalar>(tol: f64, seed: u64, g: Generator) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=50);
    let s = space::<S>(seed, n, g)?;
    let mu = random_molecule(&mut r, &s, n);
    let c = certify(&mu, tol).map_err(err)?;
    ensure(c.within_tolerance, || {
        format!(
            "primal {} vs dual {} (gap {:e})",
            c.plan.cost, c.dual.value, c.gap
        )
    })?;
    ensure(c.potential_feasible, || {
        format!("potential violates a pair by {}", c.dual.max_violation(&s))
    })?;
    ensure(c.plan_conserves, || {
        "transport plan does not reproduce the molecule".into()
    })?;
    let obj = c.dual.objective(&mu);
    ensure(close(&obj, &c.dual.value, tol), || {
        format!("objective {obj} differs from reported {}", c.dual.value)
    })
}

fn line_oracle_case(cfg: &VerifyConfig, seed: u64) -> Check {
    match cfg.mode {
        ArithmeticMode::Exact => line_oracle_in::<Rational>(cfg.tol, seed),
        ArithmeticMode::Float => line_oracle_in::<f64>(cfg.tol, seed),
    }
}

fn line_oracle_in<S: Scalar>(tol: f64, seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=31);
    let s = space::<S>(seed, n, Generator::Line)?;
    let mu = random_molecule(&mut r, &s, 30);
    let line = norm_line(&mu).map_err(err)?.0;
    let lp = norm_dual_lp(&mu).map_err(err)?.value;
    let flow = norm_flow(&mu).map_err(err)?.cost;
    ensure(close(&line, &lp, tol), || format!("line {line} vs lp {lp}"))?;
    ensure(close(&line, &flow, tol), || {
        format!("line {line} vs flow {flow}")
    })
}

// ---------------------------------------------------------------- operators

fn injectivity_check(f: &PointMap<Rational>, claimed_injective: bool) -> Check {
    let k = kernel_basis(&linearize(f));
    ensure(
        (k.rank == f.domain().len() - 1) == claimed_injective,
        || {
            format!(
                "rank {} of {} but the map is claimed {}injective",
                k.rank,
                k.dimension,
                if claimed_injective { "" } else { "non-" }
            )
        },
    )?;
    for v in &k.kernel {
        ensure(apply(f, v).map_err(err)?.is_zero(), || {
            "kernel vector not annihilated".into()
        })?;
    }
    Ok(())
}

fn injectivity_random(_: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=12);
    let inj = r.gen_bool(0.5);
    let m = if inj {
        r.gen_range(n..=n + 4)
    } else {
        r.gen_range(2..=12)
    };
    let (dom, cod) = (
        space::<Rational>(seed, n, Generator::ShortestPath)?,
        space::<Rational>(seed ^ 1, m, Generator::Line)?,
    );
    let f = if inj {
        injective_map(&mut r, &dom, &cod)
    } else {
        random_map(&mut r, &dom, &cod)
    };
    injectivity_check(&f, brute_injective(&f))
}

fn collapsing_instance() -> PointMap<Rational> {
    let q = |n| ratio(n, 1);
    let labels = |l: &[&str]| l.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let dom = Arc::new(
        FiniteMetricSpace::from_line(
            "collapse-m",
            labels(&["0", "a", "b", "c"]),
            vec![q(0), q(1), q(2), q(3)],
            "0",
        )
        .expect("distinct points"),
    );
    let cod = Arc::new(
        FiniteMetricSpace::from_line(
            "collapse-n",
            labels(&["0", "u", "v"]),
            vec![q(0), q(1), q(2)],
            "0",
        )
        .expect("distinct points"),
    );
    PointMap::new(&dom, &cod, vec![0, 1, 1, 2]).expect("base preserved")
}

fn injectivity_fixtures(cfg: &VerifyConfig) -> Vec<Case> {
    fixture(cfg, Fixture::FalseInjective, || {
        injectivity_check(&collapsing_instance(), true)
    })
    .into_iter()
    .collect()
}

fn support_random(_: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=12);
    let inj = r.gen_bool(0.5);
    let m = if inj {
        r.gen_range(n..=n + 4)
    } else {
        r.gen_range(2..=12)
    };
    let (dom, cod) = (
        space::<Rational>(seed, n, Generator::ShortestPath)?,
        space::<Rational>(seed ^ 2, m, Generator::ShortestPath)?,
    );
    let f = if inj {
        injective_map(&mut r, &dom, &cod)
    } else {
        random_map(&mut r, &dom, &cod)
    };
    let mu = random_molecule(&mut r, &dom, n);
    let rep = check_support_preservation(&f, &mu).map_err(err)?;
    // supp(f̂μ) through the matrix route, f(supp μ) by direct lookup
    let lhs = linearize(&f).apply(&mu).map_err(err)?.support();
    let rhs: BTreeSet<usize> = mu.support().iter().map(|&x| f.image(x)).collect();
    ensure(lhs == rep.lhs && rhs == rep.rhs, || {
        "support report disagrees with the matrix route".into()
    })?;
    ensure(lhs.is_subset(&rhs), || {
        format!("supp(f̂μ) = {lhs:?} not inside f(supp μ) = {rhs:?}")
    })?;
    if brute_injective(&f) {
        ensure(lhs == rhs, || {
            format!("injective map lost support: {lhs:?} vs {rhs:?}")
        })?;
    }
    Ok(())
}

fn support_fixed(_: &VerifyConfig) -> Vec<Case> {
    vec![Case {
        key: "collapsing".into(),
        seed: 0,
        check: Box::new(|| {
            let f = collapsing_instance();
            let mu = Molecule::from_indices(
                f.domain(),
                [(1, ratio(1, 1)), (2, ratio(-1, 1)), (3, ratio(1, 1))],
            );
            let rep = check_support_preservation(&f, &mu).map_err(err)?;
            ensure(
                rep.inclusion_holds && !rep.equality_holds && rep.lhs.len() < rep.rhs.len(),
                || {
                    format!(
                        "expected strict inclusion, got {:?} vs {:?}",
                        rep.lhs, rep.rhs
                    )
                },
            )
        }),
    }]
}

fn operator_norm_case(cfg: &VerifyConfig, seed: u64) -> Check {
    match cfg.mode {
        ArithmeticMode::Exact => operator_norm_in::<Rational>(cfg.tol, seed),
        ArithmeticMode::Float => operator_norm_in::<f64>(cfg.tol, seed),
    }
}

fn operator_norm_in<S: Scalar>(tol: f64, seed: u64) -> Check {
    let mut r = rng(seed);
    let (n, m) = (r.gen_range(2..=8), r.gen_range(2..=8));
    let (dom, cod) = (
        space::<S>(seed, n, Generator::ShortestPath)?,
        space::<S>(seed ^ 3, m, Generator::ShortestPath)?,
    );
    let f = random_map(&mut r, &dom, &cod);
    let (lip, _) = f.lip_constant();
    let mut best = S::zero();
    for i in 0..n {
        for j in i + 1..n {
            let e = Molecule::elementary_at(&dom, i, j).map_err(err)?;
            let v = norm_dual_lp(&apply(&f, &e).map_err(err)?)
                .map_err(err)?
                .value;
            if v > best {
                best = v;
            }
        }
    }
    ensure(close(&best, &lip, tol), || {
        format!("max over elementary molecules {best} vs Lip(f) {lip}")
    })?;
    let mu = random_molecule(&mut r, &dom, n);
    let lhs = norm_dual_lp(&apply(&f, &mu).map_err(err)?)
        .map_err(err)?
        .value
        .to_f64();
    let rhs = lip.to_f64() * norm_dual_lp(&mu).map_err(err)?.value.to_f64();
    ensure(lhs <= rhs * (1.0 + tol) + 1e-9, || {
        format!("‖f̂μ‖ = {lhs} > Lip(f)‖μ‖ = {rhs}")
    })?;
    let g = random_function(&mut r, &cod);
    let a = eval(&compose_cf(&f, &g).map_err(err)?, &mu).map_err(err)?;
    let b = eval(&g, &apply(&f, &mu).map_err(err)?).map_err(err)?;
    ensure(close(&a, &b, tol), || {
        format!("adjoint identity fails: {a} vs {b}")
    })
}

fn composition_case(_: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let (a, b) = (r.gen_range(2..=7), r.gen_range(2..=7));
    let c = r.gen_range(b..=b + 3);
    let x = space::<Rational>(seed, a, Generator::ShortestPath)?;
    let y = space::<Rational>(seed ^ 4, b, Generator::ShortestPath)?;
    let z = space::<Rational>(seed ^ 5, c, Generator::ShortestPath)?;
    let f = random_map(&mut r, &x, &y);
    let g = if r.gen_bool(0.5) {
        injective_map(&mut r, &y, &z)
    } else {
        random_map(&mut r, &y, &z)
    };
    let samples: Vec<_> = (0..8).map(|_| random_molecule(&mut r, &x, a)).collect();
    let rep = composition_support_laws(&f, &g, &samples).map_err(err)?;
    ensure(rep.g_injective == brute_injective(&g), || {
        "g injectivity misreported".into()
    })?;
    for (name, law) in [("a", &rep.law_a), ("b", &rep.law_b), ("c", &rep.law_c)] {
        ensure(law.holds(), || {
            format!("law {name} violated on samples {:?}", law.violations)
        })?;
    }
    Ok(())
}

fn nonreturning_case(_: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let (n, m) = (r.gen_range(2..=10), r.gen_range(2..=10));
    let (dom, cod) = (
        space::<Rational>(seed, n, Generator::ShortestPath)?,
        space::<Rational>(seed ^ 6, m, Generator::ShortestPath)?,
    );
    let f = random_map(&mut r, &dom, &cod);
    let x = r.gen_range(0..n);
    let rad = ratio(r.gen_range(1..12), 4);
    let v = check_nonreturning(&f, x, &rad).map_err(err)?;
    let ball: BTreeSet<usize> = (0..n)
        .filter(|&z| dom.d(x, z) <= rad)
        .map(|z| f.image(z))
        .collect();
    let fx = f.image(x);
    let mut radii: Vec<Rational> = (0..m)
        .map(|y| cod.d(fx, y))
        .filter(|d| *d > Rational::from_int(0))
        .collect();
    radii.extend((1..12).map(|k| ratio(k, 3)));
    for rho in radii {
        let inside = (0..n)
            .map(|z| f.image(z))
            .filter(|&y| cod.d(fx, y) <= rho)
            .all(|y| ball.contains(&y));
        ensure(v.holds_for(&rho) == inside, || {
            format!(
                "ρ = {rho}: reported {} but inclusion is {inside}",
                v.holds_for(&rho)
            )
        })?;
    }
    Ok(())
}

fn modulus_case(_: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=6);
    let m = r.gen_range(n..=n + 3);
    let (dom, cod) = (
        space::<Rational>(seed, n, Generator::ShortestPath)?,
        space::<Rational>(seed ^ 7, m, Generator::ShortestPath)?,
    );
    let f = injective_map(&mut r, &dom, &cod);
    let a = bilip_constants(&f).lower.ok_or("no pairs")?;
    let modulus = embedding_modulus_exact(&f).map_err(err)?;
    ensure(modulus > Rational::from_int(0) && modulus <= a, || {
        format!("modulus {modulus} outside (0, a(f) = {a}]")
    })?;
    for _ in 0..3 {
        let mu = random_molecule(&mut r, &dom, n);
        let lhs = norm_dual_lp(&apply(&f, &mu).map_err(err)?)
            .map_err(err)?
            .value;
        let rhs = &modulus * norm_dual_lp(&mu).map_err(err)?.value;
        ensure(lhs >= rhs, || {
            format!("‖f̂μ‖ = {lhs} below modulus·‖μ‖ = {rhs}")
        })?;
    }
    Ok(())
}

// ---------------------------------------------------------------- Lipschitz functions

fn concave_pwl(r: &mut ChaCha8Rng) -> Result<ModulusFunction<Rational>, String> {
    let k = r.gen_range(2..6);
    let (mut bp, mut vals) = (vec![Rational::from_int(0)], vec![Rational::from_int(0)]);
    let mut slope = ratio(r.gen_range(8..16), 1);
    for _ in 0..k {
        let step = ratio(r.gen_range(1..8), 4);
        let t = bp.last().expect("nonempty") + &step;
        let v = vals.last().expect("nonempty") + &slope * &step;
        bp.push(t);
        vals.push(v);
        slope = &slope * ratio(r.gen_range(1..4), 4);
    }
    ModulusFunction::pwl(bp, vals, Rational::from_int(1)).map_err(err)
}

fn lipschitz_case(_: &VerifyConfig, seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=14);
    let s = space::<Rational>(seed, n, Generator::ShortestPath)?;

    // plateau
    let x = r.gen_range(0..n);
    let rad = ratio(r.gen_range(1..16), 8);
    let w = plateau(&s, x, &rad).map_err(err)?;
    let (zero, one) = (Rational::from_int(0), Rational::from_int(1));
    for y in 0..n {
        let (d, v) = (s.d(x, y), w.value(y));
        ensure(v >= zero && v <= one, || {
            format!("plateau value {v} outside [0,1]")
        })?;
        ensure(d > rad || v == one, || {
            format!("plateau {v} ≠ 1 inside B(x,r)")
        })?;
        ensure(d <= &rad + &rad || v == zero, || {
            format!("plateau {v} ≠ 0 outside B(x,2r)")
        })?;
    }
    ensure(w.lip_constant() <= &one / &rad, || {
        format!("plateau constant {} > 1/r", w.lip_constant())
    })?;

    // McShane
    let mut dom: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
    if !dom.contains(&s.base()) {
        dom.push(s.base());
    }
    let partial: Vec<(usize, Rational)> = dom
        .iter()
        .map(|&y| {
            (
                y,
                if y == s.base() {
                    zero.clone()
                } else {
                    ratio(r.gen_range(-8..=8), 3)
                },
            )
        })
        .collect();
    let mut l = one.clone();
    for (a, fa) in &partial {
        for (b, fb) in &partial {
            if a != b {
                let q = abs(fa - fb) / s.d(*a, *b);
                if q > l {
                    l = q;
                }
            }
        }
    }
    let ext = mcshane_extend(&s, &partial, &l).map_err(err)?;
    for (y, fy) in &partial {
        ensure(ext.value(*y) == *fy, || {
            format!("extension moved the value at {}", s.label(*y))
        })?;
    }
    ensure(ext.lip_constant() <= l, || {
        format!("extension constant {} > L = {l}", ext.lip_constant())
    })?;

    // inf-convolution on a sampled grid
    let omega = concave_pwl(&mut r)?;
    let k = r.gen_range(1..12u64);
    let wn = inf_convolve(&omega, k).map_err(err)?;
    let wn1 = inf_convolve(&omega, k + 1).map_err(err)?;
    let grid: Vec<Rational> = (0..=40).map(|i| ratio(i, 8)).collect();
    let kk = ratio(k as i64, 1);
    let mut prev = zero.clone();
    for t in &grid {
        let v = wn.eval(t).map_err(err)?;
        ensure(v >= prev, || format!("ω_{k} decreases at {t}"))?;
        ensure(
            v <= wn1.eval(t).map_err(err)? && v <= omega.eval(t).map_err(err)?,
            || format!("ω_{k} ≤ ω_{{k+1}} ≤ ω fails at {t}"),
        )?;
        prev = v;
    }
    for t1 in &grid {
        for t2 in &grid {
            let d = abs(wn.eval(t1).map_err(err)? - wn.eval(t2).map_err(err)?);
            let gap = abs(t1 - t2);
            ensure(d <= &kk * &gap, || {
                format!("ω_{k} not {k}-Lipschitz on ({t1},{t2})")
            })?;
            ensure(d <= &omega.c1 * omega.eval(&gap).map_err(err)?, || {
                format!("(iii) fails on ({t1},{t2})")
            })?;
        }
    }
    let big = inf_convolve(&omega, 16).map_err(err)?;
    for t in &grid {
        ensure(
            big.eval(t).map_err(err)? == omega.eval(t).map_err(err)?,
            || format!("ω_n does not reach ω at {t}"),
        )?;
    }

    // ψ_n on SVC endpoints
    let stage = 1 + (seed % 6) as usize;
    let family = svc_complement_family(stage).map_err(err)?;
    let ends = svc_stage(stage).map_err(err)?.endpoints;
    let line = Arc::new(
        FiniteMetricSpace::from_line(
            "svc-endpoints",
            ends.iter().map(|e| e.0.clone()).collect(),
            ends.iter().map(|e| e.1.clone()).collect(),
            "0",
        )
        .map_err(err)?,
    );
    let j = r.gen_range(0..=family.len());
    let psi =
        LipFunction::new(&line, ends.iter().map(|e| family.psi(j, &e.1)).collect()).map_err(err)?;
    ensure(psi.lip_constant() <= one, || {
        format!("ψ_{j} has constant {}", psi.lip_constant())
    })?;
    let tail = family.tail(j);
    for (label, x) in &ends {
        let e = abs(family.psi(j, x) - family.psi_limit(x));
        ensure(e <= tail, || {
            format!("ψ_{j} error {e} at {label} exceeds tail {tail}")
        })?;
    }
    Ok(())
}

// ---------------------------------------------------------------- constructions

fn witness_case(
    key: String,
    build: impl Fn() -> Result<WitnessInstance, lipfree_core::Error> + Send + Sync + 'static,
    tol: f64,
) -> Case {
    Case {
        key,
        seed: 0,
        check: Box::new(move || {
            let w = build().map_err(err)?;
            let row = witness_stage(&w).map_err(err)?;
            let bad: Vec<String> = witness_verdicts(&w.family, &[row], tol)
                .into_iter()
                .filter(|(_, ok)| !ok)
                .map(|(k, _)| k)
                .collect();
            ensure(bad.is_empty(), || {
                format!("failed verdicts: {}", bad.join(", "))
            })
        }),
    }
}

fn construction_cases(cfg: &VerifyConfig) -> Vec<Case> {
    let tol = cfg.tol;
    let mut cases = Vec::new();
    for k in 1..=8 {
        cases.push(witness_case(
            format!("svc-{k}"),
            move || svc_witness(k),
            tol,
        ));
    }
    for n in 1..=6 {
        cases.push(witness_case(
            format!("snowflake-{n}"),
            move || snowflake_witness(&ratio(1, 2), n),
            tol,
        ));
    }
    for k in 1..=4 {
        cases.push(witness_case(
            format!("discrete-bounded-{k}"),
            move || discrete_witness(DiscreteVariant::Bounded, k),
            tol,
        ));
        cases.push(witness_case(
            format!("discrete-unbounded-{k}"),
            move || discrete_witness(DiscreteVariant::Unbounded, k),
            tol,
        ));
    }
    cases.push(Case {
        key: "rtree-20".into(),
        seed: 0,
        check: Box::new(|| {
            let r = rtree_example(20).map_err(err)?;
            for (src, dst) in &r.pairs {
                ensure(apply(&r.map, src).map_err(err)? == *dst, || {
                    "f̂ m_{x_{n+1} x_n'} ≠ m_{y_{n+1} y_n}".into()
                })?;
            }
            let rank = kernel_basis(&linearize(&r.map)).rank;
            ensure(r.codomain.len() - 1 - rank == 1, || {
                format!("rank deficiency {}", r.codomain.len() - 1 - rank)
            })?;
            let missing = r.codomain.index_of(&r.missing).map_err(err)?;
            ensure(!r.map.image_set().contains(&missing), || {
                "y_∞ is in the image".into()
            })?;
            let tail = norm_line(&r.tail).map_err(err)?.0;
            ensure(tail == ratio(1, 20), || {
                format!("‖δ(y_∞) − δ(y_20)‖ = {tail}")
            })
        }),
    });
    for n in [4usize, 10, 100, 1000] {
        cases.push(Case {
            key: format!("xsquared-{n:04}"),
            seed: 0,
            check: Box::new(move || {
                let g = xsquared_grid(n).map_err(err)?;
                ensure(kernel_basis(&linearize(&g.map)).is_injective, || {
                    "rank not full".into()
                })?;
                let b = bilip_constants(&g.map);
                let a = b.lower.ok_or("no pairs")?;
                let nn = n as i64;
                ensure(a == ratio(1, nn), || format!("a(f) = {a}"))?;
                ensure(b.upper == ratio(2 * nn - 1, nn), || {
                    format!("Lip(f) = {}", b.upper)
                })?;
                let m = embedding_modulus(&g.map, &[]).map_err(err)?;
                ensure(m.upper <= a, || format!("modulus {} above a(f)", m.upper))?;
                ensure(n > 7 || m.method == ModulusMethod::ExactVertex, || {
                    "small grid not solved exactly".into()
                })
            }),
        });
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(suites: &[&str]) -> VerifyConfig {
        VerifyConfig {
            suites: suites.iter().map(|s| s.to_string()).collect(),
            limit: Some(12),
            ..Default::default()
        }
    }

    #[test]
    fn small_run_passes_and_is_deterministic() {
        let cfg = quick(&[
            "metric",
            "injectivity",
            "support",
            "line-oracle",
            "nonreturning",
            "composition",
        ]);
        let a = run(&cfg).unwrap();
        assert!(a.passed, "{a:#?}");
        assert_eq!(a, run(&cfg).unwrap());
        let mut sorted = cfg.suites.clone();
        sorted.sort();
        assert_eq!(
            a.suites.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
            sorted
        );
    }

    #[test]
    fn fixtures_fail_their_suites() {
        let mut cfg = quick(&["metric", "injectivity"]);
        cfg.inject = vec![Fixture::TriangleViolation, Fixture::FalseInjective];
        let rep = run(&cfg).unwrap();
        assert!(!rep.passed);
        for s in &rep.suites {
            assert_eq!(s.failures.len(), 1, "{s:#?}");
            assert!(s.failures[0].case.starts_with("fixture:"));
        }
        assert!(rep.suites[1].failures[0].message.contains("triangle"));
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run(&quick(&["nope"])).is_err());
    }

    #[test]
    fn case_seeds_are_distinct() {
        let seeds: BTreeSet<u64> = (0..3)
            .flat_map(|s| (0..50).map(move |i| case_seed(7, s, i)))
            .collect();
        assert_eq!(seeds.len(), 150);
    }

    #[test]
    fn float_mode_suites() {
        let mut cfg = quick(&["duality", "operator-norm", "line-oracle"]);
        cfg.mode = ArithmeticMode::Float;
        let rep = run(&cfg).unwrap();
        assert!(rep.passed, "{rep:#?}");
    }
}
