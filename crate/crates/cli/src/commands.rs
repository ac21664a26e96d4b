//! `validate`, `norm` and `operator`.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use lipfree_core::free::{norm_dual_lp, norm_flow, norm_line, Molecule};
use lipfree_core::io::{read_map, read_molecule, read_space, scalar_json};
use lipfree_core::metric::FiniteMetricSpace;
use lipfree_core::operators::{
    bilip_constants, check_nonreturning, check_support_preservation, embedding_modulus,
    kernel_basis, linearize, PointMap,
};
use lipfree_core::scalar::{rel_diff, Rational};
use lipfree_core::{ArithmeticMode, Error, Scalar};
use serde_json::{json, Value};

use crate::args::{Check, Config, NormMethod, OperatorArgs};
use crate::outcome::{is_input_error, CmdResult, Failure, Status};

pub(crate) fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)
}

pub(crate) fn emit(out: &mut dyn Write, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    writeln!(out, "{text}")
        .context("cannot write output")
        .map_err(Failure::input)
}

fn load_space<S: Scalar>(path: &Path) -> Result<Arc<FiniteMetricSpace<S>>, Failure> {
    with_path(read_space(&read_text(path)?).map(Arc::new), path)
}

fn with_path<T>(r: Result<T, Error>, path: &Path) -> Result<T, Failure> {
    r.map_err(|e| Failure::from(e).with_path(path))
}

pub fn validate(cfg: &Config, path: &Path, out: &mut dyn Write) -> CmdResult {
    match cfg.mode {
        ArithmeticMode::Exact => validate_in::<Rational>(path, out),
        ArithmeticMode::Float => validate_in::<f64>(path, out),
    }
}

fn validate_in<S: Scalar>(path: &Path, out: &mut dyn Write) -> CmdResult {
    let text = read_text(path)?;
    match read_space::<S>(&text) {
        Ok(space) => {
            emit(
                out,
                &json!({
                    "valid": true,
                    "name": space.name(),
                    "points": space.len(),
                    "base": space.base_label(),
                    "diameter": scalar_json(&space.diameter()),
                    "line": space.line_embedding().is_ok(),
                }),
            )?;
            Ok(Status::Success)
        }
        Err(e) if is_input_error(&e) => Err(Failure::input(e).with_path(path)),
        Err(e) => {
            emit(
                out,
                &json!({ "valid": false, "error": e.to_string(), "violation": violation_json(&e) }),
            )?;
            Ok(Status::DomainFailure)
        }
    }
}

/// The offending labels of an axiom error.
fn violation_json(e: &Error) -> Value {
    match e {
        Error::TriangleViolation(x, y, z) => json!({ "axiom": "triangle", "points": [x, y, z] }),
        Error::NotSymmetric(x, y) => json!({ "axiom": "symmetry", "points": [x, y] }),
        Error::NegativeOrZeroOffDiagonal(x, y) => {
            json!({ "axiom": "positivity", "points": [x, y] })
        }
        Error::NonZeroDiagonal(x) => json!({ "axiom": "diagonal", "points": [x] }),
        _ => Value::Null,
    }
}

impl Failure {
    fn with_path(mut self, path: &Path) -> Self {
        self.error = self.error.context(path.display().to_string());
        self
    }
}

pub fn norm(
    cfg: &Config,
    space: &Path,
    molecule: &Path,
    method: NormMethod,
    out: &mut dyn Write,
) -> CmdResult {
    match cfg.mode {
        ArithmeticMode::Exact => norm_in::<Rational>(cfg, space, molecule, method, out),
        ArithmeticMode::Float => norm_in::<f64>(cfg, space, molecule, method, out),
    }
}

fn norm_in<S: Scalar>(
    cfg: &Config,
    space: &Path,
    molecule: &Path,
    method: NormMethod,
    out: &mut dyn Write,
) -> CmdResult {
    let m = load_space::<S>(space)?;
    let mu = with_path(read_molecule(&m, &read_text(molecule)?), molecule)?;
    let report = norm_report(&mu, method, cfg.tol)?;
    let ok = report["agree"].as_bool().unwrap_or(true);
    emit(out, &report)?;
    Ok(if ok {
        Status::Success
    } else {
        Status::DomainFailure
    })
}

/// JSON summary of the requested routes. With `all`, `agree` records whether
/// every route that ran matches the others within `tol` (exactly in exact
/// mode).
pub(crate) fn norm_report<S: Scalar>(
    mu: &Molecule<S>,
    method: NormMethod,
    tol: f64,
) -> Result<Value, Failure> {
    let space = mu.space();
    let mut report = json!({
        "space": space.name(),
        "mode": S::MODE.to_string(),
        "method": format!("{method:?}").to_lowercase(),
        "support": mu.support_labels(),
    });
    let mut values: Vec<S> = Vec::new();
    if matches!(method, NormMethod::Lp | NormMethod::All) {
        let dual = norm_dual_lp(mu)?;
        let violation = dual.max_violation(space);
        report["lp"] = json!({
            "value": scalar_json(&dual.value),
            "pivots": dual.pivots,
            "objective": scalar_json(&dual.objective(mu)),
            "max_violation": scalar_json(&violation),
            "potential": dual.potential.iter().map(|(&i, u)| (space.label(i).to_string(), scalar_json(u))).collect::<serde_json::Map<_, _>>(),
        });
        values.push(dual.value);
    }
    if matches!(method, NormMethod::Flow | NormMethod::All) {
        let plan = norm_flow(mu)?;
        report["flow"] = json!({
            "value": scalar_json(&plan.cost),
            "pivots": plan.pivots,
            "conserves": plan.conserves(mu, tol),
            "plan": plan.labeled(space).into_iter().map(|(a, b, f)| json!([a, b, scalar_json(&f)])).collect::<Vec<_>>(),
        });
        values.push(plan.cost);
    }
    let line = match method {
        NormMethod::Line => Some(norm_line(mu)?),
        // the line route only applies to spaces that embed in ℝ
        NormMethod::All if space.line_embedding().is_ok() => Some(norm_line(mu)?),
        _ => None,
    };
    match line {
        Some((v, _)) => {
            report["line"] = json!({ "value": scalar_json(&v) });
            values.push(v);
        }
        None if method == NormMethod::All => report["line"] = Value::Null,
        None => {}
    }
    if method == NormMethod::All {
        let gap = values
            .iter()
            .flat_map(|a| values.iter().map(move |b| rel_diff(a, b)))
            .fold(0.0, f64::max);
        let agree = if S::is_exact() {
            values.windows(2).all(|w| w[0] == w[1])
        } else {
            gap <= tol
        };
        report["duality_gap"] = json!(gap);
        report["agree"] = json!(agree);
    }
    report["value"] = scalar_json(&values[0]);
    Ok(report)
}

pub fn operator(cfg: &Config, args: &OperatorArgs, out: &mut dyn Write) -> CmdResult {
    match cfg.mode {
        ArithmeticMode::Exact => operator_in::<Rational>(args, out),
        ArithmeticMode::Float => operator_in::<f64>(args, out),
    }
}

fn operator_in<S: Scalar>(args: &OperatorArgs, out: &mut dyn Write) -> CmdResult {
    let dom = load_space::<S>(&args.domain)?;
    let cod = load_space::<S>(&args.codomain)?;
    let f = with_path(read_map(&dom, &cod, &read_text(&args.map)?), &args.map)?;
    let molecules = args
        .molecules
        .iter()
        .map(|p| with_path(read_molecule(&dom, &read_text(p)?), p))
        .collect::<Result<Vec<_>, _>>()?;
    let radius = S::parse_str(&args.radius).map_err(Failure::input)?;
    let centres = match &args.point {
        Some(l) => vec![with_path(dom.index_of(l), &args.domain)?],
        None => (0..dom.len()).collect(),
    };
    let checks: Vec<Check> = if args.checks.is_empty() {
        vec![
            Check::Rank,
            Check::Bilip,
            Check::Support,
            Check::Nonreturning,
            Check::Modulus,
        ]
    } else {
        args.checks.clone()
    };
    let report = operator_report(&f, &checks, &molecules, &centres, &radius)?;
    emit(out, &report)?;
    Ok(Status::Success)
}

pub(crate) fn operator_report<S: Scalar>(
    f: &PointMap<S>,
    checks: &[Check],
    molecules: &[Molecule<S>],
    centres: &[usize],
    radius: &S,
) -> Result<Value, Failure> {
    let (dom, cod) = (f.domain(), f.codomain());
    let pair = |p: Option<(usize, usize)>| p.map(|(a, b)| json!([dom.label(a), dom.label(b)]));
    let mut report = json!({ "domain": dom.name(), "codomain": cod.name() });
    for check in checks {
        match check {
            Check::Rank => {
                let k = kernel_basis(&linearize(f));
                report["rank"] = json!({
                    "rank": k.rank,
                    "dimension": k.dimension,
                    "injective": k.is_injective,
                    "onto": k.rank == cod.len() - 1,
                    "kernel": k.kernel.iter().map(molecule_value).collect::<Vec<_>>(),
                });
            }
            Check::Bilip => {
                let b = bilip_constants(f);
                report["bilip"] = json!({
                    "lower": b.lower.as_ref().map(scalar_json),
                    "upper": scalar_json(&b.upper),
                    "lower_pair": pair(b.lower_pair),
                    "upper_pair": pair(b.upper_pair),
                    "collapsing": pair(b.collapsing),
                });
            }
            Check::Support => {
                let rows = molecules
                    .iter()
                    .map(|mu| {
                        let r = check_support_preservation(f, mu)?;
                        let labels = |s: &std::collections::BTreeSet<usize>| {
                            s.iter().map(|&i| cod.label(i)).collect::<Vec<_>>()
                        };
                        Ok(json!({
                            "image_support": labels(&r.lhs),
                            "mapped_support": labels(&r.rhs),
                            "inclusion": r.inclusion_holds,
                            "equality": r.equality_holds,
                        }))
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                report["support"] = Value::Array(rows);
            }
            Check::Nonreturning => {
                let rows = centres
                    .iter()
                    .map(|&x| {
                        let v = check_nonreturning(f, x, radius)?;
                        Ok(json!({
                            "point": dom.label(x),
                            "radius": scalar_json(radius),
                            "sup_rho": v.sup_rho.as_ref().map(scalar_json),
                            "nearest_outsider": v.nearest_outsider.map(|z| dom.label(z)),
                        }))
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                report["nonreturning"] = Value::Array(rows);
            }
            Check::Modulus => {
                if dom.len() < 2 {
                    report["modulus"] = Value::Null;
                    continue;
                }
                let m = embedding_modulus(f, molecules)?;
                report["modulus"] = json!({
                    "lower": m.lower.as_ref().map(scalar_json),
                    "upper": scalar_json(&m.upper),
                    "method": m.method,
                });
            }
        }
    }
    Ok(report)
}

fn molecule_value<S: Scalar>(mu: &Molecule<S>) -> Value {
    serde_json::to_value(lipfree_core::io::molecule_json(mu)).expect("molecule files serialize")
}
