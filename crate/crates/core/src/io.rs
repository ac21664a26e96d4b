//! JSON schemas for spaces, molecules, maps, Lipschitz functions and moduli.
//!
//! Numbers may be JSON numbers or strings (`"p/q"`, integers, finite
//! decimals). In exact mode JSON numbers must be integers, since any other
//! JSON number has already been rounded by the writer.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::free::Molecule;
use crate::lip::{LipFunction, ModulusFunction};
use crate::metric::{validate_space, FiniteMetricSpace};
use crate::operators::PointMap;
use crate::scalar::{parse_rational, Rational, Scalar};

pub fn parse_scalar<S: Scalar>(v: &Value) -> Result<S> {
    match v {
        Value::String(s) => S::parse_str(s),
        Value::Number(n) => {
            if S::is_exact() {
                if let Some(i) = n.as_i64() {
                    return Ok(S::from_int(i));
                }
                return Err(Error::Parse(format!(
                    "{n} is not exact; write rationals as \"p/q\" strings in exact mode"
                )));
            }
            n.as_f64()
                .map(S::from_f64)
                .ok_or_else(|| Error::Parse(format!("{n} is not finite")))
        }
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

/// Exact values as strings, floats as JSON numbers.
pub fn scalar_json<S: Scalar>(x: &S) -> Value {
    if S::is_exact() {
        Value::String(x.render())
    } else {
        serde_json::Number::from_f64(x.to_f64()).map_or(Value::Null, Value::Number)
    }
}

fn from_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceFile {
    pub name: String,
    pub base: String,
    pub points: Vec<String>,
    pub matrix: Vec<Vec<Value>>,
}

/// Parses and validates a space file.
pub fn read_space<S: Scalar>(text: &str) -> Result<FiniteMetricSpace<S>> {
    let raw: SpaceFile = from_str(text)?;
    let matrix = raw
        .matrix
        .iter()
        .map(|row| row.iter().map(parse_scalar).collect::<Result<Vec<S>>>())
        .collect::<Result<Vec<_>>>()?;
    validate_space(raw.name, raw.points, &raw.base, matrix)
}

pub fn space_json<S: Scalar>(space: &FiniteMetricSpace<S>) -> SpaceFile {
    let n = space.len();
    SpaceFile {
        name: space.name().to_string(),
        base: space.base_label().to_string(),
        points: space.labels().to_vec(),
        matrix: (0..n)
            .map(|i| (0..n).map(|j| scalar_json(&space.d(i, j))).collect())
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Term {
    pub point: String,
    pub coeff: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MoleculeFile {
    pub space: String,
    pub terms: Vec<Term>,
}

fn check_name(expected: &str, got: &str, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Parse(format!(
            "{what} refers to space `{got}`, expected `{expected}`"
        )));
    }
    Ok(())
}

pub fn read_molecule<S: Scalar>(
    space: &Arc<FiniteMetricSpace<S>>,
    text: &str,
) -> Result<Molecule<S>> {
    let raw: MoleculeFile = from_str(text)?;
    check_name(space.name(), &raw.space, "molecule")?;
    let terms = raw
        .terms
        .iter()
        .map(|t| Ok((t.point.clone(), parse_scalar::<S>(&t.coeff)?)))
        .collect::<Result<Vec<_>>>()?;
    crate::free::canonicalize(space, terms)
}

pub fn molecule_json<S: Scalar>(mu: &Molecule<S>) -> MoleculeFile {
    MoleculeFile {
        space: mu.space().name().to_string(),
        terms: mu
            .labeled_terms()
            .into_iter()
            .map(|(point, a)| Term {
                point,
                coeff: scalar_json(&a),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapFile {
    pub domain: String,
    pub codomain: String,
    pub assignment: BTreeMap<String, String>,
}

pub fn read_map<S: Scalar>(
    domain: &Arc<FiniteMetricSpace<S>>,
    codomain: &Arc<FiniteMetricSpace<S>>,
    text: &str,
) -> Result<PointMap<S>> {
    let raw: MapFile = from_str(text)?;
    check_name(domain.name(), &raw.domain, "map domain")?;
    check_name(codomain.name(), &raw.codomain, "map codomain")?;
    let pairs: Vec<(String, String)> = raw.assignment.into_iter().collect();
    PointMap::from_labels(domain, codomain, &pairs)
}

pub fn map_json<S: Scalar>(f: &PointMap<S>) -> MapFile {
    MapFile {
        domain: f.domain().name().to_string(),
        codomain: f.codomain().name().to_string(),
        assignment: f.labeled().into_iter().collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipFunctionFile {
    pub space: String,
    pub values: BTreeMap<String, Value>,
}

/// Points missing from `values` default to 0 only for the base point.
pub fn read_lip_function<S: Scalar>(
    space: &Arc<FiniteMetricSpace<S>>,
    text: &str,
) -> Result<LipFunction<S>> {
    let raw: LipFunctionFile = from_str(text)?;
    check_name(space.name(), &raw.space, "function")?;
    let values = raw
        .values
        .iter()
        .map(|(l, v)| Ok((l.clone(), parse_scalar::<S>(v)?)))
        .collect::<Result<Vec<_>>>()?;
    LipFunction::from_labels(space, &values)
}

pub fn lip_function_json<S: Scalar>(g: &LipFunction<S>) -> LipFunctionFile {
    let space = g.space();
    LipFunctionFile {
        space: space.name().to_string(),
        values: (0..space.len())
            .map(|i| (space.label(i).to_string(), scalar_json(&g.value(i))))
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModulusFile {
    Power {
        alpha: Value,
    },
    Pwl {
        breakpoints: Vec<Value>,
        values: Vec<Value>,
        #[serde(default)]
        c1: Option<Value>,
    },
}

pub fn read_modulus<S: Scalar>(text: &str) -> Result<ModulusFunction<S>> {
    match from_str::<ModulusFile>(text)? {
        ModulusFile::Power { alpha } => {
            let alpha = match &alpha {
                Value::String(s) => parse_rational(s)?,
                other => parse_scalar::<Rational>(other)?,
            };
            ModulusFunction::power(alpha)
        }
        ModulusFile::Pwl {
            breakpoints,
            values,
            c1,
        } => {
            let bp = breakpoints
                .iter()
                .map(parse_scalar)
                .collect::<Result<Vec<S>>>()?;
            let vals = values
                .iter()
                .map(parse_scalar)
                .collect::<Result<Vec<S>>>()?;
            let c1 = c1
                .as_ref()
                .map(parse_scalar)
                .transpose()?
                .unwrap_or_else(S::one);
            ModulusFunction::pwl(bp, vals, c1)
        }
    }
}
