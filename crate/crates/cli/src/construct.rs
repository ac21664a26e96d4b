//! `construct`: per-stage reports and re-checkable artifacts for each family.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use lipfree_core::constructions::{
    cantor_dust, discrete_witness, rtree_example, snowflake_witness, svc_witness, xsquared_grid,
    DiscreteVariant, Expected, WitnessInstance,
};
use lipfree_core::free::{norm_dual_lp, norm_flow, norm_line};
use lipfree_core::io::{map_json, molecule_json, space_json};
use lipfree_core::metric::{distance_set_measure, FiniteMetricSpace, ProductNorm};
use lipfree_core::operators::{
    apply, bilip_constants, embedding_modulus, kernel_basis, linearize, PointMap,
};
use lipfree_core::scalar::{parse_rational, rel_diff, Rational};
use lipfree_core::{Error, Scalar};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Config, ConstructArgs, Family};
use crate::commands::emit;
use crate::outcome::{CmdResult, Failure, Status};

/// Dust stages above this are reported but their spaces are not written out.
const DUST_ARTIFACT_STAGE: usize = 3;

/// One CSV row of a kernel-witness family.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessRow {
    pub stage: usize,
    pub norm_mu_exact: String,
    pub norm_mu_lp: f64,
    pub norm_image_exact: String,
    pub norm_image_lp: f64,
    pub ratio: f64,
    pub duality_gap: f64,
}

/// Everything computed for one stage; the CSV row is a projection of it.
#[derive(Clone, Debug, Serialize)]
pub struct StageData {
    #[serde(flatten)]
    pub row: WitnessRow,
    pub norm_mu_flow: f64,
    pub norm_image_flow: f64,
    /// Exact line-oracle values, where the domain embeds in ℝ.
    pub norm_mu_line: Option<String>,
    pub norm_image_line: String,
    pub support_preserved: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub family: String,
    pub params: BTreeMap<String, String>,
    pub rows: Vec<StageData>,
    pub verdicts: BTreeMap<String, bool>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(Failure::input)?;
        Ok(Artifacts {
            dir,
            written: Vec::new(),
        })
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("artifacts serialize");
        fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::input)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let write = || -> anyhow::Result<()> {
            let mut w = csv::Writer::from_path(&path)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        };
        write()
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::input)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Accepts `p/q`, integers, finite decimals, and (rounded to their exact
/// binary value) floats in exponent notation.
pub(crate) fn parse_positive(s: &str, what: &str) -> Result<Rational, Failure> {
    let q = parse_rational(s)
        .or_else(|_| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Rational::from_f64)
                .ok_or(())
        })
        .map_err(|_| Failure::input(Error::Parse(format!("{what}: `{s}` is not a number"))))?;
    if q <= Rational::from_int(0) {
        return Err(Failure::input(Error::InvalidArgument(format!(
            "{what} must be positive, got {s}"
        ))));
    }
    Ok(q)
}

pub fn construct(cfg: &Config, args: &ConstructArgs, out: &mut dyn Write) -> CmdResult {
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("lipfree-out"));
    let mut art = Artifacts::new(dir)?;
    let summary = match args.family {
        Family::Svc | Family::Snowflake | Family::Discrete => {
            let report = witness_family(args, cfg.tol, &mut art)?;
            let ok = report.passed();
            (
                serde_json::to_value(&report).expect("reports serialize"),
                ok,
            )
        }
        Family::Dust => dust(args, &mut art)?,
        Family::Rtree => rtree(args, &mut art)?,
        Family::Xsquared => xsquared(args, &mut art)?,
    };
    let (mut value, ok) = summary;
    value["artifacts"] = json!(art.written);
    value["directory"] = json!(art.dir.display().to_string());
    emit(out, &value)?;
    Ok(if ok {
        Status::Success
    } else {
        Status::DomainFailure
    })
}

fn family_tag(args: &ConstructArgs) -> String {
    match args.family {
        Family::Svc => "svc".into(),
        Family::Snowflake => "snowflake".into(),
        Family::Discrete => match args.variant {
            DiscreteVariant::Unbounded => "discrete-unbounded".into(),
            DiscreteVariant::Bounded => "discrete-bounded".into(),
        },
        Family::Dust => "dust".into(),
        Family::Rtree => "rtree".into(),
        Family::Xsquared => "xsquared".into(),
    }
}

fn build_instance(
    args: &ConstructArgs,
    alpha: &Rational,
    k: usize,
) -> Result<WitnessInstance, Error> {
    match args.family {
        Family::Svc => svc_witness(k),
        Family::Snowflake => snowflake_witness(alpha, k),
        Family::Discrete => discrete_witness(args.variant, k),
        _ => unreachable!("not a witness family"),
    }
}

fn render_expected(e: &Expected) -> String {
    match e {
        Expected::Exact(v) => v.render(),
        Expected::AtLeast(v) => format!(">={}", v.render()),
    }
}

/// Solver and oracle values for one stage.
pub fn witness_stage(w: &WitnessInstance) -> Result<StageData, Error> {
    let dom = w.float_domain();
    let mu = w.float_witness(&dom);
    let cod: Arc<FiniteMetricSpace<f64>> = Arc::new(w.codomain.convert());
    let image = w.image();
    let image_f = image.convert(&cod);
    let (lp_mu, flow_mu) = (norm_dual_lp(&mu)?.value, norm_flow(&mu)?.cost);
    let (lp_img, flow_img) = (norm_dual_lp(&image_f)?.value, norm_flow(&image_f)?.cost);
    let line_mu = if w.domain_is_exact() && w.domain.line_embedding().is_ok() {
        Some(norm_line(&w.witness)?.0.render())
    } else {
        None
    };
    let support_preserved =
        lipfree_core::operators::check_support_preservation(&w.map, &w.witness)?.equality_holds;
    Ok(StageData {
        row: WitnessRow {
            stage: w.stage,
            norm_mu_exact: render_expected(&w.expected_norm),
            norm_mu_lp: lp_mu,
            norm_image_exact: w.expected_image_norm.render(),
            norm_image_lp: lp_img,
            ratio: lp_img / lp_mu,
            duality_gap: rel_diff(&lp_mu, &flow_mu).max(rel_diff(&lp_img, &flow_img)),
        },
        norm_mu_flow: flow_mu,
        norm_image_flow: flow_img,
        norm_mu_line: line_mu,
        norm_image_line: norm_line(&image)?.0.render(),
        support_preserved,
    })
}

fn parse_expected(s: &str) -> Option<Expected> {
    match s.strip_prefix(">=") {
        Some(rest) => parse_rational(rest).ok().map(Expected::AtLeast),
        None => parse_rational(s).ok().map(Expected::Exact),
    }
}

/// Verdicts computed only from the rows and the tolerance.
pub fn witness_verdicts(family: &str, rows: &[StageData], tol: f64) -> BTreeMap<String, bool> {
    let mut v = BTreeMap::new();
    let close = |a: f64, b: &str| parse_rational(b).is_ok_and(|e| rel_diff(&a, &e.to_f64()) <= tol);
    v.insert(
        "image_line_exact".into(),
        rows.iter()
            .all(|r| r.norm_image_line == r.row.norm_image_exact),
    );
    v.insert(
        "mu_line_exact".into(),
        rows.iter().all(
            |r| match (&r.norm_mu_line, parse_expected(&r.row.norm_mu_exact)) {
                (Some(line), Some(Expected::Exact(e))) => *line == e.render(),
                (Some(line), Some(Expected::AtLeast(e))) => {
                    parse_rational(line).is_ok_and(|x| x >= e)
                }
                (None, Some(_)) => true,
                (_, None) => false,
            },
        ),
    );
    v.insert(
        "solvers_match_closed_form".into(),
        rows.iter().all(|r| {
            parse_expected(&r.row.norm_mu_exact)
                .is_some_and(|e| e.admits(r.row.norm_mu_lp, tol) && e.admits(r.norm_mu_flow, tol))
                && close(r.row.norm_image_lp, &r.row.norm_image_exact)
                && close(r.norm_image_flow, &r.row.norm_image_exact)
        }),
    );
    v.insert(
        "duality_gap_within_tol".into(),
        rows.iter().all(|r| r.row.duality_gap <= tol),
    );
    v.insert(
        "ratio_strictly_decreasing".into(),
        rows.windows(2).all(|p| p[1].row.ratio < p[0].row.ratio),
    );
    v.insert(
        "support_preserved_on_truncations".into(),
        rows.iter().all(|r| r.support_preserved),
    );
    if family == "snowflake" {
        if let Some(r) = rows.iter().find(|r| r.row.stage == 2) {
            v.insert("ratio_below_0.02_at_stage_2".into(), r.row.ratio < 0.02);
        }
    }
    v
}

fn witness_family(
    args: &ConstructArgs,
    tol: f64,
    art: &mut Artifacts,
) -> Result<WitnessReport, Failure> {
    let tag = family_tag(args);
    let alpha = parse_positive(&args.alpha, "alpha")?;
    if args.stage == 0 {
        return Err(Failure::input(Error::InvalidArgument(
            "stage must be at least 1".into(),
        )));
    }
    let instances = (1..=args.stage)
        .map(|k| build_instance(args, &alpha, k))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = instances
        .iter()
        .map(witness_stage)
        .collect::<Result<Vec<_>, _>>()?;
    for w in &instances {
        write_witness_artifacts(&tag, w, art)?;
    }
    let csv_rows: Vec<WitnessRow> = rows.iter().map(|r| r.row.clone()).collect();
    art.csv(&format!("{tag}.csv"), &csv_rows)?;
    let mut params = BTreeMap::from([("stages".to_string(), args.stage.to_string())]);
    if args.family == Family::Snowflake {
        params.insert("alpha".into(), alpha.render());
    }
    let verdicts = witness_verdicts(&tag, &rows, tol);
    let report = WitnessReport {
        family: tag.clone(),
        params,
        rows,
        verdicts,
    };
    art.json(&format!("{tag}-report.json"), &report)?;
    Ok(report)
}

/// Space, map, witness and image files. Snowflake domains are irrational, so
/// that family is written in float mode throughout.
fn write_witness_artifacts(
    tag: &str,
    w: &WitnessInstance,
    art: &mut Artifacts,
) -> Result<(), Failure> {
    let k = w.stage;
    if w.domain_is_exact() {
        art.json(
            &format!("{tag}-{k}-domain.json"),
            &space_json(&w.domain.to_dense()),
        )?;
        art.json(
            &format!("{tag}-{k}-codomain.json"),
            &space_json(&w.codomain.to_dense()),
        )?;
        art.json(&format!("{tag}-{k}-map.json"), &map_json(&w.map))?;
        art.json(
            &format!("{tag}-{k}-witness.json"),
            &molecule_json(&w.witness),
        )?;
        art.json(&format!("{tag}-{k}-image.json"), &molecule_json(&w.image()))?;
    } else {
        let dom = w.float_domain();
        let cod: Arc<FiniteMetricSpace<f64>> = Arc::new(w.codomain.convert());
        let map = PointMap::new(&dom, &cod, w.map.assignment().to_vec())?;
        let mu = w.float_witness(&dom);
        art.json(&format!("{tag}-{k}-domain.json"), &space_json(&*dom))?;
        art.json(&format!("{tag}-{k}-codomain.json"), &space_json(&*cod))?;
        art.json(&format!("{tag}-{k}-map.json"), &map_json(&map))?;
        art.json(&format!("{tag}-{k}-witness.json"), &molecule_json(&mu))?;
        art.json(
            &format!("{tag}-{k}-image.json"),
            &molecule_json(&apply(&map, &mu)?),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DustRow {
    pub stage: usize,
    pub epsilon: String,
    pub measure_l1: String,
    pub measure_linf: String,
}

/// Distance-set measures from the base of the stage-`k` dust under both
/// product metrics.
pub fn dust_measures(k: usize, eps: &Rational) -> Result<(Rational, Rational), Error> {
    let l1 = cantor_dust(k, ProductNorm::L1)?;
    let linf = cantor_dust(k, ProductNorm::LInf)?;
    Ok((
        distance_set_measure(&l1, l1.base(), eps)?,
        distance_set_measure(&linf, linf.base(), eps)?,
    ))
}

fn dust(args: &ConstructArgs, art: &mut Artifacts) -> Result<(Value, bool), Failure> {
    let eps = parse_positive(&args.epsilon, "epsilon")?;
    let mut rows = Vec::new();
    let mut decimals = Vec::new();
    for k in 1..=args.stage {
        let (l1, linf) = dust_measures(k, &eps)?;
        rows.push(DustRow {
            stage: k,
            epsilon: eps.render(),
            measure_l1: l1.render(),
            measure_linf: linf.render(),
        });
        decimals
            .push(json!({ "stage": k, "measure_l1": l1.to_f64(), "measure_linf": linf.to_f64() }));
        if k <= DUST_ARTIFACT_STAGE {
            for norm in [ProductNorm::L1, ProductNorm::LInf] {
                let space = cantor_dust(k, norm)?;
                art.json(&format!("{}.json", space.name()), &space_json(&space))?;
            }
        }
    }
    art.csv("dust.csv", &rows)?;
    let last = decimals.last().cloned().unwrap_or(Value::Null);
    let verdicts = json!({
        "l1_at_least_1.9": last["measure_l1"].as_f64().is_some_and(|x| x >= 1.9),
        "linf_at_most_0.2": last["measure_linf"].as_f64().is_some_and(|x| x <= 0.2),
    });
    let ok = verdicts
        .as_object()
        .expect("object")
        .values()
        .all(|v| v == &json!(true));
    let report =
        json!({ "family": "dust", "rows": rows, "decimal": decimals, "verdicts": verdicts });
    art.json("dust-report.json", &report)?;
    Ok((report, ok))
}

#[derive(Clone, Debug, Serialize)]
pub struct RtreeRow {
    pub n_max: usize,
    pub domain_points: usize,
    pub codomain_points: usize,
    pub rank: usize,
    pub rank_deficiency: usize,
    pub pairs_mapped_exactly: bool,
    pub tail_norm_exact: String,
    pub tail_norm_line: String,
}

fn rtree(args: &ConstructArgs, art: &mut Artifacts) -> Result<(Value, bool), Failure> {
    let sizes = if args.n.is_empty() {
        vec![20]
    } else {
        args.n.clone()
    };
    let mut rows = Vec::new();
    for &n in &sizes {
        let r = rtree_example(n)?;
        let rank = kernel_basis(&linearize(&r.map)).rank;
        let pairs_ok = r
            .pairs
            .iter()
            .map(|(s, d)| Ok(apply(&r.map, s)? == *d))
            .collect::<Result<Vec<_>, Error>>()?;
        rows.push(RtreeRow {
            n_max: n,
            domain_points: r.domain.len(),
            codomain_points: r.codomain.len(),
            rank,
            rank_deficiency: r.codomain.len() - 1 - rank,
            pairs_mapped_exactly: pairs_ok.iter().all(|&b| b),
            tail_norm_exact: r.expected_tail_norm.render(),
            tail_norm_line: norm_line(&r.tail)?.0.render(),
        });
        art.json(&format!("rtree-{n}-domain.json"), &space_json(&*r.domain))?;
        art.json(
            &format!("rtree-{n}-codomain.json"),
            &space_json(&r.codomain.to_dense()),
        )?;
        art.json(&format!("rtree-{n}-map.json"), &map_json(&r.map))?;
        art.json(&format!("rtree-{n}-tail.json"), &molecule_json(&r.tail))?;
    }
    art.csv("rtree.csv", &rows)?;
    let verdicts = json!({
        "pairs_mapped_exactly": rows.iter().all(|r| r.pairs_mapped_exactly),
        "rank_deficiency_one": rows.iter().all(|r| r.rank_deficiency == 1),
        "tail_norm_exact": rows.iter().all(|r| r.tail_norm_line == r.tail_norm_exact),
    });
    let ok = verdicts
        .as_object()
        .expect("object")
        .values()
        .all(|v| v == &json!(true));
    let report = json!({ "family": "rtree", "rows": rows, "verdicts": verdicts });
    art.json("rtree-report.json", &report)?;
    Ok((report, ok))
}

#[derive(Clone, Debug, Serialize)]
pub struct GridRow {
    pub n: usize,
    pub rank: usize,
    pub dimension: usize,
    pub full_rank: bool,
    pub lower: String,
    pub lip: String,
    pub modulus_upper: String,
    pub modulus_method: String,
}

pub fn grid_row(n: usize) -> Result<(GridRow, Rational), Error> {
    let g = xsquared_grid(n)?;
    let k = kernel_basis(&linearize(&g.map));
    let b = bilip_constants(&g.map);
    let m = embedding_modulus(&g.map, &[])?;
    let lower = b.lower.expect("grid has two points");
    Ok((
        GridRow {
            n,
            rank: k.rank,
            dimension: k.dimension,
            full_rank: k.is_injective,
            lower: lower.render(),
            lip: b.upper.render(),
            modulus_upper: m.upper.render(),
            modulus_method: serde_json::to_value(m.method)
                .expect("enum")
                .as_str()
                .unwrap_or_default()
                .to_string(),
        },
        g.expected_lower,
    ))
}

fn xsquared(args: &ConstructArgs, art: &mut Artifacts) -> Result<(Value, bool), Failure> {
    let sizes = if args.n.is_empty() {
        vec![4, 10, 100, 1000]
    } else {
        args.n.clone()
    };
    let mut rows = Vec::new();
    let mut lower_ok = true;
    let mut modulus_ok = true;
    for &n in &sizes {
        let (row, expected_lower) = grid_row(n)?;
        lower_ok &= row.lower == expected_lower.render();
        modulus_ok &= parse_rational(&row.modulus_upper)? <= parse_rational(&row.lower)?;
        if n <= 16 {
            let g = xsquared_grid(n)?;
            art.json(
                &format!("{}.json", g.domain.name()),
                &space_json(&g.domain.to_dense()),
            )?;
            art.json(
                &format!("{}.json", g.codomain.name()),
                &space_json(&g.codomain.to_dense()),
            )?;
            art.json(&format!("xsquared-{n}-map.json"), &map_json(&g.map))?;
        }
        rows.push(row);
    }
    art.csv("xsquared.csv", &rows)?;
    let mut sorted: Vec<&GridRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.n);
    let decreasing = sorted.windows(2).all(|p| {
        let (a, b) = (
            parse_rational(&p[0].modulus_upper),
            parse_rational(&p[1].modulus_upper),
        );
        matches!((a, b), (Ok(a), Ok(b)) if b <= a)
    });
    let verdicts = json!({
        "full_rank": rows.iter().all(|r| r.full_rank),
        "lower_is_one_over_n": lower_ok,
        "modulus_at_most_lower": modulus_ok,
        "modulus_nonincreasing_in_n": decreasing,
    });
    let ok = verdicts
        .as_object()
        .expect("object")
        .values()
        .all(|v| v == &json!(true));
    let report = json!({ "family": "xsquared", "rows": rows, "verdicts": verdicts });
    art.json("xsquared-report.json", &report)?;
    Ok((report, ok))
}
