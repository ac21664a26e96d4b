//! Point maps, their linearizations `f̂`, the composition operator `C_f`, and
//! injectivity and support diagnostics.

mod linalg;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::free::{norm_dual_lp, same_space, Molecule};
use crate::lip::LipFunction;
use crate::metric::FiniteMetricSpace;
use crate::scalar::{min_of, Rational, Scalar};

/// A base-point-preserving map between two finite spaces.
#[derive(Clone, Debug)]
pub struct PointMap<S> {
    domain: Arc<FiniteMetricSpace<S>>,
    codomain: Arc<FiniteMetricSpace<S>>,
    assignment: Vec<usize>,
}

impl<S: Scalar> PointMap<S> {
    pub fn new(
        domain: &Arc<FiniteMetricSpace<S>>,
        codomain: &Arc<FiniteMetricSpace<S>>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if assignment.len() != domain.len() {
            return Err(Error::InvalidArgument(format!(
                "map has {} images for {} points",
                assignment.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&t| t >= codomain.len()) {
            return Err(Error::InvalidArgument(format!(
                "image index {bad} out of range"
            )));
        }
        if assignment[domain.base()] != codomain.base() {
            return Err(Error::BaseNotPreserved);
        }
        Ok(PointMap {
            domain: Arc::clone(domain),
            codomain: Arc::clone(codomain),
            assignment,
        })
    }

    /// The map must be total on the domain.
    pub fn from_labels(
        domain: &Arc<FiniteMetricSpace<S>>,
        codomain: &Arc<FiniteMetricSpace<S>>,
        pairs: &[(String, String)],
    ) -> Result<Self> {
        let mut a: Vec<Option<usize>> = vec![None; domain.len()];
        for (x, y) in pairs {
            a[domain.index_of(x)?] = Some(codomain.index_of(y)?);
        }
        let a = a
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| {
                    Error::InvalidArgument(format!("map has no image for `{}`", domain.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, codomain, a)
    }

    pub fn identity(space: &Arc<FiniteMetricSpace<S>>) -> Self {
        PointMap {
            domain: Arc::clone(space),
            codomain: Arc::clone(space),
            assignment: (0..space.len()).collect(),
        }
    }

    pub fn domain(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.codomain
    }

    pub fn image(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn labeled(&self) -> Vec<(String, String)> {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                (
                    self.domain.label(i).to_string(),
                    self.codomain.label(t).to_string(),
                )
            })
            .collect()
    }

    pub fn image_set(&self) -> BTreeSet<usize> {
        self.assignment.iter().copied().collect()
    }

    pub fn is_injective(&self) -> bool {
        self.image_set().len() == self.assignment.len()
    }

    /// First pair `x ≠ y` with `f(x) = f(y)`.
    pub fn collision(&self) -> Option<(usize, usize)> {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, &t) in self.assignment.iter().enumerate() {
            if let Some(&j) = seen.get(&t) {
                return Some((j, i));
            }
            seen.insert(t, i);
        }
        None
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &PointMap<S>) -> Result<PointMap<S>> {
        if !same_space(&self.codomain, &outer.domain) {
            return Err(Error::NotComposable);
        }
        let assignment = self
            .assignment
            .iter()
            .map(|&t| outer.assignment[t])
            .collect();
        PointMap::new(&self.domain, &outer.codomain, assignment)
    }

    /// `Lip(f) = max d(f(x),f(y)) / d(x,y)` with a maximizing pair.
    pub fn lip_constant(&self) -> (S, Option<(usize, usize)>) {
        let n = self.domain.len();
        let mut best = S::zero();
        let mut arg = None;
        for i in 0..n {
            for j in i + 1..n {
                let r =
                    self.codomain.d(self.assignment[i], self.assignment[j]) / self.domain.d(i, j);
                if r > best {
                    best = r;
                    arg = Some((i, j));
                }
            }
        }
        (best, arg)
    }
}

/// `f̂` in coordinates: column `x` (a non-base domain point) has a single 1 in
/// row `f(x)` unless `f(x)` is the base point, in which case it is zero.
#[derive(Clone, Debug)]
pub struct OperatorMatrix<S> {
    domain: Arc<FiniteMetricSpace<S>>,
    codomain: Arc<FiniteMetricSpace<S>>,
    col_row: Vec<Option<usize>>,
}

pub fn linearize<S: Scalar>(f: &PointMap<S>) -> OperatorMatrix<S> {
    let cb = f.codomain.base();
    let col_row = f
        .assignment
        .iter()
        .enumerate()
        .map(|(x, &t)| {
            if x == f.domain.base() || t == cb {
                None
            } else {
                Some(t)
            }
        })
        .collect();
    OperatorMatrix {
        domain: Arc::clone(&f.domain),
        codomain: Arc::clone(&f.codomain),
        col_row,
    }
}

impl<S: Scalar> OperatorMatrix<S> {
    pub fn domain(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.codomain
    }

    /// Row labels (codomain minus base) in index order.
    pub fn row_points(&self) -> Vec<usize> {
        self.codomain.non_base().collect()
    }

    /// Column labels (domain minus base) in index order.
    pub fn col_points(&self) -> Vec<usize> {
        self.domain.non_base().collect()
    }

    /// The row hit by column `x`, if any.
    pub fn target(&self, x: usize) -> Option<usize> {
        self.col_row[x]
    }

    pub fn dense(&self) -> Vec<Vec<i64>> {
        let rows = self.row_points();
        let cols = self.col_points();
        rows.iter()
            .map(|&r| {
                cols.iter()
                    .map(|&c| i64::from(self.col_row[c] == Some(r)))
                    .collect()
            })
            .collect()
    }

    /// Matrix-vector action on the coefficient vector of `μ`.
    pub fn apply(&self, mu: &Molecule<S>) -> Result<Molecule<S>> {
        if !same_space(&self.domain, mu.space()) {
            return Err(Error::SpaceMismatch);
        }
        let mut out: BTreeMap<usize, S> = BTreeMap::new();
        for (&x, a) in mu.terms() {
            if let Some(r) = self.col_row[x] {
                let e = out.entry(r).or_insert_with(S::zero);
                *e = e.clone() + a.clone();
            }
        }
        Ok(Molecule::from_indices(&self.codomain, out))
    }
}

/// Integer matrix product, for checking functoriality.
pub fn dense_product(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// `f̂μ = Σ a_x δ(f(x))`.
pub fn apply<S: Scalar>(f: &PointMap<S>, mu: &Molecule<S>) -> Result<Molecule<S>> {
    if !same_space(&f.domain, mu.space()) {
        return Err(Error::SpaceMismatch);
    }
    Ok(Molecule::from_indices(
        &f.codomain,
        mu.terms()
            .iter()
            .map(|(&x, a)| (f.assignment[x], a.clone())),
    ))
}

/// `C_f g = g ∘ f`.
pub fn compose_cf<S: Scalar>(f: &PointMap<S>, g: &LipFunction<S>) -> Result<LipFunction<S>> {
    if !same_space(&f.codomain, g.space()) {
        return Err(Error::SpaceMismatch);
    }
    LipFunction::new(
        &f.domain,
        f.assignment.iter().map(|&t| g.value(t)).collect(),
    )
}

#[derive(Clone, Debug)]
pub struct KernelReport<S> {
    pub rank: usize,
    /// `|M| - 1`.
    pub dimension: usize,
    pub is_injective: bool,
    pub kernel: Vec<Molecule<S>>,
}

/// Exact rank and null space of `f̂` by rational elimination.
pub fn kernel_basis<S: Scalar>(op: &OperatorMatrix<S>) -> KernelReport<S> {
    let cols_pts = op.col_points();
    let columns: Vec<linalg::SparseVec> = cols_pts
        .iter()
        .map(|&c| match op.col_row[c] {
            Some(r) => linalg::SparseVec::from([(r, Rational::from_integer(1.into()))]),
            None => linalg::SparseVec::new(),
        })
        .collect();
    let (rank, null) = linalg::column_reduce(&columns);
    let kernel = null
        .into_iter()
        .map(|v| {
            Molecule::from_indices(
                &op.domain,
                v.iter().map(|(&j, a)| (cols_pts[j], S::from_rational(a))),
            )
        })
        .collect();
    let dimension = cols_pts.len();
    KernelReport {
        rank,
        dimension,
        is_injective: rank == dimension,
        kernel,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportReport {
    /// `supp(f̂μ)`.
    pub lhs: BTreeSet<usize>,
    /// `f(supp μ)`, base included when some support point maps there.
    pub rhs: BTreeSet<usize>,
    pub inclusion_holds: bool,
    pub equality_holds: bool,
}

pub fn check_support_preservation<S: Scalar>(
    f: &PointMap<S>,
    mu: &Molecule<S>,
) -> Result<SupportReport> {
    let image = apply(f, mu)?;
    let lhs = image.support();
    let rhs: BTreeSet<usize> = mu.support().iter().map(|&x| f.assignment[x]).collect();
    Ok(SupportReport {
        inclusion_holds: lhs.is_subset(&rhs),
        equality_holds: lhs == rhs,
        lhs,
        rhs,
    })
}

/// Supremum of the radii `ρ` with `f(M) ∩ B(f(x),ρ) ⊆ f(B(x,r))`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonReturning<S> {
    /// `None` stands for `+∞` (nothing outside the ball lands elsewhere).
    pub sup_rho: Option<S>,
    /// A point outside `B(x,r)` whose image realizes the supremum.
    pub nearest_outsider: Option<usize>,
}

impl<S: Scalar> NonReturning<S> {
    /// The inclusion holds for `rho` iff `rho < sup` (balls are closed).
    pub fn holds_for(&self, rho: &S) -> bool {
        self.sup_rho.as_ref().is_none_or(|s| rho < s)
    }
}

/// Sweep over the images of points outside `B(x,r)` whose image is not
/// already in `f(B(x,r))`.
pub fn check_nonreturning<S: Scalar>(f: &PointMap<S>, x: usize, r: &S) -> Result<NonReturning<S>> {
    if !r.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {r}"
        )));
    }
    let (m, n) = (&f.domain, &f.codomain);
    let inside: BTreeSet<usize> = (0..m.len())
        .filter(|&z| m.d(x, z) <= *r)
        .map(|z| f.assignment[z])
        .collect();
    let fx = f.assignment[x];
    let mut best: Option<(S, usize)> = None;
    for z in 0..m.len() {
        if m.d(x, z) <= *r || inside.contains(&f.assignment[z]) {
            continue;
        }
        let dist = n.d(fx, f.assignment[z]);
        if best.as_ref().is_none_or(|(b, _)| dist < *b) {
            best = Some((dist, z));
        }
    }
    Ok(match best {
        Some((d, z)) => NonReturning {
            sup_rho: Some(d),
            nearest_outsider: Some(z),
        },
        None => NonReturning {
            sup_rho: None,
            nearest_outsider: None,
        },
    })
}

/// `(a, b)` with `a·d(x,y) ≤ d(f(x),f(y)) ≤ b·d(x,y)`, both sharp.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLipschitz<S> {
    /// `None` on a one-point domain.
    pub lower: Option<S>,
    pub upper: S,
    pub lower_pair: Option<(usize, usize)>,
    pub upper_pair: Option<(usize, usize)>,
    pub collapsing: Option<(usize, usize)>,
}

pub fn bilip_constants<S: Scalar>(f: &PointMap<S>) -> BiLipschitz<S> {
    let (upper, upper_pair) = f.lip_constant();
    let n = f.domain.len();
    let mut lower: Option<(S, (usize, usize))> = None;
    for i in 0..n {
        for j in i + 1..n {
            let r = f.codomain.d(f.assignment[i], f.assignment[j]) / f.domain.d(i, j);
            if lower.as_ref().is_none_or(|(b, _)| r < *b) {
                lower = Some((r, (i, j)));
            }
        }
    }
    let collapsing = f.collision();
    BiLipschitz {
        lower: lower.as_ref().map(|l| l.0.clone()),
        lower_pair: lower.map(|l| l.1),
        upper,
        upper_pair,
        collapsing,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulusMethod {
    ExactVertex,
    WitnessFamily,
}

/// Bounds on `inf_{μ≠0} ‖f̂μ‖ / ‖μ‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusBracket<S> {
    pub lower: Option<S>,
    pub upper: S,
    pub method: ModulusMethod,
}

const EXACT_DIMENSION_CAP: usize = 8;

/// Exact embedding modulus by vertex enumeration, for `|M| - 1 ≤ 8`.
///
/// For injective `f`, `f̂` is a bijection onto `F(f(M))`, whose unit ball is
/// the convex hull of the elementary molecules `±m_ab`, `a ≠ b ∈ f(M)`. So
/// `{μ : ‖f̂μ‖ ≤ 1}` is the hull of their preimages, and the largest `‖μ‖`
/// on it is attained at one of them.
pub fn embedding_modulus_exact<S: Scalar>(f: &PointMap<S>) -> Result<S> {
    let dim = f.domain.len() - 1;
    if dim > EXACT_DIMENSION_CAP {
        return Err(Error::DimensionTooLargeForExact(dim));
    }
    if !f.is_injective() {
        return Ok(S::zero());
    }
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "one-point domain has no nonzero molecule".into(),
        ));
    }
    let n = f.domain.len();
    let mut worst = S::zero();
    for i in 0..n {
        for j in i + 1..n {
            let scale = S::one() / f.codomain.d(f.assignment[i], f.assignment[j]);
            let vertex = Molecule::from_indices(&f.domain, [(i, scale.clone()), (j, -scale)]);
            let norm = norm_dual_lp(&vertex)?.value;
            if norm > worst {
                worst = norm;
            }
        }
    }
    Ok(S::one() / worst)
}

/// Exact value when the dimension allows, otherwise an upper bound from
/// elementary molecules and the supplied witnesses.
pub fn embedding_modulus<S: Scalar>(
    f: &PointMap<S>,
    witnesses: &[Molecule<S>],
) -> Result<ModulusBracket<S>> {
    if !f.is_injective() {
        return Ok(ModulusBracket {
            lower: Some(S::zero()),
            upper: S::zero(),
            method: ModulusMethod::ExactVertex,
        });
    }
    match embedding_modulus_exact(f) {
        Ok(v) => {
            return Ok(ModulusBracket {
                lower: Some(v.clone()),
                upper: v,
                method: ModulusMethod::ExactVertex,
            })
        }
        Err(Error::DimensionTooLargeForExact(_)) => {}
        Err(e) => return Err(e),
    }
    // ‖f̂ m_xy‖ / ‖m_xy‖ = d(f(x),f(y)) / d(x,y)
    let mut upper = bilip_constants(f).lower.expect("at least two points");
    for w in witnesses {
        if w.is_zero() {
            continue;
        }
        let num = norm_dual_lp(&apply(f, w)?)?.value;
        let den = norm_dual_lp(w)?.value;
        upper = min_of(upper, num / den);
    }
    Ok(ModulusBracket {
        lower: None,
        upper,
        method: ModulusMethod::WitnessFamily,
    })
}

/// Per-sample verdicts of `f`, `g` (on `f̂μ`) and `g∘f` (on `μ`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleVerdict {
    pub f_preserves: bool,
    pub g_preserves: bool,
    pub gf_preserves: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LawTally {
    /// Samples where the hypotheses hold.
    pub applicable: usize,
    /// Sample indices where the hypotheses hold but the conclusion fails.
    pub violations: Vec<usize>,
}

impl LawTally {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionReport {
    pub samples: Vec<SampleVerdict>,
    /// f and g preserve ⇒ g∘f preserves.
    pub law_a: LawTally,
    /// g injective, g∘f preserves ⇒ f preserves.
    pub law_b: LawTally,
    /// f̂ onto, g∘f preserves ⇒ g preserves.
    pub law_c: LawTally,
    pub g_injective: bool,
    pub f_hat_onto: bool,
}

pub fn composition_support_laws<S: Scalar>(
    f: &PointMap<S>,
    g: &PointMap<S>,
    samples: &[Molecule<S>],
) -> Result<CompositionReport> {
    let gf = f.then(g)?;
    let g_injective = g.is_injective();
    let f_hat_onto = kernel_basis(&linearize(f)).rank == f.codomain.len() - 1;
    let mut report = CompositionReport {
        samples: Vec::with_capacity(samples.len()),
        law_a: LawTally::default(),
        law_b: LawTally::default(),
        law_c: LawTally::default(),
        g_injective,
        f_hat_onto,
    };
    for (k, mu) in samples.iter().enumerate() {
        let fp = check_support_preservation(f, mu)?.equality_holds;
        let gp = check_support_preservation(g, &apply(f, mu)?)?.equality_holds;
        let gfp = check_support_preservation(&gf, mu)?.equality_holds;
        let tally = |law: &mut LawTally, hyp: bool, concl: bool| {
            if hyp {
                law.applicable += 1;
                if !concl {
                    law.violations.push(k);
                }
            }
        };
        tally(&mut report.law_a, fp && gp, gfp);
        tally(&mut report.law_b, g_injective && gfp, fp);
        tally(&mut report.law_c, f_hat_onto && gfp, gp);
        report.samples.push(SampleVerdict {
            f_preserves: fp,
            g_preserves: gp,
            gf_preserves: gfp,
        });
    }
    Ok(report)
}
