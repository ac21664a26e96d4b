//! Exact generators for the counterexample and example families: the
//! Smith–Volterra–Cantor kernel witness, its snowflaked and discrete
//! variants, the Cantor dust, a star ℝ-tree map with surjective
//! linearization, and the squaring map on a grid.

mod cantor;

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::free::Molecule;
use crate::metric::{FiniteMetricSpace, ProductNorm};
use crate::operators::PointMap;
use crate::scalar::{pow_inv, Rational, Scalar};

pub use cantor::{
    in_middle_thirds, middle_thirds_endpoints, snowflake_tail, snowflake_total_removed,
    snowflake_widths, stage_of, svc_map, svc_stage, FatCantor, SvcStage, MAX_LINE_STAGE,
};

/// Largest Cantor dust stage.
pub const MAX_DUST_STAGE: usize = 6;

/// Closed-form value a solver norm must reproduce.
#[derive(Clone, Debug, PartialEq)]
pub enum Expected {
    Exact(Rational),
    AtLeast(Rational),
}

impl Expected {
    pub fn value(&self) -> &Rational {
        match self {
            Expected::Exact(v) | Expected::AtLeast(v) => v,
        }
    }

    /// Checks a floating-point solver value with relative tolerance.
    pub fn admits(&self, x: f64, rel_tol: f64) -> bool {
        let v = self.value().to_f64();
        let slack = rel_tol * v.abs().max(x.abs()).max(f64::MIN_POSITIVE);
        match self {
            Expected::Exact(_) => (x - v).abs() <= slack,
            Expected::AtLeast(_) => x >= v - slack,
        }
    }
}

/// One truncation stage of a kernel-witness family: a map `f`, the molecule
/// `μ = δ(1) − Σ (δ(y_n) − δ(x_n))`, and the closed forms for `‖μ‖` and
/// `‖f̂μ‖`.
#[derive(Clone, Debug)]
pub struct WitnessInstance {
    pub family: String,
    pub stage: usize,
    /// For the snowflake family this carries the line metric; the actual
    /// domain metric is its `alpha` power, see [`WitnessInstance::float_domain`].
    pub domain: Arc<FiniteMetricSpace<Rational>>,
    pub alpha: Option<Rational>,
    pub codomain: Arc<FiniteMetricSpace<Rational>>,
    pub map: PointMap<Rational>,
    pub witness: Molecule<Rational>,
    pub expected_norm: Expected,
    pub expected_image_norm: Rational,
}

impl WitnessInstance {
    /// `f̂μ` on the codomain.
    pub fn image(&self) -> Molecule<Rational> {
        crate::operators::apply(&self.map, &self.witness).expect("witness lives on the domain")
    }

    /// True when the domain metric is exactly `self.domain`.
    pub fn domain_is_exact(&self) -> bool {
        self.alpha.is_none()
    }

    /// The domain in binary64, with the snowflaked metric when `alpha` is set.
    /// Differences are taken exactly before rounding, so points closer than
    /// double resolution near 1 stay distinct.
    pub fn float_domain(&self) -> Arc<FiniteMetricSpace<f64>> {
        let Some(alpha) = &self.alpha else {
            return Arc::new(self.domain.convert());
        };
        let a = alpha.to_f64();
        let n = self.domain.len();
        let mut flat = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.domain.d(i, j).to_f64().powf(a);
                flat[i * n + j] = v;
                flat[j * n + i] = v;
            }
        }
        Arc::new(FiniteMetricSpace::dense_unchecked(
            format!("{}^{}", self.domain.name(), alpha),
            self.domain.labels().to_vec(),
            self.domain.base(),
            flat,
        ))
    }

    pub fn float_witness(&self, domain: &Arc<FiniteMetricSpace<f64>>) -> Molecule<f64> {
        self.witness.convert(domain)
    }
}

fn line_space(name: String, points: &[(String, Rational)]) -> Arc<FiniteMetricSpace<Rational>> {
    let labels = points.iter().map(|p| p.0.clone()).collect();
    let pos = points.iter().map(|p| p.1.clone()).collect();
    Arc::new(FiniteMetricSpace::from_line(name, labels, pos, "0").expect("distinct endpoints"))
}

fn cantor_witness(space: &Arc<FiniteMetricSpace<Rational>>, removed: usize) -> Molecule<Rational> {
    let one = Rational::one();
    let mut terms = vec![("1".to_string(), one.clone())];
    for n in 1..=removed {
        terms.push((format!("y{n}"), -one.clone()));
        terms.push((format!("x{n}"), one.clone()));
    }
    crate::free::canonicalize(space, terms).expect("labels exist")
}

/// Domain = stage endpoints, codomain = the same labels moved by the measure
/// map, map = identity on labels.
fn fat_cantor_pair(
    family: &str,
    set: &FatCantor,
) -> (
    Arc<FiniteMetricSpace<Rational>>,
    Arc<FiniteMetricSpace<Rational>>,
    PointMap<Rational>,
) {
    let k = set.stage();
    let ends = set.endpoints();
    let domain = line_space(format!("{family}-{k}"), &ends);
    let moved: Vec<_> = ends
        .iter()
        .map(|(l, x)| (l.clone(), set.measure_map(x)))
        .collect();
    let codomain = line_space(format!("{family}-{k}-image"), &moved);
    let map = PointMap::new(&domain, &codomain, (0..ends.len()).collect()).expect("base fixed");
    (domain, codomain, map)
}

/// Stage-`k` SVC kernel witness: `‖μ_k‖ = 1/2 + 2^{-(k+1)}`,
/// `‖f̂μ_k‖ = 2^{-(k+1)}`.
pub fn svc_witness(k: usize) -> Result<WitnessInstance> {
    let stage = svc_stage(k)?;
    let (domain, codomain, map) = fat_cantor_pair("svc", stage.cantor());
    let witness = cantor_witness(&domain, stage.removed.len());
    let tail = pow_inv(2, k as u32 + 1);
    Ok(WitnessInstance {
        family: "svc".into(),
        stage: k,
        alpha: None,
        witness,
        expected_norm: Expected::Exact(Rational::new(1.into(), 2.into()) + &tail),
        expected_image_norm: tail,
        domain,
        codomain,
        map,
    })
}

/// Stage-`N` witness on the snowflaked generalized SVC set `(C_ρ, |·|^α)`:
/// `‖f̂μ_N‖ = Σ_{n>N} 2^{n-1} t_n` and `‖μ_N‖_ρ ≥ 1/2`.
pub fn snowflake_witness(alpha: &Rational, n: usize) -> Result<WitnessInstance> {
    cantor::check_stage(n, MAX_LINE_STAGE)?;
    let (c, widths) = snowflake_widths(alpha, n)?;
    let total = snowflake_total_removed(c);
    if total >= Rational::one() {
        return Err(Error::WidthOverflow(0));
    }
    let set = FatCantor::new(widths, total)?;
    let (domain, codomain, map) = fat_cantor_pair(&format!("snowflake-{alpha}"), &set);
    let witness = cantor_witness(&domain, set.removed().len());
    Ok(WitnessInstance {
        family: "snowflake".into(),
        stage: n,
        alpha: Some(alpha.clone()),
        witness,
        expected_norm: Expected::AtLeast(Rational::new(1.into(), 2.into())),
        expected_image_norm: snowflake_tail(c, n),
        domain,
        codomain,
        map,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscreteVariant {
    /// Points on ℝ: `x_n = n + 1`, `y_n = x_n + 4^{-s}`.
    Unbounded,
    /// All distances 1 except `d(x_n, y_n) = 4^{-s}`.
    Bounded,
}

impl std::str::FromStr for DiscreteVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbounded" => Ok(DiscreteVariant::Unbounded),
            "bounded" => Ok(DiscreteVariant::Bounded),
            other => Err(Error::Parse(format!("unknown discrete variant `{other}`"))),
        }
    }
}

fn discrete_space(variant: DiscreteVariant, k: usize) -> Result<Arc<FiniteMetricSpace<Rational>>> {
    cantor::check_stage(k, MAX_LINE_STAGE)?;
    let count = (1usize << k) - 1;
    let mut labels = vec!["0".to_string(), "1".to_string()];
    for n in 1..=count {
        labels.push(format!("x{n}"));
        labels.push(format!("y{n}"));
    }
    let gap = |n: usize| pow_inv(4, stage_of(n) as u32);
    let space = match variant {
        DiscreteVariant::Unbounded => {
            let mut pos = vec![Rational::zero(), Rational::one()];
            for n in 1..=count {
                let x = Rational::from_integer((n + 1).into());
                pos.push(x.clone());
                pos.push(x + gap(n));
            }
            FiniteMetricSpace::from_line(format!("discrete-unbounded-{k}"), labels, pos, "0")?
        }
        DiscreteVariant::Bounded => {
            let pairs: Vec<_> = (1..=count).map(|n| (2 * n, 2 * n + 1, gap(n))).collect();
            FiniteMetricSpace::matching(
                format!("discrete-bounded-{k}"),
                labels,
                "0",
                Rational::one(),
                &pairs,
            )?
        }
    };
    Ok(Arc::new(space))
}

/// The map `h` sending `x_n, y_n` to the SVC removed-interval endpoints
/// `x_n', y_n'` (stage first, then left to right) and `1 ↦ 1`.
pub fn discrete_transfer_map(variant: DiscreteVariant, k: usize) -> Result<PointMap<Rational>> {
    let domain = discrete_space(variant, k)?;
    let svc = svc_witness(k)?;
    // both spaces list 0, 1, x1, y1, x2, ... in the same order
    PointMap::new(&domain, &svc.domain, (0..domain.len()).collect())
}

/// Stage-`k` discrete witness. The map is `f∘h` with `f` the SVC map, so
/// `‖(f∘h)ˆμ_k‖ = 2^{-(k+1)}` while `‖μ_k‖ = 3/2 − 2^{-(k+1)} ≥ 1/2`.
pub fn discrete_witness(variant: DiscreteVariant, k: usize) -> Result<WitnessInstance> {
    let h = discrete_transfer_map(variant, k)?;
    let svc = svc_witness(k)?;
    let map = h.then(&svc.map)?;
    let domain = Arc::clone(h.domain());
    let witness = cantor_witness(&domain, (1 << k) - 1);
    let tail = pow_inv(2, k as u32 + 1);
    let tag = match variant {
        DiscreteVariant::Unbounded => "discrete-unbounded",
        DiscreteVariant::Bounded => "discrete-bounded",
    };
    Ok(WitnessInstance {
        family: tag.into(),
        stage: k,
        alpha: None,
        witness,
        expected_norm: Expected::Exact(Rational::new(3.into(), 2.into()) - &tail),
        expected_image_norm: tail,
        domain,
        codomain: Arc::clone(&svc.codomain),
        map,
    })
}

/// Stage-`k` middle-thirds endpoints squared, under the ℓ1 or ℓ∞ metric,
/// base `(0,0)`.
pub fn cantor_dust(k: usize, norm: ProductNorm) -> Result<FiniteMetricSpace<Rational>> {
    if k > MAX_DUST_STAGE {
        return Err(Error::StageTooLarge {
            stage: k,
            max: MAX_DUST_STAGE,
        });
    }
    let pts: Vec<(String, Rational)> = middle_thirds_endpoints(k)
        .into_iter()
        .map(|x| (x.render(), x))
        .collect();
    let axis = line_space(format!("cantor-{k}"), &pts);
    Ok(
        FiniteMetricSpace::product(&axis, &axis, norm).with_name(format!(
            "dust-{k}-{}",
            match norm {
                ProductNorm::L1 => "l1",
                ProductNorm::LInf => "linf",
            }
        )),
    )
}

/// The removed intervals of stage `k` as an interval family for `ψ_n`.
pub fn svc_complement_family(k: usize) -> Result<crate::lip::IntervalFamily<Rational>> {
    Ok(svc_stage(k)?.cantor().complement_family())
}

/// Star ℝ-tree map whose linearization hits every `m_{y_{n+1} y_n}` while
/// missing the direction of `δ(y_∞)`.
#[derive(Clone, Debug)]
pub struct RtreeInstance {
    pub n_max: usize,
    pub domain: Arc<FiniteMetricSpace<Rational>>,
    pub codomain: Arc<FiniteMetricSpace<Rational>>,
    pub map: PointMap<Rational>,
    /// `(m_{x_{n+1} x_n'}, m_{y_{n+1} y_n})` for `n = 1..n_max-1`.
    pub pairs: Vec<(Molecule<Rational>, Molecule<Rational>)>,
    /// Label of `y_∞ = 1`.
    pub missing: String,
    /// `δ(y_∞) − δ(y_{n_max})`.
    pub tail: Molecule<Rational>,
    pub expected_tail_norm: Rational,
}

pub fn rtree_example(n_max: usize) -> Result<RtreeInstance> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be at least 2, got {n_max}"
        )));
    }
    let y = |n: usize| Rational::one() - Rational::new(1.into(), n.into());
    let mut npts: Vec<(String, Rational)> = (1..=n_max).map(|n| (format!("y{n}"), y(n))).collect();
    npts.push(("yinf".into(), Rational::one()));
    let labels = npts.iter().map(|p| p.0.clone()).collect();
    let pos = npts.iter().map(|p| p.1.clone()).collect();
    let codomain = Arc::new(FiniteMetricSpace::from_line(
        format!("rtree-n-{n_max}"),
        labels,
        pos,
        "y1",
    )?);

    // (label, branch, distance to the branching point 0, image index)
    let mut pts: Vec<(String, usize, Rational, usize)> =
        vec![("x1".into(), 0, Rational::zero(), 0)];
    for n in 1..n_max {
        pts.push((format!("x{n}'"), n, Rational::one(), n - 1));
        pts.push((
            format!("x{}", n + 1),
            n,
            Rational::one() + (y(n + 1) - y(n)),
            n,
        ));
    }
    let m = pts.len();
    let matrix = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let (a, b) = (&pts[i], &pts[j]);
                    if i == j {
                        Rational::zero()
                    } else if a.1 == b.1 {
                        num_traits::Signed::abs(&(&a.2 - &b.2))
                    } else {
                        &a.2 + &b.2
                    }
                })
                .collect()
        })
        .collect();
    let domain = Arc::new(FiniteMetricSpace::new(
        format!("rtree-m-{n_max}"),
        pts.iter().map(|p| p.0.clone()).collect(),
        "x1",
        matrix,
    )?);
    let map = PointMap::new(&domain, &codomain, pts.iter().map(|p| p.3).collect())?;
    let pairs = (1..n_max)
        .map(|n| {
            let src = Molecule::elementary_at(
                &domain,
                domain.index_of(&format!("x{}", n + 1))?,
                domain.index_of(&format!("x{n}'"))?,
            )?;
            let dst = Molecule::elementary_at(&codomain, n, n - 1)?;
            Ok((src, dst))
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = Molecule::from_indices(
        &codomain,
        [(n_max, Rational::one()), (n_max - 1, -Rational::one())],
    );
    Ok(RtreeInstance {
        n_max,
        domain,
        codomain,
        map,
        pairs,
        missing: "yinf".into(),
        tail,
        expected_tail_norm: Rational::new(1.into(), n_max.into()),
    })
}

/// `x ↦ x²` on the grid `{k/n}`: injective, with `a(f) = 1/n` and
/// `Lip(f) = (2n−1)/n`.
#[derive(Clone, Debug)]
pub struct GridInstance {
    pub n: usize,
    pub domain: Arc<FiniteMetricSpace<Rational>>,
    pub codomain: Arc<FiniteMetricSpace<Rational>>,
    pub map: PointMap<Rational>,
    pub expected_lower: Rational,
    pub expected_lip: Rational,
}

pub fn xsquared_grid(n: usize) -> Result<GridInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 2, got {n}"
        )));
    }
    let grid: Vec<Rational> = (0..=n).map(|k| Rational::new(k.into(), n.into())).collect();
    let dom: Vec<_> = grid.iter().map(|x| (x.render(), x.clone())).collect();
    let sq: Vec<_> = grid
        .iter()
        .map(|x| x * x)
        .map(|x| (x.render(), x))
        .collect();
    let domain = line_space(format!("grid-{n}"), &dom);
    let codomain = line_space(format!("grid-{n}-squared"), &sq);
    let map = PointMap::new(&domain, &codomain, (0..=n).collect())?;
    Ok(GridInstance {
        n,
        domain,
        codomain,
        map,
        expected_lower: Rational::new(1.into(), n.into()),
        expected_lip: Rational::new((2 * n - 1).into(), n.into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::{norm_dual_lp, norm_line};
    use crate::operators::{apply, bilip_constants, kernel_basis, linearize};
    use crate::scalar::ratio;

    #[test]
    fn svc_stage_one_norms() {
        let w = svc_witness(1).unwrap();
        assert_eq!(norm_line(&w.witness).unwrap().0, ratio(3, 4));
        assert_eq!(norm_line(&w.image()).unwrap().0, ratio(1, 4));
        assert_eq!(w.expected_norm, Expected::Exact(ratio(3, 4)));
        assert_eq!(w.expected_image_norm, ratio(1, 4));
        assert!(w.map.is_injective());
    }

    #[test]
    fn svc_closed_forms_by_line_oracle() {
        for k in 1..=5 {
            let w = svc_witness(k).unwrap();
            assert_eq!(&norm_line(&w.witness).unwrap().0, w.expected_norm.value());
            assert_eq!(norm_line(&w.image()).unwrap().0, w.expected_image_norm);
        }
    }

    #[test]
    fn snowflake_image_closed_form() {
        for n in 1..=4 {
            let w = snowflake_witness(&ratio(1, 2), n).unwrap();
            assert_eq!(w.expected_image_norm, ratio(1, 14) * pow_inv(8, n as u32));
            assert_eq!(norm_line(&w.image()).unwrap().0, w.expected_image_norm);
        }
        let w = snowflake_witness(&ratio(1, 2), 2).unwrap();
        let dom = w.float_domain();
        dom.check_axioms().unwrap();
        let mu = w.float_witness(&dom);
        let norm = norm_dual_lp(&mu).unwrap().value;
        assert!(w.expected_norm.admits(norm, 1e-9), "{norm}");
    }

    #[test]
    fn discrete_variants() {
        for variant in [DiscreteVariant::Unbounded, DiscreteVariant::Bounded] {
            let k = 3;
            let w = discrete_witness(variant, k).unwrap();
            w.domain.check_axioms().unwrap();
            let h = discrete_transfer_map(variant, k).unwrap();
            assert!(h.is_injective());
            let svc = svc_witness(k).unwrap();
            assert_eq!(apply(&h, &w.witness).unwrap(), svc.witness);
            assert_eq!(norm_line(&w.image()).unwrap().0, w.expected_image_norm);
            let exact = norm_dual_lp(&w.witness).unwrap().value;
            assert_eq!(&exact, w.expected_norm.value());
            assert!(exact >= ratio(1, 2));
        }
    }

    #[test]
    fn dust_sizes() {
        let d = cantor_dust(2, ProductNorm::LInf).unwrap();
        assert_eq!(d.len(), 64);
        assert_eq!(d.base_label(), "(0,0)");
        assert!(cantor_dust(7, ProductNorm::L1).is_err());
        let d1 = cantor_dust(1, ProductNorm::L1).unwrap();
        d1.check_axioms().unwrap();
    }

    #[test]
    fn rtree_shape() {
        let r = rtree_example(6).unwrap();
        for (src, dst) in &r.pairs {
            assert_eq!(&apply(&r.map, src).unwrap(), dst);
        }
        let rep = kernel_basis(&linearize(&r.map));
        assert_eq!(rep.rank, r.codomain.len() - 2);
        assert!(!r
            .map
            .image_set()
            .contains(&r.codomain.index_of(&r.missing).unwrap()));
        assert_eq!(norm_line(&r.tail).unwrap().0, ratio(1, 6));
        let (lip, _) = r.map.lip_constant();
        assert!(lip <= ratio(1, 1));
    }

    #[test]
    fn grid_constants() {
        let g = xsquared_grid(5).unwrap();
        let b = bilip_constants(&g.map);
        assert_eq!(b.lower, Some(ratio(1, 5)));
        assert_eq!(b.upper, ratio(9, 5));
        assert_eq!(b.lower_pair, Some((0, 1)));
        assert_eq!(b.upper_pair, Some((4, 5)));
    }
}
