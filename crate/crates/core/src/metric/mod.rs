//! Finite pointed metric spaces.

mod conditions;
mod random;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{close, max_of, min_of, Rational, Scalar};

pub use conditions::{
    check_cover_condition, distance_set_measure, verify_cover, CoverVariant, CoverVerdict,
    CoverWitness,
};
pub use random::{random_space, repair_shortest_path, Generator};

/// Coordinate norm used to combine two metrics on a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProductNorm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "inf")]
    LInf,
}

impl std::str::FromStr for ProductNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "l1" => Ok(ProductNorm::L1),
            "inf" | "linf" | "∞" => Ok(ProductNorm::LInf),
            other => Err(Error::Parse(format!("unknown product norm `{other}`"))),
        }
    }
}

// Large constructed spaces (dust products, long line families) never
// materialize their matrix; distances are computed on demand.
#[derive(Clone, Debug)]
enum Store<S> {
    Dense(Vec<S>),
    Line(Vec<S>),
    /// Every off-diagonal distance is `default` except between matched
    /// partners.
    Matching {
        default: S,
        partner: Vec<Option<(usize, S)>>,
    },
    Product {
        left: Arc<FiniteMetricSpace<S>>,
        right: Arc<FiniteMetricSpace<S>>,
        norm: ProductNorm,
    },
}

/// A validated finite metric space with a distinguished base point `0`.
///
/// Points are addressed by index `0..len()`; labels are kept for I/O and
/// error messages.
#[derive(Clone)]
pub struct FiniteMetricSpace<S> {
    name: String,
    labels: Vec<String>,
    index: HashMap<String, usize>,
    base: usize,
    store: Store<S>,
}

impl<S> fmt::Debug for FiniteMetricSpace<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteMetricSpace")
            .field("name", &self.name)
            .field("points", &self.labels.len())
            .field("base", &self.labels[self.base])
            .finish()
    }
}

impl<S: Scalar> PartialEq for FiniteMetricSpace<S> {
    fn eq(&self, other: &Self) -> bool {
        if self.name != other.name || self.labels != other.labels || self.base != other.base {
            return false;
        }
        let n = self.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.d(i, j) == other.d(i, j)))
    }
}

fn index_labels(labels: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(index)
}

/// Validates a labeled distance matrix. Errors name the first violated axiom,
/// scanning diagonal, then symmetry and positivity, then triangles.
pub fn validate_space<S: Scalar>(
    name: impl Into<String>,
    labels: Vec<String>,
    base: &str,
    matrix: Vec<Vec<S>>,
) -> Result<FiniteMetricSpace<S>> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::TooFewPoints(1));
    }
    if matrix.len() != n {
        return Err(Error::NotSquare {
            row: matrix.len(),
            len: 0,
            expected: n,
        });
    }
    for (r, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                row: r,
                len: row.len(),
                expected: n,
            });
        }
    }
    let index = index_labels(&labels)?;
    let base = *index
        .get(base)
        .ok_or_else(|| Error::UnknownBase(base.to_string()))?;
    let flat: Vec<S> = matrix.into_iter().flatten().collect();
    let space = FiniteMetricSpace {
        name: name.into(),
        labels,
        index,
        base,
        store: Store::Dense(flat),
    };
    space.check_axioms()?;
    Ok(space)
}

impl<S: Scalar> FiniteMetricSpace<S> {
    /// Same as [`validate_space`].
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        base: &str,
        matrix: Vec<Vec<S>>,
    ) -> Result<Self> {
        validate_space(name, labels, base, matrix)
    }

    /// Points of the real line with the absolute-value metric. Distances are
    /// computed lazily, so this scales to long constructed families.
    pub fn from_line(
        name: impl Into<String>,
        labels: Vec<String>,
        positions: Vec<S>,
        base: &str,
    ) -> Result<Self> {
        if labels.len() != positions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels but {} positions",
                labels.len(),
                positions.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::TooFewPoints(1));
        }
        let index = index_labels(&labels)?;
        let base = *index
            .get(base)
            .ok_or_else(|| Error::UnknownBase(base.to_string()))?;
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&a, &b| positions[a].partial_cmp(&positions[b]).expect("comparable"));
        for w in order.windows(2) {
            if positions[w[0]] == positions[w[1]] {
                return Err(Error::NegativeOrZeroOffDiagonal(
                    labels[w[0]].clone(),
                    labels[w[1]].clone(),
                ));
            }
        }
        Ok(FiniteMetricSpace {
            name: name.into(),
            labels,
            index,
            base,
            store: Store::Line(positions),
        })
    }

    /// All distances equal `default` except `d(a, b) = v` for each listed
    /// pair; a point appears in at most one pair. This is a metric iff
    /// `0 < v ≤ 2·default`.
    pub fn matching(
        name: impl Into<String>,
        labels: Vec<String>,
        base: &str,
        default: S,
        pairs: &[(usize, usize, S)],
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::TooFewPoints(1));
        }
        let index = index_labels(&labels)?;
        let base = *index
            .get(base)
            .ok_or_else(|| Error::UnknownBase(base.to_string()))?;
        if !default.is_positive() && labels.len() > 1 {
            return Err(Error::NegativeOrZeroOffDiagonal(
                labels[0].clone(),
                labels[1].clone(),
            ));
        }
        let mut partner: Vec<Option<(usize, S)>> = vec![None; labels.len()];
        let cap = default.clone() + default.clone();
        for (a, b, v) in pairs {
            let (a, b) = (*a, *b);
            if a == b || partner[a].is_some() || partner[b].is_some() {
                return Err(Error::InvalidArgument(format!(
                    "`{}` matched twice",
                    labels[a]
                )));
            }
            if !v.is_positive() {
                return Err(Error::NegativeOrZeroOffDiagonal(
                    labels[a].clone(),
                    labels[b].clone(),
                ));
            }
            // any third point z gives d(a,b) > d(a,z) + d(z,b)
            if let Some(z) = (0..labels.len())
                .find(|&z| z != a && z != b)
                .filter(|_| *v > cap)
            {
                return Err(Error::TriangleViolation(
                    labels[a].clone(),
                    labels[b].clone(),
                    labels[z].clone(),
                ));
            }
            partner[a] = Some((b, v.clone()));
            partner[b] = Some((a, v.clone()));
        }
        Ok(FiniteMetricSpace {
            name: name.into(),
            labels,
            index,
            base,
            store: Store::Matching { default, partner },
        })
    }

    /// Builds from a full matrix without checking the axioms. Callers must
    /// guarantee them (used by transformations that preserve metrics).
    pub(crate) fn dense_unchecked(
        name: String,
        labels: Vec<String>,
        base: usize,
        flat: Vec<S>,
    ) -> Self {
        let index = index_labels(&labels).expect("labels already distinct");
        FiniteMetricSpace {
            name,
            labels,
            index,
            base,
            store: Store::Dense(flat),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn base_label(&self) -> &str {
        &self.labels[self.base]
    }

    /// Indices of all points other than the base, ascending.
    pub fn non_base(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| i != self.base)
    }

    /// `d(x_i, x_j)`.
    pub fn d(&self, i: usize, j: usize) -> S {
        match &self.store {
            Store::Dense(flat) => flat[i * self.labels.len() + j].clone(),
            Store::Line(p) => (p[i].clone() - p[j].clone()).abs(),
            Store::Matching { default, partner } => match &partner[i] {
                _ if i == j => S::zero(),
                Some((k, v)) if *k == j => v.clone(),
                _ => default.clone(),
            },
            Store::Product { left, right, norm } => {
                let m = right.len();
                let a = left.d(i / m, j / m);
                let b = right.d(i % m, j % m);
                match norm {
                    ProductNorm::L1 => a + b,
                    ProductNorm::LInf => max_of(a, b),
                }
            }
        }
    }

    /// `d(x_i, 0)`.
    pub fn d0(&self, i: usize) -> S {
        self.d(i, self.base)
    }

    pub fn matrix(&self) -> Vec<Vec<S>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.d(i, j)).collect())
            .collect()
    }

    pub fn diameter(&self) -> S {
        let n = self.len();
        let mut best = S::zero();
        for i in 0..n {
            for j in i + 1..n {
                best = max_of(best, self.d(i, j));
            }
        }
        best
    }

    /// Full axiom scan. Cubic; only meant for user-supplied matrices and tests.
    pub fn check_axioms(&self) -> Result<()> {
        let n = self.len();
        let slack = S::axiom_slack();
        let lab = |i: usize| self.labels[i].clone();
        for i in 0..n {
            if !self.d(i, i).is_zero() {
                return Err(Error::NonZeroDiagonal(lab(i)));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if (a.clone() - b.clone()).abs() > slack {
                    return Err(Error::NotSymmetric(lab(i), lab(j)));
                }
                if !a.is_positive() || !b.is_positive() {
                    return Err(Error::NegativeOrZeroOffDiagonal(lab(i), lab(j)));
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let dij = self.d(i, j);
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if dij > self.d(i, k) + self.d(k, j) + slack.clone() {
                        return Err(Error::TriangleViolation(lab(i), lab(j), lab(k)));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(M, d^alpha)` for `0 < alpha <= 1`.
    pub fn snowflake(&self, alpha: &Rational) -> Result<Self> {
        if !alpha.is_positive() || *alpha > Rational::one() {
            return Err(Error::AlphaOutOfRange(alpha.to_string()));
        }
        if alpha.is_one() {
            return Ok(self.clone());
        }
        let n = self.len();
        let mut flat = vec![S::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.d(i, j).pow_rational(alpha).ok_or_else(|| {
                    Error::NotExactlyRepresentable(format!(
                        "d({},{})^{}",
                        self.labels[i], self.labels[j], alpha
                    ))
                })?;
                flat[i * n + j] = v.clone();
                flat[j * n + i] = v;
            }
        }
        Ok(Self::dense_unchecked(
            format!("{}^{}", self.name, alpha),
            self.labels.clone(),
            self.base,
            flat,
        ))
    }

    /// `min(1, d)`.
    pub fn truncate(&self) -> Self {
        let n = self.len();
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                flat.push(min_of(S::one(), self.d(i, j)));
            }
        }
        let name = if self.name.starts_with("trunc(") {
            self.name.clone()
        } else {
            format!("trunc({})", self.name)
        };
        Self::dense_unchecked(name, self.labels.clone(), self.base, flat)
    }

    /// Product of two spaces under the ℓ1 or ℓ∞ combination of coordinate
    /// distances. Point `(a, c)` has index `i_a * |right| + i_c`.
    pub fn product(left: &Arc<Self>, right: &Arc<Self>, norm: ProductNorm) -> Self {
        let mut labels = Vec::with_capacity(left.len() * right.len());
        for a in left.labels() {
            for c in right.labels() {
                labels.push(format!("({a},{c})"));
            }
        }
        let base = left.base * right.len() + right.base;
        let tag = match norm {
            ProductNorm::L1 => "l1",
            ProductNorm::LInf => "linf",
        };
        let name = format!("{}x{}-{}", left.name, right.name, tag);
        let index = index_labels(&labels).expect("pair labels are distinct");
        FiniteMetricSpace {
            name,
            labels,
            index,
            base,
            store: Store::Product {
                left: Arc::clone(left),
                right: Arc::clone(right),
                norm,
            },
        }
    }

    /// Converts the space into the other scalar type (rationals become their
    /// nearest doubles; doubles become their exact binary values).
    pub fn convert<T: Scalar>(&self) -> FiniteMetricSpace<T> {
        let store = match &self.store {
            Store::Line(p) => Store::Line(p.iter().map(T::convert_from).collect()),
            Store::Dense(flat) => Store::Dense(flat.iter().map(T::convert_from).collect()),
            Store::Matching { default, partner } => Store::Matching {
                default: T::convert_from(default),
                partner: partner
                    .iter()
                    .map(|p| p.as_ref().map(|(k, v)| (*k, T::convert_from(v))))
                    .collect(),
            },
            Store::Product { left, right, norm } => Store::Product {
                left: Arc::new(left.convert()),
                right: Arc::new(right.convert()),
                norm: *norm,
            },
        };
        FiniteMetricSpace {
            name: self.name.clone(),
            labels: self.labels.clone(),
            index: self.index.clone(),
            base: self.base,
            store,
        }
    }

    /// Materializes the distance matrix.
    pub fn to_dense(&self) -> Self {
        let n = self.len();
        let flat = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.d(i, j))
            .collect();
        Self::dense_unchecked(self.name.clone(), self.labels.clone(), self.base, flat)
    }

    pub fn is_line(&self) -> bool {
        matches!(self.store, Store::Line(_))
    }

    /// An isometric embedding into ℝ with the base at 0, either the stored
    /// positions or one inferred from the distances.
    pub fn line_embedding(&self) -> Result<LineEmbedding<S>> {
        if let Store::Line(p) = &self.store {
            let shift = p[self.base].clone();
            return Ok(LineEmbedding {
                positions: p.iter().map(|x| x.clone() - shift.clone()).collect(),
            });
        }
        let n = self.len();
        let b = self.base;
        let far = (0..n)
            .max_by(|&i, &j| self.d0(i).partial_cmp(&self.d0(j)).expect("comparable"))
            .expect("nonempty");
        let d_far = self.d0(far);
        let positions = (0..n)
            .map(|i| {
                let r = self.d(i, b);
                let same_side = (d_far.clone() - r.clone()).abs();
                if close(&same_side, &self.d(i, far), 1e-12) {
                    r
                } else {
                    -r
                }
            })
            .collect();
        LineEmbedding::new(self, positions)
    }
}

/// Real positions of the points with the base at 0, consistent with the metric.
#[derive(Clone, Debug, PartialEq)]
pub struct LineEmbedding<S> {
    positions: Vec<S>,
}

impl<S: Scalar> LineEmbedding<S> {
    /// Checks `|p_i - p_j| = d(i,j)` for every pair (exactly, or within a
    /// relative 1e-12 in float mode) and `p_base = 0`.
    pub fn new(space: &FiniteMetricSpace<S>, positions: Vec<S>) -> Result<Self> {
        let n = space.len();
        if positions.len() != n {
            return Err(Error::NotALineSpace(format!(
                "{} positions for {} points",
                positions.len(),
                n
            )));
        }
        if !positions[space.base()].is_zero() {
            return Err(Error::NotALineSpace(
                "base point is not at position 0".into(),
            ));
        }
        for i in 0..n {
            for j in i + 1..n {
                let gap = (positions[i].clone() - positions[j].clone()).abs();
                if !close(&gap, &space.d(i, j), 1e-12) {
                    return Err(Error::NotALineSpace(format!(
                        "|p({a}) - p({b})| = {gap} but d({a},{b}) = {}",
                        space.d(i, j),
                        a = space.label(i),
                        b = space.label(j),
                    )));
                }
            }
        }
        Ok(LineEmbedding { positions })
    }

    pub fn from_labels(space: &FiniteMetricSpace<S>, positions: &[(String, S)]) -> Result<Self> {
        let mut p = vec![None; space.len()];
        for (l, v) in positions {
            p[space.index_of(l)?] = Some(v.clone());
        }
        let p = p
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::NotALineSpace(format!("no position for `{}`", space.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, p)
    }

    pub fn position(&self, i: usize) -> &S {
        &self.positions[i]
    }

    pub fn positions(&self) -> &[S] {
        &self.positions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn q(n: i64) -> Rational {
        ratio(n, 1)
    }

    #[test]
    fn path_metric_is_valid() {
        let m = validate_space(
            "path",
            labels(&["0", "a", "b"]),
            "0",
            vec![
                vec![q(0), q(1), q(1)],
                vec![q(1), q(0), q(2)],
                vec![q(1), q(2), q(0)],
            ],
        )
        .unwrap();
        assert_eq!(m.d(1, 2), q(2));
        assert_eq!(m.base_label(), "0");
    }

    #[test]
    fn reports_triangle_witness() {
        let err = validate_space(
            "bad",
            labels(&["a", "b", "c"]),
            "a",
            vec![
                vec![q(0), q(5), q(1)],
                vec![q(5), q(0), q(1)],
                vec![q(1), q(1), q(0)],
            ],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::TriangleViolation("a".into(), "b".into(), "c".into())
        );
    }

    #[test]
    fn reports_asymmetry_and_base() {
        let err = validate_space(
            "asym",
            labels(&["a", "b"]),
            "a",
            vec![vec![q(0), q(1)], vec![q(2), q(0)]],
        )
        .unwrap_err();
        assert_eq!(err, Error::NotSymmetric("a".into(), "b".into()));
        let err = validate_space(
            "x",
            labels(&["a", "b"]),
            "z",
            vec![vec![q(0), q(1)], vec![q(1), q(0)]],
        )
        .unwrap_err();
        assert_eq!(err, Error::UnknownBase("z".into()));
        let err = validate_space(
            "x",
            labels(&["a", "b"]),
            "a",
            vec![vec![q(0), q(0)], vec![q(0), q(0)]],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::NegativeOrZeroOffDiagonal("a".into(), "b".into())
        );
        let err = validate_space(
            "x",
            labels(&["a", "a"]),
            "a",
            vec![vec![q(0), q(1)], vec![q(1), q(0)]],
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateLabel("a".into()));
    }

    #[test]
    fn float_slack_tolerates_rounding() {
        let m = validate_space(
            "f",
            labels(&["0", "a", "b"]),
            "0",
            vec![
                vec![0.0, 0.1, 0.3],
                vec![0.1, 0.0, 0.2 + 1e-13],
                vec![0.3, 0.2 + 1e-13, 0.0],
            ],
        );
        assert!(m.is_ok());
    }

    #[test]
    fn snowflake_and_truncate() {
        let m = FiniteMetricSpace::from_line(
            "l",
            labels(&["0", "a", "b"]),
            vec![q(0), ratio(1, 4), q(3)],
            "0",
        )
        .unwrap();
        let s = m.snowflake(&ratio(1, 2));
        assert!(matches!(s, Err(Error::NotExactlyRepresentable(_))));
        let m = FiniteMetricSpace::from_line(
            "l",
            labels(&["0", "a", "b"]),
            vec![q(0), ratio(1, 4), ratio(289, 256)],
            "0",
        )
        .unwrap();
        let s = m.snowflake(&ratio(1, 2)).unwrap();
        assert_eq!(s.d(0, 1), ratio(1, 2));
        assert_eq!(m.snowflake(&q(1)).unwrap(), m);
        assert!(matches!(m.snowflake(&q(0)), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(
            m.snowflake(&ratio(3, 2)),
            Err(Error::AlphaOutOfRange(_))
        ));
        let t = m.truncate();
        assert_eq!(t.d(0, 2), q(1));
        assert_eq!(t.d(0, 1), ratio(1, 4));
        assert_eq!(t.truncate(), t);
    }

    #[test]
    fn product_distances() {
        let a = Arc::new(
            FiniteMetricSpace::from_line("A", labels(&["a", "b"]), vec![q(0), q(1)], "a").unwrap(),
        );
        let b = Arc::new(
            FiniteMetricSpace::from_line("B", labels(&["c", "d"]), vec![q(0), q(2)], "c").unwrap(),
        );
        let p1 = FiniteMetricSpace::product(&a, &b, ProductNorm::L1);
        let pi = FiniteMetricSpace::product(&a, &b, ProductNorm::LInf);
        let x = p1.index_of("(a,c)").unwrap();
        let y = p1.index_of("(b,d)").unwrap();
        assert_eq!(p1.d(x, y), q(3));
        assert_eq!(pi.d(x, y), q(2));
        assert_eq!(p1.base_label(), "(a,c)");
        p1.check_axioms().unwrap();
        pi.check_axioms().unwrap();
    }

    #[test]
    fn line_embedding_inferred() {
        let m = validate_space(
            "path",
            labels(&["0", "a", "b"]),
            "0",
            vec![
                vec![q(0), q(1), q(1)],
                vec![q(1), q(0), q(2)],
                vec![q(1), q(2), q(0)],
            ],
        )
        .unwrap();
        let e = m.line_embedding().unwrap();
        assert_eq!((e.position(1).clone() - e.position(2).clone()).abs(), q(2));
        let tri = validate_space(
            "tri",
            labels(&["0", "a", "b"]),
            "0",
            vec![
                vec![q(0), q(1), q(1)],
                vec![q(1), q(0), q(1)],
                vec![q(1), q(1), q(0)],
            ],
        )
        .unwrap();
        assert!(matches!(tri.line_embedding(), Err(Error::NotALineSpace(_))));
    }
}
