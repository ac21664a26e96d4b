//! Molecules of the free space and the transport norm.

mod flow;
mod lp;
mod norm;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lip::LipFunction;
use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

pub use norm::{
    certify, norm_dual_lp, norm_dual_lp_over, norm_flow, norm_flow_over, norm_line, norm_line_with,
    DualSolution, NormCertificate, StepFunction, TransportPlan,
};

/// A finitely supported element `Σ a_x δ(x)` in canonical form: no zero
/// coefficients and no base-point term.
#[derive(Clone, Debug)]
pub struct Molecule<S> {
    space: Arc<FiniteMetricSpace<S>>,
    terms: BTreeMap<usize, S>,
}

impl<S: Scalar> PartialEq for Molecule<S> {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.terms == other.terms
    }
}

pub(crate) fn same_space<S: Scalar>(
    a: &Arc<FiniteMetricSpace<S>>,
    b: &Arc<FiniteMetricSpace<S>>,
) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Merges duplicate labels, drops zeros and the base-point term.
pub fn canonicalize<S: Scalar, L: AsRef<str>>(
    space: &Arc<FiniteMetricSpace<S>>,
    raw: impl IntoIterator<Item = (L, S)>,
) -> Result<Molecule<S>> {
    let mut idx = Vec::new();
    for (l, a) in raw {
        idx.push((space.index_of(l.as_ref())?, a));
    }
    Ok(Molecule::from_indices(space, idx))
}

/// `(δ(x) - δ(y)) / d(x,y)`.
pub fn elementary<S: Scalar>(
    space: &Arc<FiniteMetricSpace<S>>,
    x: &str,
    y: &str,
) -> Result<Molecule<S>> {
    let (i, j) = (space.index_of(x)?, space.index_of(y)?);
    Molecule::elementary_at(space, i, j)
}

impl<S: Scalar> Molecule<S> {
    pub fn zero(space: &Arc<FiniteMetricSpace<S>>) -> Self {
        Molecule {
            space: Arc::clone(space),
            terms: BTreeMap::new(),
        }
    }

    /// Canonical molecule from index-coefficient pairs.
    ///
    /// # Panics
    /// If an index is out of range.
    pub fn from_indices(
        space: &Arc<FiniteMetricSpace<S>>,
        raw: impl IntoIterator<Item = (usize, S)>,
    ) -> Self {
        let mut terms: BTreeMap<usize, S> = BTreeMap::new();
        for (i, a) in raw {
            assert!(i < space.len(), "point index {i} out of range");
            if i == space.base() {
                continue;
            }
            let e = terms.entry(i).or_insert_with(S::zero);
            *e = e.clone() + a;
        }
        terms.retain(|_, a| !a.is_zero());
        Molecule {
            space: Arc::clone(space),
            terms,
        }
    }

    pub fn delta(space: &Arc<FiniteMetricSpace<S>>, x: &str) -> Result<Self> {
        Ok(Self::from_indices(space, [(space.index_of(x)?, S::one())]))
    }

    pub fn elementary_at(space: &Arc<FiniteMetricSpace<S>>, i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::EqualPoints(space.label(i).to_string()));
        }
        let inv = S::one() / space.d(i, j);
        Ok(Self::from_indices(space, [(i, inv.clone()), (j, -inv)]))
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.space
    }

    pub fn terms(&self) -> &BTreeMap<usize, S> {
        &self.terms
    }

    pub fn coefficient(&self, i: usize) -> S {
        self.terms.get(&i).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.terms.keys().copied().collect()
    }

    pub fn support_labels(&self) -> Vec<String> {
        self.terms
            .keys()
            .map(|&i| self.space.label(i).to_string())
            .collect()
    }

    /// `(label, coefficient)` pairs in index order.
    pub fn labeled_terms(&self) -> Vec<(String, S)> {
        self.terms
            .iter()
            .map(|(&i, a)| (self.space.label(i).to_string(), a.clone()))
            .collect()
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::from_indices(
            &self.space,
            self.terms.iter().map(|(&i, a)| (i, a.clone() * c.clone())),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        let all = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|(&i, a)| (i, a.clone()));
        Ok(Self::from_indices(&self.space, all))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-S::one()))
    }

    /// Same molecule over another scalar type.
    pub fn convert<T: Scalar>(&self, space: &Arc<FiniteMetricSpace<T>>) -> Molecule<T> {
        Molecule::from_indices(
            space,
            self.terms.iter().map(|(&i, a)| (i, T::convert_from(a))),
        )
    }

    /// `Σ |a_x| d(x,0)`, the trivial upper bound on the norm.
    pub fn mass_bound(&self) -> S {
        self.terms
            .iter()
            .fold(S::zero(), |acc, (&i, a)| acc + a.abs() * self.space.d0(i))
    }
}

/// `⟨f, μ⟩ = Σ a_x f(x)`.
pub fn eval<S: Scalar>(f: &LipFunction<S>, mu: &Molecule<S>) -> Result<S> {
    if !same_space(f.space(), mu.space()) {
        return Err(Error::SpaceMismatch);
    }
    Ok(mu
        .terms
        .iter()
        .fold(S::zero(), |acc, (&i, a)| acc + a.clone() * f.value(i)))
}
