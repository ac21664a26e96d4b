//! Families of disjoint open intervals and the step functions `ψ_n` built
//! from them.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Disjoint open intervals on the positive (`plus`) and negative (`minus`)
/// half-lines, each side in index order `j = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalFamily<S> {
    plus: Vec<(S, S)>,
    minus: Vec<(S, S)>,
}

impl<S: Scalar> IntervalFamily<S> {
    pub fn new(plus: Vec<(S, S)>, minus: Vec<(S, S)>) -> Result<Self> {
        for (a, b) in &plus {
            if a.is_negative() || a >= b {
                return Err(Error::InvalidArgument(format!(
                    "bad positive-side interval ({a}, {b})"
                )));
            }
        }
        for (a, b) in &minus {
            if b.is_positive() || a >= b {
                return Err(Error::InvalidArgument(format!(
                    "bad negative-side interval ({a}, {b})"
                )));
            }
        }
        let mut all: Vec<&(S, S)> = plus.iter().chain(minus.iter()).collect();
        all.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("comparable"));
        for w in all.windows(2) {
            // open intervals may share an endpoint
            if w[1].0 < w[0].1 {
                return Err(Error::OverlappingIntervals(format!(
                    "({}, {}) and ({}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(IntervalFamily { plus, minus })
    }

    pub fn plus(&self) -> &[(S, S)] {
        &self.plus
    }

    pub fn minus(&self) -> &[(S, S)] {
        &self.minus
    }

    /// Largest index on either side.
    pub fn len(&self) -> usize {
        self.plus.len().max(self.minus.len())
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }

    /// `ψ_n(x) = Σ_{j≤n, x ≥ sup I⁺_j} λ(I⁺_j) − Σ_{j≤n, x ≤ inf I⁻_j} λ(I⁻_j)`.
    pub fn psi(&self, n: usize, x: &S) -> S {
        let mut total = S::zero();
        for (a, b) in self.plus.iter().take(n) {
            if x >= b {
                total = total + (b.clone() - a.clone());
            }
        }
        for (a, b) in self.minus.iter().take(n) {
            if x <= a {
                total = total - (b.clone() - a.clone());
            }
        }
        total
    }

    /// `ψ` with every interval of the family.
    pub fn psi_limit(&self, x: &S) -> S {
        self.psi(self.len(), x)
    }

    /// `Σ_{j>n} λ(I_j)` over both sides.
    pub fn tail(&self, n: usize) -> S {
        self.plus
            .iter()
            .skip(n)
            .chain(self.minus.iter().skip(n))
            .fold(S::zero(), |acc, (a, b)| acc + (b.clone() - a.clone()))
    }

    /// True when `x` lies in none of the open intervals.
    pub fn in_complement(&self, x: &S) -> bool {
        !self
            .plus
            .iter()
            .chain(&self.minus)
            .any(|(a, b)| a < x && x < b)
    }
}
