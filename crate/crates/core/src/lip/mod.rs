//! Lipschitz functions on finite spaces: constants, McShane extension,
//! plateaus, weights, moduli and the locally constant approximants.

mod intervals;
mod modulus;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::free::same_space;
use crate::metric::FiniteMetricSpace;
use crate::scalar::{max_of, min_of, Scalar};

pub use intervals::IntervalFamily;
pub use modulus::{inf_convolve, separation_family, ModulusFunction, ModulusKind};

/// `sup |f(x)-f(y)| / d(x,y)` over pairs, with a maximizing pair.
pub fn lipschitz_constant<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    values: &[S],
) -> (S, Option<(usize, usize)>) {
    let n = space.len();
    let mut best = S::zero();
    let mut arg = None;
    for i in 0..n {
        for j in i + 1..n {
            let slope = (values[i].clone() - values[j].clone()).abs() / space.d(i, j);
            if slope > best {
                best = slope;
                arg = Some((i, j));
            }
        }
    }
    (best, arg)
}

/// A real function on the space vanishing at the base point.
#[derive(Clone, Debug)]
pub struct LipFunction<S> {
    space: Arc<FiniteMetricSpace<S>>,
    values: Vec<S>,
}

impl<S: Scalar> PartialEq for LipFunction<S> {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

impl<S: Scalar> LipFunction<S> {
    pub fn new(space: &Arc<FiniteMetricSpace<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} points",
                values.len(),
                space.len()
            )));
        }
        if !values[space.base()].is_zero() {
            return Err(Error::BaseValueNonZero);
        }
        Ok(LipFunction {
            space: Arc::clone(space),
            values,
        })
    }

    /// Every non-base label must be given; the base may be omitted.
    pub fn from_labels(space: &Arc<FiniteMetricSpace<S>>, values: &[(String, S)]) -> Result<Self> {
        let mut v: Vec<Option<S>> = vec![None; space.len()];
        for (l, a) in values {
            v[space.index_of(l)?] = Some(a.clone());
        }
        v[space.base()].get_or_insert_with(S::zero);
        let v = v
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                a.ok_or_else(|| {
                    Error::InvalidArgument(format!("no value for `{}`", space.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, v)
    }

    pub fn zero(space: &Arc<FiniteMetricSpace<S>>) -> Self {
        LipFunction {
            space: Arc::clone(space),
            values: vec![S::zero(); space.len()],
        }
    }

    /// `t ↦ d(t, 0)`.
    pub fn distance_to_base(space: &Arc<FiniteMetricSpace<S>>) -> Self {
        let values = (0..space.len()).map(|i| space.d0(i)).collect();
        LipFunction {
            space: Arc::clone(space),
            values,
        }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.space
    }

    pub fn value(&self, i: usize) -> S {
        self.values[i].clone()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn lip_constant(&self) -> S {
        lipschitz_constant(&self.space, &self.values).0
    }

    pub fn lip_witness(&self) -> Option<(usize, usize)> {
        lipschitz_constant(&self.space, &self.values).1
    }
}

/// A raw real function (no base-point normalization), used as a weight.
#[derive(Clone, Debug)]
pub struct Weight<S> {
    space: Arc<FiniteMetricSpace<S>>,
    values: Vec<S>,
}

impl<S: Scalar> Weight<S> {
    pub fn new(space: &Arc<FiniteMetricSpace<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} points",
                values.len(),
                space.len()
            )));
        }
        Ok(Weight {
            space: Arc::clone(space),
            values,
        })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.space
    }

    pub fn value(&self, i: usize) -> S {
        self.values[i].clone()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn lip_constant(&self) -> S {
        lipschitz_constant(&self.space, &self.values).0
    }

    pub fn sup_norm(&self) -> S {
        self.values.iter().map(|v| v.abs()).fold(S::zero(), max_of)
    }

    /// Points where the weight is nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| !self.values[i].is_zero())
            .collect()
    }
}

/// `min_{y∈K} (f(y) + L·d(z,y))` at every point `z`, with the given values
/// kept verbatim on `K`.
fn mcshane_values<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    partial: &[(usize, S)],
    l: &S,
) -> Vec<S> {
    let mut out: Vec<S> = (0..space.len())
        .map(|z| {
            partial
                .iter()
                .map(|(y, fy)| fy.clone() + l.clone() * space.d(z, *y))
                .reduce(min_of)
                .expect("nonempty partial domain")
        })
        .collect();
    for (y, fy) in partial {
        out[*y] = fy.clone();
    }
    out
}

/// McShane–Whitney extension of an `L`-Lipschitz partial function defined on a
/// set containing the base point.
pub fn mcshane_extend<S: Scalar>(
    space: &Arc<FiniteMetricSpace<S>>,
    partial: &[(usize, S)],
    l: &S,
) -> Result<LipFunction<S>> {
    let base = space.base();
    let Some((_, fb)) = partial.iter().find(|(y, _)| *y == base) else {
        return Err(Error::BaseNotInDomain);
    };
    if !fb.is_zero() {
        return Err(Error::BaseValueNonZero);
    }
    let mut constant = S::zero();
    for (k, (x, fx)) in partial.iter().enumerate() {
        for (y, fy) in &partial[k + 1..] {
            if x == y {
                if fx != fy {
                    return Err(Error::InvalidArgument(format!(
                        "two values for `{}`",
                        space.label(*x)
                    )));
                }
                continue;
            }
            constant = max_of(constant, (fx.clone() - fy.clone()).abs() / space.d(*x, *y));
        }
    }
    let slack = if S::is_exact() {
        S::zero()
    } else {
        l.abs() * S::from_f64(1e-12)
    };
    if constant > l.clone() + slack {
        return Err(Error::PartialConstantExceedsL {
            constant: constant.render(),
            bound: l.render(),
        });
    }
    Ok(LipFunction {
        space: Arc::clone(space),
        values: mcshane_values(space, partial, l),
    })
}

/// An `r`-plateau at `x`: 1 on `B(x,r)`, 0 off `B(x,2r)`, values in `[0,1]`,
/// Lipschitz constant at most `1/r`. Balls are closed.
pub fn plateau<S: Scalar>(space: &Arc<FiniteMetricSpace<S>>, x: usize, r: &S) -> Result<Weight<S>> {
    if !r.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "plateau radius must be positive, got {r}"
        )));
    }
    let two_r = r.clone() + r.clone();
    let partial: Vec<(usize, S)> = (0..space.len())
        .filter_map(|y| {
            let d = space.d(x, y);
            if d <= *r {
                Some((y, S::one()))
            } else if d > two_r {
                Some((y, S::zero()))
            } else {
                None
            }
        })
        .collect();
    let raw = mcshane_values(space, &partial, &(S::one() / r.clone()));
    let values = raw
        .into_iter()
        .map(|w| max_of(S::zero(), min_of(w, S::one())))
        .collect();
    Weight::new(space, values)
}

/// Pointwise product `g·ω`.
pub fn weighting_operator<S: Scalar>(
    omega: &Weight<S>,
    g: &LipFunction<S>,
) -> Result<LipFunction<S>> {
    if !same_space(omega.space(), g.space()) {
        return Err(Error::SpaceMismatch);
    }
    let values = g
        .values
        .iter()
        .zip(&omega.values)
        .map(|(a, b)| a.clone() * b.clone())
        .collect();
    LipFunction::new(g.space(), values)
}

/// `(‖ω‖_∞ + sup_{x∈supp ω} d(0,x)·Lip(ω))·Lip(g)`.
pub fn weighting_bound<S: Scalar>(omega: &Weight<S>, g: &LipFunction<S>) -> S {
    let space = omega.space();
    let reach = omega
        .support()
        .into_iter()
        .map(|x| space.d0(x))
        .fold(S::zero(), max_of);
    (omega.sup_norm() + reach * omega.lip_constant()) * g.lip_constant()
}
