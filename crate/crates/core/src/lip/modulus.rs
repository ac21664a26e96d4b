//! Moduli of continuity and their inf-convolutions `ω_n = ω □ n·Id`.

use num_traits::{One, Signed};

use super::LipFunction;
use crate::error::{Error, Result};
use crate::operators::PointMap;
use crate::scalar::{from_usize, min_of, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum ModulusKind<S> {
    /// `t ↦ t^α`, `0 < α ≤ 1`.
    Power(Rational),
    /// Linear interpolation through `(breakpoints[i], values[i])`, extended
    /// past the last breakpoint with the last slope.
    Pwl { breakpoints: Vec<S>, values: Vec<S> },
    /// `inner □ n·Id`.
    InfConv {
        inner: Box<ModulusFunction<S>>,
        n: u64,
    },
}

/// A nondecreasing function on `[0,∞)` with `ω(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusFunction<S> {
    pub kind: ModulusKind<S>,
    /// Subadditivity constant: `ω(a+b) ≤ ω(a) + C1·ω(b)`.
    pub c1: S,
    pub left_continuous: bool,
}

impl<S: Scalar> ModulusFunction<S> {
    /// Concave, hence subadditive with `C1 = 1`.
    pub fn power(alpha: Rational) -> Result<Self> {
        if !alpha.is_positive() || alpha > Rational::one() {
            return Err(Error::AlphaOutOfRange(alpha.to_string()));
        }
        Ok(ModulusFunction {
            kind: ModulusKind::Power(alpha),
            c1: S::one(),
            left_continuous: true,
        })
    }

    /// Needs `breakpoints[0] = values[0] = 0`, strictly increasing breakpoints
    /// and nondecreasing values.
    pub fn pwl(breakpoints: Vec<S>, values: Vec<S>, c1: S) -> Result<Self> {
        if breakpoints.len() != values.len() || breakpoints.len() < 2 {
            return Err(Error::NotMonotone(
                "need at least two breakpoints with values".into(),
            ));
        }
        if !breakpoints[0].is_zero() || !values[0].is_zero() {
            return Err(Error::NotMonotone("first breakpoint must be (0, 0)".into()));
        }
        for k in 1..breakpoints.len() {
            if breakpoints[k] <= breakpoints[k - 1] {
                return Err(Error::NotMonotone(format!(
                    "breakpoints not increasing at {}",
                    breakpoints[k]
                )));
            }
            if values[k] < values[k - 1] {
                return Err(Error::NotMonotone(format!(
                    "value decreases at {}",
                    breakpoints[k]
                )));
            }
        }
        Ok(ModulusFunction {
            kind: ModulusKind::Pwl {
                breakpoints,
                values,
            },
            c1,
            left_continuous: true,
        })
    }

    /// `ω(t)`; fails in exact mode when `t^α` is irrational.
    pub fn eval(&self, t: &S) -> Result<S> {
        if t.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "modulus evaluated at negative {t}"
            )));
        }
        match &self.kind {
            ModulusKind::Power(alpha) => t
                .pow_rational(alpha)
                .ok_or_else(|| Error::NotExactlyRepresentable(format!("{t}^{alpha}"))),
            ModulusKind::Pwl {
                breakpoints,
                values,
            } => Ok(pwl_eval(breakpoints, values, t)),
            ModulusKind::InfConv { inner, n } => {
                let n = from_usize::<S>(*n as usize);
                match &inner.kind {
                    // concave ω plus a linear term is concave in the split
                    // point, so the infimum sits at an end: a = 0 or a = t
                    ModulusKind::Power(_) => Ok(min_of(inner.eval(t)?, n * t.clone())),
                    ModulusKind::Pwl {
                        breakpoints,
                        values,
                    } => {
                        let mut best = pwl_eval(breakpoints, values, t);
                        for (a, wa) in breakpoints.iter().zip(values) {
                            if a > t {
                                break;
                            }
                            best = min_of(best, wa.clone() + n.clone() * (t.clone() - a.clone()));
                        }
                        Ok(best)
                    }
                    ModulusKind::InfConv { .. } => {
                        unreachable!("nested inf-convolutions are flattened")
                    }
                }
            }
        }
    }

    /// Checks `ω(a+b) ≤ ω(a) + C1·ω(b)` on all pairs of samples.
    pub fn check_subadditive(&self, samples: &[S]) -> Result<bool> {
        let slack = S::axiom_slack();
        for a in samples {
            for b in samples {
                let lhs = self.eval(&(a.clone() + b.clone()))?;
                let rhs = self.eval(a)? + self.c1.clone() * self.eval(b)?;
                if lhs > rhs + slack.clone() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn pwl_eval<S: Scalar>(bp: &[S], vals: &[S], t: &S) -> S {
    let k = bp
        .iter()
        .position(|b| b > t)
        .unwrap_or(bp.len())
        .max(1)
        .min(bp.len() - 1);
    let (a0, a1) = (&bp[k - 1], &bp[k]);
    let (v0, v1) = (&vals[k - 1], &vals[k]);
    v0.clone() + (v1.clone() - v0.clone()) * (t.clone() - a0.clone()) / (a1.clone() - a0.clone())
}

/// `ω □ n·Id`, the largest `n`-Lipschitz function below `ω`. Nested
/// convolutions collapse: `(ω □ m·Id) □ n·Id = ω □ min(m,n)·Id`.
pub fn inf_convolve<S: Scalar>(omega: &ModulusFunction<S>, n: u64) -> Result<ModulusFunction<S>> {
    if n == 0 {
        return Err(Error::InvalidArgument("inf-convolution needs n ≥ 1".into()));
    }
    let kind = match &omega.kind {
        ModulusKind::InfConv { inner, n: m } => ModulusKind::InfConv {
            inner: inner.clone(),
            n: n.min(*m),
        },
        ModulusKind::Pwl { values, .. } => {
            if values.windows(2).any(|w| w[1] < w[0]) || !values[0].is_zero() {
                return Err(Error::NotMonotone("piecewise-linear modulus".into()));
            }
            ModulusKind::InfConv {
                inner: Box::new(omega.clone()),
                n,
            }
        }
        ModulusKind::Power(_) => ModulusKind::InfConv {
            inner: Box::new(omega.clone()),
            n,
        },
    };
    Ok(ModulusFunction {
        kind,
        c1: omega.c1.clone(),
        left_continuous: omega.left_continuous,
    })
}

/// `g_n(z) = ω_n(d(z, f(y))) − ω_n(d(f(y), 0))` on the codomain, after
/// checking `C2·ω(d(f(x),f(x'))) ≤ d(x,x') ≤ ω(d(f(x),f(x')))` on every pair.
pub fn separation_family<S: Scalar>(
    f: &PointMap<S>,
    omega: &ModulusFunction<S>,
    c2: &S,
    n: u64,
    y: usize,
) -> Result<LipFunction<S>> {
    let (dom, cod) = (f.domain(), f.codomain());
    let rel = if S::is_exact() {
        S::zero()
    } else {
        S::from_f64(1e-12)
    };
    for a in 0..dom.len() {
        for b in a + 1..dom.len() {
            let w = omega.eval(&cod.d(f.image(a), f.image(b)))?;
            let d = dom.d(a, b);
            let slack = rel.clone() * d.clone();
            if c2.clone() * w.clone() > d.clone() + slack.clone() || d > w + slack {
                return Err(Error::ModuliHypothesisViolated(
                    dom.label(a).into(),
                    dom.label(b).into(),
                ));
            }
        }
    }
    let wn = inf_convolve(omega, n)?;
    let fy = f.image(y);
    let shift = wn.eval(&cod.d0(fy))?;
    let mut values = (0..cod.len())
        .map(|z| Ok(wn.eval(&cod.d(z, fy))? - shift.clone()))
        .collect::<Result<Vec<S>>>()?;
    // exact zero at the base even with float round-off
    values[cod.base()] = S::zero();
    LipFunction::new(cod, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn pwl_validation() {
        let ok = ModulusFunction::pwl(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 3.0], 1.0);
        assert!(ok.is_ok());
        let bad = ModulusFunction::pwl(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0], 1.0);
        assert!(matches!(bad, Err(Error::NotMonotone(_))));
        let w = ok.unwrap();
        assert_eq!(w.eval(&0.5).unwrap(), 1.0);
        assert_eq!(w.eval(&3.0).unwrap(), 4.0);
    }

    #[test]
    fn convolution_fixpoint_and_nesting() {
        // slope ≤ 2 everywhere: already 2-Lipschitz
        let w = ModulusFunction::pwl(
            vec![ratio(0, 1), ratio(1, 1), ratio(3, 1)],
            vec![ratio(0, 1), ratio(2, 1), ratio(3, 1)],
            ratio(1, 1),
        )
        .unwrap();
        let w2 = inf_convolve(&w, 2).unwrap();
        for t in [
            ratio(0, 1),
            ratio(1, 2),
            ratio(1, 1),
            ratio(5, 2),
            ratio(7, 1),
        ] {
            assert_eq!(w2.eval(&t).unwrap(), w.eval(&t).unwrap());
        }
        let w1 = inf_convolve(&w2, 1).unwrap();
        assert_eq!(w1, inf_convolve(&w, 1).unwrap());
        assert_eq!(w1.eval(&ratio(1, 2)).unwrap(), ratio(1, 2));
    }

    #[test]
    fn square_root_convolution_matches_grid_minimum() {
        let w = ModulusFunction::<f64>::power(ratio(1, 2)).unwrap();
        for n in [1u64, 4, 16] {
            let wn = inf_convolve(&w, n).unwrap();
            for k in 0..=40 {
                let t = k as f64 / 20.0;
                // direct minimization over a fine split grid
                let grid = (0..=4000)
                    .map(|i| {
                        let a = t * i as f64 / 4000.0;
                        a.sqrt() + n as f64 * (t - a)
                    })
                    .fold(f64::INFINITY, f64::min);
                let got = wn.eval(&t).unwrap();
                assert!(got <= grid + 1e-12);
                assert!(grid - got < 1e-3);
            }
        }
    }
}
