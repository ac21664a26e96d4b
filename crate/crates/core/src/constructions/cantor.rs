//! Cantor-type sets on `[0,1]` built by removing centred intervals.

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lip::IntervalFamily;
use crate::scalar::{pow_inv, Rational};

/// Largest stage accepted by the line families.
pub const MAX_LINE_STAGE: usize = 12;

/// Stage `k` of a fat Cantor set: at stage `s`, an interval of width
/// `widths[s-1]` is removed from the middle of each of the `2^{s-1}`
/// remaining intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct FatCantor {
    widths: Vec<Rational>,
    /// Removed intervals `(x_n, y_n)`, stage first, then left to right.
    removed: Vec<(Rational, Rational)>,
    /// The `2^k` closed intervals left after stage `k`, left to right.
    remaining: Vec<(Rational, Rational)>,
    /// `λ(C)` for the infinite construction.
    limit_measure: Rational,
}

impl FatCantor {
    /// `limit_removed` is the total width removed over all stages, used to
    /// locate the limit set's mass inside each remaining interval.
    pub fn new(widths: Vec<Rational>, limit_removed: Rational) -> Result<Self> {
        if limit_removed >= Rational::one() {
            return Err(Error::WidthOverflow(0));
        }
        let mut remaining = vec![(Rational::zero(), Rational::one())];
        let mut removed = Vec::new();
        for (s, w) in widths.iter().enumerate() {
            let mut next = Vec::with_capacity(2 * remaining.len());
            for (a, b) in &remaining {
                if *w >= b - a {
                    return Err(Error::WidthOverflow(s + 1));
                }
                let half = w / Rational::from_integer(2.into());
                let mid = (a + b) / Rational::from_integer(2.into());
                let (x, y) = (&mid - &half, &mid + &half);
                next.push((a.clone(), x.clone()));
                next.push((y.clone(), b.clone()));
                removed.push((x, y));
            }
            remaining = next;
        }
        Ok(FatCantor {
            widths,
            removed,
            remaining,
            limit_measure: Rational::one() - limit_removed,
        })
    }

    pub fn stage(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[Rational] {
        &self.widths
    }

    pub fn removed(&self) -> &[(Rational, Rational)] {
        &self.removed
    }

    pub fn remaining(&self) -> &[(Rational, Rational)] {
        &self.remaining
    }

    pub fn limit_measure(&self) -> &Rational {
        &self.limit_measure
    }

    /// `λ(C_k)`, the total length of the remaining intervals.
    pub fn stage_measure(&self) -> Rational {
        self.remaining
            .iter()
            .fold(Rational::zero(), |acc, (a, b)| acc + (b - a))
    }

    /// Labeled endpoints `0`, `1`, `x_n`, `y_n`, in that order.
    pub fn endpoints(&self) -> Vec<(String, Rational)> {
        let mut out = vec![
            ("0".to_string(), Rational::zero()),
            ("1".to_string(), Rational::one()),
        ];
        for (n, (x, y)) in self.removed.iter().enumerate() {
            out.push((format!("x{}", n + 1), x.clone()));
            out.push((format!("y{}", n + 1), y.clone()));
        }
        out
    }

    /// `λ([0,x] ∖ C)` at an endpoint `x`. Each stage-`k` remaining interval
    /// carries `λ(C)/2^k` of the limit set, so only whole intervals to the
    /// left of `x` count.
    pub fn measure_map(&self, x: &Rational) -> Rational {
        let whole = self.remaining.iter().filter(|(_, b)| b <= x).count();
        let share = &self.limit_measure
            / Rational::from_integer(num_bigint::BigInt::from(1u8) << self.stage());
        x - share * Rational::from_integer(whole.into())
    }

    /// The removed intervals as a one-sided interval family.
    pub fn complement_family(&self) -> IntervalFamily<Rational> {
        IntervalFamily::new(self.removed.clone(), Vec::new())
            .expect("removed intervals are disjoint")
    }
}

/// Stage index `s` of the removed interval `x_n, y_n` (`2^{s-1} ≤ n < 2^s`).
pub fn stage_of(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

pub(crate) fn check_stage(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        return Err(Error::StageTooLarge { stage: k, max });
    }
    Ok(())
}

/// Stage `k` of the Smith–Volterra–Cantor set.
#[derive(Clone, Debug, PartialEq)]
pub struct SvcStage {
    pub k: usize,
    pub removed: Vec<(Rational, Rational)>,
    pub endpoints: Vec<(String, Rational)>,
    pub stage_measure: Rational,
    set: FatCantor,
}

impl SvcStage {
    pub fn cantor(&self) -> &FatCantor {
        &self.set
    }
}

/// Widths `4^{-s}`, `s = 1..k`.
pub fn svc_stage(k: usize) -> Result<SvcStage> {
    check_stage(k, MAX_LINE_STAGE)?;
    let widths = (1..=k).map(|s| pow_inv(4, s as u32)).collect();
    let set = FatCantor::new(widths, Rational::new(1.into(), 2.into()))?;
    Ok(SvcStage {
        k,
        removed: set.removed().to_vec(),
        endpoints: set.endpoints(),
        stage_measure: set.stage_measure(),
        set,
    })
}

/// `(label, x, f(x))` for `f(x) = λ([0,x] ∖ C)` at every stage-`k` endpoint.
pub fn svc_map(k: usize) -> Result<Vec<(String, Rational, Rational)>> {
    let stage = svc_stage(k)?;
    Ok(stage
        .endpoints
        .iter()
        .map(|(l, x)| (l.clone(), x.clone(), stage.set.measure_map(x)))
        .collect())
}

/// Widths `t_n = 2^{-cn}` with `c = ⌈2/α⌉`, so that `t_n^α ≤ 4^{-n}`.
pub fn snowflake_widths(alpha: &Rational, n: usize) -> Result<(u32, Vec<Rational>)> {
    if *alpha <= Rational::zero() || *alpha >= Rational::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_string()));
    }
    let two_over = Rational::from_integer(2.into()) / alpha;
    let c = two_over.ceil().to_integer();
    let c: u32 = c
        .try_into()
        .map_err(|_| Error::AlphaOutOfRange(alpha.to_string()))?;
    Ok((c, (1..=n).map(|s| pow_inv(2, c * s as u32)).collect()))
}

/// `Σ_{n≥1} 2^{n-1} 2^{-cn} = r / (2(1-r))` with `r = 2^{1-c}`.
pub fn snowflake_total_removed(c: u32) -> Rational {
    let r = pow_inv(2, c - 1);
    &r / (Rational::from_integer(2.into()) * (Rational::one() - &r))
}

/// `Σ_{n>N} 2^{n-1} 2^{-cn}`.
pub fn snowflake_tail(c: u32, n: usize) -> Rational {
    let r = pow_inv(2, c - 1);
    snowflake_total_removed(c) * num_traits::pow(r, n)
}

/// Middle-thirds endpoints at stage `k`, ascending.
pub fn middle_thirds_endpoints(k: usize) -> Vec<Rational> {
    let mut intervals = vec![(Rational::zero(), Rational::one())];
    let third = Rational::new(1.into(), 3.into());
    for _ in 0..k {
        intervals = intervals
            .into_iter()
            .flat_map(|(a, b)| {
                let w = (&b - &a) * &third;
                [(a.clone(), &a + &w), (&b - &w, b)]
            })
            .collect();
    }
    intervals.into_iter().flat_map(|(a, b)| [a, b]).collect()
}

/// True if `x` lies in the stage-`k` middle-thirds set.
pub fn in_middle_thirds(x: &Rational, k: usize) -> bool {
    // base-3 digits of x·3^k must avoid 1 in the integer part's expansion,
    // with x·3^k = m exactly allowed to end on the interval's right edge
    let scale = Rational::from_integer(num_bigint::BigInt::from(3u8).pow(k as u32));
    let y = x * &scale;
    if *x < Rational::zero() || *x > Rational::one() {
        return false;
    }
    let whole = y.floor().to_integer();
    let exact = y.is_integer();
    let check = |mut m: num_bigint::BigInt| {
        let three = num_bigint::BigInt::from(3u8);
        for _ in 0..k {
            let (q, r) = m.div_rem(&three);
            if r == num_bigint::BigInt::from(1u8) {
                return false;
            }
            m = q;
        }
        true
    };
    // a point on the boundary between two cells belongs to the set if
    // either neighbouring cell does
    check(whole.clone()) || (exact && whole > num_bigint::BigInt::zero() && check(whole - 1))
}
