//! Three independent routes to the transport norm `‖μ‖`.
//!
//! * dual LP: `max Σ a_x u_x` over 1-Lipschitz potentials with `u(0) = 0`;
//! * primal flow: cheapest transport of the signed masses, the base point
//!   absorbing the imbalance;
//! * line oracle: `∫|Φμ|` for subsets of ℝ.

use std::collections::BTreeMap;

use serde::Serialize;

use super::flow::{min_cost_transshipment, FlowError};
use super::lp::{maximize, LpError};
use super::Molecule;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, LineEmbedding};
use crate::scalar::{max_of, rel_diff, Scalar};

/// Optimal potential of the dual LP. `potential` covers the solved point set,
/// base included (value 0).
#[derive(Clone, Debug)]
pub struct DualSolution<S> {
    pub value: S,
    pub potential: BTreeMap<usize, S>,
    pub pivots: usize,
}

impl<S: Scalar> DualSolution<S> {
    /// `Σ a_x u_x`, recomputed from the potential.
    pub fn objective(&self, mu: &Molecule<S>) -> S {
        mu.terms().iter().fold(S::zero(), |acc, (i, a)| {
            acc + a.clone() * self.potential.get(i).cloned().unwrap_or_else(S::zero)
        })
    }

    /// Largest violation `|u_x - u_y| - d(x,y)` over all pairs (≤ 0 when feasible).
    pub fn max_violation(&self, space: &FiniteMetricSpace<S>) -> S {
        let pts: Vec<(&usize, &S)> = self.potential.iter().collect();
        let mut worst: Option<S> = None;
        for (k, (&x, ux)) in pts.iter().enumerate() {
            for (&y, uy) in &pts[k + 1..] {
                let v = ((*ux).clone() - (*uy).clone()).abs() - space.d(x, y);
                worst = Some(match worst {
                    None => v,
                    Some(w) => max_of(w, v),
                });
            }
        }
        worst.unwrap_or_else(S::zero)
    }
}

/// Primal certificate: `(from, to, mass)` arcs.
#[derive(Clone, Debug, Serialize)]
pub struct TransportPlan<S> {
    pub flows: Vec<(usize, usize, S)>,
    pub cost: S,
    pub pivots: usize,
}

impl<S: Scalar> TransportPlan<S> {
    /// Net outflow at every non-base point equals its coefficient (exactly, or
    /// within `tol` times the total mass in float mode).
    pub fn conserves(&self, mu: &Molecule<S>, tol: f64) -> bool {
        let space = mu.space();
        let mut net: BTreeMap<usize, S> = BTreeMap::new();
        for (a, b, f) in &self.flows {
            if f.is_negative() {
                return false;
            }
            let e = net.entry(*a).or_insert_with(S::zero);
            *e = e.clone() + f.clone();
            let e = net.entry(*b).or_insert_with(S::zero);
            *e = e.clone() - f.clone();
        }
        let scale = mu
            .terms()
            .values()
            .map(|a| a.to_f64().abs())
            .sum::<f64>()
            .max(1.0);
        space.non_base().all(|x| {
            let have = net.get(&x).cloned().unwrap_or_else(S::zero);
            let want = mu.coefficient(x);
            if S::is_exact() {
                have == want
            } else {
                (have.to_f64() - want.to_f64()).abs() <= tol * scale
            }
        })
    }

    pub fn labeled(&self, space: &FiniteMetricSpace<S>) -> Vec<(String, String, S)> {
        self.flows
            .iter()
            .map(|(a, b, f)| {
                (
                    space.label(*a).to_string(),
                    space.label(*b).to_string(),
                    f.clone(),
                )
            })
            .collect()
    }
}

/// Piecewise-constant function: `values[i]` on `(breakpoints[i], breakpoints[i+1])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepFunction<S> {
    pub breakpoints: Vec<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> StepFunction<S> {
    pub fn integral_abs(&self) -> S {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .fold(S::zero(), |acc, (v, w)| {
                acc + v.abs() * (w[1].clone() - w[0].clone())
            })
    }

    /// Value on the open interval containing `x`; zero outside the support
    /// and at breakpoints.
    pub fn value_at(&self, x: &S) -> S {
        for (v, w) in self.values.iter().zip(self.breakpoints.windows(2)) {
            if w[0] < *x && *x < w[1] {
                return v.clone();
            }
        }
        S::zero()
    }
}

/// `supp(μ) ∪ extra ∪ {0}`, base first, then ascending.
fn point_set<S: Scalar>(mu: &Molecule<S>, extra: &[usize]) -> Result<Vec<usize>> {
    let space = mu.space();
    let base = space.base();
    let mut pts: Vec<usize> = mu
        .terms()
        .keys()
        .copied()
        .chain(extra.iter().copied())
        .filter(|&i| i != base)
        .collect();
    if let Some(&bad) = pts.iter().find(|&&i| i >= space.len()) {
        return Err(Error::InvalidArgument(format!(
            "point index {bad} out of range"
        )));
    }
    pts.sort_unstable();
    pts.dedup();
    pts.insert(0, base);
    Ok(pts)
}

fn float_scale<S: Scalar>(values: impl Iterator<Item = S>) -> S {
    if S::is_exact() {
        return S::one();
    }
    let m = values.map(|v| v.abs()).fold(S::zero(), max_of);
    if m.is_zero() {
        S::one()
    } else {
        m
    }
}

/// Dual LP over `supp(μ) ∪ {0}`.
pub fn norm_dual_lp<S: Scalar>(mu: &Molecule<S>) -> Result<DualSolution<S>> {
    norm_dual_lp_over(mu, &[])
}

/// Dual LP over `supp(μ) ∪ extra ∪ {0}`; with `extra` = every point this is
/// the norm computed in the whole space.
pub fn norm_dual_lp_over<S: Scalar>(mu: &Molecule<S>, extra: &[usize]) -> Result<DualSolution<S>> {
    let space = mu.space();
    let pts = point_set(mu, extra)?;
    if mu.is_zero() {
        let potential = BTreeMap::from([(space.base(), S::zero())]);
        return Ok(DualSolution {
            value: S::zero(),
            potential,
            pivots: 0,
        });
    }
    let k = pts.len();
    let mut d = vec![S::zero(); k * k];
    for a in 0..k {
        for b in a + 1..k {
            let v = space.d(pts[a], pts[b]);
            d[a * k + b] = v.clone();
            d[b * k + a] = v;
        }
    }
    let dd = |a: usize, b: usize| d[a * k + b].clone();

    // Variables v_x = u_x + d(x,0) ≥ 0 for local points 1..k. Constraints for
    // pairs with a point strictly between them are implied and dropped.
    let mut rows: Vec<Vec<(usize, S)>> = Vec::new();
    let mut rhs: Vec<S> = Vec::new();
    let clip = |x: S| if x.is_negative() { S::zero() } else { x };
    for a in 0..k {
        for b in a + 1..k {
            let dab = dd(a, b);
            let implied = (0..k).any(|c| c != a && c != b && dd(a, c) + dd(c, b) <= dab);
            if implied {
                continue;
            }
            if a == 0 {
                rows.push(vec![(b - 1, S::one())]);
                rhs.push(dab.clone() + dab);
            } else {
                let (da, db) = (dd(a, 0), dd(b, 0));
                rows.push(vec![(a - 1, S::one()), (b - 1, -S::one())]);
                rhs.push(clip(dab.clone() + da.clone() - db.clone()));
                rows.push(vec![(b - 1, S::one()), (a - 1, -S::one())]);
                rhs.push(clip(dab + db - da));
            }
        }
    }
    let coeffs: Vec<S> = pts[1..].iter().map(|&p| mu.coefficient(p)).collect();
    let scale = float_scale(coeffs.iter().cloned());
    let c: Vec<S> = coeffs.iter().map(|a| a.clone() / scale.clone()).collect();
    let tol = if S::is_exact() {
        S::zero()
    } else {
        S::from_f64(1e-11)
    };
    let sol = maximize(&c, &rows, &rhs, &tol).map_err(|e| match e {
        LpError::Unbounded => Error::SolverFailure("dual LP reported unbounded".into()),
        LpError::IterationLimit => Error::SolverFailure("dual LP iteration limit".into()),
    })?;
    let mut potential = BTreeMap::new();
    potential.insert(space.base(), S::zero());
    let mut value = S::zero();
    for (l, v) in sol.x.into_iter().enumerate() {
        let u = v - dd(l + 1, 0);
        value = value + coeffs[l].clone() * u.clone();
        potential.insert(pts[l + 1], u);
    }
    Ok(DualSolution {
        value,
        potential,
        pivots: sol.pivots,
    })
}

/// Min-cost flow over `supp(μ) ∪ {0}`.
pub fn norm_flow<S: Scalar>(mu: &Molecule<S>) -> Result<TransportPlan<S>> {
    norm_flow_over(mu, &[])
}

/// Min-cost flow over `supp(μ) ∪ extra ∪ {0}`.
pub fn norm_flow_over<S: Scalar>(mu: &Molecule<S>, extra: &[usize]) -> Result<TransportPlan<S>> {
    if mu.is_zero() {
        return Ok(TransportPlan {
            flows: Vec::new(),
            cost: S::zero(),
            pivots: 0,
        });
    }
    let space = mu.space();
    let pts = point_set(mu, extra)?;
    let k = pts.len();
    let mut cost = vec![S::zero(); k * k];
    for a in 0..k {
        for b in a + 1..k {
            let v = space.d(pts[a], pts[b]);
            cost[a * k + b] = v.clone();
            cost[b * k + a] = v;
        }
    }
    let mut supply: Vec<S> = pts.iter().map(|&p| mu.coefficient(p)).collect();
    supply[0] = -supply[1..].iter().fold(S::zero(), |acc, a| acc + a.clone());
    let tol = if S::is_exact() {
        S::zero()
    } else {
        S::from_f64(1e-12) * float_scale(cost.iter().cloned())
    };
    let sol = min_cost_transshipment(cost, &supply, 0, &tol).map_err(|e| match e {
        FlowError::Unbounded => Error::SolverFailure("flow pivot found no blocking arc".into()),
        FlowError::IterationLimit => Error::SolverFailure("flow iteration limit".into()),
    })?;
    let mut total = S::zero();
    let pivots = sol.pivots;
    let mut flows = Vec::with_capacity(sol.arcs.len());
    for (a, b, f) in sol.arcs {
        if !f.is_positive() {
            continue;
        }
        let (x, y) = (pts[a], pts[b]);
        total = total + f.clone() * space.d(x, y);
        flows.push((x, y, f));
    }
    Ok(TransportPlan {
        flows,
        cost: total,
        pivots,
    })
}

/// `∫|Φμ|` using the space's own line embedding.
pub fn norm_line<S: Scalar>(mu: &Molecule<S>) -> Result<(S, StepFunction<S>)> {
    let emb = mu.space().line_embedding()?;
    norm_line_with(&emb, mu)
}

/// `∫|Φμ|` with `Φμ = Σ_s a_s 1_{[0,s]}` (signed for negative positions).
pub fn norm_line_with<S: Scalar>(
    emb: &LineEmbedding<S>,
    mu: &Molecule<S>,
) -> Result<(S, StepFunction<S>)> {
    let space = mu.space();
    if emb.positions().len() != space.len() {
        return Err(Error::NotALineSpace(
            "embedding does not match the space".into(),
        ));
    }
    if mu.is_zero() {
        return Ok((
            S::zero(),
            StepFunction {
                breakpoints: Vec::new(),
                values: Vec::new(),
            },
        ));
    }
    let mut pts: Vec<(S, S)> = mu
        .terms()
        .iter()
        .map(|(&i, a)| (emb.position(i).clone(), a.clone()))
        .collect();
    pts.push((S::zero(), S::zero()));
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
    let k = pts.len();
    // prefix[i] = Σ_{j<i} a_j, suffix[i] = Σ_{j≥i} a_j
    let mut prefix = vec![S::zero(); k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i].clone() + pts[i].1.clone();
    }
    let total = prefix[k].clone();
    let mut values = Vec::with_capacity(k - 1);
    for i in 0..k - 1 {
        let (u, _) = &pts[i];
        let v = if !u.is_negative() {
            total.clone() - prefix[i + 1].clone()
        } else {
            -prefix[i + 1].clone()
        };
        values.push(v);
    }
    let step = StepFunction {
        breakpoints: pts.into_iter().map(|p| p.0).collect(),
        values,
    };
    Ok((step.integral_abs(), step))
}

/// Both solver routes plus their cross-checks.
#[derive(Clone, Debug)]
pub struct NormCertificate<S> {
    pub dual: DualSolution<S>,
    pub plan: TransportPlan<S>,
    /// `|primal - dual| / max(|primal|, |dual|)`.
    pub gap: f64,
    pub potential_feasible: bool,
    pub plan_conserves: bool,
    pub within_tolerance: bool,
}

impl<S: Scalar> NormCertificate<S> {
    pub fn ok(&self) -> bool {
        self.potential_feasible && self.plan_conserves && self.within_tolerance
    }
}

/// Runs the dual LP and the flow independently and checks that they agree,
/// the potential is 1-Lipschitz and the plan conserves mass.
pub fn certify<S: Scalar>(mu: &Molecule<S>, rel_tol: f64) -> Result<NormCertificate<S>> {
    let dual = norm_dual_lp(mu)?;
    let plan = norm_flow(mu)?;
    let gap = rel_diff(&dual.value, &plan.cost);
    let violation = dual.max_violation(mu.space());
    let potential_feasible = if S::is_exact() {
        !violation.is_positive()
    } else {
        let scale = dual
            .potential
            .values()
            .map(|u| u.to_f64().abs())
            .fold(1.0, f64::max);
        violation.to_f64() <= rel_tol * scale
    };
    let within_tolerance = if S::is_exact() {
        dual.value == plan.cost
    } else {
        gap <= rel_tol
    };
    let plan_conserves = plan.conserves(mu, rel_tol);
    Ok(NormCertificate {
        dual,
        plan,
        gap,
        potential_feasible,
        plan_conserves,
        within_tolerance,
    })
}
