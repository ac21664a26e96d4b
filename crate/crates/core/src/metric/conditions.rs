//! Finite checkers for the distance-set and cover conditions.

use serde::{Deserialize, Serialize};

use super::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::scalar::{max_of, min_of, Scalar};

/// Lebesgue measure of `⋃_{y≠x} [d(x,y)-ε, d(x,y)+ε] ∩ [0,∞)`, by sorting
/// and sweeping the intervals.
pub fn distance_set_measure<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    x: usize,
    eps: &S,
) -> Result<S> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let mut centres: Vec<S> = (0..space.len())
        .filter(|&y| y != x)
        .map(|y| space.d(x, y))
        .collect();
    centres.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    centres.dedup();
    let mut total = S::zero();
    let mut current: Option<(S, S)> = None;
    for c in centres {
        let lo = max_of(S::zero(), c.clone() - eps.clone());
        let hi = c + eps.clone();
        current = match current {
            Some((a, b)) if lo <= b => Some((a, max_of(b, hi))),
            Some((a, b)) => {
                total = total + (b - a);
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((a, b)) = current {
        total = total + (b - a);
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverVariant {
    /// Balls `B(x_i, ε)` whose `ρε`-balls are pairwise disjoint.
    #[serde(rename = "b")]
    Balls,
    /// Closed sets of diameter `≤ ε` whose `ρε`-enlargements are pairwise disjoint.
    #[serde(rename = "b'")]
    ClosedSets,
}

impl std::str::FromStr for CoverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" => Ok(CoverVariant::Balls),
            "b'" | "b′" | "bprime" => Ok(CoverVariant::ClosedSets),
            other => Err(Error::Parse(format!("unknown cover variant `{other}`"))),
        }
    }
}

/// A cover: `blocks` partition the points; for balls, `centres[i]` is the
/// centre of `blocks[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverWitness {
    pub centres: Option<Vec<usize>>,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverVerdict {
    Satisfied(CoverWitness),
    /// Exhaustive search found no cover.
    Refuted,
    /// The greedy search beyond the exhaustive cap found no cover.
    Inconclusive,
}

impl CoverVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, CoverVerdict::Satisfied(_))
    }
}

const EXHAUSTIVE_CAP: usize = 12;

/// Decides, at scale `ε`, whether `M` is covered by sets of the given variant
/// with pairwise disjoint `ρε`-enlargements. Exhaustive up to 12 points,
/// greedy (negative answers inconclusive) beyond.
pub fn check_cover_condition<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    eps: &S,
    rho: &S,
    variant: CoverVariant,
) -> Result<CoverVerdict> {
    if !eps.is_positive() || !rho.is_positive() {
        return Err(Error::InvalidArgument(
            "epsilon and rho must be positive".into(),
        ));
    }
    let n = space.len();
    let reach = rho.clone() * eps.clone();
    let exhaustive = n <= EXHAUSTIVE_CAP;
    let found = match (variant, exhaustive) {
        (CoverVariant::Balls, true) => balls_exhaustive(space, eps, &reach),
        (CoverVariant::Balls, false) => balls_greedy(space, eps, &reach),
        (CoverVariant::ClosedSets, true) => partition_exhaustive(space, eps, &reach),
        (CoverVariant::ClosedSets, false) => partition_greedy(space, eps, &reach),
    };
    Ok(match found {
        Some(w) => CoverVerdict::Satisfied(w),
        None if exhaustive => CoverVerdict::Refuted,
        None => CoverVerdict::Inconclusive,
    })
}

/// Independent check of a claimed cover witness.
pub fn verify_cover<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    witness: &CoverWitness,
    eps: &S,
    rho: &S,
    variant: CoverVariant,
) -> bool {
    let n = space.len();
    let mut seen = vec![false; n];
    for b in &witness.blocks {
        for &p in b {
            if p >= n || seen[p] {
                return false;
            }
            seen[p] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return false;
    }
    let reach = rho.clone() * eps.clone();
    match variant {
        CoverVariant::Balls => {
            let Some(centres) = &witness.centres else {
                return false;
            };
            if centres.len() != witness.blocks.len() {
                return false;
            }
            let covered = witness
                .blocks
                .iter()
                .zip(centres)
                .all(|(b, &c)| b.iter().all(|&p| space.d(p, c) <= *eps));
            covered && balls_disjoint(space, centres, &reach)
        }
        CoverVariant::ClosedSets => {
            witness
                .blocks
                .iter()
                .all(|b| block_diameter(space, b) <= *eps)
                && enlargements_disjoint(space, &witness.blocks, &reach)
        }
    }
}

fn block_diameter<S: Scalar>(space: &FiniteMetricSpace<S>, block: &[usize]) -> S {
    let mut best = S::zero();
    for (i, &a) in block.iter().enumerate() {
        for &b in &block[i + 1..] {
            best = max_of(best, space.d(a, b));
        }
    }
    best
}

fn dist_to_set<S: Scalar>(space: &FiniteMetricSpace<S>, z: usize, set: &[usize]) -> S {
    set.iter()
        .map(|&p| space.d(z, p))
        .reduce(min_of)
        .expect("nonempty block")
}

/// No point of `M` lies within `reach` of two distinct blocks.
fn enlargements_disjoint<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    blocks: &[Vec<usize>],
    reach: &S,
) -> bool {
    (0..space.len()).all(|z| {
        blocks
            .iter()
            .filter(|b| dist_to_set(space, z, b) <= *reach)
            .count()
            <= 1
    })
}

fn balls_disjoint<S: Scalar>(space: &FiniteMetricSpace<S>, centres: &[usize], reach: &S) -> bool {
    (0..space.len()).all(|z| centres.iter().filter(|&&c| space.d(z, c) <= *reach).count() <= 1)
}

/// Assigns each point to its nearest centre, `None` if some point is farther
/// than `eps` from every centre.
fn assign_to_centres<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    centres: &[usize],
    eps: &S,
) -> Option<CoverWitness> {
    let mut blocks = vec![Vec::new(); centres.len()];
    for p in 0..space.len() {
        let (k, dist) = centres
            .iter()
            .enumerate()
            .map(|(k, &c)| (k, space.d(p, c)))
            .reduce(|a, b| if b.1 < a.1 { b } else { a })?;
        if dist > *eps {
            return None;
        }
        blocks[k].push(p);
    }
    Some(CoverWitness {
        centres: Some(centres.to_vec()),
        blocks,
    })
}

fn balls_exhaustive<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    eps: &S,
    reach: &S,
) -> Option<CoverWitness> {
    let n = space.len();
    // fewer centres first: disjointness only gets harder with more balls
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.into_iter().find_map(|mask| {
        let centres: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if !balls_disjoint(space, &centres, reach) {
            return None;
        }
        assign_to_centres(space, &centres, eps)
    })
}

fn balls_greedy<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    eps: &S,
    reach: &S,
) -> Option<CoverWitness> {
    let n = space.len();
    let all: Vec<usize> = (0..n).collect();
    let mut net = Vec::new();
    let mut covered = vec![false; n];
    for p in 0..n {
        if !covered[p] {
            net.push(p);
            for (q, c) in covered.iter_mut().enumerate() {
                if space.d(p, q) <= *eps {
                    *c = true;
                }
            }
        }
    }
    [net, all].into_iter().find_map(|centres| {
        if balls_disjoint(space, &centres, reach) {
            assign_to_centres(space, &centres, eps)
        } else {
            None
        }
    })
}

fn partition_exhaustive<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    eps: &S,
    reach: &S,
) -> Option<CoverWitness> {
    let n = space.len();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    fn rec<S: Scalar>(
        space: &FiniteMetricSpace<S>,
        p: usize,
        blocks: &mut Vec<Vec<usize>>,
        eps: &S,
        reach: &S,
    ) -> bool {
        if p == space.len() {
            return enlargements_disjoint(space, blocks, reach);
        }
        // a point within `reach` of another block's member must share its block
        for k in 0..=blocks.len() {
            let fits = |b: &Vec<usize>| b.iter().all(|&q| space.d(p, q) <= *eps);
            let separated = blocks
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .all(|(_, b)| b.iter().all(|&q| space.d(p, q) > *reach));
            if !separated || (k < blocks.len() && !fits(&blocks[k])) {
                continue;
            }
            if k == blocks.len() {
                blocks.push(vec![p]);
            } else {
                blocks[k].push(p);
            }
            if rec(space, p + 1, blocks, eps, reach) {
                return true;
            }
            if k == blocks.len() - 1 && blocks[k].len() == 1 {
                blocks.pop();
            } else {
                blocks[k].pop();
            }
        }
        false
    }
    if n == 0 {
        return Some(CoverWitness {
            centres: None,
            blocks,
        });
    }
    rec(space, 0, &mut blocks, eps, reach).then_some(CoverWitness {
        centres: None,
        blocks,
    })
}

/// Single-linkage clusters at every distance threshold up to `eps`.
fn partition_greedy<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    eps: &S,
    reach: &S,
) -> Option<CoverWitness> {
    let n = space.len();
    let mut thresholds: Vec<S> = vec![S::zero()];
    for i in 0..n {
        for j in i + 1..n {
            let d = space.d(i, j);
            if d <= *eps {
                thresholds.push(d);
            }
        }
    }
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    thresholds.dedup();
    thresholds.into_iter().rev().find_map(|t| {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                if space.d(i, j) <= t {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for p in 0..n {
            let r = find(&mut parent, p);
            groups.entry(r).or_default().push(p);
        }
        let blocks: Vec<Vec<usize>> = groups.into_values().collect();
        let ok = blocks.iter().all(|b| block_diameter(space, b) <= *eps)
            && enlargements_disjoint(space, &blocks, reach);
        ok.then_some(CoverWitness {
            centres: None,
            blocks,
        })
    })
}
