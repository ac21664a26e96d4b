//! Primal network simplex for uncapacitated transshipment on a complete graph.
//!
//! Spanning-tree basis rooted at the sink node. The initial star tree has all
//! arcs carrying their full supply, which makes it strongly feasible; the
//! leaving arc is chosen by Cunningham's rule (last blocking arc after the
//! apex), which keeps the tree strongly feasible and rules out cycling.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug)]
pub(crate) enum FlowError {
    Unbounded,
    IterationLimit,
}

pub(crate) struct FlowSolution<S> {
    /// `(from, to, amount)` for tree arcs with positive flow.
    pub arcs: Vec<(usize, usize, S)>,
    pub pivots: usize,
}

const NONE: usize = usize::MAX;

struct Tree<S> {
    n: usize,
    cost: Vec<S>,
    parent: Vec<usize>,
    // arc between v and parent[v] points v → parent when true
    up: Vec<bool>,
    flow: Vec<S>,
    depth: Vec<usize>,
    pot: Vec<S>,
}

impl<S: Scalar> Tree<S> {
    fn c(&self, i: usize, j: usize) -> S {
        self.cost[i * self.n + j].clone()
    }

    fn refresh(&mut self, root: usize) {
        let mut children = vec![Vec::new(); self.n];
        for v in 0..self.n {
            if self.parent[v] != NONE {
                children[self.parent[v]].push(v);
            }
        }
        self.depth[root] = 0;
        self.pot[root] = S::zero();
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &children[u] {
                self.depth[v] = self.depth[u] + 1;
                // tree arcs have zero reduced cost: c_ij + π_i − π_j = 0
                self.pot[v] = if self.up[v] {
                    self.pot[u].clone() - self.c(v, u)
                } else {
                    self.pot[u].clone() + self.c(u, v)
                };
                queue.push_back(v);
            }
        }
    }

    fn reduced(&self, i: usize, j: usize) -> S {
        self.c(i, j) + self.pot[i].clone() - self.pot[j].clone()
    }
}

/// Minimum-cost flow with node supplies `supply` (summing to zero) on the
/// complete directed graph with arc costs `cost[i*n+j] ≥ 0`.
pub(crate) fn min_cost_transshipment<S: Scalar>(
    cost: Vec<S>,
    supply: &[S],
    root: usize,
    tol: &S,
) -> Result<FlowSolution<S>, FlowError> {
    let n = supply.len();
    let mut tree = Tree {
        n,
        cost,
        parent: vec![root; n],
        up: vec![false; n],
        flow: vec![S::zero(); n],
        depth: vec![0; n],
        pot: vec![S::zero(); n],
    };
    tree.parent[root] = NONE;
    for v in 0..n {
        if v == root {
            continue;
        }
        // positive supply ships to the root, otherwise the root ships to v;
        // zero supplies point towards the root, which is strongly feasible
        tree.up[v] = !supply[v].is_negative();
        tree.flow[v] = supply[v].abs();
    }
    tree.refresh(root);

    let arc_count = n * (n - 1);
    let block = ((arc_count as f64).sqrt() as usize).max(10);
    let mut cursor = 0usize;
    let mut pivots = 0usize;
    let limit = 100 * n * n + 1000;

    loop {
        // block pricing over arcs enumerated as i*n + j
        let mut best: Option<(usize, usize, S)> = None;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        while scanned < n * n {
            let e = (cursor + scanned) % (n * n);
            scanned += 1;
            let (i, j) = (e / n, e % n);
            if i == j {
                continue;
            }
            let rc = tree.reduced(i, j);
            if rc < -tol.clone() && best.as_ref().is_none_or(|b| rc < b.2) {
                best = Some((i, j, rc));
            }
            in_block += 1;
            if in_block >= block && best.is_some() {
                break;
            }
            if in_block >= block {
                in_block = 0;
            }
        }
        cursor = (cursor + scanned) % (n * n);
        let Some((i, j, _)) = best else { break };
        pivot(&mut tree, i, j, root)?;
        pivots += 1;
        if pivots > limit {
            return Err(FlowError::IterationLimit);
        }
    }

    let mut arcs = Vec::new();
    for v in 0..n {
        if tree.parent[v] == NONE || tree.flow[v].is_zero() {
            continue;
        }
        let p = tree.parent[v];
        let (a, b) = if tree.up[v] { (v, p) } else { (p, v) };
        arcs.push((a, b, tree.flow[v].clone()));
    }
    Ok(FlowSolution { arcs, pivots })
}

fn pivot<S: Scalar>(tree: &mut Tree<S>, i: usize, j: usize, root: usize) -> Result<(), FlowError> {
    // climb to the apex, recording the node whose parent arc is on the cycle
    let (mut a, mut b) = (i, j);
    let mut i_path = Vec::new();
    let mut j_path = Vec::new();
    while a != b {
        if tree.depth[a] >= tree.depth[b] {
            i_path.push(a);
            a = tree.parent[a];
        } else {
            j_path.push(b);
            b = tree.parent[b];
        }
    }

    // cycle orientation follows the entering arc i → j, then j back up to the
    // apex and down to i; traversal order starts at the apex:
    // apex → … → i (i_path reversed), i → j, j → … → apex (j_path)
    let mut leave: Option<(usize, bool)> = None; // (node, on i side)
    let mut theta: Option<S> = None;
    let mut consider = |v: usize, on_i: bool, backward: bool, tree: &Tree<S>| {
        if !backward {
            return;
        }
        let f = &tree.flow[v];
        if theta.as_ref().is_none_or(|t| *f <= *t) {
            theta = Some(f.clone());
            leave = Some((v, on_i));
        }
    };
    for &v in i_path.iter().rev() {
        // traversed parent(v) → v: backward if the arc points up
        consider(v, true, tree.up[v], tree);
    }
    for &v in &j_path {
        // traversed v → parent(v): backward if the arc points down
        consider(v, false, !tree.up[v], tree);
    }
    let (out, on_i) = leave.ok_or(FlowError::Unbounded)?;
    let theta = {
        let t = theta.expect("set with leave");
        if t.is_negative() {
            S::zero()
        } else {
            t
        }
    };

    if !theta.is_zero() {
        for &v in &i_path {
            tree.flow[v] = if tree.up[v] {
                tree.flow[v].clone() - theta.clone()
            } else {
                tree.flow[v].clone() + theta.clone()
            };
        }
        for &v in &j_path {
            tree.flow[v] = if tree.up[v] {
                tree.flow[v].clone() + theta.clone()
            } else {
                tree.flow[v].clone() - theta.clone()
            };
        }
    }

    // re-hang the detached subtree on the entering arc, reversing the stem
    // from the entering endpoint up to the leaving arc
    let (start, other, start_up, path) = if on_i {
        (i, j, true, &i_path)
    } else {
        (j, i, false, &j_path)
    };
    let stem_len = path
        .iter()
        .position(|&v| v == out)
        .expect("leaving arc on path")
        + 1;
    let stem = &path[..stem_len];
    let mut prev_parent = other;
    let mut prev_up = start_up;
    let mut prev_flow = theta;
    for &v in stem {
        let old_up = tree.up[v];
        let old_flow = tree.flow[v].clone();
        tree.parent[v] = prev_parent;
        tree.up[v] = prev_up;
        tree.flow[v] = prev_flow;
        // the old arc (v, old_parent) becomes old_parent's parent arc, reversed
        prev_parent = v;
        prev_up = !old_up;
        prev_flow = old_flow;
    }
    debug_assert_eq!(stem[0], start);
    tree.refresh(root);
    Ok(())
}

#[cfg(test)]
mod tests {
    use num_traits::{Signed, Zero};

    use super::*;
    use crate::scalar::{ratio, Rational};

    fn cost_of(arcs: &[(usize, usize, Rational)], cost: &[Rational], n: usize) -> Rational {
        arcs.iter().map(|(a, b, f)| f * &cost[a * n + b]).sum()
    }

    #[test]
    fn line_transport() {
        // points at 0, 1, 3; supplies 1 at 1, -2 at 3, root 0 takes +1
        let pos = [0i64, 1, 3];
        let n = 3;
        let cost: Vec<Rational> = (0..n * n)
            .map(|e| ratio((pos[e / n] - pos[e % n]).abs(), 1))
            .collect();
        let supply = vec![ratio(1, 1), ratio(1, 1), ratio(-2, 1)];
        let sol = min_cost_transshipment(cost.clone(), &supply, 0, &Rational::zero()).unwrap();
        // 1 unit 0→3 (3) and 1 unit 1→3 (2)
        assert_eq!(cost_of(&sol.arcs, &cost, n), ratio(5, 1));
    }

    #[test]
    fn conserves_flow() {
        let n = 5;
        let cost: Vec<Rational> = (0..n * n)
            .map(|e| {
                let (i, j) = (e / n, e % n);
                ratio(((i * 7 + j * 7) % 5 + 1) as i64 * (i != j) as i64, 1)
            })
            .collect();
        let supply = vec![
            ratio(-3, 2),
            ratio(2, 1),
            ratio(-1, 3),
            ratio(1, 1),
            ratio(-7, 6),
        ];
        let sol = min_cost_transshipment(cost, &supply, 0, &Rational::zero()).unwrap();
        let mut net = vec![Rational::zero(); n];
        for (a, b, f) in &sol.arcs {
            assert!(f.is_positive());
            net[*a] += f;
            net[*b] -= f;
        }
        assert_eq!(net, supply);
    }
}
