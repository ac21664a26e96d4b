//! Dense tableau simplex for `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! Condensed (Tucker) form: only nonbasic columns are stored. The origin is
//! feasible because `b ≥ 0`, so there is no phase one. Dantzig pricing, with a
//! permanent switch to Bland's rule after a long run of degenerate pivots.

use crate::scalar::Scalar;

#[derive(Debug)]
pub(crate) enum LpError {
    Unbounded,
    IterationLimit,
}

pub(crate) struct LpSolution<S> {
    pub x: Vec<S>,
    pub pivots: usize,
}

struct Tableau<S> {
    m: usize,
    n: usize,
    // row-major, basic_i = rhs_i - Σ_j t[i][j] * nonbasic_j
    t: Vec<S>,
    rhs: Vec<S>,
    // z = z0 + Σ_j obj_j * nonbasic_j
    obj: Vec<S>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn entering(&self, tol: &S, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 0..self.n {
            if self.obj[j] <= *tol {
                continue;
            }
            best = match best {
                None => Some(j),
                Some(b) if bland && self.nonbasic[j] < self.nonbasic[b] => Some(j),
                Some(b) if !bland && self.obj[j] > self.obj[b] => Some(j),
                keep => keep,
            };
        }
        best
    }

    fn leaving(&self, c: usize, tol: &S) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for i in 0..self.m {
            let a = &self.t[i * self.n + c];
            if *a <= *tol {
                continue;
            }
            let r = self.rhs[i].clone() / a.clone();
            best = match best {
                None => Some((i, r)),
                Some((b, br)) => {
                    if r < br || (r == br && self.basic[i] < self.basic[b]) {
                        Some((i, r))
                    } else {
                        Some((b, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let n = self.n;
        let p = self.t[r * n + c].clone();
        let inv = S::one() / p;
        for j in 0..n {
            if j != c {
                let v = self.t[r * n + j].clone() * inv.clone();
                self.t[r * n + j] = v.clean();
            }
        }
        self.t[r * n + c] = inv.clone();
        self.rhs[r] = (self.rhs[r].clone() * inv.clone()).clean();
        let pivot_row: Vec<S> = self.t[r * n..(r + 1) * n].to_vec();
        let rhs_r = self.rhs[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + c].clone();
            if f.is_zero() {
                continue;
            }
            for (j, pr) in pivot_row.iter().enumerate() {
                if j != c && !pr.is_zero() {
                    let v = self.t[i * n + j].clone() - f.clone() * pr.clone();
                    self.t[i * n + j] = v.clean();
                }
            }
            self.t[i * n + c] = (-(f.clone() * inv.clone())).clean();
            let v = self.rhs[i].clone() - f * rhs_r.clone();
            // the ratio test keeps rhs ≥ 0; clip round-off below zero
            self.rhs[i] = if v.is_negative() {
                S::zero()
            } else {
                v.clean()
            };
        }
        let f = self.obj[c].clone();
        for (j, pr) in pivot_row.iter().enumerate() {
            if j != c && !pr.is_zero() {
                let v = self.obj[j].clone() - f.clone() * pr.clone();
                self.obj[j] = v.clean();
            }
        }
        self.obj[c] = (-(f * inv)).clean();
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[c]);
    }
}

/// Solves the LP; `rows[i]` is the sparse row `(column, coefficient)`.
pub(crate) fn maximize<S: Scalar>(
    c: &[S],
    rows: &[Vec<(usize, S)>],
    b: &[S],
    tol: &S,
) -> Result<LpSolution<S>, LpError> {
    let n = c.len();
    let m = rows.len();
    debug_assert!(b.iter().all(|x| !x.is_negative()));
    let mut t = vec![S::zero(); m * n];
    for (i, row) in rows.iter().enumerate() {
        for (j, a) in row {
            t[i * n + j] = t[i * n + j].clone() + a.clone();
        }
    }
    let mut tab = Tableau {
        m,
        n,
        t,
        rhs: b.to_vec(),
        obj: c.to_vec(),
        basic: (n..n + m).collect(),
        nonbasic: (0..n).collect(),
    };
    let mut pivots = 0usize;
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let limit = 50 * (m + n) + 1000;
    while let Some(col) = tab.entering(tol, bland) {
        let row = tab.leaving(col, tol).ok_or(LpError::Unbounded)?;
        if tab.rhs[row].is_zero() {
            degenerate_run += 1;
            if degenerate_run > 2 * (m + n).min(200) {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        tab.pivot(row, col);
        pivots += 1;
        if pivots > limit {
            return Err(LpError::IterationLimit);
        }
    }
    let mut x = vec![S::zero(); n];
    for (i, &v) in tab.basic.iter().enumerate() {
        if v < n {
            x[v] = tab.rhs[i].clone();
        }
    }
    Ok(LpSolution { x, pivots })
}
