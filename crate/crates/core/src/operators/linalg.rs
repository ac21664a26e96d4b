//! Exact sparse column reduction over the rationals.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::scalar::Rational;

pub(crate) type SparseVec = BTreeMap<usize, Rational>;

fn axpy(y: &mut SparseVec, a: &Rational, x: &SparseVec) {
    for (k, v) in x {
        let e = y.entry(*k).or_insert_with(Rational::zero);
        *e -= a * v;
        if e.is_zero() {
            y.remove(k);
        }
    }
}

/// Gaussian elimination on columns. Returns the rank and a basis of the null
/// space, each vector indexed by column position.
pub(crate) fn column_reduce(columns: &[SparseVec]) -> (usize, Vec<SparseVec>) {
    // pivot row -> (reduced column, combination of original columns)
    let mut pivots: BTreeMap<usize, (SparseVec, SparseVec)> = BTreeMap::new();
    let mut kernel = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let mut v = col.clone();
        let mut combo = SparseVec::from([(j, Rational::from_integer(1.into()))]);
        loop {
            let Some((&r, lead)) = v.iter().next() else {
                kernel.push(combo);
                break;
            };
            match pivots.get(&r) {
                Some((pv, pc)) => {
                    let factor = lead / &pv[&r];
                    axpy(&mut v, &factor, pv);
                    axpy(&mut combo, &factor, pc);
                }
                None => {
                    pivots.insert(r, (v, combo));
                    break;
                }
            }
        }
    }
    (pivots.len(), kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn col(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|&(r, v)| (r, ratio(v, 1))).collect()
    }

    #[test]
    fn rank_and_kernel() {
        // columns e0, e1, e0 + e1, 0
        let cols = vec![
            col(&[(0, 1)]),
            col(&[(1, 1)]),
            col(&[(0, 1), (1, 1)]),
            col(&[]),
        ];
        let (rank, kernel) = column_reduce(&cols);
        assert_eq!(rank, 2);
        assert_eq!(kernel.len(), 2);
        for k in &kernel {
            let mut image = SparseVec::new();
            for (j, a) in k {
                axpy(&mut image, &-a.clone(), &cols[*j]);
            }
            assert!(image.is_empty());
        }
    }
}
