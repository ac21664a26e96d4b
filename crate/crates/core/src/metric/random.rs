use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::scalar::{ratio, Scalar};

/// Random metric generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Uniform points in the unit square, Euclidean distance (float only).
    Euclidean2d,
    /// Random symmetric weights repaired by all-pairs shortest paths.
    ShortestPath,
    /// Distinct dyadic points on the real line, base at 0.
    Line,
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean2d" => Ok(Generator::Euclidean2d),
            "shortestpath" => Ok(Generator::ShortestPath),
            "line" => Ok(Generator::Line),
            other => Err(Error::Parse(format!("unknown generator `{other}`"))),
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Generator::Euclidean2d => "euclidean2d",
            Generator::ShortestPath => "shortestpath",
            Generator::Line => "line",
        })
    }
}

/// Floyd–Warshall closure of a symmetric nonnegative matrix.
pub fn repair_shortest_path<S: Scalar>(matrix: &[Vec<S>]) -> Vec<Vec<S>> {
    let mut d = matrix.to_vec();
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].clone() + d[k][j].clone();
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Deterministic random space with labels `p0..p{n-1}` and base `p0`.
pub fn random_space<S: Scalar>(
    seed: u64,
    n: usize,
    generator: Generator,
) -> Result<FiniteMetricSpace<S>> {
    if n < 2 {
        return Err(Error::TooFewPoints(2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let name = format!("random-{generator}-{seed}-{n}");
    match generator {
        Generator::Euclidean2d => {
            if S::is_exact() {
                return Err(Error::NotExactlyRepresentable(
                    "planar Euclidean distances".into(),
                ));
            }
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
            let matrix = pts
                .iter()
                .map(|a| {
                    pts.iter()
                        .map(|b| S::from_f64((a.0 - b.0).hypot(a.1 - b.1)))
                        .collect()
                })
                .collect();
            // coincident samples have probability zero; validation would report them
            super::validate_space(name, labels, "p0", matrix)
        }
        Generator::ShortestPath => {
            // weights in {1/4, 2/4, ..., 4}: exact in both modes
            let mut raw = vec![vec![S::zero(); n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let w = S::from_rational(&ratio(rng.gen_range(1..=16), 4));
                    raw[i][j] = w.clone();
                    raw[j][i] = w;
                }
            }
            let matrix = repair_shortest_path(&raw);
            Ok(FiniteMetricSpace::dense_unchecked(
                name,
                labels,
                0,
                matrix.into_iter().flatten().collect(),
            ))
        }
        Generator::Line => {
            let span = (4 * n) as i64;
            let mut ticks: Vec<i64> = (-span..=span).filter(|&t| t != 0).collect();
            ticks.shuffle(&mut rng);
            let mut positions = vec![S::zero()];
            positions.extend(
                ticks[..n - 1]
                    .iter()
                    .map(|&t| S::from_rational(&ratio(t, 16))),
            );
            FiniteMetricSpace::from_line(name, labels, positions, "p0")
        }
    }
}
