use std::sync::Arc;

use lipfree_core::constructions::{svc_complement_family, svc_stage};
use lipfree_core::lip::{
    inf_convolve, lipschitz_constant, mcshane_extend, plateau, separation_family, weighting_bound,
    weighting_operator, LipFunction, ModulusFunction,
};
use lipfree_core::metric::{random_space, validate_space, FiniteMetricSpace, Generator};
use lipfree_core::operators::PointMap;
use lipfree_core::scalar::{ratio, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64) -> Rational {
    ratio(n, 1)
}

/// Concave piecewise-linear modulus: positive, strictly decreasing slopes.
fn concave_pwl(seed: u64) -> ModulusFunction<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..6);
    let mut bp = vec![q(0)];
    let mut vals = vec![q(0)];
    let mut slope = ratio(rng.gen_range(8..16), 1);
    for _ in 0..k {
        let step = ratio(rng.gen_range(1..8), 4);
        let t = bp.last().unwrap() + &step;
        let v = vals.last().unwrap() + &slope * &step;
        bp.push(t);
        vals.push(v);
        slope = &slope * ratio(rng.gen_range(1..4), 4);
    }
    ModulusFunction::pwl(bp, vals, q(1)).unwrap()
}

fn sample_grid() -> Vec<Rational> {
    (0..=48).map(|i| ratio(i, 8)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn plateau_conditions(seed in any::<u64>(), n in 2usize..16, r in 1i64..16) {
        let space = Arc::new(random_space::<Rational>(seed, n, Generator::ShortestPath).unwrap());
        let x = (seed % n as u64) as usize;
        let r = ratio(r, 8);
        let w = plateau(&space, x, &r).unwrap();
        for y in 0..n {
            let d = space.d(x, y);
            let v = w.value(y);
            prop_assert!(v >= q(0) && v <= q(1));
            if d <= r {
                prop_assert_eq!(&v, &q(1));
            }
            if d > &r + &r {
                prop_assert_eq!(&v, &q(0));
            }
        }
        prop_assert!(w.lip_constant() <= q(1) / &r);
    }

    #[test]
    fn mcshane_restricts_and_keeps_constant(seed in any::<u64>(), n in 3usize..16) {
        let space = Arc::new(random_space::<Rational>(seed, n, Generator::ShortestPath).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut domain: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !domain.contains(&space.base()) {
            domain.push(space.base());
        }
        let partial: Vec<(usize, Rational)> = domain
            .iter()
            .map(|&y| (y, if y == space.base() { q(0) } else { ratio(rng.gen_range(-8..=8), 3) }))
            .collect();
        // L = Lip of the partial function (at least 1 so it is positive)
        let mut l = q(1);
        for (a, fa) in &partial {
            for (b, fb) in &partial {
                if a != b {
                    let s = num_traits::Signed::abs(&(fa - fb)) / space.d(*a, *b);
                    if s > l {
                        l = s;
                    }
                }
            }
        }
        let ext = mcshane_extend(&space, &partial, &l).unwrap();
        for (y, fy) in &partial {
            prop_assert_eq!(&ext.value(*y), fy);
        }
        prop_assert!(ext.lip_constant() <= l);
        for z in 0..n {
            let bound = partial.iter().map(|(y, fy)| fy + &l * space.d(z, *y)).min().unwrap();
            prop_assert!(ext.value(z) <= bound.clone());
            if !domain.contains(&z) {
                prop_assert_eq!(ext.value(z), bound);
            }
        }
        // the restriction already attains Lip(partial), so the extension cannot lose it
        let on_domain: Rational = partial
            .iter()
            .flat_map(|(a, fa)| partial.iter().filter(move |(b, _)| b != a).map(move |(b, fb)| (a, fa, b, fb)))
            .map(|(a, fa, b, fb)| num_traits::Signed::abs(&(fa - fb)) / space.d(*a, *b))
            .max()
            .unwrap_or_else(|| q(0));
        prop_assert!(lipschitz_constant(&space, ext.values()).0 >= on_domain);
    }

    #[test]
    fn inf_convolution_properties(seed in any::<u64>(), n in 1u64..12) {
        let w = concave_pwl(seed);
        let wn = inf_convolve(&w, n).unwrap();
        let wn1 = inf_convolve(&w, n + 1).unwrap();
        let grid = sample_grid();
        let nn = q(n as i64);
        let mut prev = q(0);
        for t in &grid {
            let v = wn.eval(t).unwrap();
            // ω_n ≤ ω and ω_n ≤ ω_{n+1}
            prop_assert!(v <= w.eval(t).unwrap());
            prop_assert!(v <= wn1.eval(t).unwrap());
            // (i) nondecreasing
            prop_assert!(v >= prev);
            prev = v.clone();
            // brute force over splits at the grid and at ω's breakpoints
            let mut best = w.eval(t).unwrap();
            for a in grid.iter().filter(|a| *a <= t) {
                let cand = w.eval(a).unwrap() + &nn * (t - a);
                if cand < best {
                    best = cand;
                }
            }
            prop_assert!(v <= best);
        }
        for t1 in &grid {
            for t2 in &grid {
                let d = num_traits::Signed::abs(&(wn.eval(t1).unwrap() - wn.eval(t2).unwrap()));
                let gap = num_traits::Signed::abs(&(t1 - t2));
                // n-Lipschitz
                prop_assert!(d <= &nn * &gap);
                // (iii) |ω_n(t1) − ω_n(t2)| ≤ C1 ω(|t1 − t2|)
                prop_assert!(d <= &w.c1 * w.eval(&gap).unwrap());
            }
        }
        // C1-subadditivity survives the convolution
        prop_assert!(wn.check_subadditive(&grid[..25]).unwrap());
    }

    #[test]
    fn inf_convolution_converges(seed in any::<u64>()) {
        // (ii): once n exceeds the largest slope, ω_n = ω
        let w = concave_pwl(seed);
        let wn = inf_convolve(&w, 16).unwrap();
        for t in sample_grid() {
            prop_assert_eq!(wn.eval(&t).unwrap(), w.eval(&t).unwrap());
        }
    }

    #[test]
    fn separation_family_constant(seed in any::<u64>(), n in 2usize..10, steps in 1u64..20) {
        // M = (N, ω∘d_N) satisfies the moduli hypothesis with C2 = 1
        let w = concave_pwl(seed);
        let cod = Arc::new(random_space::<Rational>(seed, n, Generator::ShortestPath).unwrap());
        let m: Vec<Vec<Rational>> =
            (0..n).map(|i| (0..n).map(|j| w.eval(&cod.d(i, j)).unwrap()).collect()).collect();
        let dom = Arc::new(validate_space("omega-d", cod.labels().to_vec(), cod.base_label(), m).unwrap());
        let f = PointMap::new(&dom, &cod, (0..n).collect()).unwrap();
        for y in 0..n {
            let g = separation_family(&f, &w, &q(1), steps, y).unwrap();
            let pulled = lipfree_core::operators::compose_cf(&f, &g).unwrap();
            prop_assert!(pulled.lip_constant() <= q(1));
        }
    }

    #[test]
    fn weighting_bound_holds(seed in any::<u64>(), n in 2usize..12, r in 1i64..8) {
        let space = Arc::new(random_space::<Rational>(seed, n, Generator::ShortestPath).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<(usize, Rational)> =
            (0..n).map(|i| (i, if i == space.base() { q(0) } else { ratio(rng.gen_range(-6..=6), 2) })).collect();
        let mut l = q(1);
        for (a, fa) in &values {
            for (b, fb) in &values {
                if a != b {
                    let s = num_traits::Signed::abs(&(fa - fb)) / space.d(*a, *b);
                    if s > l { l = s; }
                }
            }
        }
        let g = mcshane_extend(&space, &values, &l).unwrap();
        let omega = plateau(&space, (seed % n as u64) as usize, &ratio(r, 4)).unwrap();
        let product = weighting_operator(&omega, &g).unwrap();
        prop_assert!(product.lip_constant() <= weighting_bound(&omega, &g));
    }
}

#[test]
fn psi_on_svc_endpoints() {
    for k in 1..=6 {
        let stage = svc_stage(k).unwrap();
        let family = svc_complement_family(k).unwrap();
        let pts: Vec<Rational> = stage.endpoints.iter().map(|e| e.1.clone()).collect();
        let labels: Vec<String> = stage.endpoints.iter().map(|e| e.0.clone()).collect();
        let line = Arc::new(FiniteMetricSpace::from_line("svc", labels, pts.clone(), "0").unwrap());
        for n in 0..=family.len() {
            let values: Vec<Rational> = pts.iter().map(|x| family.psi(n, x)).collect();
            let psi = LipFunction::new(&line, values).unwrap();
            assert!(psi.lip_constant() <= q(1));
            let tail = family.tail(n);
            for x in &pts {
                assert!(family.in_complement(x));
                let err = num_traits::Signed::abs(&(family.psi(n, x) - family.psi_limit(x)));
                assert!(err <= tail);
            }
        }
    }
}
