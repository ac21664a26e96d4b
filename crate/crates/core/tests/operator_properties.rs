use std::collections::BTreeSet;
use std::sync::Arc;

use lipfree_core::free::{eval, norm_dual_lp, Molecule};
use lipfree_core::lip::LipFunction;
use lipfree_core::metric::{random_space, FiniteMetricSpace, Generator};
use lipfree_core::operators::{
    apply, bilip_constants, check_nonreturning, check_support_preservation, compose_cf,
    composition_support_laws, dense_product, embedding_modulus, embedding_modulus_exact,
    kernel_basis, linearize, ModulusMethod, PointMap,
};
use lipfree_core::scalar::{ratio, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Space = Arc<FiniteMetricSpace<Rational>>;

fn space(seed: u64, n: usize) -> Space {
    Arc::new(random_space(seed, n, Generator::ShortestPath).unwrap())
}

fn random_map(rng: &mut ChaCha8Rng, dom: &Space, cod: &Space) -> PointMap<Rational> {
    let assignment = (0..dom.len())
        .map(|x| {
            if x == dom.base() {
                cod.base()
            } else {
                rng.gen_range(0..cod.len())
            }
        })
        .collect();
    PointMap::new(dom, cod, assignment).unwrap()
}

fn injective_map(rng: &mut ChaCha8Rng, dom: &Space, cod: &Space) -> PointMap<Rational> {
    let mut free: Vec<usize> = cod.non_base().collect();
    let assignment = (0..dom.len())
        .map(|x| {
            if x == dom.base() {
                cod.base()
            } else {
                free.swap_remove(rng.gen_range(0..free.len()))
            }
        })
        .collect();
    PointMap::new(dom, cod, assignment).unwrap()
}

fn random_molecule(rng: &mut ChaCha8Rng, space: &Space) -> Molecule<Rational> {
    let k = rng.gen_range(1..=space.len());
    Molecule::from_indices(
        space,
        (0..k).map(|_| {
            (
                rng.gen_range(0..space.len()),
                ratio(rng.gen_range(-9..=9), rng.gen_range(1..=3)),
            )
        }),
    )
}

fn random_function(rng: &mut ChaCha8Rng, space: &Space) -> LipFunction<Rational> {
    let values = (0..space.len())
        .map(|i| {
            if i == space.base() {
                ratio(0, 1)
            } else {
                ratio(rng.gen_range(-9..=9), 2)
            }
        })
        .collect();
    LipFunction::new(space, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn rank_counts_non_base_images(seed in any::<u64>(), n in 2usize..12, m in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 1, m));
        let f = random_map(&mut rng, &dom, &cod);
        let report = kernel_basis(&linearize(&f));
        let hit: BTreeSet<usize> = f.assignment().iter().copied().filter(|&t| t != cod.base()).collect();
        prop_assert_eq!(report.rank, hit.len());
        prop_assert_eq!(report.dimension, n - 1);
        prop_assert_eq!(report.kernel.len(), n - 1 - hit.len());
        for v in &report.kernel {
            prop_assert!(!v.is_zero());
            prop_assert!(apply(&f, v).unwrap().is_zero());
        }
        prop_assert_eq!(report.is_injective, f.is_injective());
    }

    #[test]
    fn matrix_action_matches_pushforward(seed in any::<u64>(), n in 2usize..10, m in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 2, m));
        let f = random_map(&mut rng, &dom, &cod);
        let mu = random_molecule(&mut rng, &dom);
        prop_assert_eq!(linearize(&f).apply(&mu).unwrap(), apply(&f, &mu).unwrap());
    }

    #[test]
    fn support_inclusion(seed in any::<u64>(), n in 2usize..12, m in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 3, m));
        let f = random_map(&mut rng, &dom, &cod);
        let mu = random_molecule(&mut rng, &dom);
        let r = check_support_preservation(&f, &mu).unwrap();
        prop_assert!(r.inclusion_holds);
        prop_assert!(r.lhs.is_subset(&r.rhs));
        // distinct support points with distinct non-base images cannot cancel
        let images: Vec<usize> = mu.support().iter().map(|&x| f.image(x)).collect();
        let distinct = images.iter().collect::<BTreeSet<_>>().len() == images.len();
        if distinct && !images.contains(&cod.base()) {
            prop_assert!(r.equality_holds);
        }
    }

    #[test]
    fn injective_maps_preserve_supports(seed in any::<u64>(), n in 2usize..8, extra in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 4, n + extra));
        let f = injective_map(&mut rng, &dom, &cod);
        let mu = random_molecule(&mut rng, &dom);
        prop_assert!(check_support_preservation(&f, &mu).unwrap().equality_holds);
    }

    #[test]
    fn functoriality(seed in any::<u64>(), a in 2usize..8, b in 2usize..8, c in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (space(seed, a), space(seed ^ 5, b), space(seed ^ 6, c));
        let f = random_map(&mut rng, &x, &y);
        let g = random_map(&mut rng, &y, &z);
        let gf = f.then(&g).unwrap();
        let composed = linearize(&gf).dense();
        let product = dense_product(&linearize(&g).dense(), &linearize(&f).dense());
        prop_assert_eq!(composed, product);
        let mu = random_molecule(&mut rng, &x);
        prop_assert_eq!(apply(&gf, &mu).unwrap(), apply(&g, &apply(&f, &mu).unwrap()).unwrap());
        let id = linearize(&PointMap::identity(&x)).dense();
        prop_assert_eq!(dense_product(&linearize(&f).dense(), &id), linearize(&f).dense());
    }

    #[test]
    fn operator_norm_is_lipschitz_constant(seed in any::<u64>(), n in 2usize..8, m in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 7, m));
        let f = random_map(&mut rng, &dom, &cod);
        let (lip, _) = f.lip_constant();
        let mut best = ratio(0, 1);
        for i in 0..n {
            for j in i + 1..n {
                let mol = Molecule::elementary_at(&dom, i, j).unwrap();
                let v = norm_dual_lp(&apply(&f, &mol).unwrap()).unwrap().value;
                if v > best {
                    best = v;
                }
            }
        }
        prop_assert_eq!(&best, &lip);
        for _ in 0..4 {
            let mu = random_molecule(&mut rng, &dom);
            let lhs = norm_dual_lp(&apply(&f, &mu).unwrap()).unwrap().value;
            prop_assert!(lhs <= &lip * norm_dual_lp(&mu).unwrap().value);
        }
    }

    #[test]
    fn adjoint_identity(seed in any::<u64>(), n in 2usize..12, m in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 8, m));
        let f = random_map(&mut rng, &dom, &cod);
        let g = random_function(&mut rng, &cod);
        let mu = random_molecule(&mut rng, &dom);
        let lhs = eval(&compose_cf(&f, &g).unwrap(), &mu).unwrap();
        let rhs = eval(&g, &apply(&f, &mu).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn modulus_bracketed_by_bilipschitz(seed in any::<u64>(), n in 2usize..7, extra in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 9, n + extra));
        let f = injective_map(&mut rng, &dom, &cod);
        let bl = bilip_constants(&f);
        let a = bl.lower.unwrap();
        let modulus = embedding_modulus_exact(&f).unwrap();
        prop_assert!(modulus > ratio(0, 1));
        prop_assert!(modulus <= a);
        prop_assert!(modulus <= bl.upper);
        for _ in 0..4 {
            let mu = random_molecule(&mut rng, &dom);
            let lhs = norm_dual_lp(&apply(&f, &mu).unwrap()).unwrap().value;
            prop_assert!(lhs >= &modulus * norm_dual_lp(&mu).unwrap().value);
        }
        let bracket = embedding_modulus(&f, &[]).unwrap();
        prop_assert_eq!(bracket.method, ModulusMethod::ExactVertex);
        prop_assert_eq!(bracket.upper, modulus);
    }

    #[test]
    fn nonreturning_matches_definition(seed in any::<u64>(), n in 2usize..10, m in 2usize..10, r in 1i64..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dom, cod) = (space(seed, n), space(seed ^ 10, m));
        let f = random_map(&mut rng, &dom, &cod);
        let x = rng.gen_range(0..n);
        let r = ratio(r, 4);
        let verdict = check_nonreturning(&f, x, &r).unwrap();
        let ball_image: BTreeSet<usize> = (0..n).filter(|&z| dom.d(x, z) <= r).map(|z| f.image(z)).collect();
        let mut radii: Vec<Rational> = (0..m).map(|y| cod.d(f.image(x), y)).collect();
        radii.extend((1..12).map(|k| ratio(k, 3)));
        for rho in radii {
            if rho <= ratio(0, 1) {
                continue;
            }
            let included = (0..n)
                .map(|z| f.image(z))
                .filter(|&y| cod.d(f.image(x), y) <= rho)
                .all(|y| ball_image.contains(&y));
            prop_assert_eq!(verdict.holds_for(&rho), included, "rho = {}", rho);
        }
    }

    #[test]
    fn composition_laws_hold(seed in any::<u64>(), a in 2usize..7, b in 2usize..7, c in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (space(seed, a), space(seed ^ 11, b));
        let f = random_map(&mut rng, &x, &y);
        let z = space(seed ^ 12, c.max(b));
        let g = if rng.gen_bool(0.5) { injective_map(&mut rng, &y, &z) } else { random_map(&mut rng, &y, &z) };
        let samples: Vec<_> = (0..12).map(|_| random_molecule(&mut rng, &x)).collect();
        let report = composition_support_laws(&f, &g, &samples).unwrap();
        prop_assert!(report.law_a.holds());
        prop_assert!(report.law_b.holds());
        prop_assert!(report.law_c.holds());
        prop_assert_eq!(report.samples.len(), samples.len());
        prop_assert_eq!(report.g_injective, g.is_injective());
    }
}

#[test]
fn onto_linearization_fixture() {
    // f collapses x2 onto f(x1) but still hits every codomain point
    let q = |n| ratio(n, 1);
    let dom = Arc::new(
        FiniteMetricSpace::from_line(
            "m",
            ["0", "x1", "x2", "x3"].map(String::from).to_vec(),
            vec![q(0), q(1), q(2), q(3)],
            "0",
        )
        .unwrap(),
    );
    let cod = Arc::new(
        FiniteMetricSpace::from_line(
            "n",
            ["0", "a", "b"].map(String::from).to_vec(),
            vec![q(0), q(1), q(3)],
            "0",
        )
        .unwrap(),
    );
    let f = PointMap::from_labels(
        &dom,
        &cod,
        &[("0", "0"), ("x1", "a"), ("x2", "a"), ("x3", "b")]
            .map(|(a, b)| (a.to_string(), b.to_string())),
    )
    .unwrap();
    let report = kernel_basis(&linearize(&f));
    assert_eq!(report.rank, 2);
    assert_eq!(report.kernel.len(), 1);
    let g = PointMap::identity(&cod);
    let mu = Molecule::from_indices(&dom, [(1, q(1)), (2, q(-1))]);
    let laws = composition_support_laws(&f, &g, &[mu]).unwrap();
    assert!(laws.f_hat_onto);
    assert!(laws.g_injective);
    assert!(!laws.samples[0].f_preserves);
}
