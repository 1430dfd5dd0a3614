use proptest::prelude::*;
use shapereg::basis::{enumerate_multi_indices, num_terms, BasisSpec};

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn num_terms_agrees_with_sum_of_degree_shells() {
    for d in 1..=5usize {
        for m in 0..=8u32 {
            let shells: u64 = (0..=m as u64).map(|k| binomial(k + d as u64 - 1, d as u64 - 1)).sum();
            assert_eq!(num_terms(d, m).unwrap() as u64, shells, "d={d} m={m}");
        }
    }
}

#[test]
fn enumeration_is_deterministic_and_graded() {
    let a = enumerate_multi_indices(3, 4).unwrap();
    let b = enumerate_multi_indices(3, 4).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].degree() <= w[1].degree()));
}

proptest! {
    #[test]
    fn partials_match_central_differences(
        d in 1usize..=3,
        m in 1u32..=6,
        seed in any::<u64>(),
        dir_pick in 0usize..3,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let basis = BasisSpec::new(d, m).unwrap();
        let w: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..0.95)).collect();
        let j = dir_pick % d;
        let f = |p: &[f64]| -> f64 {
            basis.eval(p).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        let h = 1e-5;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let fd = (f(&xp) - f(&xm)) / (2.0 * h);
        let exact: f64 = basis
            .eval_partial(&x, j, 1)
            .unwrap()
            .iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .sum();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
    }
}
