use proptest::prelude::*;

use smotelab::classify::{fit_forest, ForestConfig};
use smotelab::samplers::KRule;
use smotelab::specfun::binom_cdf;
use smotelab::{Matrix, Seed};

fn labelled(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
    use rand::Rng;
    let mut rng = Seed(seed).stream();
    let v: Vec<f64> = (0..n * 2).map(|_| (rng.random::<f64>() * 8.0).round() / 8.0).collect();
    let x = Matrix::from_vec(n, 2, v).unwrap();
    let y = x.iter_rows().map(|r| u8::from(r[0] + rng.random::<f64>() * 0.5 > 0.7)).collect();
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capped_forest_is_truncated_forest(seed in 0u64..1000, cap in 1usize..6) {
        let (x, y) = labelled(80, seed);
        let full = fit_forest(&x, &y, None, &ForestConfig { n_trees: 5, ..ForestConfig::default() }, Seed(seed)).unwrap();
        let capped_cfg = ForestConfig { n_trees: 5, max_depth: Some(cap), ..ForestConfig::default() };
        let capped = fit_forest(&x, &y, None, &capped_cfg, Seed(seed)).unwrap();
        prop_assert_eq!(capped.predict_proba(&x).unwrap(), full.predict_proba_at(&x, Some(cap)).unwrap());
        prop_assert!(capped.depths().iter().all(|&d| d <= cap));
    }

    #[test]
    fn binomial_cdf_is_a_cdf(n in 1u64..200, p in 0.01f64..0.99) {
        let mut prev = 0.0;
        for k in 0..=n {
            let c = binom_cdf(k, n, p).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            prop_assert!(c >= prev - 1e-12);
            prev = c;
        }
        prop_assert!((prev - 1.0).abs() < 1e-10);
    }

    #[test]
    fn k_rules_stay_in_range(n in 2usize..5000, f in 0.0f64..1.5, k in 0usize..10_000) {
        for rule in [KRule::Fixed(k), KRule::Sqrt, KRule::Fraction(f)] {
            let r = rule.resolve(n).unwrap();
            prop_assert!(r >= 1 && r < n);
        }
    }
}
