use rand::Rng;

use smotelab::classify::{fit_forest, roc_auc, ForestConfig};
use smotelab::density::{density_agreement, regeneration_distance, BinSpec, DensitySpec, UniformBox};
use smotelab::geometry::{convex_hull, in_convex_polygon};
use smotelab::protocols::{default_simulation_law, simulated_protocol};
use smotelab::samplers::{smote_matrix, KRule, Provenance};
use smotelab::{rebalance, Dataset, Matrix, Seed, StrategyConfig, StrategyKind};

fn gaussian_classes(n: usize, minority: usize, shift: f64, seed: u64) -> Dataset {
    let mut rng = Seed(seed).stream();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = u8::from(i < minority);
        let s = if label == 1 { shift } else { 0.0 };
        rows.push((0..3).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) + s).collect::<Vec<_>>());
        y.push(label);
    }
    Dataset::new(Matrix::from_rows(&rows).unwrap(), y).unwrap()
}

#[test]
fn conditional_sampler_matches_quadrature_in_the_plane() {
    let spec = UniformBox::cube(2, 0.0, 1.0).unwrap();
    let grid = BinSpec::uniform(2, 0.0, 1.0, 10);
    let a = density_agreement(&spec, &[0.3, 0.6], 5, 40, &grid, 200_000, false, Seed(11)).unwrap();
    assert!(a.compared >= 90);
    assert!(a.fraction_within >= 0.95, "only {} of {} cells within 3 SE", a.within, a.compared);
}

#[test]
fn smote_points_stay_on_neighbour_segments() {
    let x = UniformBox::cube(2, -1.0, 1.0).unwrap().sample(60, &mut Seed(21).stream());
    let batch = smote_matrix(&x, 5, 2000, Seed(22)).unwrap();
    let pts: Vec<[f64; 2]> = x.iter_rows().map(|r| [r[0], r[1]]).collect();
    let hull = convex_hull(&pts);
    for (z, p) in batch.points.iter_rows().zip(&batch.provenance) {
        let Provenance::Interpolation { central, neighbor, weight } = *p else {
            panic!("unexpected provenance {p:?}");
        };
        assert!((0.0..=1.0).contains(&weight));
        for j in 0..2 {
            let expect = x.get(central, j) + weight * (x.get(neighbor, j) - x.get(central, j));
            assert!((z[j] - expect).abs() <= 1e-12);
        }
        assert!(in_convex_polygon(&hull, [z[0], z[1]], 1e-12));
    }
}

#[test]
fn small_k_copies_more_than_large_k() {
    let law = default_simulation_law();
    let rules = [KRule::Fixed(5), KRule::Fraction(0.1)];
    let r = simulated_protocol(&[500], &rules, 500, 8, &law, Seed(31)).unwrap();
    let small = r.get(500, KRule::Fixed(5)).unwrap().ratio.unwrap();
    let large = r.get(500, KRule::Fraction(0.1)).unwrap().ratio.unwrap();
    // generated points hug the base sample far more than a fresh sample does
    assert!(small < 0.6, "K=5 ratio {small}");
    assert!(small < large, "K=5 ratio {small} vs K=0.1n ratio {large}");
}

#[test]
fn fixed_k_output_approaches_the_base_law() {
    let spec = UniformBox::cube(2, -3.0, 3.0).unwrap();
    let curve = regeneration_distance(&[50, 800], KRule::Fixed(5), &spec, 12, Seed(41)).unwrap();
    assert!(curve[1].mean < curve[0].mean, "{} then {}", curve[0].mean, curve[1].mean);
}

#[test]
fn undersampling_grows_shallower_trees() {
    let ds = gaussian_classes(1500, 75, 1.0, 51);
    let forest = ForestConfig {
        n_trees: 30,
        ..ForestConfig::default()
    };
    let none = fit_forest(ds.features(), ds.labels(), None, &forest, Seed(52)).unwrap();
    let rb = rebalance(&ds, &StrategyConfig::new(StrategyKind::Rus, Seed(53))).unwrap();
    let rus = fit_forest(rb.dataset.features(), rb.dataset.labels(), None, &forest, Seed(52)).unwrap();
    assert!(rus.mean_depth() < none.mean_depth());
}

#[test]
fn every_strategy_produces_a_usable_training_set() {
    let ds = gaussian_classes(400, 40, 1.5, 61);
    let test = gaussian_classes(400, 40, 1.5, 62);
    let forest = ForestConfig {
        n_trees: 25,
        ..ForestConfig::default()
    };
    for kind in StrategyKind::ALL {
        let rb = rebalance(&ds, &StrategyConfig::new(kind, Seed(63))).unwrap();
        assert_eq!(rb.synthetic.len(), rb.dataset.len());
        let weights = rb.class_weights.map(|_| rb.sample_weights());
        let model = fit_forest(rb.dataset.features(), rb.dataset.labels(), weights.as_deref(), &forest, Seed(64)).unwrap();
        let auc = roc_auc(&model.predict_proba(test.features()).unwrap(), test.labels()).unwrap();
        assert!(auc > 0.75, "{}: AUC {auc}", kind.name());
    }
}
