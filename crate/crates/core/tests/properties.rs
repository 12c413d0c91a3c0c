use clusterfair::fairness::{
    barycenter_spread, group_weights, mellowmax, pairwise_spread, penalty, PenaltyBatch, PenaltyConfig, RffMap,
};
use clusterfair::metrics::mmd2_biased;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn embeddings(max_groups: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_groups, 1usize..12).prop_flat_map(|(g, w)| prop::collection::vec(prop::collection::vec(-3.0..3.0f64, w), g))
}

proptest! {
    #[test]
    fn pairwise_spread_is_twice_group_count_times_barycenter_spread(mus in embeddings(8)) {
        let mus: Vec<Array1<f64>> = mus.into_iter().map(Array1::from).collect();
        let lhs = pairwise_spread(&mus);
        let rhs = 2.0 * mus.len() as f64 * barycenter_spread(&mus);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-300));
    }

    #[test]
    fn mellowmax_is_sandwiched(v in prop::collection::vec(-50.0..50.0f64, 1..20), omega in prop::sample::select(vec![2.0, 10.0, 100.0])) {
        let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mm = mellowmax(&v, omega).unwrap();
        prop_assert!(mm <= mx + 1e-12);
        prop_assert!(mm >= mx - (v.len() as f64).ln() / omega - 1e-12);
    }

    #[test]
    fn mmd_is_nonnegative_and_symmetric(
        x in prop::collection::vec(-5.0..5.0f64, 1..30),
        y in prop::collection::vec(-5.0..5.0f64, 1..30),
        gamma in 0.05..10.0f64,
    ) {
        let a = mmd2_biased(&x, &y, gamma).unwrap();
        let b = mmd2_biased(&y, &x, gamma).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn normalized_weights_average_one_inside_the_group(
        rows in prop::collection::vec((0usize..3, 0.001..1.0f64), 1..60),
        q in prop::sample::select(vec![0.5, 0.9, 1.0]),
    ) {
        let classes: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let probs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        prop_assume!(classes.contains(&1));
        let w = group_weights(&classes, 1, &probs, q).unwrap();
        let inside: Vec<f64> = w.weights.iter().zip(&classes).filter(|(_, &c)| c == 1).map(|(w, _)| *w).collect();
        let mean = inside.iter().sum::<f64>() / inside.len() as f64;
        prop_assert!((mean - 1.0).abs() < 1e-9);
        prop_assert!(w.weights.iter().zip(&classes).all(|(w, &c)| c == 1 || *w == 0.0));
        prop_assert!(inside.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn penalty_is_nonnegative(seed in any::<u64>(), n_a in 2usize..4, n_x in 1usize..3, m in 1usize..4) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 48;
        let preds = Array2::from_shape_simple_fn((n, 1), || rng.gen_range(-2.0..2.0));
        let classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_a * n_x)).collect();
        let props = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.05..0.95)).collect()).collect();
        let map = RffMap::new(1, 16, &[0.5, 1.0, 4.0], 1.0, &mut rng).unwrap();
        let batch = PenaltyBatch { classes: &classes, n_a, n_x, own_propensity: props };
        let v = penalty(preds.view(), &batch, &map, &PenaltyConfig::default()).unwrap();
        prop_assert!(v.value >= 0.0);
        prop_assert!(v.per_candidate.iter().all(|&p| p >= 0.0));
        let constant = Array2::from_elem((n, 1), 0.25);
        let z = penalty(constant.view(), &batch, &map, &PenaltyConfig::default()).unwrap();
        prop_assert!(z.per_candidate.iter().all(|&p| p.abs() < 1e-20));
    }
}

#[test]
fn self_inner_product_is_near_one_per_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 256;
    let map = RffMap::new(1, d, &[0.5, 2.0, 8.0], 1.3, &mut rng).unwrap();
    for y in [-2.0, 0.0, 0.7, 5.0] {
        let phi = map.features(&[y]).unwrap();
        for block in phi.chunks(d) {
            let ip: f64 = block.iter().map(|v| v * v).sum();
            assert!((ip - 1.0).abs() <= 3.0 / (d as f64).sqrt(), "{ip}");
        }
    }
}

#[test]
fn zero_frequencies_give_constant_features() {
    let phases = Array1::from(vec![0.0, 1.0, 2.5, 4.0]);
    let map = RffMap::from_parts(1, 4, vec![1.0], Array2::zeros((4, 1)), phases.clone(), 0.7).unwrap();
    let scale = (2.0f64 / 4.0).sqrt();
    for y in [-3.0, 0.0, 9.0] {
        let phi = map.features(&[y]).unwrap();
        for (p, b) in phi.iter().zip(&phases) {
            assert!((p - scale * b.cos()).abs() < 1e-15);
        }
    }
}
