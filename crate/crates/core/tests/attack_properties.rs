use ferropuf::attack::{
    evaluate, feature_map, loss_and_gradient, train_rprop, Dataset, FeatureKind, RpropConfig,
    XorModel,
};
use ferropuf::puf::{ground_truth_bit, ArbiterPuf, Challenge, CrpSet, Puf};
use ferropuf::rng::stream_from_seed;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_dataset(n: usize, len: usize, seed: u64) -> Dataset {
    let mut rng = stream_from_seed(seed);
    let samples = (0..len)
        .map(|_| {
            let c = Challenge::random(n, &mut rng);
            (feature_map(&c, FeatureKind::ArbiterParity), rng.random())
        })
        .collect();
    Dataset::from_parts(n + 1, samples).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut point = 0;
    for k in 1..=3 {
        for n in [1, 4, 8] {
            let data = random_dataset(n, 40, (k * 100 + n) as u64);
            let mut rng = stream_from_seed((k * 7 + n) as u64);
            for _ in 0..12 {
                point += 1;
                let model = XorModel::random(k, n + 1, &mut rng).unwrap();
                let (_, g) = loss_and_gradient(&model, &data).unwrap();
                for (i, &gi) in g.iter().enumerate() {
                    let mut plus = model.clone();
                    plus.weights_mut()[i] += h;
                    let mut minus = model.clone();
                    minus.weights_mut()[i] -= h;
                    let fd = (loss_and_gradient(&plus, &data).unwrap().0
                        - loss_and_gradient(&minus, &data).unwrap().0)
                        / (2.0 * h);
                    let rel = (gi - fd).abs() / gi.abs().max(fd.abs()).max(1e-4);
                    worst = worst.max(rel);
                }
            }
        }
    }
    assert!(point >= 100);
    assert!(worst <= 1e-5, "max relative error {worst:e}");
}

#[test]
fn generating_weights_classify_their_own_crps() {
    let mut rng = stream_from_seed(11);
    for n in [4, 16, 27, 64] {
        let puf = ArbiterPuf::new(n, 1, &mut rng).unwrap();
        let crps = CrpSet::generate(&puf, 2000, 3).unwrap();
        // arbiter bit is [w·Φ > 0]; the model predicts 1 for negative scores
        let arm: Vec<f64> = puf.arms()[0].iter().map(|w| -w).collect();
        let model = XorModel::new(vec![arm]).unwrap();
        assert_eq!(evaluate(&model, &Dataset::from_crps(&crps)).unwrap(), 1.0);
    }
}

#[test]
fn state_weights_reproduce_the_proposed_ground_truth() {
    for n in [1, 3, 5, 7, 9] {
        for s in Challenge::all(n) {
            let arm: Vec<f64> = s
                .bits()
                .iter()
                .map(|&b| if b { -1.0 } else { 1.0 })
                .chain([0.0])
                .collect();
            let model = XorModel::new(vec![arm]).unwrap();
            for c in Challenge::all(n) {
                let x = feature_map(&c, FeatureKind::ProposedDirect);
                assert_eq!(
                    model.predict(&x).unwrap(),
                    ground_truth_bit(s.bits(), &c).unwrap()
                );
            }
        }
    }
}

#[test]
fn known_arbiter_is_learned_from_500_crps() {
    let mut rng = stream_from_seed(8);
    let puf = ArbiterPuf::new(8, 1, &mut rng).unwrap();
    let train = CrpSet::generate(&puf, 500, 1).unwrap();
    let test = CrpSet::generate(&puf, 10_000, 2).unwrap();
    let (model, report) = train_rprop(
        &Dataset::from_crps(&train),
        1,
        &RpropConfig::default(),
        &mut rng,
    )
    .unwrap();
    assert!(report.train_accuracy > 0.97);
    assert!(evaluate(&model, &Dataset::from_crps(&test)).unwrap() > 0.95);
}

#[test]
fn tiny_training_sets_give_chance_accuracy() {
    let mut rng = stream_from_seed(9);
    let k = 3;
    let mut acc = 0.0;
    for t in 0..5 {
        let puf = ArbiterPuf::new(27, k, &mut rng).unwrap();
        let train = CrpSet::generate(&puf, 10 * k, 10 + t).unwrap();
        let test = CrpSet::generate(&puf, 10_000, 20 + t).unwrap();
        let (model, _) = train_rprop(
            &Dataset::from_crps(&train),
            k,
            &RpropConfig::default(),
            &mut rng,
        )
        .unwrap();
        acc += evaluate(&model, &Dataset::from_crps(&test)).unwrap() / 5.0;
    }
    assert!((acc - 0.5).abs() < 0.06, "mean accuracy {acc}");
}

#[test]
fn one_bit_puf_is_learned_from_its_whole_crp_space() {
    let mut rng = stream_from_seed(4);
    for _ in 0..20 {
        let puf = ArbiterPuf::new(1, 1, &mut rng).unwrap();
        let all: Vec<Challenge> = Challenge::all(1).collect();
        let samples = all
            .iter()
            .map(|c| {
                (
                    feature_map(c, FeatureKind::ArbiterParity),
                    puf.respond(c).unwrap(),
                )
            })
            .collect();
        let data = Dataset::from_parts(2, samples).unwrap();
        let (_, report) = train_rprop(&data, 1, &RpropConfig::default(), &mut rng).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
    }
}

#[test]
fn training_is_deterministic() {
    let data = random_dataset(6, 200, 1);
    let run = || train_rprop(&data, 2, &RpropConfig::default(), &mut stream_from_seed(5)).unwrap();
    let (m1, r1) = run();
    let (m2, r2) = run();
    assert_eq!(m1, m2);
    assert_eq!(r1, r2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_scaling_of_one_arm_keeps_predictions(
        seed in any::<u64>(), k in 1usize..4, arm in 0usize..3, scale in 1e-3f64..1e3,
    ) {
        let arm = arm % k;
        let n = 10;
        let mut rng = stream_from_seed(seed);
        let model = XorModel::random(k, n + 1, &mut rng).unwrap();
        let mut scaled = model.clone();
        scaled.arm_mut(arm).iter_mut().for_each(|w| *w *= scale);
        for _ in 0..50 {
            let x: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            prop_assert_eq!(model.predict(&x).unwrap(), scaled.predict(&x).unwrap());
        }
    }
}
