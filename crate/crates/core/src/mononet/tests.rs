use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn identity_relu_net() -> MonotonicQuantileNet {
    let cfg = NetConfig::new(Architecture::ReluSplit, 2);
    let hidden = Linear::new(
        Parameter::zeros(2, 1, Constraint::ExpPositive),
        Some(Parameter::zeros(2, 1, Constraint::Unconstrained)),
    )
    .unwrap();
    let output = Linear::new(
        Parameter::zeros(1, 2, Constraint::ExpPositive),
        Some(Parameter::zeros(1, 1, Constraint::Unconstrained)),
    )
    .unwrap();
    MonotonicQuantileNet::from_parts(cfg, hidden, Some(output), None).unwrap()
}

fn q(tau: f64) -> QuantileInput {
    QuantileInput::new(tau).unwrap()
}

#[test]
fn quantile_input_scaling() {
    assert_eq!(q(0.7).scaled(), 2.0 * 0.7 - 1.0);
    assert_eq!(q(0.0).scaled(), -1.0);
    assert!(QuantileInput::new(1.01).is_err());
    assert!(QuantileInput::new(-0.01).is_err());
    assert!(QuantileInput::new(f64::NAN).is_err());
}

#[test]
fn zero_weight_relu_split_is_identity_on_scaled_input() {
    let net = identity_relu_net();
    assert!((net.forward(q(0.7), None).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(net.forward(q(0.5), None).unwrap(), 0.0);
}

#[test]
fn relu_split_uses_half_relu() {
    let net = MonotonicQuantileNet::init(NetConfig::new(Architecture::ReluSplit, 64), 0).unwrap();
    let relu = (0..64).filter(|&j| net.activation_of(j) == Activation::Relu).count();
    assert_eq!(relu, 32);
}

#[test]
fn invalid_widths_are_rejected() {
    for cfg in [
        NetConfig::new(Architecture::ReluSplit, 3),
        NetConfig::new(Architecture::ReluSplit, 0),
        NetConfig::new(Architecture::MaxMin, 10).with_groups(3),
        NetConfig::new(Architecture::TanhPositive, 0),
    ] {
        assert!(matches!(
            MonotonicQuantileNet::init(cfg, 0),
            Err(Error::InvalidWidth { .. })
        ));
    }
}

#[test]
fn init_is_deterministic_and_bounded() {
    let cfg = NetConfig::benchmark(Architecture::ReluSplit);
    let a = MonotonicQuantileNet::init(cfg.clone(), 42).unwrap();
    let b = MonotonicQuantileNet::init(cfg.clone(), 42).unwrap();
    assert_eq!(a.flat_values(), b.flat_values());
    let c = MonotonicQuantileNet::init(cfg, 43).unwrap();
    assert_ne!(a.flat_values(), c.flat_values());

    let bound = 3.0f64.sqrt();
    for w in a.hidden_layer().effective_weight() {
        assert!(w > 0.0 && w <= bound);
    }
    let out_bound = (3.0f64 / 64.0).sqrt();
    for w in a.output_layer().unwrap().effective_weight() {
        assert!(w > 0.0 && w <= out_bound + 1e-15);
    }
    assert!(a.hidden_layer().bias.as_ref().unwrap().value().iter().all(|&b| b == 0.0));
}

#[test]
fn init_mean_matches_uniform() {
    // 10,000 first-layer weights with F_in = 1: U(0, sqrt 3] has mean sqrt(3)/2
    // and std sqrt(3)/sqrt(12) = 0.5.
    let cfg = NetConfig::new(Architecture::TanhPositive, 10_000);
    let net = MonotonicQuantileNet::init(cfg, 5).unwrap();
    let w = net.hidden_layer().effective_weight();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let se = 0.5 / (w.len() as f64).sqrt();
    assert!((mean - 3.0f64.sqrt() / 2.0).abs() < 3.0 * se, "mean {mean}");
}

#[test]
fn maxmin_single_unit_is_identity() {
    let cfg = NetConfig::new(Architecture::MaxMin, 1).with_groups(1);
    let hidden = Linear::new(
        Parameter::zeros(1, 1, Constraint::ExpPositive),
        Some(Parameter::zeros(1, 1, Constraint::Unconstrained)),
    )
    .unwrap();
    let net = MonotonicQuantileNet::from_parts(cfg, hidden, None, None).unwrap();
    for t in [0.0, 0.3, 0.5, 1.0] {
        assert_eq!(net.maxmin_forward(q(t)).unwrap(), 2.0 * t - 1.0);
    }
}

#[test]
fn maxmin_min_across_constant_groups() {
    // Two groups of one unit each; tiny slope so outputs are the biases.
    let cfg = NetConfig::new(Architecture::MaxMin, 2).with_groups(2);
    let hidden = Linear::new(
        Parameter::from_values(2, 1, vec![-800.0, -800.0], Constraint::ExpPositive).unwrap(),
        Some(Parameter::from_values(2, 1, vec![1.0, 3.0], Constraint::Unconstrained).unwrap()),
    )
    .unwrap();
    let net = MonotonicQuantileNet::from_parts(cfg, hidden, None, None).unwrap();
    assert_eq!(net.maxmin_forward(q(0.9)).unwrap(), 1.0);
}

#[test]
fn maxmin_forward_rejects_other_architectures() {
    assert!(identity_relu_net().maxmin_forward(q(0.5)).is_err());
}

#[test]
fn feature_presence_must_match() {
    let plain = identity_relu_net();
    assert!(plain.forward(q(0.5), Some(&[1.0])).is_err());
    let cfg = NetConfig::new(Architecture::ReluSplit, 4).with_features(3);
    let net = MonotonicQuantileNet::init(cfg, 1).unwrap();
    assert!(net.forward(q(0.5), None).is_err());
    assert!(net.forward(q(0.5), Some(&[1.0, 2.0])).is_err());
    assert!(net.forward(q(0.5), Some(&[1.0, 2.0, 3.0])).is_ok());
}

#[test]
fn relu_split_represents_three_kink_target_by_construction() {
    // Target on x ∈ [-1, 1]: slope 1, +2 after x = 0.5 (convex kink), slope
    // 0.5 after -0.5 from slope 1 (concave kink at x = -0.5 reads from the
    // right), and an extra convex kink at 0.0.
    //   f(x) = x + 2·relu(x - 0.5) + 1·relu(x) + 0.5·min(0, x + 0.5)
    // Built directly: units (relu, slope 1, bias -0.5, out 2),
    // (relu, slope 1, bias 0, out 1), (inv, slope 1, bias 0.5, out 0.5),
    // plus a linear term x = relu(x) + min(0, x) with a shared unit pair.
    let relu_units: [(f64, f64, f64); 3] = [(1.0, -0.5, 2.0), (1.0, 0.0, 1.0), (1.0, 0.0, 1.0)];
    let inv_units: [(f64, f64, f64); 3] = [(1.0, 0.5, 0.5), (1.0, 0.0, 1.0), (1.0, 0.0, 1e-300)];
    let all: Vec<_> = relu_units.iter().chain(inv_units.iter()).collect();
    let cfg = NetConfig::new(Architecture::ReluSplit, 6);
    let hidden = Linear::new(
        Parameter::from_values(6, 1, all.iter().map(|u| u.0.ln()).collect(), Constraint::ExpPositive)
            .unwrap(),
        Some(
            Parameter::from_values(6, 1, all.iter().map(|u| u.1).collect(), Constraint::Unconstrained)
                .unwrap(),
        ),
    )
    .unwrap();
    let output = Linear::new(
        Parameter::from_values(1, 6, all.iter().map(|u| u.2.ln()).collect(), Constraint::ExpPositive)
            .unwrap(),
        Some(Parameter::zeros(1, 1, Constraint::Unconstrained)),
    )
    .unwrap();
    let net = MonotonicQuantileNet::from_parts(cfg, hidden, Some(output), None).unwrap();
    let target = |x: f64| {
        // relu(x) + min(0,x) = x, so the second relu/inv pair together with
        // the second relu unit gives x + relu(x).
        x + 2.0 * (x - 0.5).max(0.0) + x.max(0.0) + 0.5 * (x + 0.5).min(0.0)
    };
    for i in 0..=200 {
        let tau = i as f64 / 200.0;
        let x = 2.0 * tau - 1.0;
        let got = net.forward(q(tau), None).unwrap();
        assert!((got - target(x)).abs() < 1e-12, "x={x}: {got} vs {}", target(x));
    }
}

#[test]
fn checkpoint_round_trip() {
    let cfg = NetConfig::benchmark(Architecture::MaxMin).with_features(3);
    let net = MonotonicQuantileNet::init(cfg, 9).unwrap();
    let mut buf = Vec::new();
    net.save(&mut buf).unwrap();
    let header_end = buf.iter().position(|&b| b == b'\n').unwrap();
    let header: serde_json::Value = serde_json::from_slice(&buf[..header_end]).unwrap();
    assert_eq!(header["architecture"], "max_min");
    assert_eq!(header["hidden_width"], 96);
    assert_eq!(header["seed"], 9);
    assert_eq!(buf.len() - header_end - 1, 8 * net.parameter_count());
    let back = MonotonicQuantileNet::load(&buf[..]).unwrap();
    assert_eq!(back, net);
    assert!(MonotonicQuantileNet::load(&buf[..buf.len() - 3]).is_err());
}

#[test]
fn action_sample_identity_and_reproducible() {
    let nets = [identity_relu_net()];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, t) = action_sample(&nets, None, &mut rng).unwrap();
    assert!((a[0] - (2.0 * t[0] - 1.0)).abs() < 1e-15);
    let mut rng2 = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(action_sample(&nets, None, &mut rng2).unwrap(), (a, t));
    assert!(action_sample(&[], None, &mut rng2).is_err());
}

#[test]
fn action_sample_is_uniform_for_identity_net() {
    let nets = [identity_relu_net()];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut xs: Vec<f64> = (0..10_000)
        .map(|_| action_sample(&nets, None, &mut rng).unwrap().0[0])
        .collect();
    xs.sort_by(f64::total_cmp);
    // Kolmogorov–Smirnov against U([-1, 1]).
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = ((x + 1.0) / 2.0).clamp(0.0, 1.0);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS statistic {ks}");
}

fn random_net(arch: Architecture, features: Option<usize>, rng: &mut ChaCha8Rng) -> MonotonicQuantileNet {
    let mut cfg = match arch {
        Architecture::MaxMin => NetConfig::new(arch, 12).with_groups(3),
        _ => NetConfig::new(arch, 8),
    };
    cfg.feature_dim = features;
    let mut net = MonotonicQuantileNet::init_with_rng(cfg, rng).unwrap();
    let vals: Vec<f64> = (0..net.parameter_count())
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    net.load_flat(&vals).unwrap();
    net
}

fn assert_sorted(net: &MonotonicQuantileNet, features: Option<&[f64]>) {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let out = net.forward_many(&grid, features).unwrap();
    for w in out.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
    }
}

#[test]
fn monotone_under_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for arch in Architecture::ALL {
        for _ in 0..1000 {
            let net = random_net(arch, None, &mut rng);
            assert_sorted(&net, None);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_with_random_features(seed in any::<u64>(), f0 in -5.0..5.0f64, f1 in -5.0..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for arch in Architecture::ALL {
            let net = random_net(arch, Some(2), &mut rng);
            assert_sorted(&net, Some(&[f0, f1]));
        }
    }
}
