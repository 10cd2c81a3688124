use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use qrpolicy_core::diffcore::Parameterized;
use qrpolicy_core::quantfit::{fit_distribution, FitConfig};
use qrpolicy_core::rlcore::{qrdrl_loss, LossTuple, QuantilePolicy, RngTaus};
use qrpolicy_core::{Architecture, DistributionSpec, MonotonicQuantileNet, NetConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mononet(c: &mut Criterion) {
    let mut group = c.benchmark_group("mononet");
    for arch in Architecture::ALL {
        let mut net = MonotonicQuantileNet::init(NetConfig::benchmark(arch), 0).unwrap();
        let taus: Vec<f64> = (0..128).map(|i| (i as f64 + 0.5) / 64.0 - 1.0).collect();
        group.bench_function(format!("eval_128/{arch}"), |b| {
            let p = net.prepare();
            let mut s = net.scratch();
            b.iter(|| taus.iter().map(|&x| net.eval(&p, black_box(x), None, &mut s)).sum::<f64>())
        });
        group.bench_function(format!("eval_backprop_128/{arch}"), |b| {
            let mut s = net.scratch();
            b.iter(|| {
                net.zero_grads();
                let p = net.prepare();
                for &x in &taus {
                    net.eval(&p, black_box(x), None, &mut s);
                    net.backprop(&p, &s, 1.0, None);
                }
            })
        });
    }
    group.finish();
}

fn qrdrl_minibatch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut policy = QuantilePolicy::init(2, 1, 64, &[64, 64], &mut rng).unwrap();
    let states: Vec<[f64; 2]> = (0..32).map(|_| [1.0, 1.0]).collect();
    let actions: Vec<[f64; 1]> = (0..32).map(|_| [rng.random_range(-1.0..1.0)]).collect();
    let tuples: Vec<LossTuple> = states
        .iter()
        .zip(&actions)
        .map(|(s, a)| LossTuple {
            state: s,
            action: a,
            advantage: rng.random_range(-1.0..1.0),
        })
        .collect();
    c.bench_function("qrdrl_loss/minibatch32_k128", |b| {
        b.iter(|| {
            policy.zero_grads();
            qrdrl_loss(&mut policy, &tuples, 128, 2.0, &mut RngTaus(&mut rng), true).unwrap()
        })
    });
}

fn short_fit(c: &mut Criterion) {
    let cfg = FitConfig {
        batches: 100,
        ..FitConfig::default()
    };
    let mut group = c.benchmark_group("fit_100_batches");
    group.sample_size(10);
    for arch in Architecture::ALL {
        group.bench_function(arch.name(), |b| {
            b.iter_batched(
                || NetConfig::benchmark(arch),
                |net| fit_distribution(DistributionSpec::BimodalGaussian, &net, 0.01, 0, &cfg).unwrap().mse,
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, mononet, qrdrl_minibatch, short_fit);
criterion_main!(benches);
