use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bcsi::channels::gen;
use bcsi::coding_sim::{simulate, SimConfig};
use bcsi::regions::{mbc_inner_region, AuxScheme, SchemeShape, SearchConfig};
use bcsi::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn region_search(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ch = gen::random_mbc(&mut rng);
    let mut group = c.benchmark_group("mbc_inner_region");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SearchConfig {
            aux_cards: Some((2, 2)),
            restarts: 32,
            hillclimb_steps: 40,
            seed: 7,
            exec,
            ..SearchConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| mbc_inner_region(&ch, cfg).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ch = gen::random_mbc(&mut rng);
    let shape = SchemeShape { nu: 2, nv: 2, tie_v_to_u: false };
    let sch = AuxScheme::random(shape, 2, 2, &mut rng);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = SimConfig::new(12, [0.05, 0.05, 0.05], [0.1, 0.05, 0.05], 400, 3);
        cfg.exec = exec;
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| simulate(&ch, &sch, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, region_search, monte_carlo);
criterion_main!(benches);
