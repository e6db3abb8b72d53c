//! Throughput benches: the data-parallel frame loop against its sequential
//! fallback, plus the two hot kernels underneath it.
//!
//! `cargo bench -p seafdm-harness` runs the parallel map (rayon) and the
//! sequential map over the same seeded frame workload; building with
//! `--no-default-features` leaves only the sequential path in the library,
//! in which case the two benches coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use seafdm_harness::ber::BerEngine;
use seafdm_harness::config::ExperimentConfig;
use seafdm_harness::{par_map, seq_map};

fn bench_cfg() -> ExperimentConfig {
    ExperimentConfig {
        n: 256,
        n_cp: 9,
        guard_width: 30,
        min_frames: 1,
        max_frames: 64,
        target_errors: usize::MAX,
        c2_max: 1e-4,
        codebook_m: 256,
        ..ExperimentConfig::default()
    }
}

fn frame_loop(c: &mut Criterion) {
    let cfg = bench_cfg();
    let engine = BerEngine::new(&cfg).expect("engine");
    let mut group = c.benchmark_group("frame_loop");
    for &frames in &[16usize, 64] {
        group.bench_with_input(
            BenchmarkId::new("parallel", frames),
            &frames,
            |b, &frames| {
                b.iter(|| {
                    par_map(frames, |i| engine.frame_errors(i % 64, 12.0, 0.0));
                })
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", frames),
            &frames,
            |b, &frames| {
                b.iter(|| {
                    seq_map(frames, |i| engine.frame_errors(i % 64, 12.0, 0.0));
                })
            },
        );
    }
    group.finish();
}

fn lppn_chips(c: &mut Criterion) {
    use seafdm_core::lppn::{LppnConfig, LppnGenerator};
    c.bench_function("lppn_million_chips", |b| {
        b.iter(|| {
            let mut gen = LppnGenerator::new(LppnConfig::p_code_12()).unwrap();
            let mut acc = 0u32;
            for _ in 0..1_000_000 {
                acc ^= gen.next() as u32;
            }
            acc
        })
    });
}

fn symbol_pipeline(c: &mut Criterion) {
    use seafdm_core::channel::{apply_channel, sample_jakes_channel};
    use seafdm_core::codebook::ChirpVector;
    use seafdm_core::equalizer::TimeDomainEqualizer;
    use seafdm_core::modem::{add_cpp, idaft, remove_cpp, AfdmWaveformConfig, DaftPlan};
    use seafdm_core::Cf64;

    use rand::rngs::StdRng;
    use rand::SeedableRng;

    let n = 1024;
    let wcfg = AfdmWaveformConfig::new(n, 17, None, 4, 2).unwrap();
    let plan = DaftPlan::new(n);
    let mut rng = StdRng::seed_from_u64(7);
    let ch = sample_jakes_channel(2.0, &[0, 1, 2], n, 17, &mut rng).unwrap();
    let x = vec![Cf64::new(0.707, 0.707); n];
    let c2 = ChirpVector::constant(1e-5, n);

    c.bench_function("symbol_tx_channel_rx", |b| {
        b.iter(|| {
            let s = idaft(&plan, &x, wcfg.c1, &c2).unwrap();
            let tx = add_cpp(&s, wcfg.c1, wcfg.n_cp);
            let r = apply_channel(&tx, &ch).unwrap();
            let body = remove_cpp(&r, n, wcfg.n_cp).unwrap();
            let eq = TimeDomainEqualizer::new(&ch, wcfg.c1, 1e-2).unwrap();
            eq.equalize(&plan, &body).unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = frame_loop, lppn_chips, symbol_pipeline
}
criterion_main!(benches);
