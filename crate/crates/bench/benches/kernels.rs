use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scitower::numerics::{is_sigma_min_above, sigma_min_quantized};
use scitower::polyroots::{roots_stage, Polynomial};
use scitower::schrodinger::bounded::{GaborIndexMap, QmcPlan, ZStage};
use scitower::schrodinger::PotentialSpec;
use scitower::spec::zoo;
use scitower::spectral::pseudospectrum_stage;
use scitower::{ComplexMatrix, C64, DEFAULT_ETA};

fn random(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(n + n / 2, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn sigma_test(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma_test");
    for n in [16, 64, 128] {
        let b = random(n, 1);
        g.bench_with_input(BenchmarkId::new("above", n), &b, |bch, b| {
            bch.iter(|| is_sigma_min_above(black_box(b), 0.1, DEFAULT_ETA).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("quantized", n), &b, |bch, b| bch.iter(|| sigma_min_quantized(black_box(b), 32).unwrap()));
    }
    g.finish();
}

fn sublevel(c: &mut Criterion) {
    let shift = zoo::unilateral_shift().build().unwrap();
    let lap = zoo::laurent_sum().build().unwrap();
    let mut g = c.benchmark_group("pseudospectrum");
    g.sample_size(10);
    for m in [8, 16] {
        g.bench_with_input(BenchmarkId::new("shift", m), &m, |b, &m| b.iter(|| pseudospectrum_stage(&shift, 0, 0.5, m, 2 * m).unwrap()));
        g.bench_with_input(BenchmarkId::new("laurent", m), &m, |b, &m| b.iter(|| pseudospectrum_stage(&lap, 0, 0.25, m, 2 * m).unwrap()));
    }
    g.finish();
}

fn gram_assembly(c: &mut Criterion) {
    let v = PotentialSpec::parse("cos(x1)", 1).unwrap();
    let mut g = c.benchmark_group("z_stage");
    g.sample_size(10);
    for m in [8, 32] {
        let theta = GaborIndexMap::new(1, m).unwrap();
        let plan = QmcPlan::new(vec![2], 16.0, 4096).unwrap();
        g.bench_with_input(BenchmarkId::new("assemble", m), &theta, |b, t| b.iter(|| ZStage::assemble(&v, t, &plan).unwrap()));
    }
    g.finish();
}

fn roots(c: &mut Criterion) {
    let mut g = c.benchmark_group("roots");
    for d in [4, 12] {
        let rs: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0 + 0.1 * k as f64, 2.4 * k as f64)).collect();
        let p = Polynomial::from_roots(&rs).unwrap();
        g.bench_with_input(BenchmarkId::new("stage_n200", d), &p, |b, p| b.iter(|| roots_stage(p, 200).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, sigma_test, sublevel, gram_assembly, roots);
criterion_main!(benches);
