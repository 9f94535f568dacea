use std::hint::black_box;

use bsslab_bench::{gamma_kernel, grid, unit_noise};
use bsslab_core::kernels::bessel_k;
use bsslab_core::noise_sim::{bss_parts, WeightPlan};
use bsslab_core::stats::p_variation;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn simulate_bss(c: &mut Criterion) {
    let spec = gamma_kernel(-0.3);
    let mut group = c.benchmark_group("bss_path");
    for log2 in [8u32, 10, 12] {
        let g = grid(&spec, log2, 1.0);
        let plan = WeightPlan::new(&bss_parts(&spec), &g, &WeightPlan::future_rows(&g)).unwrap();
        let x = unit_noise(&g, 1).modulated();
        group.throughput(Throughput::Elements(g.n_future() as u64 + 1));
        group.bench_with_input(BenchmarkId::new("apply", log2), &x, |b, x| b.iter(|| plan.apply(black_box(x))));
    }
    group.finish();
}

fn plan_build(c: &mut Criterion) {
    let spec = gamma_kernel(0.25);
    let g = grid(&spec, 9, 1.0);
    let rows = WeightPlan::future_rows(&g);
    c.bench_function("weight_plan_new_2^9", |b| {
        b.iter(|| WeightPlan::new(&bss_parts(&spec), black_box(&g), &rows).unwrap())
    });
}

fn noise(c: &mut Criterion) {
    let spec = gamma_kernel(0.25);
    let g = grid(&spec, 10, 1.0);
    c.bench_function("noise_generate_2^10", |b| b.iter(|| unit_noise(black_box(&g), 7)));
}

fn pvar(c: &mut Criterion) {
    let spec = gamma_kernel(-0.3);
    let g = grid(&spec, 12, 1.0);
    let plan = WeightPlan::new(&bss_parts(&spec), &g, &WeightPlan::future_rows(&g)).unwrap();
    let path = plan.apply(&unit_noise(&g, 3).modulated());
    c.bench_function("p_variation_4096_p5.5", |b| b.iter(|| p_variation(black_box(&path), 5.5).unwrap()));
}

fn bessel(c: &mut Criterion) {
    c.bench_function("bessel_k_0.75", |b| b.iter(|| bessel_k(0.75, black_box(1.3)).unwrap()));
}

criterion_group!(benches, simulate_bss, plan_build, noise, pvar, bessel);
criterion_main!(benches);
