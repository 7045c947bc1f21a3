use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use msqg::chaos::apply_gm;
use msqg::rng::{stream, StreamRole};
use msqg::vortex::{sample_initial_vortices, vortex_drift};
use msqg::{
    sample_white_noise, ChaosVector, DriftBackend, DriftEngine, Kernel, KernelSeries, KernelTable,
};
use std::time::Duration;

fn kernel_eval(c: &mut Criterion) {
    let series = KernelSeries::new(0.5, 64).unwrap();
    let table = KernelTable::new(0.5, 64, 256).unwrap();
    let x = [0.137, 0.711];
    let mut g = c.benchmark_group("kernel");
    g.bench_function("series_cutoff64", |b| b.iter(|| series.eval(black_box(x))));
    g.bench_function("table_256", |b| b.iter(|| table.eval(black_box(x))));
    g.finish();
}

fn vortex(c: &mut Criterion) {
    let mut g = c.benchmark_group("vortex_drift");
    for n in [16usize, 64, 256] {
        let (st, _) = sample_initial_vortices(1, 0, n).unwrap();
        let k = Kernel::for_vortices(msqg::KernelBackend::Auto, 0.5, 64, 256, n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &st, |b, st| {
            b.iter(|| vortex_drift(st, &k))
        });
    }
    g.finish();
}

fn galerkin(c: &mut Criterion) {
    let mut g = c.benchmark_group("galerkin_drift");
    for m in [4usize, 8, 16] {
        let xi = sample_white_noise(&mut stream(1, 0, StreamRole::Field), m).unwrap();
        for (name, backend) in [("exact", DriftBackend::Exact), ("fast", DriftBackend::Fast)] {
            let e = DriftEngine::new(m, 0.5, backend).unwrap();
            g.bench_with_input(BenchmarkId::new(name, m), &xi, |b, xi| {
                b.iter(|| e.drift(xi))
            });
        }
    }
    g.finish();
}

fn chaos(c: &mut Criterion) {
    let mut g = c.benchmark_group("chaos_gm");
    for n_max in [1usize, 2, 3] {
        let phi = ChaosVector::random(&mut stream(1, 0, StreamRole::Aux), n_max, 2, true);
        g.bench_with_input(BenchmarkId::from_parameter(n_max), &phi, |b, phi| {
            b.iter(|| apply_gm(phi, 2, 0.5).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().measurement_time(Duration::from_secs(2)).warm_up_time(Duration::from_millis(500));
    targets = kernel_eval, vortex, galerkin, chaos
}
criterion_main!(benches);
