use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use influence_bench::cnot;
use influence_core::tomography::{exact_tomography_data, generate_tomography_data, reconstruct_cptp, TomographyConfig};
use influence_core::QubitSubset;

fn reconstruction(c: &mut Criterion) {
    let mut group = c.benchmark_group("tomography");
    group.sample_size(10);
    let view = cnot(4).junta_view().unwrap();
    for t in [1usize, 2] {
        let subset = QubitSubset::from_qubits(4, &(1..=t).collect::<Vec<_>>()).unwrap();
        let exact = exact_tomography_data(&view, &subset, 0.0, 2).unwrap();
        group.bench_with_input(BenchmarkId::new("reconstruct_exact", t), &exact, |b, d| {
            b.iter(|| reconstruct_cptp(d).unwrap())
        });
        let sampled = generate_tomography_data(&view, &subset, &TomographyConfig::new(1000, 3)).unwrap();
        group.bench_with_input(BenchmarkId::new("reconstruct_sampled", t), &sampled, |b, d| {
            b.iter(|| reconstruct_cptp(d).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, reconstruction);
criterion_main!(benches);
