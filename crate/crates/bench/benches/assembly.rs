use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lagdiff::energy::{action_gradient, discrete_energy, energy_hessian_triplets};
use lagdiff::{DissipationMatrix, EnergyLaw, Law};
use lagdiff_bench::disk_case;

fn assembly(c: &mut Criterion) {
    let law = EnergyLaw::new(Law::Law2, 4.0).unwrap();
    let mut g = c.benchmark_group("assembly");
    for n in [524, 2103] {
        let (tri, rho) = disk_case(4.0, n);
        let cfg = tri.map_nodes(|p| [1.01 * p[0], 0.99 * p[1]]);
        g.bench_with_input(BenchmarkId::new("energy", n), &n, |b, _| {
            b.iter(|| discrete_energy(&tri, black_box(&cfg), &law, &rho).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("gradient", n), &n, |b, _| {
            b.iter(|| action_gradient(&tri, black_box(&cfg), &law, &rho).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("hessian", n), &n, |b, _| {
            b.iter(|| energy_hessian_triplets(&tri, black_box(&cfg), &law, &rho).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dissipation_law2", n), &n, |b, _| {
            b.iter(|| DissipationMatrix::assemble_law2(&tri, black_box(&cfg)).unwrap())
        });
        let m = DissipationMatrix::assemble_law2(&tri, &cfg).unwrap();
        let rhs = vec![1.0; tri.n_dof()];
        g.bench_with_input(BenchmarkId::new("dissipation_solve", n), &n, |b, _| {
            b.iter(|| m.solve_d(black_box(&rhs)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
