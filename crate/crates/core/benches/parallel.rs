use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use symred_core::algebra::structure_constants;
use symred_core::expr::{Config, Exec};
use symred_core::jet::{prolong_with, JetSpace, VectorField};
use symred_core::system::{check_point_symmetry, DESystem};

fn generators(space: &JetSpace) -> Vec<VectorField> {
    [
        ["0", "0", "1"],
        ["x1", "2*x2", "u"],
        ["1", "0", "0"],
        ["0", "1", "0"],
        ["2*x1", "0", "-u"],
    ]
    .iter()
    .map(|c| VectorField::parse(space, c).unwrap())
    .collect()
}

fn bench(c: &mut Criterion) {
    let space = JetSpace::new(&["x1", "x2"], &["u"], 2).unwrap();
    let gens = generators(&space);
    let names: Vec<String> = (1..=gens.len()).map(|i| format!("X{i}")).collect();
    let seq = Config::default().with_exec(Exec::Sequential);
    let sys = DESystem::parse(&space, &["u_2 - u_1^(-4/3)*u_11"], &seq).unwrap();
    let wide = VectorField::parse(&space, &["x1^2*u + x2", "x1*x2*u", "u^2*x1 + x2^3"]).unwrap();

    let mut group = c.benchmark_group("exec");
    for exec in [Exec::Sequential, Exec::Parallel] {
        let cfg = Config::default().with_exec(exec);
        let label = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("structure_constants", &label), &cfg, |b, cfg| {
            b.iter(|| structure_constants(&names, &gens, cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("check_symmetry", &label), &cfg, |b, cfg| {
            b.iter(|| {
                for g in &gens {
                    assert!(check_point_symmetry(&sys, g, cfg).unwrap().symmetric);
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("prolong_order3", &label), &cfg, |b, cfg| {
            b.iter(|| prolong_with(&wide, 3, cfg.exec))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
