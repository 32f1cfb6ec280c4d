//! Sequential against rayon execution for the data-parallel loops: the
//! strategy scan behind `T`, batches of independent table cells and the
//! per-setting diamond distances.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qmeas::assemblage::{heisenberg_weyl_mub, random_assemblage};
use qmeas::bounds::compute_t;
use qmeas::monotones;
use qmeas::repro;
use qmeas::{Execution, SolverConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn strategy_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("compute_t");
    for (d, m) in [(3, 4), (5, 5)] {
        let a = heisenberg_weyl_mub(d, m).unwrap();
        for (name, exec) in MODES {
            let cfg = SolverConfig::default().with_execution(exec);
            g.bench_with_input(BenchmarkId::new(name, format!("d{d}m{m}")), &a, |b, a| {
                b.iter(|| compute_t(a, &cfg).unwrap())
            });
        }
    }
    g.finish();
}

fn table_cells(c: &mut Criterion) {
    let mut g = c.benchmark_group("table1_cells");
    g.sample_size(10);
    let cells = repro::table1_cells(&[2, 3]);
    for (name, exec) in MODES {
        let cfg = SolverConfig::default().with_execution(exec).with_cross_check(false);
        g.bench_function(name, |b| b.iter(|| repro::table1(&cells, &cfg)));
    }
    g.finish();
}

fn assemblage_distance(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemblage_distance");
    g.sample_size(20);
    let a = random_assemblage(3, 6, 3, 1).unwrap();
    let b = random_assemblage(3, 6, 3, 2).unwrap();
    for (name, exec) in MODES {
        let cfg = SolverConfig::default().with_execution(exec);
        g.bench_function(name, |bch| bch.iter(|| monotones::assemblage_distance(&a, &b, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, strategy_scan, table_cells, assemblage_distance);
criterion_main!(benches);
