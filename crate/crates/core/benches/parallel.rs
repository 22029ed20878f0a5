use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use taibleson::calculus::{rademacher_ratio, sector_family, RademacherConfig};
use taibleson::kernel::{kernel_sweep, standard_sweep_grid};
use taibleson::vilenkin::{doob_batch, domination_batch};
use taibleson::{Exec, FieldParams, KernelEvalConfig, QuotientLattice};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernel_sweeps(c: &mut Criterion) {
    let params = FieldParams::new(3, 1, 1.0).unwrap();
    let (times, kxs) = standard_sweep_grid();
    let cfg = KernelEvalConfig::default();
    let mut g = c.benchmark_group("kernel_sweep");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kernel_sweep(&params, &times, &kxs, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

fn quotient_batches(c: &mut Criterion) {
    let lat = QuotientLattice::new(FieldParams::qadic(2, 1, 1.0).unwrap(), 3, 3).unwrap();
    let mut g = c.benchmark_group("quotient_batch");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new("doob", name), |b| {
            b.iter(|| doob_batch(&lat, 2.0, 100, 7, exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("domination", name), |b| {
            b.iter(|| domination_batch(&lat, 20, 7, exec).unwrap())
        });
    }
    g.finish();
}

fn rademacher_trials(c: &mut Criterion) {
    let params = FieldParams::new(2, 1, 1.0).unwrap();
    let family = sector_family(1.3, 16);
    let cfg = RademacherConfig::default();
    let mut g = c.benchmark_group("rademacher");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| rademacher_ratio(&family, &params, &cfg, 7, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernel_sweeps, quotient_batches, rademacher_trials);
criterion_main!(benches);
