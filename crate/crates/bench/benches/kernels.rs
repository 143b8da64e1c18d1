use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use roughstop::kernel::{goursat_kernel, GoursatConfig};
use roughstop::signature::{log_signature, signature_checkpoints, SignatureAccumulator};
use roughstop_bench::wiggly_path;

fn signatures(c: &mut Criterion) {
    let mut group = c.benchmark_group("signature");
    let path = wiggly_path(121, 2, 0.0);
    let increments = path.increments();
    for level in [2usize, 3, 4, 5] {
        group.bench_with_input(BenchmarkId::new("stream", level), &level, |b, &level| {
            b.iter(|| {
                let mut acc = SignatureAccumulator::new(path.dim(), level);
                for dx in increments.chunks(path.dim()) {
                    acc.push(dx);
                }
                black_box(acc.coeffs()[acc.coeffs().len() - 1])
            })
        });
    }
    let checkpoints: Vec<usize> = (0..=12).map(|n| 10 * n).collect();
    group.bench_function("checkpoints/level4", |b| {
        b.iter(|| signature_checkpoints(black_box(&path), &checkpoints, 4).unwrap())
    });
    let sig = signature_checkpoints(&path, &[120], 4).unwrap().pop().unwrap();
    group.bench_function("log/level4", |b| b.iter(|| log_signature(black_box(&sig)).unwrap()));
    group.finish();
}

fn goursat(c: &mut Criterion) {
    let mut group = c.benchmark_group("goursat");
    for len in [13usize, 25, 61] {
        let x = wiggly_path(len, 2, 0.0);
        let y = wiggly_path(len, 2, 1.0);
        for refine in [1usize, 2] {
            group.bench_with_input(BenchmarkId::new(format!("refine{refine}"), len), &len, |b, _| {
                b.iter(|| {
                    goursat_kernel(black_box(&x), black_box(&y), GoursatConfig { refine })
                        .unwrap()
                        .terminal()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, signatures, goursat);
criterion_main!(benches);
