use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use fgcert::algebra::GroupAlgebraElement;
use fgcert::bell::{inner_bound, BellFunctional, SeeSawOptions};
use fgcert::certify::{falsify, FalsifyMode};
use fgcert::denselin::real;
use fgcert::extendpt::{extend_to, random_positive_type};
use fgcert::grounded::GroundedSet;
use fgcert::parallel::Execution;
use fgcert::rng;
use fgcert::words::{GroupSpec, Word};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn falsify_sampling(c: &mut Criterion) {
    let spec = GroupSpec::free(2);
    let terms = ["e", "g1", "g1^-1", "g1 g2", "g2^-1 g1^-1"]
        .iter()
        .zip([2.0, -0.5, -0.5, 0.3, 0.3])
        .map(|(w, v)| (Word::parse(spec, w).unwrap(), real(v)));
    let f = GroupAlgebraElement::from_terms(spec, terms).unwrap();
    let mut group = c.benchmark_group("falsify_sampling");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| falsify(black_box(&f), FalsifyMode::Operator, &[2, 4, 8], 512, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn bell_restarts(c: &mut Criterion) {
    let f = BellFunctional::chsh();
    let mut opts = SeeSawOptions::new(2, 3);
    opts.restarts = 8;
    let mut group = c.benchmark_group("bell_restarts");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| inner_bound(black_box(&f), &opts, exec).unwrap()));
    }
    group.finish();
}

fn extension_batch(c: &mut Criterion) {
    let spec = GroupSpec::free(2);
    let cases: Vec<(GroundedSet, GroundedSet)> = (0..32)
        .map(|k| {
            let mut rng = rng::seeded(k);
            let set = GroundedSet::random(spec, 6, &mut rng).unwrap();
            let target = set.grow(4, &mut rng).unwrap();
            (set, target)
        })
        .collect();
    let mut group = c.benchmark_group("extension_batch");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                exec.map_indexed(cases.len(), |k| {
                    let (set, target) = &cases[k];
                    let g = random_positive_type(set, 3, k as u64).unwrap();
                    extend_to(&g, target).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, falsify_sampling, bell_restarts, extension_batch);
criterion_main!(benches);
