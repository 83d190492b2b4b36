//! Parallel versus sequential spectrum computation.
//!
//! The sequential side runs the same code inside a one-thread rayon pool;
//! `cargo bench --no-default-features` measures the build without rayon.

use std::fs;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use orbitdex::germlang::{parse_germ, GermDocument};
use orbitdex::localmult::quotient_dims;
use orbitdex::orbits::{orbit_spectrum, SpectrumOptions};
use orbitdex::par;

fn fixture(name: &str) -> GermDocument {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    parse_germ(&fs::read_to_string(path).unwrap()).unwrap()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("orbit_spectrum");
    group.sample_size(10);
    for name in ["example31_2_6_5_large.germ", "jordan_block_3_2.germ"] {
        let doc = fixture(name);
        let opts = SpectrumOptions {
            cross_check: false,
            ..SpectrumOptions::default()
        };
        for (label, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(label, name), &doc, |b, doc| {
                b.iter(|| pool.install(|| orbit_spectrum(&doc.matrix, &doc.map, opts).unwrap()))
            });
        }
    }
    group.finish();
}

fn elimination(c: &mut Criterion) {
    let doc = fixture("chain_1_2_6.germ");
    let g = doc.map.iterate(6, Some(16), usize::MAX).unwrap().minus_identity();
    let mut group = c.benchmark_group("quotient_dims");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(label, |b| b.iter(|| pool.install(|| quotient_dims(&g, 10))));
    }
    group.finish();
    eprintln!("built with parallel feature: {}", par::is_parallel());
}

criterion_group!(benches, spectrum, elimination);
criterion_main!(benches);
