use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slotrack::annotate::edit_distance;
use slotrack::{generate_corpus, GeneratorSpec, Tracker, TrackerConfig};
use slotrack_bench::fixture;

fn trackers(c: &mut Criterion) {
    let f = fixture();
    let tracker = Tracker::new(&f.ontology, &f.lexicon, TrackerConfig::default()).unwrap();
    let mut group = c.benchmark_group("track_corpus");
    group.sample_size(20);
    group.bench_function("elaborate", |b| {
        b.iter(|| {
            f.corpus.iter().for_each(|d| {
                black_box(tracker.track_dialog(d).unwrap());
            })
        })
    });
    group.bench_function("baseline", |b| {
        b.iter(|| {
            f.corpus.iter().for_each(|d| {
                black_box(tracker.baseline_dialog(d).unwrap());
            })
        })
    });
    group.finish();
}

fn levenshtein(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let word = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.gen_range(0..=12);
        (0..n).map(|_| rng.gen_range(b'a'..=b'f') as char).collect()
    };
    let pairs: Vec<(String, String)> = (0..1000)
        .map(|_| (word(&mut rng), word(&mut rng)))
        .collect();
    c.bench_function("edit_distance_1000_pairs", |b| {
        b.iter(|| {
            pairs
                .iter()
                .map(|(a, b)| edit_distance(a, b))
                .sum::<usize>()
        })
    });
}

fn generation(c: &mut Criterion) {
    let f = fixture();
    let text =
        std::fs::read_to_string(slotrack_bench::data_dir().join("generator-spec-train.json"))
            .unwrap();
    let spec = GeneratorSpec::from_json(&text).unwrap();
    c.bench_function("generate_corpus", |b| {
        b.iter_batched(
            || spec.clone(),
            |s| generate_corpus(&f.ontology, &f.lexicon, &s).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, trackers, levenshtein, generation);
criterion_main!(benches);
