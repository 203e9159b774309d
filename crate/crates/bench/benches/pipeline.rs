use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use morphgrid_core::cells::kmeans;
use morphgrid_core::embedding::extract_ngrams;
use morphgrid_core::paradigms::{
    cluster_pass, lcs_pair, score, NeighborLists, Paradigm, Scorer,
};
use morphgrid_core::reinflect::{apply, train_rewriter, ReinflectionInstance};

fn bench_lcs(c: &mut Criterion) {
    c.bench_function("lcs_pair", |b| {
        b.iter(|| lcs_pair(black_box("misunderstanding"), black_box("misunderstood")))
    });
}

fn bench_ngrams(c: &mut Criterion) {
    c.bench_function("extract_ngrams", |b| {
        b.iter(|| extract_ngrams(black_box("internationalization"), 3, 6))
    });
}

fn bench_score(c: &mut Criterion) {
    let paradigm = Paradigm {
        members: vec![
            (0, "misunderstand".to_string()),
            (1, "misunderstands".to_string()),
            (2, "misunderstanding".to_string()),
            (3, "misunderstood".to_string()),
        ],
    };
    c.bench_function("paradigm_score", |b| b.iter(|| score(black_box(&paradigm))));
}

fn bench_kmeans(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let points: Vec<Vec<f32>> = (0..200)
        .map(|_| (0..16).map(|_| rng.random_range(-1.0f32..1.0)).collect())
        .collect();
    c.bench_function("kmeans_200x16_k8", |b| {
        b.iter(|| kmeans(black_box(&points), 8, 7).unwrap())
    });
}

fn bench_cluster_pass(c: &mut Criterion) {
    let stems: Vec<String> = (0..20)
        .map(|i| format!("st{}m{}", (b'a' + (i % 26) as u8) as char, i))
        .collect();
    let cells: Vec<Vec<String>> = vec![
        stems.iter().map(|s| format!("{s}a")).collect(),
        stems.iter().map(|s| format!("{s}iko")).collect(),
    ];
    c.bench_function("cluster_pass_2x20", |b| {
        b.iter(|| cluster_pass(black_box(&cells), &Scorer::Plain, &NeighborLists::full()))
    });
}

fn bench_apply(c: &mut Criterion) {
    let pairs: Vec<ReinflectionInstance> = [
        ("walked", "walking"),
        ("talked", "talking"),
        ("jumped", "jumping"),
        ("watched", "watching"),
    ]
    .iter()
    .map(|(s, t)| ReinflectionInstance {
        source_cell: 0,
        source_form: s.to_string(),
        target_cell: 1,
        target_form: t.to_string(),
    })
    .collect();
    let model = train_rewriter(&pairs);
    c.bench_function("rewrite_apply", |b| {
        b.iter(|| apply(black_box(&model), black_box("misunderstanded"), 0, 1))
    });
}

criterion_group!(
    benches,
    bench_lcs,
    bench_ngrams,
    bench_score,
    bench_kmeans,
    bench_cluster_pass,
    bench_apply
);
criterion_main!(benches);
