use std::collections::{BTreeSet, HashMap};

use jobnet_core::corpus::{parse_edition, EditionCorpus, GrammarConfig};
use jobnet_core::embedding::{cosine, embed_description, EmbeddingModel};
use jobnet_core::graph::{build_similarity_graph, embed_corpus, max_cross_similarity, GraphOptions, Weighting};
use jobnet_core::rng;
use jobnet_core::synthetic::{pseudo_word, COGNITIVE_WORDS, PHYSICAL_WORDS, SHARED_WORDS};
use jobnet_core::text::tokenize;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

fn vocabulary() -> Vec<&'static str> {
    PHYSICAL_WORDS.iter().chain(COGNITIVE_WORDS).chain(SHARED_WORDS).copied().collect()
}

fn random_model(dim: usize, seed: u64) -> EmbeddingModel {
    let mut r = rng::stream(seed, 0);
    let vectors = vocabulary()
        .into_iter()
        .map(|w| (w.to_string(), (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()))
        .collect::<Vec<(String, Vec<f64>)>>();
    EmbeddingModel::from_vectors(dim, vectors, "random").unwrap()
}

/// `n` entries of 1-6 words each drawn from a few-word slice of the vocabulary,
/// so similar descriptions are common.
fn random_corpus(n: usize, seed: u64) -> EditionCorpus {
    let mut r = rng::stream(seed, 1);
    let vocab = vocabulary();
    let mut text = String::new();
    for i in 0..n {
        let start = r.random_range(0..vocab.len() - 8);
        let len = r.random_range(1..=6);
        let words: Vec<&str> = (0..len).map(|_| *vocab[start..start + 8].choose(&mut r).unwrap()).collect();
        text.push_str(&format!("JOB {} (any ind.) {}.\n\n", pseudo_word(i), words.join(" ")));
    }
    parse_edition(&text, 1939, &GrammarConfig::default()).unwrap().corpus
}

#[test]
fn cosine_properties_on_ten_thousand_pairs() {
    let mut r = rng::stream(2024, 0);
    for _ in 0..10_000 {
        let dim = r.random_range(1..64);
        let u: Vec<f64> = (0..dim).map(|_| r.random_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| r.random_range(-10.0..10.0)).collect();
        if u.iter().all(|x| *x == 0.0) || v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let alpha = r.random_range(1e-3..1e3);
        let uv = cosine(&u, &v).unwrap();
        assert!((uv - cosine(&v, &u).unwrap()).abs() <= 1e-9);
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() <= 1e-9);
        let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
        assert!((cosine(&scaled, &v).unwrap() - uv).abs() <= 1e-9);
        assert!((-1.0..=1.0).contains(&uv));
    }
}

fn dense_edges(n: usize, sim: impl Fn(usize, usize) -> f64, threshold: f64) -> BTreeSet<(usize, usize, u64)> {
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = sim(i, j);
            if w >= threshold {
                out.insert((i, j, w.to_bits()));
            }
        }
    }
    out
}

fn graph_edges(g: &jobnet_core::graph::SimilarityGraph) -> BTreeSet<(usize, usize, u64)> {
    g.edges.iter().map(|e| (e.source, e.target, e.weight.to_bits())).collect()
}

#[test]
fn embedding_graph_equals_brute_force() {
    for (n, seed) in [(2, 1), (17, 2), (60, 3), (100, 4)] {
        let corpus = random_corpus(n, seed);
        let model = random_model(8, seed);
        for threshold in [0.0, 0.5, 0.85] {
            let opts = GraphOptions {
                threshold,
                ..GraphOptions::default()
            };
            let g = build_similarity_graph(&corpus, Some(&model), &opts).unwrap();
            let vectors = embed_corpus(&corpus, &model, true);
            let kept: Vec<&Vec<f64>> = vectors.iter().filter(|v| !v.is_empty()).map(|v| &v.vector).collect();
            assert_eq!(g.node_count(), kept.len());
            let want = dense_edges(kept.len(), |i, j| cosine(kept[i], kept[j]).unwrap(), threshold);
            assert_eq!(graph_edges(&g), want, "n = {n}, threshold = {threshold}");
        }
    }
}

#[test]
fn jaccard_graph_equals_brute_force() {
    let corpus = random_corpus(100, 9);
    let opts = GraphOptions {
        threshold: 0.3,
        weighting: Weighting::TokenJaccard,
        filter_stopwords: true,
    };
    let g = build_similarity_graph(&corpus, None, &opts).unwrap();
    let sets: Vec<BTreeSet<String>> = corpus
        .entries
        .iter()
        .map(|e| corpus.description_tokens(e, true).into_iter().collect())
        .collect();
    let want = dense_edges(
        sets.len(),
        |i, j| sets[i].intersection(&sets[j]).count() as f64 / sets[i].union(&sets[j]).count() as f64,
        0.3,
    );
    assert_eq!(graph_edges(&g), want);
}

#[test]
fn tfidf_graph_equals_brute_force() {
    let corpus = random_corpus(80, 5);
    let opts = GraphOptions {
        threshold: 0.2,
        weighting: Weighting::TfidfCosine,
        filter_stopwords: true,
    };
    let g = build_similarity_graph(&corpus, None, &opts).unwrap();
    let docs: Vec<Vec<String>> = corpus.entries.iter().map(|e| corpus.description_tokens(e, true)).collect();
    let n = docs.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for d in &docs {
        for t in d.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(t).or_default() += 1.0;
        }
    }
    let weights: Vec<HashMap<&str, f64>> = docs
        .iter()
        .map(|d| {
            let mut w: HashMap<&str, f64> = HashMap::new();
            for t in d {
                *w.entry(t.as_str()).or_default() += (n / df[t.as_str()]).ln();
            }
            w
        })
        .collect();
    let kept: Vec<&HashMap<&str, f64>> = weights.iter().filter(|w| w.values().any(|x| *x != 0.0)).collect();
    assert_eq!(kept.len(), g.node_count());
    let sim = |i: usize, j: usize| {
        let dot: f64 = kept[i].iter().map(|(t, x)| x * kept[j].get(t).unwrap_or(&0.0)).sum();
        let norm = |w: &HashMap<&str, f64>| w.values().map(|x| x * x).sum::<f64>().sqrt();
        dot / (norm(kept[i]) * norm(kept[j]))
    };
    let got: BTreeSet<(usize, usize)> = g.edges.iter().map(|e| (e.source, e.target)).collect();
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            let s = sim(i, j);
            if (s - 0.2).abs() > 1e-9 {
                assert_eq!(got.contains(&(i, j)), s >= 0.2, "pair {i} {j} similarity {s}");
            }
        }
    }
    for e in &g.edges {
        assert!((e.weight - sim(e.source, e.target)).abs() < 1e-12);
    }
}

#[test]
fn threshold_sweep_is_monotone() {
    let corpus = random_corpus(100, 11);
    let model = random_model(6, 11);
    let mut previous: Option<BTreeSet<(usize, usize, u64)>> = None;
    for threshold in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let opts = GraphOptions {
            threshold,
            ..GraphOptions::default()
        };
        let edges = graph_edges(&build_similarity_graph(&corpus, Some(&model), &opts).unwrap());
        if let Some(prev) = &previous {
            assert!(edges.is_subset(prev), "threshold {threshold}");
        }
        previous = Some(edges);
    }
}

#[test]
fn cross_similarity_hand_example() {
    // focal: a = (1, 0), b = (0, 1); other: c = (1, 1), d = (1, 0)
    let model = EmbeddingModel::from_vectors(
        2,
        [
            ("a".to_string(), vec![1.0, 0.0]),
            ("b".to_string(), vec![0.0, 1.0]),
            ("c".to_string(), vec![1.0, 1.0]),
            ("d".to_string(), vec![1.0, 0.0]),
        ],
        "hand",
    )
    .unwrap();
    let v = |id: &str, text: &str| embed_description(id, &tokenize(text), &model);
    let focal = [v("f1", "a"), v("f2", "b"), v("f3", "a b")];
    let other = [v("o1", "c"), v("o2", "d")];
    let cross = max_cross_similarity(&focal, &other).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let want = [("f1", "o2", 1.0), ("f2", "o1", s), ("f3", "o1", 1.0)];
    for (m, (f, o, w)) in cross.matches.iter().zip(want) {
        assert_eq!((m.focal_id.as_str(), m.match_id.as_str()), (f, o));
        assert!((m.similarity - w).abs() < 1e-12);
    }
    assert!((cross.mean_max - (2.0 + s) / 3.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn description_embedding_is_order_invariant(words in prop::collection::vec(0usize..80, 1..30), seed in 0u64..1000) {
        let model = random_model(5, 3);
        let vocab = vocabulary();
        let tokens: Vec<String> = words.iter().map(|&i| vocab[i].to_string()).collect();
        let mut shuffled = tokens.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng::stream(seed, 0));
        let a = embed_description("x", &tokens, &model);
        let b = embed_description("x", &shuffled, &model);
        prop_assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn graph_weights_lie_in_range(seed in 0u64..50, threshold in 0.0f64..1.0) {
        let corpus = random_corpus(30, seed);
        let model = random_model(4, seed);
        let g = build_similarity_graph(&corpus, Some(&model), &GraphOptions { threshold, ..GraphOptions::default() }).unwrap();
        for e in &g.edges {
            prop_assert!(e.source < e.target);
            prop_assert!(e.weight >= threshold && e.weight <= 1.0);
        }
    }
}
