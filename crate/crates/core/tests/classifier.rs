use std::collections::HashMap;
use std::sync::OnceLock;

use jobnet_core::classifier::{
    apply_title_overrides, metadata_validation, read_training_csv, train, write_training_csv, AssignedLabel,
    ClassifierModel, FeatureMode, JobClass, LabelAssignment, OverrideConfig, WorkerAxis,
};
use jobnet_core::synthetic::{labeled_corpus, COGNITIVE_WORDS, PHYSICAL_WORDS, SHARED_WORDS};
use proptest::prelude::*;

fn any_word() -> impl Strategy<Value = &'static str> {
    let all: Vec<&'static str> = PHYSICAL_WORDS
        .iter()
        .chain(COGNITIVE_WORDS)
        .chain(SHARED_WORDS)
        .chain(&["unseen", "zzz"])
        .copied()
        .collect();
    prop::sample::select(all)
}

fn balanced_model(mode: FeatureMode) -> &'static ClassifierModel {
    static MODELS: OnceLock<[ClassifierModel; 2]> = OnceLock::new();
    let models = MODELS.get_or_init(|| {
        let examples = labeled_corpus(200, 0.0, 0.4, 8).unwrap();
        [FeatureMode::Bow, FeatureMode::Tfidf].map(|m| ClassifierModel::fit(&examples, m, 1.0).unwrap())
    });
    &models[(mode == FeatureMode::Tfidf) as usize]
}

#[test]
fn model_invariants() {
    for mode in [FeatureMode::Bow, FeatureMode::Tfidf] {
        let m = ClassifierModel::fit(&labeled_corpus(101, 0.1, 0.4, 2).unwrap(), mode, 0.5).unwrap();
        assert!((m.class_priors.physical + m.class_priors.cognitive - 1.0).abs() < 1e-15);
        assert_eq!(m.vocabulary.len(), m.token_likelihoods.len());
        assert!(m.vocabulary.windows(2).all(|w| w[0] < w[1]));
        for c in 0..2 {
            let total: f64 = m.token_likelihoods.iter().map(|l| l[c]).sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(m.token_likelihoods.iter().all(|l| l[c] > 0.0 && l[c] < 1.0));
        }
    }
}

#[test]
fn separable_corpus_is_learned_perfectly() {
    let examples = labeled_corpus(672, 0.0, 0.5, 42).unwrap();
    for mode in [FeatureMode::Bow, FeatureMode::Tfidf] {
        let out = train(&examples, mode, 1.0, 42).unwrap();
        assert_eq!(out.n_train + out.n_test, 672);
        assert_eq!(out.held_out_accuracy, 1.0);
    }
}

#[test]
fn split_is_seeded() {
    let examples = labeled_corpus(100, 0.1, 0.3, 1).unwrap();
    let a = train(&examples, FeatureMode::Bow, 1.0, 9).unwrap();
    let b = train(&examples, FeatureMode::Bow, 1.0, 9).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.held_out_accuracy, b.held_out_accuracy);
}

#[test]
fn training_csv_round_trip() {
    let examples = labeled_corpus(20, 0.0, 0.5, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    write_training_csv(&examples, std::fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(read_training_csv(&path).unwrap(), examples);
}

#[test]
fn assignment_csv_round_trip() {
    let model = balanced_model(FeatureMode::Bow);
    let mut labels = LabelAssignment::default();
    for (i, text) in ["lathe weld drill", "plan budget review", "parts, orders"].iter().enumerate() {
        let c = model.classify(text);
        labels.labels.insert(
            format!("1939-{i:05}"),
            AssignedLabel {
                label: c.label,
                posterior: c.posterior,
                override_applied: i == 2,
                low_confidence: false,
            },
        );
    }
    let titles: HashMap<String, String> = [("1939-00000".to_string(), "LATHE HAND, \"BENCH\"".to_string())].into();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    labels.write_csv(&titles, std::fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(LabelAssignment::read_csv(&path).unwrap(), labels);
}

#[test]
fn worker_function_table_has_consistent_intervals() {
    let mut labels = LabelAssignment::default();
    let mut codes = HashMap::new();
    for i in 0..60 {
        let id = format!("1977-{i:05}");
        let class = if i % 3 == 0 { JobClass::Cognitive } else { JobClass::Physical };
        labels.labels.insert(
            id.clone(),
            AssignedLabel {
                label: class,
                posterior: 0.9,
                override_applied: false,
                low_confidence: false,
            },
        );
        if i < 55 {
            codes.insert(id, format!("{:03}.{}{}{}-010", i, i % 7, i % 9, i % 8));
        }
    }
    let v = metadata_validation(&labels, &codes, 500, 1).unwrap();
    assert_eq!(v.skipped, 5);
    for axis in WorkerAxis::ALL {
        let jobs: usize = v.rows.iter().filter(|r| r.axis == axis).map(|r| r.jobs).sum();
        assert_eq!(jobs, 55);
    }
    for r in &v.rows {
        assert_eq!(r.physical + r.cognitive, r.jobs);
        assert!((r.pct_physical + r.pct_cognitive - 100.0).abs() < 1e-9);
        assert!(r.ci_low <= r.pct_physical && r.pct_physical <= r.ci_high, "{r:?}");
    }
    assert_eq!(v, metadata_validation(&labels, &codes, 500, 1).unwrap());
}

proptest! {
    #[test]
    fn posterior_is_a_top_class_probability(words in prop::collection::vec(any_word(), 0..40)) {
        let m = balanced_model(FeatureMode::Tfidf);
        let c = m.classify(&words.join(" "));
        prop_assert!((0.5..=1.0).contains(&c.posterior));
    }

    #[test]
    fn label_survives_count_scaling_with_equal_priors(words in prop::collection::vec(any_word(), 1..30), k in 2usize..5) {
        for mode in [FeatureMode::Bow, FeatureMode::Tfidf] {
            let m = balanced_model(mode);
            prop_assert_eq!(m.class_priors.physical, 0.5);
            let text = words.join(" ");
            let repeated = vec![text.as_str(); k].join(" ");
            let (a, b) = (m.classify(&text), m.classify(&repeated));
            prop_assert_eq!(a.label, b.label);
            prop_assert!(b.posterior >= a.posterior - 1e-12);
        }
    }

    #[test]
    fn overrides_are_idempotent(
        titles in prop::collection::vec(
            prop::sample::select(vec!["LATHE OPERATOR", "STORE MANAGER", "TUTOR", "SUPERVISOR, BOX MAKER", "HAND"]),
            1..20,
        ),
        flips in prop::collection::vec(prop::bool::ANY, 20),
    ) {
        let mut labels = LabelAssignment::default();
        let mut names = HashMap::new();
        for (i, t) in titles.iter().enumerate() {
            let id = format!("e{i}");
            names.insert(id.clone(), t.to_string());
            labels.labels.insert(id, AssignedLabel {
                label: if flips[i] { JobClass::Physical } else { JobClass::Cognitive },
                posterior: 0.7,
                override_applied: false,
                low_confidence: false,
            });
        }
        let cfg = OverrideConfig::default();
        let (once, _) = apply_title_overrides(&labels, &names, &cfg);
        let (twice, _) = apply_title_overrides(&once, &names, &cfg);
        prop_assert_eq!(&once, &twice);
        for (id, l) in &once.labels {
            if l.override_applied {
                prop_assert_eq!(cfg.dictated(&names[id]), Ok(Some(l.label)));
            }
            prop_assert_eq!(l.posterior, 0.7);
        }
    }
}
