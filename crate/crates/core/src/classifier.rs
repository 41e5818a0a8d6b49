//! Physical / cognitive job labelling.
//!
//! A multinomial Naive Bayes model over bag-of-words counts or tf-idf
//! weights, followed by title-keyword overrides. All scoring happens in log
//! space; descriptions routinely run past 80 tokens and linear-space products
//! underflow.
//!
//! Likelihoods use additive smoothing:
//!
//! ```text
//! P(t | c) = (Σ_{d ∈ c} x_dt + α) / (Σ_t Σ_{d ∈ c} x_dt + α |V|)
//! ```
//!
//! where `x_dt` is the count (BoW) or `count · ln(N / df_t)` (tf-idf) of term
//! `t` in training document `d`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EditionCorpus;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::percentile;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobClass {
    Physical,
    Cognitive,
}

impl JobClass {
    pub const ALL: [JobClass; 2] = [JobClass::Physical, JobClass::Cognitive];

    fn index(self) -> usize {
        match self {
            JobClass::Physical => 0,
            JobClass::Cognitive => 1,
        }
    }

    pub fn other(self) -> JobClass {
        match self {
            JobClass::Physical => JobClass::Cognitive,
            JobClass::Cognitive => JobClass::Physical,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobClass::Physical => "physical",
            JobClass::Cognitive => "cognitive",
        }
    }
}

impl std::str::FromStr for JobClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "physical" | "sensory-physical" => Ok(JobClass::Physical),
            "cognitive" | "socio-cognitive" => Ok(JobClass::Cognitive),
            other => Err(Error::param("label", format!("unknown class `{other}`"))),
        }
    }
}

impl std::fmt::Display for JobClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Bow,
    Tfidf,
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "bow" => Ok(FeatureMode::Bow),
            "tfidf" | "tf-idf" => Ok(FeatureMode::Tfidf),
            other => Err(Error::param("mode", format!("unknown feature mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub description: String,
    pub label: JobClass,
}

/// Sparse features of one description.
///
/// With a vocabulary (token -> idf), tokens outside it are dropped and tf-idf
/// multiplies counts by the idf. Without one, both modes return raw counts.
pub fn featurize(
    description: &str,
    mode: FeatureMode,
    vocabulary: Option<&BTreeMap<String, f64>>,
) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokenize(description) {
        if vocabulary.is_some_and(|v| !v.contains_key(&t)) {
            continue;
        }
        *counts.entry(t).or_insert(0.0) += 1.0;
    }
    if let (FeatureMode::Tfidf, Some(v)) = (mode, vocabulary) {
        for (t, x) in counts.iter_mut() {
            *x *= v[t];
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPriors {
    pub physical: f64,
    pub cognitive: f64,
}

/// Trained multinomial Naive Bayes model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub feature_mode: FeatureMode,
    pub smoothing_alpha: f64,
    pub class_priors: ClassPriors,
    /// Sorted training vocabulary.
    pub vocabulary: Vec<String>,
    /// `ln(N / df)` per vocabulary token.
    pub idf: Vec<f64>,
    /// `[P(t | physical), P(t | cognitive)]` per vocabulary token.
    pub token_likelihoods: Vec<[f64; 2]>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: JobClass,
    pub posterior: f64,
    /// No description token was in the training vocabulary.
    pub low_confidence: bool,
}

impl ClassifierModel {
    /// Fit on all `examples` (no hold-out).
    pub fn fit(examples: &[LabeledExample], mode: FeatureMode, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("smoothing_alpha", format!("{alpha} is not positive")));
        }
        check_classes(examples)?;

        let docs: Vec<Vec<String>> = examples.iter().map(|e| tokenize(&e.description)).collect();
        let vocabulary: Vec<String> = {
            let set: std::collections::BTreeSet<&String> = docs.iter().flatten().collect();
            set.into_iter().cloned().collect()
        };
        let index: HashMap<String, usize> = vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();

        let n_docs = docs.len() as f64;
        let mut df = vec![0usize; vocabulary.len()];
        for d in &docs {
            let uniq: HashSet<usize> = d.iter().map(|t| index[t]).collect();
            for i in uniq {
                df[i] += 1;
            }
        }
        let idf: Vec<f64> = df.iter().map(|&d| (n_docs / d as f64).ln()).collect();

        let mut sums = vec![[0.0f64; 2]; vocabulary.len()];
        let mut class_docs = [0usize; 2];
        for (doc, example) in docs.iter().zip(examples) {
            let c = example.label.index();
            class_docs[c] += 1;
            for t in doc {
                let i = index[t];
                sums[i][c] += match mode {
                    FeatureMode::Bow => 1.0,
                    FeatureMode::Tfidf => idf[i],
                };
            }
        }
        let totals = [0, 1].map(|c| sums.iter().map(|s| s[c]).sum::<f64>());
        let v = vocabulary.len() as f64;
        let token_likelihoods = sums
            .iter()
            .map(|s| [0, 1].map(|c| (s[c] + alpha) / (totals[c] + alpha * v)))
            .collect();

        Ok(ClassifierModel {
            feature_mode: mode,
            smoothing_alpha: alpha,
            class_priors: ClassPriors {
                physical: class_docs[0] as f64 / n_docs,
                cognitive: class_docs[1] as f64 / n_docs,
            },
            vocabulary,
            idf,
            token_likelihoods,
            index,
        })
    }

    fn rebuild_index(&mut self) {
        self.index = self.vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut model: ClassifierModel = serde_json::from_str(text)?;
        if model.vocabulary.len() != model.idf.len() || model.vocabulary.len() != model.token_likelihoods.len() {
            return Err(Error::Degenerate("classifier vocabulary and tables differ in length".into()));
        }
        model.rebuild_index();
        Ok(model)
    }

    /// Per-class log posteriors (unnormalized) and whether any token was known.
    pub fn log_posteriors(&self, description: &str) -> ([f64; 2], bool) {
        let mut lp = [self.class_priors.physical.ln(), self.class_priors.cognitive.ln()];
        let mut known = false;
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokenize(description) {
            if let Some(&i) = self.index.get(&t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
                known = true;
            }
        }
        for (i, count) in counts {
            let x = match self.feature_mode {
                FeatureMode::Bow => count,
                FeatureMode::Tfidf => count * self.idf[i],
            };
            for (c, l) in lp.iter_mut().enumerate() {
                *l += x * self.token_likelihoods[i][c].ln();
            }
        }
        (lp, known)
    }

    /// Most probable class; ties go to `Physical`.
    pub fn classify(&self, description: &str) -> Classification {
        let (lp, known) = self.log_posteriors(description);
        let label = if lp[0] >= lp[1] {
            JobClass::Physical
        } else {
            JobClass::Cognitive
        };
        let gap = (lp[0] - lp[1]).abs();
        Classification {
            label,
            posterior: 1.0 / (1.0 + (-gap).exp()),
            low_confidence: !known,
        }
    }

    pub fn accuracy(&self, examples: &[LabeledExample]) -> f64 {
        if examples.is_empty() {
            return f64::NAN;
        }
        let hits = examples.iter().filter(|e| self.classify(&e.description).label == e.label).count();
        hits as f64 / examples.len() as f64
    }
}

fn check_classes(examples: &[LabeledExample]) -> Result<()> {
    let mut counts = [0usize; 2];
    for e in examples {
        if e.description.trim().is_empty() {
            return Err(Error::param("examples", "empty description in training data"));
        }
        counts[e.label.index()] += 1;
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::SingleClass(format!(
            "physical: {}, cognitive: {}",
            counts[0], counts[1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub held_out_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

pub const TRAIN_FRACTION: f64 = 0.8;

/// Shuffle with `split_seed`, fit on the first 80% and score the rest.
pub fn train(examples: &[LabeledExample], mode: FeatureMode, alpha: f64, split_seed: u64) -> Result<TrainOutcome> {
    check_classes(examples)?;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng::stream(split_seed, 0));
    let n_train = (examples.len() as f64 * TRAIN_FRACTION).floor() as usize;
    let pick = |ix: &[usize]| ix.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
    let (train_set, test_set) = (pick(&order[..n_train]), pick(&order[n_train..]));
    let model = ClassifierModel::fit(&train_set, mode, alpha)?;
    Ok(TrainOutcome {
        held_out_accuracy: model.accuracy(&test_set),
        n_train,
        n_test: test_set.len(),
        model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignedLabel {
    pub label: JobClass,
    /// Model posterior of its own top class, in `[0.5, 1]`.
    pub posterior: f64,
    pub override_applied: bool,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub labels: BTreeMap<String, AssignedLabel>,
}

impl LabelAssignment {
    pub fn get(&self, id: &str) -> Option<&AssignedLabel> {
        self.labels.get(id)
    }

    pub fn fraction(&self, class: JobClass) -> f64 {
        if self.labels.is_empty() {
            return f64::NAN;
        }
        self.labels.values().filter(|l| l.label == class).count() as f64 / self.labels.len() as f64
    }

    pub fn write_csv<W: Write>(&self, titles: &HashMap<String, String>, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["entry_id", "title", "label", "posterior", "override_applied"])?;
        for (id, l) in &self.labels {
            out.write_record([
                id.as_str(),
                titles.get(id).map(String::as_str).unwrap_or(""),
                l.label.as_str(),
                &l.posterior.to_string(),
                if l.override_applied { "true" } else { "false" },
            ])?;
        }
        out.flush().map_err(|e| Error::io("<labels.csv>", e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            entry_id: String,
            label: String,
            posterior: f64,
            override_applied: bool,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let mut labels = BTreeMap::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            labels.insert(
                row.entry_id,
                AssignedLabel {
                    label: row.label.parse()?,
                    posterior: row.posterior,
                    override_applied: row.override_applied,
                    low_confidence: false,
                },
            );
        }
        Ok(LabelAssignment { labels })
    }
}

pub fn classify_corpus(model: &ClassifierModel, corpus: &EditionCorpus) -> LabelAssignment {
    let labels: Vec<(String, AssignedLabel)> = corpus
        .entries
        .par_iter()
        .map(|e| {
            let c = model.classify(&e.description);
            (
                e.id.clone(),
                AssignedLabel {
                    label: c.label,
                    posterior: c.posterior,
                    override_applied: false,
                    low_confidence: c.low_confidence,
                },
            )
        })
        .collect();
    LabelAssignment {
        labels: labels.into_iter().collect(),
    }
}

/// Title keyword -> class. Keywords are matched as whole words,
/// case-insensitively.
#[derive(Debug, Clone, PartialEq)]
pub struct OverrideConfig {
    pub keywords: BTreeMap<String, JobClass>,
}

impl Default for OverrideConfig {
    fn default() -> Self {
        let keywords = [
            ("OPERATOR", JobClass::Physical),
            ("MAKER", JobClass::Physical),
            ("SUPERVISOR", JobClass::Cognitive),
            ("MANAGER", JobClass::Cognitive),
        ]
        .into_iter()
        .map(|(k, c)| (k.to_string(), c))
        .collect();
        OverrideConfig { keywords }
    }
}

impl OverrideConfig {
    /// `keyword=class` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut keywords = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                path: "<overrides>".into(),
                line: i + 1,
                reason: "expected keyword=class".into(),
            })?;
            let k = k.trim().to_uppercase();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Format {
                    path: "<overrides>".into(),
                    line: i + 1,
                    reason: format!("keyword `{k}` must be a single word"),
                });
            }
            keywords.insert(k, v.parse()?);
        }
        Ok(OverrideConfig { keywords })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The class dictated by `title`: `Ok(None)` without keywords,
    /// `Err(keywords)` when keywords of both classes appear.
    pub fn dictated(&self, title: &str) -> std::result::Result<Option<JobClass>, Vec<String>> {
        let words: Vec<String> = tokenize(title).into_iter().map(|w| w.to_uppercase()).collect();
        let hits: Vec<(&String, JobClass)> = words
            .iter()
            .filter_map(|w| self.keywords.get(w).map(|c| (w, *c)))
            .collect();
        match hits.first() {
            None => Ok(None),
            Some(&(_, c)) if hits.iter().all(|&(_, h)| h == c) => Ok(Some(c)),
            Some(_) => Err(hits.iter().map(|(w, _)| w.to_string()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideWarning {
    pub entry_id: String,
    pub title: String,
    pub keywords: Vec<String>,
}

/// Relabel entries whose titles contain override keywords of exactly one class.
pub fn apply_title_overrides(
    assignment: &LabelAssignment,
    titles: &HashMap<String, String>,
    config: &OverrideConfig,
) -> (LabelAssignment, Vec<OverrideWarning>) {
    let mut out = assignment.clone();
    let mut warnings = Vec::new();
    for (id, label) in out.labels.iter_mut() {
        let Some(title) = titles.get(id) else { continue };
        match config.dictated(title) {
            Ok(Some(class)) => {
                if label.label != class || label.override_applied {
                    label.label = class;
                    label.override_applied = true;
                }
            }
            Ok(None) => {}
            Err(keywords) => warnings.push(OverrideWarning {
                entry_id: id.clone(),
                title: title.clone(),
                keywords,
            }),
        }
    }
    (out, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkerAxis {
    Data,
    People,
    Things,
}

impl WorkerAxis {
    pub const ALL: [WorkerAxis; 3] = [WorkerAxis::Data, WorkerAxis::People, WorkerAxis::Things];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerFunctionRow {
    pub axis: WorkerAxis,
    pub function: u8,
    pub jobs: usize,
    pub physical: usize,
    pub cognitive: usize,
    pub pct_physical: f64,
    pub pct_cognitive: f64,
    /// Percentile bootstrap interval of `pct_physical`.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataValidation {
    pub rows: Vec<WorkerFunctionRow>,
    pub skipped: usize,
    pub bootstrap_n: usize,
}

/// The three digits after the point of a `ddd.ddd[-ddd]` code. Codes in any
/// other scheme carry no worker-function digits and yield `None`.
pub fn worker_function_digits(code: &str) -> Option<[u8; 3]> {
    let b = code.trim().as_bytes();
    let digit = |i: usize| b.get(i).filter(|c| c.is_ascii_digit()).map(|c| c - b'0');
    if b.get(3) != Some(&b'.') || (0..3).any(|i| digit(i).is_none()) {
        return None;
    }
    Some([digit(4)?, digit(5)?, digit(6)?])
}

/// Physical / cognitive share per worker-function value with bootstrap
/// intervals (`bootstrap_n` resamples per group, 2.5 / 97.5 percentiles).
pub fn metadata_validation(
    assignment: &LabelAssignment,
    codes: &HashMap<String, String>,
    bootstrap_n: usize,
    seed: u64,
) -> Result<MetadataValidation> {
    if bootstrap_n == 0 {
        return Err(Error::param("bootstrap_n", "must be at least 1"));
    }
    let mut groups: BTreeMap<(WorkerAxis, u8), [usize; 2]> = BTreeMap::new();
    let mut skipped = 0;
    for (id, label) in &assignment.labels {
        let Some(digits) = codes.get(id).and_then(|c| worker_function_digits(c)) else {
            skipped += 1;
            continue;
        };
        for axis in WorkerAxis::ALL {
            let d = match axis {
                WorkerAxis::Data => digits[0],
                WorkerAxis::People => digits[1],
                WorkerAxis::Things => digits[2],
            };
            groups.entry((axis, d)).or_insert([0, 0])[label.label.index()] += 1;
        }
    }

    let rows = groups
        .into_iter()
        .map(|((axis, function), counts)| {
            let jobs = counts[0] + counts[1];
            let pct = |k: usize| 100.0 * k as f64 / jobs as f64;
            // Resampling `jobs` binary labels with replacement is a binomial
            // draw on the physical count.
            let binom = Binomial::new(jobs as u64, counts[0] as f64 / jobs as f64).expect("valid binomial");
            let mut r = rng::stream(seed, (axis as u64) * 16 + function as u64);
            let samples: Vec<f64> = (0..bootstrap_n)
                .map(|_| 100.0 * binom.sample(&mut r) as f64 / jobs as f64)
                .collect();
            WorkerFunctionRow {
                axis,
                function,
                jobs,
                physical: counts[0],
                cognitive: counts[1],
                pct_physical: pct(counts[0]),
                pct_cognitive: pct(counts[1]),
                ci_low: percentile(&samples, 2.5),
                ci_high: percentile(&samples, 97.5),
            }
        })
        .collect();
    Ok(MetadataValidation {
        rows,
        skipped,
        bootstrap_n,
    })
}

/// Agreement rate with manual labels. Every manual id must be assigned.
pub fn evaluate_against_manual(assignment: &LabelAssignment, manual: &[(String, JobClass)]) -> Result<f64> {
    if manual.is_empty() {
        return Err(Error::EmptyInput("manual labels".into()));
    }
    let missing: Vec<String> = manual
        .iter()
        .filter(|(id, _)| !assignment.labels.contains_key(id))
        .map(|(id, _)| id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    let hits = manual.iter().filter(|(id, c)| assignment.labels[id].label == *c).count();
    Ok(hits as f64 / manual.len() as f64)
}

/// `description,label` rows.
pub fn read_training_csv(path: &Path) -> Result<Vec<LabeledExample>> {
    #[derive(Deserialize)]
    struct Row {
        description: String,
        label: String,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        out.push(LabeledExample {
            description: row.description,
            label: row.label.parse()?,
        });
    }
    Ok(out)
}

pub fn write_training_csv<W: Write>(examples: &[LabeledExample], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["description", "label"])?;
    for e in examples {
        out.write_record([e.description.as_str(), e.label.as_str()])?;
    }
    out.flush().map_err(|e| Error::io("<training.csv>", e))?;
    Ok(())
}

/// `entry_id,label` rows.
pub fn read_manual_csv(path: &Path) -> Result<Vec<(String, JobClass)>> {
    #[derive(Deserialize)]
    struct Row {
        entry_id: String,
        label: String,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        out.push((row.entry_id, row.label.parse()?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(d: &str, l: JobClass) -> LabeledExample {
        LabeledExample {
            description: d.into(),
            label: l,
        }
    }

    #[test]
    fn bow_counts() {
        let f = featurize("lathe lathe operator", FeatureMode::Bow, None);
        assert_eq!(f["lathe"], 2.0);
        assert_eq!(f["operator"], 1.0);
        let vocab: BTreeMap<String, f64> = [("lathe".to_string(), 0.5)].into_iter().collect();
        let f = featurize("lathe unknown", FeatureMode::Tfidf, Some(&vocab));
        assert_eq!(f.len(), 1);
        assert_eq!(f["lathe"], 0.5);
    }

    #[test]
    fn idf_is_log_of_document_ratio() {
        let docs = [
            ex("lathe drill", JobClass::Physical),
            ex("lathe weld", JobClass::Physical),
            ex("plans budget", JobClass::Cognitive),
            ex("plans advises", JobClass::Cognitive),
        ];
        let m = ClassifierModel::fit(&docs, FeatureMode::Tfidf, 1.0).unwrap();
        let i = m.vocabulary.iter().position(|t| t == "lathe").unwrap();
        assert!((m.idf[i] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_class_is_rejected() {
        let docs = [ex("a b", JobClass::Physical), ex("c d", JobClass::Physical), ex("e", JobClass::Cognitive)];
        assert!(matches!(
            ClassifierModel::fit(&docs, FeatureMode::Bow, 1.0),
            Err(Error::SingleClass(_))
        ));
        assert!(train(&docs[..2], FeatureMode::Bow, 1.0, 1).is_err());
    }

    #[test]
    fn hand_computed_posterior() {
        // vocabulary: budget, directs, lathe, schedules, welds, workers
        let docs = [
            ex("lathe welds workers", JobClass::Physical),
            ex("lathe workers", JobClass::Physical),
            ex("directs schedules workers", JobClass::Cognitive),
            ex("directs budget", JobClass::Cognitive),
        ];
        let m = ClassifierModel::fit(&docs, FeatureMode::Bow, 1.0).unwrap();
        assert_eq!(m.vocabulary.len(), 6);
        // physical totals: 5 tokens, cognitive: 5 tokens; denominators 5 + 6
        let p_phys = 0.5 * (1.0 / 11.0) * (3.0 / 11.0) * (1.0 / 11.0);
        let p_cog = 0.5 * (3.0 / 11.0) * (2.0 / 11.0) * (2.0 / 11.0);
        let want = p_cog / (p_phys + p_cog);
        let c = m.classify("directs workers schedules");
        assert_eq!(c.label, JobClass::Cognitive);
        assert!((c.posterior - want).abs() < 1e-12);
    }

    #[test]
    fn unknown_description_falls_back_to_priors() {
        let docs = [
            ex("lathe", JobClass::Physical),
            ex("weld", JobClass::Physical),
            ex("plans", JobClass::Cognitive),
            ex("budget", JobClass::Cognitive),
        ];
        let m = ClassifierModel::fit(&docs, FeatureMode::Bow, 1.0).unwrap();
        let c = m.classify("zzz qqq");
        assert_eq!(c.label, JobClass::Physical);
        assert_eq!(c.posterior, 0.5);
        assert!(c.low_confidence);
        assert_eq!(m.classify("lathe").label, JobClass::Physical);
        assert_eq!(m.classify("budget").label, JobClass::Cognitive);
    }

    #[test]
    fn model_json_round_trip() {
        let docs = [
            ex("lathe", JobClass::Physical),
            ex("weld lathe", JobClass::Physical),
            ex("plans", JobClass::Cognitive),
            ex("budget plans", JobClass::Cognitive),
        ];
        let m = ClassifierModel::fit(&docs, FeatureMode::Tfidf, 0.5).unwrap();
        let back = ClassifierModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.classify("weld plans"), m.classify("weld plans"));
    }

    fn assignment(pairs: &[(&str, JobClass)]) -> LabelAssignment {
        LabelAssignment {
            labels: pairs
                .iter()
                .map(|(id, c)| {
                    (
                        id.to_string(),
                        AssignedLabel {
                            label: *c,
                            posterior: 0.8,
                            override_applied: false,
                            low_confidence: false,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn supervisor_title_override() {
        let a = assignment(&[("1", JobClass::Physical), ("2", JobClass::Physical), ("3", JobClass::Cognitive)]);
        let titles: HashMap<String, String> = [
            ("1", "SUPERVISOR, BRIDGES AND BUILDINGS"),
            ("2", "TUTOR"),
            ("3", "SUPERVISOR, MACHINE OPERATOR"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let (out, warnings) = apply_title_overrides(&a, &titles, &OverrideConfig::default());
        assert_eq!(out.labels["1"].label, JobClass::Cognitive);
        assert!(out.labels["1"].override_applied);
        assert_eq!(out.labels["2"], a.labels["2"]);
        assert_eq!(out.labels["3"], a.labels["3"]);
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].entry_id, "3");
        let (twice, _) = apply_title_overrides(&out, &titles, &OverrideConfig::default());
        assert_eq!(twice, out);
    }

    #[test]
    fn override_matching_is_whole_word() {
        let c = OverrideConfig::default();
        assert_eq!(c.dictated("Machine operator"), Ok(Some(JobClass::Physical)));
        assert_eq!(c.dictated("OPERATORS' HELPER"), Ok(None));
        assert_eq!(c.dictated("BOX-MAKER"), Ok(Some(JobClass::Physical)));
    }

    #[test]
    fn override_file_parsing() {
        let c = OverrideConfig::parse("# comment\noperator = physical\nClerk=cognitive\n").unwrap();
        assert_eq!(c.keywords.len(), 2);
        assert_eq!(c.keywords["CLERK"], JobClass::Cognitive);
        assert!(OverrideConfig::parse("no equals sign").is_err());
        assert!(OverrideConfig::parse("x=neither").is_err());
    }

    #[test]
    fn manual_agreement() {
        let a = assignment(&[("1", JobClass::Physical), ("2", JobClass::Cognitive)]);
        let same = vec![("1".to_string(), JobClass::Physical), ("2".to_string(), JobClass::Cognitive)];
        assert_eq!(evaluate_against_manual(&a, &same).unwrap(), 1.0);
        let half = vec![("1".to_string(), JobClass::Cognitive), ("2".to_string(), JobClass::Cognitive)];
        assert_eq!(evaluate_against_manual(&a, &half).unwrap(), 0.5);
        let missing = vec![("9".to_string(), JobClass::Physical)];
        match evaluate_against_manual(&a, &missing) {
            Err(Error::MissingIds(ids)) => assert_eq!(ids, vec!["9"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forty_items_three_disagreements() {
        let pairs: Vec<(String, JobClass)> = (0..40)
            .map(|i| (format!("e{i}"), if i % 2 == 0 { JobClass::Physical } else { JobClass::Cognitive }))
            .collect();
        let a = LabelAssignment {
            labels: pairs
                .iter()
                .map(|(id, c)| {
                    let flipped = matches!(id.as_str(), "e3" | "e17" | "e30");
                    (
                        id.clone(),
                        AssignedLabel {
                            label: if flipped { c.other() } else { *c },
                            posterior: 0.9,
                            override_applied: false,
                            low_confidence: false,
                        },
                    )
                })
                .collect(),
        };
        assert_eq!(evaluate_against_manual(&a, &pairs).unwrap(), 0.925);
    }

    #[test]
    fn worker_digits() {
        assert_eq!(worker_function_digits("652.382-010"), Some([3, 8, 2]));
        assert_eq!(worker_function_digits("4-76.210"), None);
        assert_eq!(worker_function_digits("652.38"), None);
    }

    #[test]
    fn metadata_all_physical() {
        let a = assignment(&[("1", JobClass::Physical), ("2", JobClass::Physical)]);
        let codes: HashMap<String, String> = [("1", "652.382-010"), ("2", "001.061-010")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let v = metadata_validation(&a, &codes, 100, 3).unwrap();
        assert_eq!(v.skipped, 0);
        for r in &v.rows {
            assert_eq!(r.pct_physical, 100.0);
            assert_eq!((r.ci_low, r.ci_high), (100.0, 100.0));
        }
    }
}
