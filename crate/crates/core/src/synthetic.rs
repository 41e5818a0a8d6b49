//! Seeded synthetic data: labelled descriptions, planted graphs, edition
//! families with controlled title turnover, and a small text fixture with
//! matching word vectors for end-to-end runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::classifier::{JobClass, LabeledExample};
use crate::corpus::{EditionCorpus, OccupationEntry, SourceSpan};
use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::polarization::LabeledGraph;
use crate::rng::{self, StreamRng};
use crate::text::StopWords;

pub const PHYSICAL_WORDS: &[&str] = &[
    "lathe", "weld", "drill", "grind", "polish", "lift", "haul", "cut", "saw", "sand", "hammer", "rivet", "solder",
    "stack", "load", "bolt", "press", "sew", "mold", "pour", "shovel", "scrape", "paint", "clamp", "trim", "hoist",
    "forge", "stitch", "carve", "pack",
];

pub const COGNITIVE_WORDS: &[&str] = &[
    "plan", "budget", "advise", "analyze", "schedule", "negotiate", "audit", "review", "evaluate", "coordinate",
    "teach", "consult", "interview", "design", "research", "forecast", "record", "compile", "estimate", "counsel",
    "direct", "examine", "interpret", "report", "organize", "draft", "approve", "assess", "verify", "correspond",
];

pub const SHARED_WORDS: &[&str] = &[
    "materials", "equipment", "records", "customers", "orders", "parts", "products", "workers", "machines",
    "supplies", "department", "standards", "specifications", "area", "work", "tasks", "methods", "procedures",
    "production", "quality",
];

const PHYSICAL_ROLES: &[&str] = &["OPERATOR", "MAKER", "HAND", "TENDER", "FITTER"];
const COGNITIVE_ROLES: &[&str] = &["CLERK", "ANALYST", "SUPERVISOR", "MANAGER", "ADVISER"];
const CONNECTIVES: &[&str] = &["the", "and", "of", "to", "with", "for", "in"];

fn class_words(class: JobClass) -> &'static [&'static str] {
    match class {
        JobClass::Physical => PHYSICAL_WORDS,
        JobClass::Cognitive => COGNITIVE_WORDS,
    }
}

/// `len` words: each from the class vocabulary with probability
/// `separability`, otherwise from the shared vocabulary.
fn draw_words(class: JobClass, len: usize, separability: f64, r: &mut StreamRng) -> Vec<&'static str> {
    (0..len)
        .map(|_| {
            let pool = if r.random::<f64>() < separability {
                class_words(class)
            } else {
                SHARED_WORDS
            };
            *pool.choose(r).expect("non-empty vocabulary")
        })
        .collect()
}

/// Lowercase description sentence with interleaved connectives.
fn sentence(words: &[&str], r: &mut StreamRng) -> String {
    let mut s = String::from("Performs");
    for w in words {
        if r.random::<f64>() < 0.3 {
            s.push(' ');
            s.push_str(CONNECTIVES.choose(r).expect("non-empty"));
        }
        s.push(' ');
        s.push_str(w);
    }
    s.push('.');
    s
}

/// Balanced labelled descriptions with exactly `floor(noise · n)` labels
/// flipped.
pub fn labeled_corpus(n: usize, noise: f64, separability: f64, seed: u64) -> Result<Vec<LabeledExample>> {
    if !(0.0..=0.5).contains(&noise) {
        return Err(Error::param("noise", format!("{noise} is outside [0, 0.5]")));
    }
    if !(0.0..=1.0).contains(&separability) {
        return Err(Error::param("separability", format!("{separability} is outside [0, 1]")));
    }
    let mut r = rng::stream(seed, 0);
    let mut out: Vec<LabeledExample> = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { JobClass::Physical } else { JobClass::Cognitive };
            let len = r.random_range(15..=35);
            let words = draw_words(label, len, separability, &mut r);
            LabeledExample {
                description: sentence(&words, &mut r),
                label,
            }
        })
        .collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut r);
    for &i in idx.iter().take((noise * n as f64).floor() as usize) {
        out[i].label = out[i].label.other();
    }
    Ok(out)
}

fn bernoulli_classes(n: usize, p0: f64, r: &mut StreamRng) -> Vec<JobClass> {
    (0..n)
        .map(|_| {
            if r.random::<f64>() < p0 {
                JobClass::Physical
            } else {
                JobClass::Cognitive
            }
        })
        .collect()
}

/// One random graph per premium. Pairs link with probability `edge_prob`
/// and weight `U(0.85, 1)`; within-class weights are multiplied by
/// `1 + premium`. Labels are Bernoulli(`p0`) and shared by all graphs.
pub fn planted_polarization(n: usize, p0: f64, edge_prob: f64, premiums: &[f64], seed: u64) -> Result<Vec<LabeledGraph>> {
    if premiums.iter().any(|p| p.is_nan() || *p < 0.0) {
        return Err(Error::param("premiums", "must be non-negative"));
    }
    let classes = bernoulli_classes(n, p0, &mut rng::stream(seed, 0));
    premiums
        .iter()
        .enumerate()
        .map(|(t, premium)| {
            let mut r = rng::stream(seed, 1 + t as u64);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if r.random::<f64>() < edge_prob {
                        let base = r.random_range(0.85..1.0);
                        let w = if classes[i] == classes[j] { base * (1.0 + premium) } else { base };
                        edges.push(Edge {
                            source: i,
                            target: j,
                            weight: w,
                        });
                    }
                }
            }
            LabeledGraph::new(classes.clone(), edges)
        })
        .collect()
}

/// `blocks` planted communities of `size` nodes. In-block pairs link with
/// probability `p_in` and weight `w_in`, others with `p_out` and `w_out`.
/// Returns the edges and the planted block of each node.
pub fn planted_blocks(
    blocks: usize,
    size: usize,
    (p_in, w_in): (f64, f64),
    (p_out, w_out): (f64, f64),
    seed: u64,
) -> (Vec<Edge>, Vec<usize>) {
    let n = blocks * size;
    let block: Vec<usize> = (0..n).map(|i| i / size).collect();
    let mut r = rng::stream(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (p, w) = if block[i] == block[j] { (p_in, w_in) } else { (p_out, w_out) };
            if r.random::<f64>() < p {
                edges.push(Edge {
                    source: i,
                    target: j,
                    weight: w,
                });
            }
        }
    }
    (edges, block)
}

/// Editions whose titles are windows of `size` over one title pool. The
/// window advances `rate_per_year · size` titles per year plus a jitter of
/// up to `jitter · size` titles, so `rate_per_year · gap` of a focal
/// edition's titles are missing from an edition `gap` years away.
pub fn title_turnover_family(
    years: &[i32],
    size: usize,
    rate_per_year: f64,
    jitter: f64,
    seed: u64,
) -> Result<Vec<EditionCorpus>> {
    let first = *years.iter().min().ok_or_else(|| Error::EmptyInput("no years".into()))?;
    let mut r = rng::stream(seed, 0);
    let stopwords = Arc::new(StopWords::empty());
    years
        .iter()
        .map(|&year| {
            let shift = rate_per_year * (year - first) as f64 + jitter * (2.0 * r.random::<f64>() - 1.0);
            let offset = (shift * size as f64).round().max(0.0) as usize;
            let entries = (offset..offset + size)
                .enumerate()
                .map(|(i, t)| entry(year, i, format!("{} WORKER", pseudo_word(t)), "Performs assigned tasks.".into(), None))
                .collect();
            Ok(EditionCorpus::new(year, entries, stopwords.clone()))
        })
        .collect()
}

fn entry(year: i32, idx: usize, title: String, description: String, code: Option<String>) -> OccupationEntry {
    OccupationEntry {
        id: format!("{year}-{idx:05}"),
        title,
        alt_titles: Vec::new(),
        code,
        industries: vec!["any ind.".into()],
        description,
        references: Vec::new(),
        edition_year: year,
        line: idx + 1,
        span: SourceSpan { start: 0, end: 0 },
    }
}

/// Distinct uppercase pseudo-word for every index.
pub fn pseudo_word(mut i: usize) -> String {
    const ONSETS: &[&str] = &["B", "D", "F", "G", "K", "L", "M", "N", "P", "R", "S", "T", "V", "Z"];
    const VOWELS: &[&str] = &["A", "E", "I", "O", "U"];
    let mut s = String::new();
    loop {
        s.push_str(ONSETS[i % ONSETS.len()]);
        i /= ONSETS.len();
        s.push_str(VOWELS[i % VOWELS.len()]);
        i /= VOWELS.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s.push('R');
    s
}

/// Parameters of the end-to-end text fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFixtureSpec {
    pub years: Vec<i32>,
    pub jobs_per_edition: usize,
    /// Class-word share of descriptions per edition; higher separates the
    /// classes more.
    pub separability: Vec<f64>,
    /// Title-pool shift per year as a fraction of the edition size.
    pub turnover_per_year: f64,
    pub dimension: usize,
    pub seed: u64,
}

impl Default for TextFixtureSpec {
    fn default() -> Self {
        TextFixtureSpec {
            years: vec![1939, 1965, 1991],
            jobs_per_edition: 240,
            separability: vec![0.2, 0.27, 0.35],
            turnover_per_year: 0.0167,
            dimension: 24,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextFixture {
    /// `(year, raw edition text)`.
    pub editions: Vec<(i32, String)>,
    /// Word-vector file contents.
    pub embeddings: String,
    pub training: Vec<LabeledExample>,
    pub lexicon: Vec<String>,
}

fn role_for(class: JobClass, i: usize) -> &'static str {
    match class {
        JobClass::Physical => PHYSICAL_ROLES[i % PHYSICAL_ROLES.len()],
        JobClass::Cognitive => COGNITIVE_ROLES[i % COGNITIVE_ROLES.len()],
    }
}

/// Six-digit code whose worker-function digits lean towards the class.
fn fixture_code(class: JobClass, r: &mut StreamRng) -> String {
    let (data, people, things) = match class {
        JobClass::Physical => (r.random_range(5..=8), r.random_range(6..=8), r.random_range(0..=4)),
        JobClass::Cognitive => (r.random_range(0..=3), r.random_range(0..=5), r.random_range(6..=7)),
    };
    format!("{:03}.{data}{people}{things}-{:03}", r.random_range(0..1000), r.random_range(0..100) * 2)
}

pub fn text_fixture(spec: &TextFixtureSpec) -> Result<TextFixture> {
    if spec.years.len() != spec.separability.len() {
        return Err(Error::param("separability", "one value per year is required"));
    }
    if spec.dimension < 3 {
        return Err(Error::param("dimension", "at least 3 dimensions are required"));
    }
    let first = *spec.years.iter().min().ok_or_else(|| Error::EmptyInput("no years".into()))?;

    let mut editions = Vec::new();
    for (t, (&year, &sep)) in spec.years.iter().zip(&spec.separability).enumerate() {
        let mut r = rng::stream(spec.seed, 100 + t as u64);
        let offset = (spec.turnover_per_year * (year - first) as f64 * spec.jobs_per_edition as f64).round() as usize;
        let mut text = String::new();
        for k in offset..offset + spec.jobs_per_edition {
            // class and title are properties of the pool slot, so they persist across editions
            let class = if k % 2 == 0 { JobClass::Physical } else { JobClass::Cognitive };
            let title = format!("{} {}", pseudo_word(k), role_for(class, k / 2));
            let len = r.random_range(18..=30);
            let words = draw_words(class, len, sep, &mut r);
            let code = fixture_code(class, &mut r);
            let industry = if class == JobClass::Physical { "mach. shop" } else { "clerical" };
            writeln!(text, "{title} ({industry}) {code}. {}", sentence(&words, &mut r)).expect("write to string");
            if k % 40 == 0 {
                writeln!(text, "{} {} (any ind.) see {title}.", pseudo_word(k + 100_000), role_for(class, k))
                    .expect("write to string");
            }
            text.push('\n');
        }
        editions.push((year, text));
    }

    // vectors: class centroid on its own axis plus Gaussian noise
    let mut r = rng::stream(spec.seed, 1);
    let noise = Normal::new(0.0, 0.25).expect("valid normal");
    let mut embeddings = String::new();
    let vocab: Vec<(&str, usize)> = PHYSICAL_WORDS
        .iter()
        .map(|w| (*w, 0))
        .chain(COGNITIVE_WORDS.iter().map(|w| (*w, 1)))
        .chain(SHARED_WORDS.iter().map(|w| (*w, 2)))
        .collect();
    writeln!(embeddings, "{} {}", vocab.len(), spec.dimension).expect("write to string");
    for (word, axis) in &vocab {
        embeddings.push_str(word);
        for d in 0..spec.dimension {
            let v = if d == *axis { 1.0 } else { 0.0 } + noise.sample(&mut r);
            write!(embeddings, " {v:.6}").expect("write to string");
        }
        embeddings.push('\n');
    }

    let training = labeled_corpus(672, 0.0, 0.5, spec.seed)?;

    let mut lexicon: BTreeSet<String> = vocab.iter().map(|(w, _)| w.to_string()).collect();
    lexicon.extend(CONNECTIVES.iter().map(|w| w.to_string()));
    lexicon.insert("performs".into());
    Ok(TextFixture {
        editions,
        embeddings,
        training,
        lexicon: lexicon.into_iter().collect(),
    })
}
