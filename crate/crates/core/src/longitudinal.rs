//! Cross-edition persistence and drift.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{dedupe_and_resolve, EditionCorpus};
use crate::embedding::{DescriptionVector, EmbeddingModel};
use crate::error::{Error, Result};
use crate::graph::{embed_corpus, max_cross_similarity, BestMatch};
use crate::text::normalize_whitespace;

/// Uppercase, collapse whitespace, strip trailing punctuation.
pub fn normalize_title(title: &str) -> String {
    normalize_whitespace(&title.to_uppercase())
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersistenceConfig {
    /// Count alternate titles as present.
    pub include_alt_titles: bool,
    /// Match on the deduplicated corpus instead of every raw entry.
    pub dedupe: bool,
}

/// Normalized titles of one edition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TitleSet {
    pub year: i32,
    pub titles: BTreeSet<String>,
}

impl TitleSet {
    pub fn from_corpus(corpus: &EditionCorpus, config: &PersistenceConfig) -> Self {
        let deduped;
        let source = if config.dedupe {
            deduped = dedupe_and_resolve(corpus).corpus;
            &deduped
        } else {
            corpus
        };
        let mut titles = BTreeSet::new();
        for e in &source.entries {
            titles.insert(normalize_title(&e.title));
            if config.include_alt_titles {
                titles.extend(e.alt_titles.iter().map(|t| normalize_title(t)));
            }
        }
        titles.remove("");
        TitleSet {
            year: corpus.year,
            titles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRow {
    pub focal_year: i32,
    pub other_year: i32,
    pub gap_years: i32,
    pub focal_titles: usize,
    pub pct_titles_absent: f64,
    pub pct_titles_present: f64,
}

/// Share of `focal` titles missing from `other`. `focal == other` is allowed.
pub fn persistence_pair(focal: &TitleSet, other: &TitleSet) -> Result<PersistenceRow> {
    if focal.titles.is_empty() {
        return Err(Error::EmptyInput(format!("edition {} has no titles", focal.year)));
    }
    let absent = focal.titles.iter().filter(|t| !other.titles.contains(*t)).count();
    let pct_absent = 100.0 * absent as f64 / focal.titles.len() as f64;
    Ok(PersistenceRow {
        focal_year: focal.year,
        other_year: other.year,
        gap_years: (focal.year - other.year).abs(),
        focal_titles: focal.titles.len(),
        pct_titles_absent: pct_absent,
        pct_titles_present: 100.0 - pct_absent,
    })
}

fn check_years(years: impl IntoIterator<Item = i32>) -> Result<()> {
    let mut seen = HashSet::new();
    let mut count = 0;
    for y in years {
        if !seen.insert(y) {
            return Err(Error::DuplicateYear(y));
        }
        count += 1;
    }
    if count < 2 {
        return Err(Error::EmptyInput("at least two editions are required".into()));
    }
    Ok(())
}

fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
}

/// One row per ordered pair of distinct editions.
pub fn persistence_from_sets(sets: &[TitleSet]) -> Result<Vec<PersistenceRow>> {
    check_years(sets.iter().map(|s| s.year))?;
    ordered_pairs(sets.len())
        .into_par_iter()
        .map(|(i, j)| persistence_pair(&sets[i], &sets[j]))
        .collect()
}

pub fn title_persistence(editions: &[EditionCorpus], config: &PersistenceConfig) -> Result<Vec<PersistenceRow>> {
    check_years(editions.iter().map(|e| e.year))?;
    let sets: Vec<TitleSet> = editions.par_iter().map(|e| TitleSet::from_corpus(e, config)).collect();
    persistence_from_sets(&sets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub focal_year: i32,
    pub other_year: i32,
    pub gap_years: i32,
    pub mean_max_similarity: f64,
    /// Best match in `other_year` for every embeddable focal job.
    pub matches: Vec<BestMatch>,
}

/// Max-similarity decay over precomputed vectors, one `(year, vectors)` per edition.
pub fn similarity_decay_from_vectors(editions: &[(i32, Vec<DescriptionVector>)]) -> Result<Vec<DecayRow>> {
    check_years(editions.iter().map(|e| e.0))?;
    ordered_pairs(editions.len())
        .into_par_iter()
        .map(|(i, j)| {
            let cross = max_cross_similarity(&editions[i].1, &editions[j].1)?;
            Ok(DecayRow {
                focal_year: editions[i].0,
                other_year: editions[j].0,
                gap_years: (editions[i].0 - editions[j].0).abs(),
                mean_max_similarity: cross.mean_max,
                matches: cross.matches,
            })
        })
        .collect()
}

pub fn similarity_decay(
    editions: &[EditionCorpus],
    model: &EmbeddingModel,
    filter_stopwords: bool,
) -> Result<Vec<DecayRow>> {
    let vectors: Vec<(i32, Vec<DescriptionVector>)> = editions
        .iter()
        .map(|e| (e.year, embed_corpus(e, model, filter_stopwords)))
        .collect();
    similarity_decay_from_vectors(&vectors)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation.
    pub r: f64,
    /// Two-sided t-test on the slope, `n − 2` degrees of freedom.
    pub p_value: f64,
    pub n_points: usize,
}

/// Ordinary least squares fit of `y` on `x`.
pub fn linear_regression(points: &[(f64, f64)]) -> Result<RegressionResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::param("points", format!("{n} points; at least 3 are required")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::param("points", "non-finite coordinate"));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if syy == 0.0 {
        return Ok(RegressionResult {
            slope,
            intercept,
            r: 0.0,
            p_value: 1.0,
            n_points: n,
        });
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p_value = if 1.0 - r * r <= 0.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Degenerate(e.to_string()))?;
        (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
    };
    Ok(RegressionResult {
        slope,
        intercept,
        r,
        p_value,
        n_points: n,
    })
}

/// Percentage absent against gap years.
pub fn persistence_regression(rows: &[PersistenceRow]) -> Result<RegressionResult> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.gap_years as f64, r.pct_titles_absent)).collect();
    linear_regression(&pts)
}

/// Mean maximum similarity against gap years.
pub fn decay_regression(rows: &[DecayRow]) -> Result<RegressionResult> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.gap_years as f64, r.mean_max_similarity)).collect();
    linear_regression(&pts)
}
