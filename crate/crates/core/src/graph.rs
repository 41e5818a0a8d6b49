//! Weighted occupation networks from pairwise description similarity.
//!
//! Three weightings are supported:
//!
//! * `embedding_cosine`: cosine of averaged word vectors.
//! * `tfidf_cosine`: cosine of tf-idf vectors with `tf` the raw token count
//!   and `idf = ln(N / df)` over the documents of the edition.
//! * `token_jaccard`: `|A ∩ B| / |A ∪ B|` over token sets.
//!
//! All pairs `i < j` are scored exactly; rows are processed in parallel and
//! concatenated in row order, so the edge list is identical for any number of
//! worker threads.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EditionCorpus;
use crate::embedding::{cosine_with_norms, embed_description, norm, DescriptionVector, EmbeddingModel};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    EmbeddingCosine,
    TfidfCosine,
    TokenJaccard,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::EmbeddingCosine => "embedding_cosine",
            Weighting::TfidfCosine => "tfidf_cosine",
            Weighting::TokenJaccard => "token_jaccard",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedding_cosine" => Ok(Weighting::EmbeddingCosine),
            "tfidf_cosine" => Ok(Weighting::TfidfCosine),
            "token_jaccard" => Ok(Weighting::TokenJaccard),
            other => Err(Error::param("weighting", format!("unknown weighting `{other}`"))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub threshold: f64,
    pub weighting: Weighting,
    pub filter_stopwords: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            threshold: DEFAULT_THRESHOLD,
            weighting: Weighting::EmbeddingCosine,
            filter_stopwords: true,
        }
    }
}

pub fn validate_threshold(threshold: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::param("threshold", format!("{threshold} outside [-1, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Undirected weighted graph. Edges are stored once with `source < target`,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub year: i32,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Edge>,
    pub threshold: f64,
    pub weighting: Weighting,
    /// Entries left out because they have no usable representation.
    pub excluded: Vec<String>,
}

impl SimilarityGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(a, b)))
            .ok()
            .map(|k| self.edges[k].weight)
    }

    /// Node strengths `k_i = Σ_j w_ij`.
    pub fn strengths(&self) -> Vec<f64> {
        let mut k = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            k[e.source] += e.weight;
            k[e.target] += e.weight;
        }
        k
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Copy of the graph with only edges of weight `>= threshold`.
    pub fn filtered(&self, threshold: f64) -> Result<Self> {
        validate_threshold(threshold)?;
        Ok(SimilarityGraph {
            edges: self.edges.iter().filter(|e| e.weight >= threshold).copied().collect(),
            threshold,
            ..self.clone()
        })
    }

    /// Edge list as `src_id<TAB>dst_id<TAB>weight` with a header row.
    pub fn write_edges_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<edges.tsv>", e);
        writeln!(w, "src_id\tdst_id\tweight").map_err(io)?;
        for e in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.nodes[e.source].id, self.nodes[e.target].id, e.weight
            )
            .map_err(io)?;
        }
        Ok(())
    }

    pub fn manifest(&self, labels: Option<&BTreeMap<String, String>>) -> NodeManifest {
        NodeManifest {
            year: self.year,
            threshold: self.threshold,
            weighting: self.weighting,
            nodes: self
                .nodes
                .iter()
                .map(|n| ManifestNode {
                    id: n.id.clone(),
                    title: n.title.clone(),
                    year: self.year,
                    label: labels.and_then(|l| l.get(&n.id).cloned()),
                })
                .collect(),
            excluded: self.excluded.clone(),
        }
    }

    /// Rebuild a graph from its manifest and TSV edge list.
    pub fn read_exported<R: BufRead>(manifest: &NodeManifest, edges: R) -> Result<Self> {
        let index: HashMap<&str, usize> = manifest
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut out = Vec::new();
        for (i, line) in edges.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<edges.tsv>", e))?;
            if i == 0 || line.is_empty() {
                continue;
            }
            let fail = |reason: String| Error::Format {
                path: "<edges.tsv>".into(),
                line: i + 1,
                reason,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(fail(format!("expected 3 columns, found {}", cols.len())));
            }
            let a = *index.get(cols[0]).ok_or_else(|| fail(format!("unknown node {}", cols[0])))?;
            let b = *index.get(cols[1]).ok_or_else(|| fail(format!("unknown node {}", cols[1])))?;
            let weight: f64 = cols[2].parse().map_err(|e| fail(format!("bad weight: {e}")))?;
            let (source, target) = if a < b { (a, b) } else { (b, a) };
            if source == target {
                return Err(fail("self-loop".into()));
            }
            out.push(Edge { source, target, weight });
        }
        out.sort_by_key(|e| (e.source, e.target));
        Ok(SimilarityGraph {
            year: manifest.year,
            nodes: manifest
                .nodes
                .iter()
                .map(|n| GraphNode {
                    id: n.id.clone(),
                    title: n.title.clone(),
                })
                .collect(),
            edges: out,
            threshold: manifest.threshold,
            weighting: manifest.weighting,
            excluded: manifest.excluded.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestNode {
    pub id: String,
    pub title: String,
    pub year: i32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

/// JSON companion of the TSV edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeManifest {
    pub year: i32,
    pub threshold: f64,
    pub weighting: Weighting,
    pub nodes: Vec<ManifestNode>,
    pub excluded: Vec<String>,
}

/// Score every pair `i < j` with `sim` and keep those `>= threshold`.
pub fn all_pairs<F>(n: usize, threshold: f64, sim: F) -> Vec<Edge>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let rows: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .filter_map(|j| {
                    let w = sim(i, j);
                    (w >= threshold).then_some(Edge {
                        source: i,
                        target: j,
                        weight: w,
                    })
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// Embed every entry of `corpus`; entries without coverage keep an empty vector.
pub fn embed_corpus(corpus: &EditionCorpus, model: &EmbeddingModel, filter_stopwords: bool) -> Vec<DescriptionVector> {
    corpus
        .entries
        .par_iter()
        .map(|e| embed_description(&e.id, &corpus.description_tokens(e, filter_stopwords), model))
        .collect()
}

/// Graph over precomputed description vectors. `titles` maps entry ids to
/// titles for the node manifest.
pub fn graph_from_vectors(
    year: i32,
    vectors: &[DescriptionVector],
    titles: &HashMap<String, String>,
    threshold: f64,
) -> Result<SimilarityGraph> {
    validate_threshold(threshold)?;
    let mut excluded = Vec::new();
    let mut kept: Vec<(&DescriptionVector, f64)> = Vec::new();
    for v in vectors {
        let n = if v.is_empty() { 0.0 } else { norm(&v.vector) };
        if n > 0.0 {
            kept.push((v, n));
        } else {
            excluded.push(v.entry_id.clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput(format!("edition {year}: no embeddable descriptions")));
    }
    let edges = all_pairs(kept.len(), threshold, |i, j| {
        let ((u, nu), (v, nv)) = (kept[i], kept[j]);
        cosine_with_norms(&u.vector, &v.vector, nu, nv)
    });
    Ok(SimilarityGraph {
        year,
        nodes: kept
            .iter()
            .map(|(v, _)| GraphNode {
                id: v.entry_id.clone(),
                title: titles.get(&v.entry_id).cloned().unwrap_or_default(),
            })
            .collect(),
        edges,
        threshold,
        weighting: Weighting::EmbeddingCosine,
        excluded,
    })
}

struct Vocabulary {
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    fn new() -> Self {
        Vocabulary { ids: HashMap::new() }
    }

    fn id(&mut self, token: &str) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(token.to_string()).or_insert(next)
    }
}

/// Sorted term-id -> count pairs.
fn term_counts(tokens: &[String], vocab: &mut Vocabulary) -> Vec<(u32, f64)> {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in tokens {
        *counts.entry(vocab.id(t)).or_insert(0.0) += 1.0;
    }
    counts.into_iter().collect()
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// L2-normalized tf-idf vectors; `None` for documents whose vector vanishes.
pub fn tfidf_vectors(docs: &[Vec<String>]) -> Vec<Option<Vec<(u32, f64)>>> {
    let mut vocab = Vocabulary::new();
    let counts: Vec<Vec<(u32, f64)>> = docs.iter().map(|d| term_counts(d, &mut vocab)).collect();
    let n_docs = counts.iter().filter(|c| !c.is_empty()).count() as f64;
    let mut df = vec![0usize; vocab.ids.len()];
    for c in &counts {
        for &(t, _) in c {
            df[t as usize] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| {
            let weighted: Vec<(u32, f64)> = c
                .into_iter()
                .map(|(t, tf)| (t, tf * (n_docs / df[t as usize] as f64).ln()))
                .filter(|&(_, w)| w != 0.0)
                .collect();
            let nrm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            (nrm > 0.0).then(|| weighted.into_iter().map(|(t, w)| (t, w / nrm)).collect())
        })
        .collect()
}

/// Build the similarity network of one (deduplicated) edition.
///
/// `model` is required for `embedding_cosine` and ignored otherwise.
pub fn build_similarity_graph(
    corpus: &EditionCorpus,
    model: Option<&EmbeddingModel>,
    options: &GraphOptions,
) -> Result<SimilarityGraph> {
    validate_threshold(options.threshold)?;
    let titles: HashMap<String, String> = corpus
        .entries
        .iter()
        .map(|e| (e.id.clone(), e.title.clone()))
        .collect();

    if options.weighting == Weighting::EmbeddingCosine {
        let model = model.ok_or_else(|| Error::param("model", "embedding weighting needs a word-vector model"))?;
        let vectors = embed_corpus(corpus, model, options.filter_stopwords);
        return graph_from_vectors(corpus.year, &vectors, &titles, options.threshold);
    }

    let docs: Vec<Vec<String>> = corpus
        .entries
        .iter()
        .map(|e| corpus.description_tokens(e, options.filter_stopwords))
        .collect();
    let mut excluded = Vec::new();
    let mut nodes = Vec::new();
    let edges = match options.weighting {
        Weighting::TfidfCosine => {
            let vecs = tfidf_vectors(&docs);
            let mut kept = Vec::new();
            for (entry, v) in corpus.entries.iter().zip(vecs) {
                match v {
                    Some(v) => {
                        nodes.push(GraphNode {
                            id: entry.id.clone(),
                            title: entry.title.clone(),
                        });
                        kept.push(v);
                    }
                    None => excluded.push(entry.id.clone()),
                }
            }
            all_pairs(kept.len(), options.threshold, |i, j| {
                sparse_dot(&kept[i], &kept[j]).clamp(-1.0, 1.0)
            })
        }
        Weighting::TokenJaccard => {
            let mut vocab = Vocabulary::new();
            let mut kept: Vec<Vec<u32>> = Vec::new();
            for (entry, d) in corpus.entries.iter().zip(&docs) {
                if d.is_empty() {
                    excluded.push(entry.id.clone());
                    continue;
                }
                let mut set: Vec<u32> = d.iter().map(|t| vocab.id(t)).collect();
                set.sort_unstable();
                set.dedup();
                nodes.push(GraphNode {
                    id: entry.id.clone(),
                    title: entry.title.clone(),
                });
                kept.push(set);
            }
            all_pairs(kept.len(), options.threshold, |i, j| {
                let inter = intersection_size(&kept[i], &kept[j]);
                let union = kept[i].len() + kept[j].len() - inter;
                inter as f64 / union as f64
            })
        }
        Weighting::EmbeddingCosine => unreachable!(),
    };
    if nodes.is_empty() {
        return Err(Error::EmptyInput(format!("edition {}: no usable descriptions", corpus.year)));
    }
    Ok(SimilarityGraph {
        year: corpus.year,
        nodes,
        edges,
        threshold: options.threshold,
        weighting: options.weighting,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestMatch {
    pub focal_id: String,
    pub match_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSimilarity {
    pub matches: Vec<BestMatch>,
    pub mean_max: f64,
}

/// For every embeddable focal description, the most similar description of
/// `other` (first one on ties). Matching an identical description is allowed.
pub fn max_cross_similarity(focal: &[DescriptionVector], other: &[DescriptionVector]) -> Result<CrossSimilarity> {
    let targets: Vec<(&DescriptionVector, f64)> = other
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| (v, norm(&v.vector)))
        .filter(|&(_, n)| n > 0.0)
        .collect();
    if targets.is_empty() {
        return Err(Error::EmptyInput("comparison edition has no embeddable descriptions".into()));
    }
    let matches: Vec<BestMatch> = focal
        .par_iter()
        .filter(|v| !v.is_empty())
        .filter_map(|v| {
            let nv = norm(&v.vector);
            if nv == 0.0 {
                return None;
            }
            let mut best: Option<(usize, f64)> = None;
            for (k, (t, nt)) in targets.iter().enumerate() {
                let s = cosine_with_norms(&v.vector, &t.vector, nv, *nt);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((k, s));
                }
            }
            let (k, s) = best?;
            Some(BestMatch {
                focal_id: v.entry_id.clone(),
                match_id: targets[k].0.entry_id.clone(),
                similarity: s,
            })
        })
        .collect();
    if matches.is_empty() {
        return Err(Error::EmptyInput("focal edition has no embeddable descriptions".into()));
    }
    let mean_max = matches.iter().map(|m| m.similarity).sum::<f64>() / matches.len() as f64;
    Ok(CrossSimilarity { matches, mean_max })
}

pub fn write_vectors_jsonl<W: Write>(vectors: &[DescriptionVector], mut w: W) -> Result<()> {
    for v in vectors {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n").map_err(|e| Error::io("<vectors.jsonl>", e))?;
    }
    Ok(())
}

pub fn read_vectors_jsonl(path: &Path) -> Result<Vec<DescriptionVector>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_edition, GrammarConfig};

    fn corpus(text: &str) -> EditionCorpus {
        parse_edition(text, 1939, &GrammarConfig::default()).unwrap().corpus
    }

    fn model() -> EmbeddingModel {
        EmbeddingModel::parse(
            "lathe 1 0 0\ndrill 0.9 0.1 0\nplans 0 1 0\nbudget 0 0.9 0.2\n".as_bytes(),
            None,
            "m",
        )
        .unwrap()
        .0
    }

    #[test]
    fn identical_descriptions_form_a_triangle() {
        let c = corpus("AA (x) Lathe drill.\nBB (x) Lathe drill.\nCC (x) Lathe drill.\n");
        let g = build_similarity_graph(
            &c,
            Some(&model()),
            &GraphOptions {
                threshold: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(g.edges.len(), 3);
        for e in &g.edges {
            assert!((e.weight - 1.0).abs() < 1e-15);
        }
        assert_eq!(g.weight(2, 0), g.weight(0, 2));
    }

    #[test]
    fn disjoint_vocabularies_have_zero_jaccard() {
        let c = corpus("TEACHER (educ.) Teaches pupils.\nINSTRUCTOR (educ.) Instructs students.\n");
        let opts = GraphOptions {
            threshold: 0.1,
            weighting: Weighting::TokenJaccard,
            filter_stopwords: true,
        };
        let g = build_similarity_graph(&c, None, &opts).unwrap();
        assert_eq!(g.node_count(), 2);
        assert!(g.edges.is_empty());
        let g0 = build_similarity_graph(&c, None, &GraphOptions { threshold: 0.0, ..opts }).unwrap();
        assert_eq!(g0.edges[0].weight, 0.0);
    }

    #[test]
    fn threshold_is_validated() {
        let c = corpus("AA (x) Lathe.\n");
        for t in [1.5, -1.01, f64::NAN] {
            let opts = GraphOptions {
                threshold: t,
                ..Default::default()
            };
            assert!(build_similarity_graph(&c, Some(&model()), &opts).is_err());
        }
    }

    #[test]
    fn uncovered_entries_are_excluded() {
        let c = corpus("AA (x) Lathe.\nBB (x) Unknown words.\n");
        let g = build_similarity_graph(&c, Some(&model()), &GraphOptions::default()).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.excluded, vec!["1939-00002".to_string()]);
        let none = corpus("AA (x) Unknown.\n");
        assert!(build_similarity_graph(&none, Some(&model()), &GraphOptions::default()).is_err());
    }

    #[test]
    fn embedding_weighting_needs_model() {
        let c = corpus("AA (x) Lathe.\n");
        assert!(build_similarity_graph(&c, None, &GraphOptions::default()).is_err());
    }

    #[test]
    fn tfidf_idf_is_log_ratio() {
        let docs: Vec<Vec<String>> = [&["lathe", "a"][..], &["lathe", "b"], &["c"], &["d"]]
            .iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect();
        let v = tfidf_vectors(&docs);
        // doc 0: lathe -> ln 2, a -> ln 4
        let d0 = v[0].as_ref().unwrap();
        let (l2, l4) = (2f64.ln(), 4f64.ln());
        let nrm = (l2 * l2 + l4 * l4).sqrt();
        assert!((d0[0].1 - l2 / nrm).abs() < 1e-15);
        assert!((d0[1].1 - l4 / nrm).abs() < 1e-15);
    }

    #[test]
    fn cross_similarity_picks_the_maximum() {
        let mk = |id: &str, v: Vec<f64>| DescriptionVector {
            entry_id: id.into(),
            vector: v,
            covered_tokens: 1,
            total_tokens: 1,
        };
        let at = |c: f64| vec![c, (1.0 - c * c).sqrt()];
        let focal = vec![mk("f", vec![1.0, 0.0])];
        let other = vec![mk("o1", at(0.2)), mk("o2", at(0.9)), mk("o3", at(0.4))];
        let r = max_cross_similarity(&focal, &other).unwrap();
        assert_eq!(r.matches[0].match_id, "o2");
        assert!((r.matches[0].similarity - 0.9).abs() < 1e-12);
        assert!(max_cross_similarity(&focal, &[]).is_err());
    }

    #[test]
    fn export_round_trip() {
        let c = corpus("AA (x) Lathe drill.\nBB (x) Lathe.\nCC (x) Plans budget.\n");
        let g = build_similarity_graph(&c, Some(&model()), &GraphOptions { threshold: 0.0, ..Default::default() }).unwrap();
        let mut tsv = Vec::new();
        g.write_edges_tsv(&mut tsv).unwrap();
        let manifest = g.manifest(None);
        let back = SimilarityGraph::read_exported(&manifest, &tsv[..]).unwrap();
        assert_eq!(back, g);
    }
}
