//! Pipeline stages.
//!
//! Each stage reads what earlier stages wrote under the output directory, so
//! any subcommand can be rerun on its own. Output layout:
//!
//! ```text
//! corpus/{year}.raw.jsonl        every parsed entry
//! corpus/{year}.jsonl            deduplicated entries
//! corpus/{year}.diagnostics.jsonl
//! corpus/{year}.stats.json, corpus/stats.csv, corpus/dedupe.csv
//! spellcheck/summary.csv, spellcheck/samples.csv
//! embed/{year}.jsonl, embed/coverage.csv, embed/load_warnings.csv
//! classifier/model.json, classifier/training.json, classifier/summary.csv,
//! classifier/override_warnings.csv, classifier/worker_functions.csv
//! labels/{year}.csv
//! graph/{year}.edges.tsv, graph/{year}.nodes.json, graph/summary.csv
//! polarization/{year}.json, polarization/{year}.bootstrap.csv,
//! polarization/{year}.communities.csv, polarization/summary.csv
//! longitudinal/persistence.csv, longitudinal/decay.csv,
//! longitudinal/decay_matches.csv, longitudinal/regressions.json
//! sweep.csv
//! manifest.json
//! ```

use std::collections::{BTreeMap, HashMap};
use std::io::BufReader;
use std::path::PathBuf;
use std::time::Instant;

use jobnet_core::classifier::{
    apply_title_overrides, classify_corpus, evaluate_against_manual, metadata_validation, read_manual_csv,
    read_training_csv, train, FeatureMode, JobClass, LabelAssignment, OverrideConfig, TRAIN_FRACTION,
};
use jobnet_core::corpus::{dedupe_and_resolve, load_lexicon, parse_edition, validate_spelling, EditionCorpus, GrammarConfig};
use jobnet_core::embedding::EmbeddingModel;
use jobnet_core::graph::{
    build_similarity_graph, embed_corpus, graph_from_vectors, read_vectors_jsonl, write_vectors_jsonl, GraphOptions,
    NodeManifest, SimilarityGraph, Weighting,
};
use jobnet_core::longitudinal::{
    decay_regression, persistence_regression, similarity_decay_from_vectors, title_persistence, DecayRow,
    RegressionResult,
};
use jobnet_core::louvain::{louvain, Communities};
use jobnet_core::polarization::{
    adjusted_polarization, bootstrap_polarization, EdgeMode, LabeledGraph, PolarizationReport,
};
use jobnet_core::text::sha256_hex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Context};
use crate::io::{create, csv_writer, finish_csv, missing, read_json, write_json};
use crate::manifest::{RunManifest, StageTiming};

pub const PARSE: &str = "parse";
pub const SPELLCHECK: &str = "spellcheck";
pub const EMBED: &str = "embed";
pub const CLASSIFY: &str = "classify";
pub const GRAPH: &str = "graph";
pub const POLARIZE: &str = "polarize";
pub const LONGITUDINAL: &str = "longitudinal";
pub const SWEEP: &str = "sweep";

type Result<T> = std::result::Result<T, CliError>;

/// A validated configuration bound to its output directory.
pub struct Run {
    config: RunConfig,
    grammar: GrammarConfig,
    timings: Vec<StageTiming>,
}

#[derive(Debug, Serialize)]
struct DedupeRow {
    year: i32,
    input_entries: usize,
    retained: usize,
    removed_duplicates: usize,
    removed_reference_only: usize,
    removed_empty: usize,
    unresolved_references: usize,
    diagnostics: usize,
}

#[derive(Debug, Serialize)]
struct SpellRow {
    year: i32,
    total_words: usize,
    misspelled_count: usize,
    accuracy_rate: f64,
}

#[derive(Debug, Serialize)]
struct CoverageRow {
    year: i32,
    entries: usize,
    embedded: usize,
    covered_tokens: usize,
    total_tokens: usize,
    token_coverage: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub mode: FeatureMode,
    pub smoothing_alpha: f64,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub n_examples: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub held_out_accuracy: f64,
    pub model_sha256: String,
}

#[derive(Debug, Serialize)]
struct LabelSummaryRow {
    year: i32,
    entries: usize,
    physical: usize,
    cognitive: usize,
    pct_physical: f64,
    overrides_applied: usize,
    low_confidence: usize,
    override_conflicts: usize,
    codes_without_worker_functions: usize,
}

#[derive(Debug, Serialize)]
struct GraphRow {
    year: i32,
    weighting: Weighting,
    threshold: f64,
    nodes: usize,
    edges: usize,
    excluded: usize,
    total_weight: f64,
    mean_degree: f64,
}

/// One row of `polarization/summary.csv` and of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationRow {
    pub weighting: String,
    pub threshold: f64,
    pub year: i32,
    pub nodes: usize,
    pub edges: usize,
    pub p0: f64,
    pub q: f64,
    pub q_rand: f64,
    pub q_bar: f64,
    pub baseline: String,
    pub edge_mode: EdgeMode,
    pub bootstrap_b: usize,
    pub q_mean: Option<f64>,
    pub q_ci_low: Option<f64>,
    pub q_ci_high: Option<f64>,
    pub q_bar_mean: Option<f64>,
    pub q_bar_ci_low: Option<f64>,
    pub q_bar_ci_high: Option<f64>,
    pub redraws: Option<usize>,
    pub communities: Option<usize>,
    pub louvain_modularity: Option<f64>,
}

impl PolarizationRow {
    fn new(r: &PolarizationReport, communities: Option<&Communities>) -> Self {
        let b = r.bootstrap.as_ref();
        PolarizationRow {
            weighting: r.weighting.clone(),
            threshold: r.threshold,
            year: r.year,
            nodes: r.nodes,
            edges: r.edges,
            p0: r.p0,
            q: r.q,
            q_rand: r.q_rand,
            q_bar: r.q_bar,
            baseline: r.baseline.clone(),
            edge_mode: r.edge_mode,
            bootstrap_b: b.map_or(0, |b| b.q.b),
            q_mean: b.map(|b| b.q.mean),
            q_ci_low: b.map(|b| b.q.ci_low),
            q_ci_high: b.map(|b| b.q.ci_high),
            q_bar_mean: b.map(|b| b.q_bar.mean),
            q_bar_ci_low: b.map(|b| b.q_bar.ci_low),
            q_bar_ci_high: b.map(|b| b.q_bar.ci_high),
            redraws: b.map(|b| b.redraws),
            communities: communities.map(|c| c.count),
            louvain_modularity: communities.map(|c| c.modularity),
        }
    }
}

#[derive(Debug, Serialize)]
struct LouvainSummary<'a> {
    count: usize,
    modularity: f64,
    size_histogram: &'a BTreeMap<usize, usize>,
}

#[derive(Debug, Serialize)]
struct DecayCsvRow {
    focal_year: i32,
    other_year: i32,
    gap_years: i32,
    mean_max_similarity: f64,
    matched_jobs: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Regressions {
    pub persistence: Option<RegressionResult>,
    pub decay: Option<RegressionResult>,
    pub notes: Vec<String>,
}

/// Fit only when there are enough ordered edition pairs.
fn fit(n: usize, what: &str, notes: &mut Vec<String>, f: impl FnOnce() -> jobnet_core::Result<RegressionResult>) -> Result<Option<RegressionResult>> {
    if n < 3 {
        notes.push(format!("{what}: {n} edition pairs, at least 3 are needed for a regression"));
        return Ok(None);
    }
    f().context(format!("{what} regression")).map(Some)
}

impl Run {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let grammar = match &config.grammar {
            Some(p) => GrammarConfig::load(p).context(format!("grammar {}", p.display()))?,
            None => GrammarConfig::default(),
        };
        Ok(Run {
            config,
            grammar,
            timings: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn stopwords_sha256(&self) -> &str {
        self.grammar.stopwords().sha256()
    }

    fn path(&self, rel: impl AsRef<std::path::Path>) -> PathBuf {
        self.config.output_dir.join(rel)
    }

    fn corpus_path(&self, year: i32, raw: bool) -> PathBuf {
        self.path(format!("corpus/{year}{}.jsonl", if raw { ".raw" } else { "" }))
    }

    fn load_corpus(&self, year: i32, raw: bool) -> Result<EditionCorpus> {
        let p = self.corpus_path(year, raw);
        EditionCorpus::load_jsonl(&p, year, self.grammar.stopwords().clone()).context(missing(&p))
    }

    fn labels(&self, year: i32) -> Result<LabelAssignment> {
        let p = self.path(format!("labels/{year}.csv"));
        LabelAssignment::read_csv(&p).context(missing(&p))
    }

    /// Run `f` as stage `name`, recording its wall time.
    pub fn timed<T>(&mut self, name: &'static str, f: impl FnOnce(&Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self).map_err(|e| e.in_stage(name))?;
        self.timings.push(StageTiming {
            stage: name.to_string(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        eprintln!("{name}: done in {:.0} ms", start.elapsed().as_secs_f64() * 1e3);
        Ok(out)
    }

    pub fn parse(&self) -> Result<()> {
        let parsed = self
            .config
            .editions
            .par_iter()
            .map(|e| {
                let text = std::fs::read_to_string(&e.path).context(format!("cannot read edition {}", e.path.display()))?;
                parse_edition(&text, e.year, &self.grammar).context(format!("parsing {}", e.path.display()))
            })
            .collect::<Result<Vec<_>>>()?;

        let stats_path = self.path("corpus/stats.csv");
        let dedupe_path = self.path("corpus/dedupe.csv");
        let mut stats = csv_writer(&stats_path)?;
        let mut dedupe = csv_writer(&dedupe_path)?;
        for p in &parsed {
            let year = p.corpus.year;
            let raw = self.corpus_path(year, true);
            p.corpus.write_jsonl(create(&raw)?).context(format!("writing {}", raw.display()))?;
            let diag = self.path(format!("corpus/{year}.diagnostics.jsonl"));
            let mut w = create(&diag)?;
            for d in &p.diagnostics {
                serde_json::to_writer(&mut w, d).context(format!("writing {}", diag.display()))?;
                std::io::Write::write_all(&mut w, b"\n").context(format!("writing {}", diag.display()))?;
            }
            std::io::Write::flush(&mut w).context(format!("writing {}", diag.display()))?;

            let d = dedupe_and_resolve(&p.corpus);
            let clean = self.corpus_path(year, false);
            d.corpus.write_jsonl(create(&clean)?).context(format!("writing {}", clean.display()))?;
            stats.serialize(&p.corpus.stats).context(format!("writing {}", stats_path.display()))?;
            write_json(&self.path(format!("corpus/{year}.stats.json")), &p.corpus.stats)?;
            let r = &d.report;
            dedupe
                .serialize(DedupeRow {
                    year,
                    input_entries: r.input_entries,
                    retained: r.retained,
                    removed_duplicates: r.removed_duplicates,
                    removed_reference_only: r.removed_reference_only,
                    removed_empty: r.removed_empty,
                    unresolved_references: r.unresolved_references,
                    diagnostics: p.diagnostics.len(),
                })
                .context(format!("writing {}", dedupe_path.display()))?;
            eprintln!(
                "parse {year}: {} entries, {} retained, {} diagnostics",
                r.input_entries,
                r.retained,
                p.diagnostics.len()
            );
        }
        finish_csv(stats, &stats_path)?;
        finish_csv(dedupe, &dedupe_path)
    }

    pub fn spellcheck(&self) -> Result<()> {
        let lexicon_path = self
            .config
            .spellcheck
            .lexicon
            .as_ref()
            .ok_or_else(|| CliError::config("spellcheck needs spellcheck.lexicon"))?;
        let lexicon = load_lexicon(lexicon_path).context(format!("lexicon {}", lexicon_path.display()))?;
        let summary_path = self.path("spellcheck/summary.csv");
        let samples_path = self.path("spellcheck/samples.csv");
        let mut summary = csv_writer(&summary_path)?;
        let mut samples = csv_writer(&samples_path)?;
        samples
            .write_record(["year", "token", "title"])
            .context(format!("writing {}", samples_path.display()))?;
        for year in self.config.years() {
            let corpus = self.load_corpus(year, true)?;
            let r = validate_spelling(&corpus, &lexicon, self.config.spellcheck.max_samples)
                .context(format!("spellcheck {year}"))?;
            summary
                .serialize(SpellRow {
                    year,
                    total_words: r.total_words,
                    misspelled_count: r.misspelled_count,
                    accuracy_rate: r.accuracy_rate,
                })
                .context(format!("writing {}", summary_path.display()))?;
            for (token, title) in &r.misspelled_samples {
                samples
                    .write_record([year.to_string().as_str(), token, title])
                    .context(format!("writing {}", samples_path.display()))?;
            }
        }
        finish_csv(summary, &summary_path)?;
        finish_csv(samples, &samples_path)
    }

    pub fn embed(&self) -> Result<()> {
        let emb = self
            .config
            .embedding
            .as_ref()
            .ok_or_else(|| CliError::config("embed needs an [embedding] section"))?;
        let (model, warnings) =
            EmbeddingModel::load(&emb.path, emb.dimension).context(format!("word vectors {}", emb.path.display()))?;
        eprintln!(
            "embed: {} vectors of dimension {} ({} load warnings)",
            model.len(),
            model.dimension(),
            warnings.len()
        );
        let warn_path = self.path("embed/load_warnings.csv");
        let mut w = csv_writer(&warn_path)?;
        w.write_record(["line", "message"]).context(format!("writing {}", warn_path.display()))?;
        for x in &warnings {
            w.write_record([x.line.to_string(), x.message.clone()])
                .context(format!("writing {}", warn_path.display()))?;
        }
        finish_csv(w, &warn_path)?;

        let cov_path = self.path("embed/coverage.csv");
        let mut cov = csv_writer(&cov_path)?;
        for year in self.config.years() {
            let corpus = self.load_corpus(year, false)?;
            let vectors = embed_corpus(&corpus, &model, self.config.similarity.filter_stopwords);
            let out = self.path(format!("embed/{year}.jsonl"));
            write_vectors_jsonl(&vectors, create(&out)?).context(format!("writing {}", out.display()))?;
            let covered: usize = vectors.iter().map(|v| v.covered_tokens).sum();
            let total: usize = vectors.iter().map(|v| v.total_tokens).sum();
            cov.serialize(CoverageRow {
                year,
                entries: vectors.len(),
                embedded: vectors.iter().filter(|v| !v.is_empty()).count(),
                covered_tokens: covered,
                total_tokens: total,
                token_coverage: if total == 0 { 0.0 } else { covered as f64 / total as f64 },
            })
            .context(format!("writing {}", cov_path.display()))?;
        }
        finish_csv(cov, &cov_path)
    }

    pub fn classify(&self) -> Result<()> {
        let cc = &self.config.classifier;
        let training_path = cc
            .training
            .as_ref()
            .ok_or_else(|| CliError::config("classify needs classifier.training"))?;
        let examples = read_training_csv(training_path).context(format!("training data {}", training_path.display()))?;
        let outcome = train(&examples, cc.mode, cc.smoothing, cc.split_seed).context("training classifier")?;
        let model_json = outcome.model.to_json()?;
        let model_path = self.path("classifier/model.json");
        let mut w = create(&model_path)?;
        std::io::Write::write_all(&mut w, model_json.as_bytes())
            .and_then(|_| std::io::Write::flush(&mut w))
            .context(format!("writing {}", model_path.display()))?;
        write_json(
            &self.path("classifier/training.json"),
            &TrainingSummary {
                mode: cc.mode,
                smoothing_alpha: cc.smoothing,
                split_seed: cc.split_seed,
                train_fraction: TRAIN_FRACTION,
                n_examples: examples.len(),
                n_train: outcome.n_train,
                n_test: outcome.n_test,
                held_out_accuracy: outcome.held_out_accuracy,
                model_sha256: sha256_hex(model_json.as_bytes()),
            },
        )?;
        eprintln!(
            "classify: held-out accuracy {:.4} on {} examples",
            outcome.held_out_accuracy, outcome.n_test
        );

        let overrides = match (cc.apply_overrides, &cc.overrides) {
            (false, _) => None,
            (true, Some(p)) => Some(OverrideConfig::load(p).context(format!("overrides {}", p.display()))?),
            (true, None) => Some(OverrideConfig::default()),
        };

        let summary_path = self.path("classifier/summary.csv");
        let warn_path = self.path("classifier/override_warnings.csv");
        let wf_path = self.path("classifier/worker_functions.csv");
        let mut summary = csv_writer(&summary_path)?;
        let mut warn = csv_writer(&warn_path)?;
        let mut wf = csv_writer(&wf_path)?;
        warn.write_record(["year", "entry_id", "title", "keywords"])
            .context(format!("writing {}", warn_path.display()))?;
        wf.write_record([
            "year",
            "axis",
            "function",
            "jobs",
            "physical",
            "cognitive",
            "pct_physical",
            "pct_cognitive",
            "ci_low",
            "ci_high",
        ])
        .context(format!("writing {}", wf_path.display()))?;
        let mut all = LabelAssignment::default();
        for year in self.config.years() {
            let corpus = self.load_corpus(year, false)?;
            let titles: HashMap<String, String> = corpus.entries.iter().map(|e| (e.id.clone(), e.title.clone())).collect();
            let raw = classify_corpus(&outcome.model, &corpus);
            let (labels, warnings) = match &overrides {
                Some(cfg) => apply_title_overrides(&raw, &titles, cfg),
                None => (raw, Vec::new()),
            };
            let out = self.path(format!("labels/{year}.csv"));
            labels.write_csv(&titles, create(&out)?).context(format!("writing {}", out.display()))?;
            for x in &warnings {
                warn.write_record([year.to_string(), x.entry_id.clone(), x.title.clone(), x.keywords.join(";")])
                    .context(format!("writing {}", warn_path.display()))?;
            }

            let codes: HashMap<String, String> = corpus
                .entries
                .iter()
                .filter_map(|e| e.code.as_ref().map(|c| (e.id.clone(), c.clone())))
                .collect();
            let seed = cc.metadata_seed.wrapping_add(year as u64);
            let v = metadata_validation(&labels, &codes, cc.metadata_bootstrap, seed).context(format!("worker functions {year}"))?;
            for r in &v.rows {
                wf.write_record([
                    year.to_string(),
                    format!("{:?}", r.axis).to_lowercase(),
                    r.function.to_string(),
                    r.jobs.to_string(),
                    r.physical.to_string(),
                    r.cognitive.to_string(),
                    r.pct_physical.to_string(),
                    r.pct_cognitive.to_string(),
                    r.ci_low.to_string(),
                    r.ci_high.to_string(),
                ])
                .context(format!("writing {}", wf_path.display()))?;
            }

            let count = |c: JobClass| labels.labels.values().filter(|l| l.label == c).count();
            summary
                .serialize(LabelSummaryRow {
                    year,
                    entries: labels.labels.len(),
                    physical: count(JobClass::Physical),
                    cognitive: count(JobClass::Cognitive),
                    pct_physical: 100.0 * labels.fraction(JobClass::Physical),
                    overrides_applied: labels.labels.values().filter(|l| l.override_applied).count(),
                    low_confidence: labels.labels.values().filter(|l| l.low_confidence).count(),
                    override_conflicts: warnings.len(),
                    codes_without_worker_functions: v.skipped,
                })
                .context(format!("writing {}", summary_path.display()))?;
            all.labels.extend(labels.labels);
        }
        finish_csv(summary, &summary_path)?;
        finish_csv(warn, &warn_path)?;
        finish_csv(wf, &wf_path)?;

        if let Some(p) = &cc.manual {
            let manual = read_manual_csv(p).context(format!("manual labels {}", p.display()))?;
            let agreement = evaluate_against_manual(&all, &manual).context("manual label agreement")?;
            write_json(
                &self.path("classifier/manual_agreement.json"),
                &serde_json::json!({ "labels": manual.len(), "agreement": agreement }),
            )?;
            eprintln!("classify: agreement with {} manual labels {agreement:.4}", manual.len());
        }
        Ok(())
    }

    /// Graph of one edition under `weighting` at `threshold`.
    pub fn build_graph(&self, year: i32, weighting: Weighting, threshold: f64) -> Result<SimilarityGraph> {
        let corpus = self.load_corpus(year, false)?;
        match weighting {
            Weighting::EmbeddingCosine => {
                let p = self.path(format!("embed/{year}.jsonl"));
                let vectors = read_vectors_jsonl(&p).context(missing(&p))?;
                let titles: HashMap<String, String> =
                    corpus.entries.iter().map(|e| (e.id.clone(), e.title.clone())).collect();
                graph_from_vectors(year, &vectors, &titles, threshold).context(format!("graph {year}"))
            }
            _ => {
                let opts = GraphOptions {
                    threshold,
                    weighting,
                    filter_stopwords: self.config.similarity.filter_stopwords,
                };
                build_similarity_graph(&corpus, None, &opts).context(format!("graph {year}"))
            }
        }
    }

    pub fn graph(&self) -> Result<()> {
        let sim = self.config.similarity;
        let summary_path = self.path("graph/summary.csv");
        let mut summary = csv_writer(&summary_path)?;
        for year in self.config.years() {
            let g = self.build_graph(year, sim.weighting, sim.threshold)?;
            let labels_path = self.path(format!("labels/{year}.csv"));
            let labels: Option<BTreeMap<String, String>> = if labels_path.is_file() {
                Some(
                    self.labels(year)?
                        .labels
                        .into_iter()
                        .map(|(id, l)| (id, l.label.as_str().to_string()))
                        .collect(),
                )
            } else {
                None
            };
            let edges = self.path(format!("graph/{year}.edges.tsv"));
            let mut w = create(&edges)?;
            g.write_edges_tsv(&mut w).context(format!("writing {}", edges.display()))?;
            std::io::Write::flush(&mut w).context(format!("writing {}", edges.display()))?;
            write_json(&self.path(format!("graph/{year}.nodes.json")), &g.manifest(labels.as_ref()))?;
            let n = g.node_count();
            summary
                .serialize(GraphRow {
                    year,
                    weighting: g.weighting,
                    threshold: g.threshold,
                    nodes: n,
                    edges: g.edges.len(),
                    excluded: g.excluded.len(),
                    total_weight: g.total_weight(),
                    mean_degree: if n == 0 { 0.0 } else { 2.0 * g.edges.len() as f64 / n as f64 },
                })
                .context(format!("writing {}", summary_path.display()))?;
            eprintln!("graph {year}: {n} nodes, {} edges", g.edges.len());
        }
        finish_csv(summary, &summary_path)
    }

    fn load_graph(&self, year: i32) -> Result<SimilarityGraph> {
        let manifest: NodeManifest = read_json(&self.path(format!("graph/{year}.nodes.json")))?;
        let p = self.path(format!("graph/{year}.edges.tsv"));
        let file = std::fs::File::open(&p).context(missing(&p))?;
        SimilarityGraph::read_exported(&manifest, BufReader::new(file)).context(format!("reading {}", p.display()))
    }

    fn classifier_id(&self) -> String {
        match std::fs::read(self.path("classifier/model.json")) {
            Ok(bytes) => sha256_hex(&bytes),
            Err(_) => "unknown".to_string(),
        }
    }

    /// Adjusted polarization of one labelled graph, with the bootstrap when
    /// configured and Louvain communities when asked for.
    pub fn polarize_graph(
        &self,
        graph: &SimilarityGraph,
        labels: &LabelAssignment,
        with_louvain: bool,
    ) -> Result<(PolarizationReport, Option<Communities>)> {
        let pc = &self.config.polarization;
        let year = graph.year;
        let lg = LabeledGraph::from_graph(graph, labels, pc.edge_mode).context(format!("labelling graph {year}"))?;
        let baseline = pc.baseline();
        let adj = adjusted_polarization(&lg, &baseline).context(format!("polarization {year}"))?;
        let bootstrap = (pc.bootstrap > 0)
            .then(|| bootstrap_polarization(&lg, pc.bootstrap, pc.seed, &baseline))
            .transpose()
            .context(format!("bootstrap {year}"))?;
        let communities = if with_louvain {
            Some(louvain(lg.node_count(), &lg.edges).context(format!("louvain {year}"))?)
        } else {
            None
        };
        let report = PolarizationReport {
            year,
            nodes: lg.node_count(),
            edges: lg.edges.len(),
            q: adj.q,
            q_rand: adj.q_rand,
            q_bar: adj.q_bar,
            p0: adj.p0,
            baseline: baseline.name().to_string(),
            edge_mode: pc.edge_mode,
            threshold: graph.threshold,
            weighting: graph.weighting.as_str().to_string(),
            classifier: self.classifier_id(),
            bootstrap,
        };
        Ok((report, communities))
    }

    pub fn polarize(&self) -> Result<()> {
        let summary_path = self.path("polarization/summary.csv");
        let mut summary = csv_writer(&summary_path)?;
        for year in self.config.years() {
            let graph = self.load_graph(year)?;
            let labels = self.labels(year)?;
            let (report, communities) = self.polarize_graph(&graph, &labels, self.config.polarization.louvain)?;
            write_json(&self.path(format!("polarization/{year}.json")), &report)?;
            if let Some(b) = &report.bootstrap {
                let p = self.path(format!("polarization/{year}.bootstrap.csv"));
                let mut w = csv_writer(&p)?;
                w.write_record(["replicate", "q", "q_bar", "distinct_fraction"])
                    .context(format!("writing {}", p.display()))?;
                for (i, ((q, qb), d)) in b.q.samples.iter().zip(&b.q_bar.samples).zip(&b.distinct_fractions).enumerate() {
                    w.write_record([i.to_string(), q.to_string(), qb.to_string(), d.to_string()])
                        .context(format!("writing {}", p.display()))?;
                }
                finish_csv(w, &p)?;
            }
            if let Some(c) = &communities {
                let p = self.path(format!("polarization/{year}.communities.csv"));
                let mut w = csv_writer(&p)?;
                w.write_record(["entry_id", "community"]).context(format!("writing {}", p.display()))?;
                for (node, k) in graph.nodes.iter().zip(&c.assignment) {
                    w.write_record([node.id.as_str(), k.to_string().as_str()])
                        .context(format!("writing {}", p.display()))?;
                }
                finish_csv(w, &p)?;
                write_json(
                    &self.path(format!("polarization/{year}.louvain.json")),
                    &LouvainSummary {
                        count: c.count,
                        modularity: c.modularity,
                        size_histogram: &c.size_histogram,
                    },
                )?;
            }
            summary
                .serialize(PolarizationRow::new(&report, communities.as_ref()))
                .context(format!("writing {}", summary_path.display()))?;
            eprintln!(
                "polarize {year}: Q = {:.4}, Q_rand = {:.4}, adjusted = {:.4}",
                report.q, report.q_rand, report.q_bar
            );
        }
        finish_csv(summary, &summary_path)
    }

    pub fn longitudinal(&self) -> Result<()> {
        let years = self.config.years();
        let raws = years
            .iter()
            .map(|&y| self.load_corpus(y, true))
            .collect::<Result<Vec<_>>>()?;
        let persistence = title_persistence(&raws, &self.config.longitudinal).context("title persistence")?;
        let p = self.path("longitudinal/persistence.csv");
        let mut w = csv_writer(&p)?;
        for r in &persistence {
            w.serialize(r).context(format!("writing {}", p.display()))?;
        }
        finish_csv(w, &p)?;

        let mut notes = Vec::new();
        let persistence_fit = fit(persistence.len(), "persistence", &mut notes, || persistence_regression(&persistence))?;

        let vector_paths: Vec<PathBuf> = years.iter().map(|y| self.path(format!("embed/{y}.jsonl"))).collect();
        let decay_fit = if vector_paths.iter().all(|p| p.is_file()) {
            let editions = years
                .iter()
                .zip(&vector_paths)
                .map(|(&y, p)| Ok((y, read_vectors_jsonl(p).context(missing(p))?)))
                .collect::<Result<Vec<_>>>()?;
            let rows = similarity_decay_from_vectors(&editions).context("similarity decay")?;
            self.write_decay(&rows)?;
            fit(rows.len(), "decay", &mut notes, || decay_regression(&rows))?
        } else {
            notes.push("decay: description vectors missing, run `embed` first".to_string());
            None
        };
        write_json(
            &self.path("longitudinal/regressions.json"),
            &Regressions {
                persistence: persistence_fit,
                decay: decay_fit,
                notes,
            },
        )?;
        if let Some(f) = persistence_fit {
            eprintln!("longitudinal: persistence slope {:.4} (r = {:.3})", f.slope, f.r);
        }
        Ok(())
    }

    fn write_decay(&self, rows: &[DecayRow]) -> Result<()> {
        let p = self.path("longitudinal/decay.csv");
        let mut w = csv_writer(&p)?;
        let mp = self.path("longitudinal/decay_matches.csv");
        let mut m = csv_writer(&mp)?;
        m.write_record(["focal_year", "other_year", "focal_id", "match_id", "similarity"])
            .context(format!("writing {}", mp.display()))?;
        for r in rows {
            w.serialize(DecayCsvRow {
                focal_year: r.focal_year,
                other_year: r.other_year,
                gap_years: r.gap_years,
                mean_max_similarity: r.mean_max_similarity,
                matched_jobs: r.matches.len(),
            })
            .context(format!("writing {}", p.display()))?;
            for x in &r.matches {
                m.write_record([
                    r.focal_year.to_string(),
                    r.other_year.to_string(),
                    x.focal_id.clone(),
                    x.match_id.clone(),
                    x.similarity.to_string(),
                ])
                .context(format!("writing {}", mp.display()))?;
            }
        }
        finish_csv(w, &p)?;
        finish_csv(m, &mp)
    }

    /// Polarization for every configured weighting and threshold.
    ///
    /// Each edition's graph is built once at the lowest threshold and
    /// filtered, which keeps exactly the edges a direct build would.
    pub fn sweep(&self) -> Result<Vec<PolarizationRow>> {
        let thresholds = &self.config.sweep.thresholds;
        if thresholds.is_empty() {
            return Err(CliError::config("sweep needs at least one threshold"));
        }
        let lowest = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
        let mut rows = Vec::new();
        for weighting in self.config.sweep_weightings() {
            let bases = self
                .config
                .years()
                .into_iter()
                .map(|y| Ok((self.build_graph(y, weighting, lowest)?, self.labels(y)?)))
                .collect::<Result<Vec<_>>>()?;
            for &t in thresholds {
                for (base, labels) in &bases {
                    let g = base.filtered(t)?;
                    let (report, _) = self.polarize_graph(&g, labels, false)?;
                    rows.push(PolarizationRow::new(&report, None));
                }
            }
        }
        let p = self.path("sweep.csv");
        let mut w = csv_writer(&p)?;
        for r in &rows {
            w.serialize(r).context(format!("writing {}", p.display()))?;
        }
        finish_csv(w, &p)?;
        eprintln!("sweep: {} rows", rows.len());
        Ok(rows)
    }

    /// Every stage in order, then the run manifest.
    pub fn pipeline(&mut self) -> Result<RunManifest> {
        if self.config.classifier.training.is_none() {
            return Err(CliError::config("pipeline needs classifier.training to label the graphs"));
        }
        self.timed(PARSE, Run::parse)?;
        if self.config.spellcheck.lexicon.is_some() {
            self.timed(SPELLCHECK, Run::spellcheck)?;
        }
        if self.config.embedding.is_some() {
            self.timed(EMBED, Run::embed)?;
        }
        self.timed(CLASSIFY, Run::classify)?;
        self.timed(GRAPH, Run::graph)?;
        self.timed(POLARIZE, Run::polarize)?;
        if self.config.editions.len() >= 2 {
            self.timed(LONGITUDINAL, Run::longitudinal)?;
        }
        self.write_manifest()
    }

    pub fn write_manifest(&self) -> Result<RunManifest> {
        let manifest = RunManifest::build(self, &self.timings)?;
        write_json(&self.path(crate::manifest::MANIFEST), &manifest)?;
        Ok(manifest)
    }
}
