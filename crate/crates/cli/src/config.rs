//! Run configuration: a single TOML file plus command-line overrides.
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use jobnet_core::classifier::FeatureMode;
use jobnet_core::graph::{validate_threshold, Weighting, DEFAULT_THRESHOLD};
use jobnet_core::longitudinal::PersistenceConfig;
use jobnet_core::polarization::{Baseline, EdgeMode, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ExitKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub editions: Vec<EditionInput>,
    /// Grammar TOML for the entry parser; the built-in grammar when absent.
    #[serde(default)]
    pub grammar: Option<PathBuf>,
    #[serde(default)]
    pub embedding: Option<EmbeddingConfig>,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub polarization: PolarizationConfig,
    #[serde(default)]
    pub longitudinal: PersistenceConfig,
    #[serde(default)]
    pub spellcheck: SpellcheckConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditionInput {
    pub year: i32,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub threshold: f64,
    pub weighting: Weighting,
    pub filter_stopwords: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            threshold: DEFAULT_THRESHOLD,
            weighting: Weighting::EmbeddingCosine,
            filter_stopwords: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub mode: FeatureMode,
    pub smoothing: f64,
    pub split_seed: u64,
    /// `description,label` CSV.
    pub training: Option<PathBuf>,
    /// `keyword=class` lines; the built-in keyword list when absent.
    pub overrides: Option<PathBuf>,
    pub apply_overrides: bool,
    /// `entry_id,label` CSV of hand labels to score the assignment against.
    pub manual: Option<PathBuf>,
    pub metadata_bootstrap: usize,
    pub metadata_seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            mode: FeatureMode::Bow,
            smoothing: 1.0,
            split_seed: 42,
            training: None,
            overrides: None,
            apply_overrides: true,
            manual: None,
            metadata_bootstrap: 1000,
            metadata_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    #[default]
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub side: usize,
    pub degree: usize,
    pub draws: usize,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        GridConfig {
            side: g.side,
            degree: g.degree,
            draws: g.draws,
            seed: g.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarizationConfig {
    pub baseline: BaselineMode,
    pub edge_mode: EdgeMode,
    pub grid: GridConfig,
    /// Bootstrap replicates; 0 skips the bootstrap.
    pub bootstrap: usize,
    pub seed: u64,
    pub louvain: bool,
}

impl Default for PolarizationConfig {
    fn default() -> Self {
        PolarizationConfig {
            baseline: BaselineMode::Analytic,
            edge_mode: EdgeMode::Weighted,
            grid: GridConfig::default(),
            bootstrap: 1000,
            seed: 1,
            louvain: true,
        }
    }
}

impl PolarizationConfig {
    pub fn baseline(&self) -> Baseline {
        match self.baseline {
            BaselineMode::Analytic => Baseline::Analytic,
            BaselineMode::Numeric => Baseline::Numeric(GridSpec {
                side: self.grid.side,
                degree: self.grid.degree,
                p0: 0.5,
                seed: self.grid.seed,
                draws: self.grid.draws,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpellcheckConfig {
    /// One word per line. The spellcheck stage is skipped without it.
    pub lexicon: Option<PathBuf>,
    pub max_samples: usize,
}

impl Default for SpellcheckConfig {
    fn default() -> Self {
        SpellcheckConfig {
            lexicon: None,
            max_samples: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub thresholds: Vec<f64>,
    /// Empty means the `similarity.weighting` value.
    pub weightings: Vec<Weighting>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            thresholds: vec![0.8, 0.85, 0.9],
            weightings: Vec::new(),
        }
    }
}

/// Flag values that replace config entries when given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub weighting: Option<Weighting>,
    pub bootstrap: Option<usize>,
    pub seed: Option<u64>,
    pub baseline: Option<BaselineMode>,
    pub thresholds: Option<Vec<f64>>,
    pub weightings: Option<Vec<Weighting>>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::new(ExitKind::Config, anyhow::anyhow!(msg.into()))
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(format!("config: {e}")))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        self.editions.iter_mut().for_each(|e| fix(&mut e.path));
        self.grammar.iter_mut().for_each(fix);
        if let Some(e) = &mut self.embedding {
            fix(&mut e.path);
        }
        self.classifier.training.iter_mut().for_each(fix);
        self.classifier.overrides.iter_mut().for_each(fix);
        self.classifier.manual.iter_mut().for_each(fix);
        self.spellcheck.lexicon.iter_mut().for_each(fix);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.output_dir {
            self.output_dir = p.clone();
        }
        if let Some(t) = o.threshold {
            self.similarity.threshold = t;
        }
        if let Some(w) = o.weighting {
            self.similarity.weighting = w;
        }
        if let Some(b) = o.bootstrap {
            self.polarization.bootstrap = b;
        }
        if let Some(s) = o.seed {
            self.polarization.seed = s;
        }
        if let Some(b) = o.baseline {
            self.polarization.baseline = b;
        }
        if let Some(t) = &o.thresholds {
            self.sweep.thresholds = t.clone();
        }
        if let Some(w) = &o.weightings {
            self.sweep.weightings = w.clone();
        }
    }

    /// Check every value and every referenced path before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.editions.is_empty() {
            return Err(config_error("at least one edition is required"));
        }
        let mut years = BTreeSet::new();
        for e in &self.editions {
            if !years.insert(e.year) {
                return Err(config_error(format!("edition year {} appears twice", e.year)));
            }
        }
        let threshold = |what: &str, t: f64| {
            validate_threshold(t).map_err(|e| config_error(format!("{what}: {e}")))
        };
        threshold("similarity.threshold", self.similarity.threshold)?;
        if self.sweep.thresholds.is_empty() {
            return Err(config_error("sweep.thresholds is empty"));
        }
        for &t in &self.sweep.thresholds {
            threshold("sweep.thresholds", t)?;
        }
        if !(self.classifier.smoothing.is_finite() && self.classifier.smoothing > 0.0) {
            return Err(config_error(format!(
                "classifier.smoothing must be positive, got {}",
                self.classifier.smoothing
            )));
        }
        if self.classifier.metadata_bootstrap == 0 {
            return Err(config_error("classifier.metadata_bootstrap must be at least 1"));
        }
        let grid = &self.polarization.grid;
        if grid.degree != 4 && grid.degree != 8 {
            return Err(config_error(format!("polarization.grid.degree must be 4 or 8, got {}", grid.degree)));
        }
        if grid.side < 2 || grid.draws == 0 {
            return Err(config_error("polarization.grid needs side >= 2 and draws >= 1"));
        }
        if let Some(e) = &self.embedding {
            if e.dimension == Some(0) {
                return Err(config_error("embedding.dimension must be positive"));
            }
        }
        let needs_embedding = self.similarity.weighting == Weighting::EmbeddingCosine
            || self.sweep.weightings.contains(&Weighting::EmbeddingCosine);
        if needs_embedding && self.embedding.is_none() {
            return Err(config_error("embedding_cosine weighting needs an [embedding] section"));
        }
        for path in self.input_paths() {
            if !path.is_file() {
                return Err(config_error(format!("input file not found: {}", path.display())));
            }
        }
        Ok(())
    }

    /// Every input file the config references, in a fixed order.
    pub fn input_paths(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = self.editions.iter().map(|e| e.path.as_path()).collect();
        out.extend(self.grammar.as_deref());
        out.extend(self.embedding.as_ref().map(|e| e.path.as_path()));
        out.extend(self.classifier.training.as_deref());
        out.extend(self.classifier.overrides.as_deref());
        out.extend(self.classifier.manual.as_deref());
        out.extend(self.spellcheck.lexicon.as_deref());
        out
    }

    pub fn sweep_weightings(&self) -> Vec<Weighting> {
        if self.sweep.weightings.is_empty() {
            vec![self.similarity.weighting]
        } else {
            self.sweep.weightings.clone()
        }
    }

    pub fn years(&self) -> Vec<i32> {
        self.editions.iter().map(|e| e.year).collect()
    }
}
