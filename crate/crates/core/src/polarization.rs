//! Fixed-partition modularity and the class-imbalance adjustment.
//!
//! For a weighted undirected graph with strengths `k_i` and `m = ½ Σ_ij A_ij`,
//!
//! ```text
//! Q = (1 / 2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)
//!   = Σ_c [ L_c / m − (K_c / 2m)² ]
//! ```
//!
//! with `L_c` the weight inside class `c` and `K_c` its total strength. The
//! second form is what gets evaluated; it is O(E).
//!
//! The adjusted ratio `Q̄ = Q / Q_rand` divides by the modularity of a
//! random-labelled regular grid with the same class balance, either the
//! low-density closed form `½ (p0² + (1 − p0)²)` or a Monte Carlo estimate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{JobClass, LabelAssignment};
use crate::error::{Error, Result};
use crate::graph::{Edge, SimilarityGraph};
use crate::rng;
use crate::stats::{mean, par_block_sum, percentile};

/// Smallest baseline magnitude accepted as a divisor.
const MIN_BASELINE: f64 = 1e-12;
/// Attempts per bootstrap replicate before giving up on an edgeless draw.
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    #[default]
    Weighted,
    /// Every retained edge counts with weight 1.
    Binary,
}

impl std::str::FromStr for EdgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "weighted" => Ok(EdgeMode::Weighted),
            "binary" => Ok(EdgeMode::Binary),
            other => Err(Error::param("edge_mode", format!("unknown edge mode `{other}`"))),
        }
    }
}

/// A graph whose every node carries a class. Physical is class 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub classes: Vec<JobClass>,
    pub edges: Vec<Edge>,
}

impl LabeledGraph {
    pub fn new(classes: Vec<JobClass>, edges: Vec<Edge>) -> Result<Self> {
        let n = classes.len();
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(Error::param("edges", format!("edge {}-{} outside {n} nodes", e.source, e.target)));
            }
            if e.source == e.target {
                return Err(Error::param("edges", format!("self-loop at node {}", e.source)));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::param("edges", format!("weight {} is not a finite non-negative number", e.weight)));
            }
        }
        Ok(LabeledGraph { classes, edges })
    }

    /// Attach labels to a similarity graph. Every node must be labelled.
    pub fn from_graph(graph: &SimilarityGraph, labels: &LabelAssignment, mode: EdgeMode) -> Result<Self> {
        let classes = graph
            .nodes
            .iter()
            .map(|n| labels.get(&n.id).map(|l| l.label).ok_or_else(|| Error::Unlabeled(n.id.clone())))
            .collect::<Result<Vec<_>>>()?;
        let edges = graph
            .edges
            .iter()
            .map(|e| Edge {
                weight: match mode {
                    EdgeMode::Weighted => e.weight,
                    EdgeMode::Binary => 1.0,
                },
                ..*e
            })
            .collect();
        LabeledGraph::new(classes, edges)
    }

    pub fn node_count(&self) -> usize {
        self.classes.len()
    }

    /// Fraction of nodes labelled Physical.
    pub fn p0(&self) -> f64 {
        if self.classes.is_empty() {
            return f64::NAN;
        }
        self.classes.iter().filter(|c| **c == JobClass::Physical).count() as f64 / self.classes.len() as f64
    }

    /// Copy with the two class names exchanged.
    pub fn swapped(&self) -> Self {
        LabeledGraph {
            classes: self.classes.iter().map(|c| c.other()).collect(),
            edges: self.edges.clone(),
        }
    }
}

/// Binary-class modularity of a labelled graph.
pub fn modularity(g: &LabeledGraph) -> Result<f64> {
    if g.classes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let m = par_block_sum(&g.edges, |e| e.weight);
    if m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let within = par_block_sum(&g.edges, |e| {
        if g.classes[e.source] == g.classes[e.target] {
            e.weight
        } else {
            0.0
        }
    });
    let physical_strength = par_block_sum(&g.edges, |e| {
        let s = (g.classes[e.source] == JobClass::Physical) as u8 + (g.classes[e.target] == JobClass::Physical) as u8;
        s as f64 * e.weight
    });
    let k = [physical_strength, 2.0 * m - physical_strength];
    Ok(within / m - k.iter().map(|kc| (kc / (2.0 * m)).powi(2)).sum::<f64>())
}

/// Modularity of an arbitrary partition (`community[i]` per node).
pub fn modularity_of_partition(community: &[usize], edges: &[Edge]) -> Result<f64> {
    if community.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let groups = community.iter().max().map_or(0, |c| c + 1);
    let mut inside = vec![0.0; groups];
    let mut strength = vec![0.0; groups];
    let mut m = 0.0;
    for e in edges {
        let (a, b) = (community[e.source], community[e.target]);
        m += e.weight;
        strength[a] += e.weight;
        strength[b] += e.weight;
        if a == b {
            inside[a] += e.weight;
        }
    }
    if m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    Ok((0..groups)
        .map(|c| inside[c] / m - (strength[c] / (2.0 * m)).powi(2))
        .sum())
}

/// Periodic square grid in which every node links to its right and lower
/// neighbours (plus both lower diagonals when `degree == 8`). Each node ends
/// up with exactly `degree` incident edge ends.
pub fn grid_edges(side: usize, degree: usize) -> Result<Vec<Edge>> {
    if side < 2 {
        return Err(Error::param("side", format!("{side} is below 2")));
    }
    let offsets: &[(isize, isize)] = match degree {
        4 => &[(0, 1), (1, 0)],
        8 => &[(0, 1), (1, 0), (1, 1), (1, -1)],
        _ => return Err(Error::param("degree", format!("{degree} is not 4 or 8"))),
    };
    let s = side as isize;
    let id = |r: isize, c: isize| (r.rem_euclid(s) * s + c.rem_euclid(s)) as usize;
    let mut edges = Vec::with_capacity(side * side * offsets.len());
    for r in 0..s {
        for c in 0..s {
            for &(dr, dc) in offsets {
                let (a, b) = (id(r, c), id(r + dr, c + dc));
                edges.push(Edge {
                    source: a.min(b),
                    target: a.max(b),
                    weight: 1.0,
                });
            }
        }
    }
    Ok(edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub side: usize,
    pub degree: usize,
    /// Probability that a node is labelled Physical.
    pub p0: f64,
    pub seed: u64,
    /// Number of independent label draws.
    pub draws: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            side: 50,
            degree: 4,
            p0: 0.5,
            seed: 0,
            draws: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
}

fn check_p0(p0: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p0) {
        Ok(())
    } else {
        Err(Error::param("p0", format!("{p0} is outside [0, 1]")))
    }
}

/// Mean modularity of the grid over independent Bernoulli(`p0`) labellings.
pub fn grid_modularity_numeric(spec: &GridSpec) -> Result<GridEstimate> {
    check_p0(spec.p0)?;
    if spec.draws == 0 {
        return Err(Error::param("draws", "must be at least 1"));
    }
    let edges = grid_edges(spec.side, spec.degree)?;
    let n = spec.side * spec.side;
    let values: Vec<f64> = (0..spec.draws)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::stream(spec.seed, d as u64);
            let classes = (0..n)
                .map(|_| {
                    if r.random::<f64>() < spec.p0 {
                        JobClass::Physical
                    } else {
                        JobClass::Cognitive
                    }
                })
                .collect();
            modularity(&LabeledGraph {
                classes,
                edges: edges.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let mu = mean(&values);
    let std_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        (var / values.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(GridEstimate {
        mean: mu,
        std_error,
        draws: spec.draws,
    })
}

/// Low-density closed form `½ (p0² + (1 − p0)²)`.
pub fn grid_modularity_analytic(p0: f64) -> Result<f64> {
    check_p0(p0)?;
    Ok(0.5 * (p0 * p0 + (1.0 - p0) * (1.0 - p0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Baseline {
    Analytic,
    /// `p0` inside the spec is replaced by the graph's own class balance.
    Numeric(GridSpec),
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Analytic => "analytic",
            Baseline::Numeric(_) => "numeric",
        }
    }

    pub fn evaluate(&self, p0: f64) -> Result<f64> {
        match self {
            Baseline::Analytic => grid_modularity_analytic(p0),
            Baseline::Numeric(spec) => Ok(grid_modularity_numeric(&GridSpec { p0, ..*spec })?.mean),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjusted {
    pub q: f64,
    pub q_rand: f64,
    pub q_bar: f64,
    pub p0: f64,
}

pub fn adjusted_polarization(g: &LabeledGraph, baseline: &Baseline) -> Result<Adjusted> {
    let q = modularity(g)?;
    let p0 = g.p0();
    let q_rand = baseline.evaluate(p0)?;
    if q_rand.abs() < MIN_BASELINE {
        return Err(Error::Degenerate(format!(
            "baseline modularity {q_rand:e} at p0 = {p0} is too close to zero to divide by"
        )));
    }
    Ok(Adjusted {
        q,
        q_rand,
        q_bar: q / q_rand,
        p0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub samples: Vec<f64>,
    pub b: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BootstrapSummary {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        BootstrapSummary {
            b: samples.len(),
            mean: mean(&samples),
            ci_low: percentile(&samples, 2.5),
            ci_high: percentile(&samples, 97.5),
            samples,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    /// Whether two 95% intervals overlap. A convenience comparison, not a
    /// formal two-sample test.
    pub fn ci_overlap(&self, other: &BootstrapSummary) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub q: BootstrapSummary,
    pub q_bar: BootstrapSummary,
    /// Fraction of distinct original nodes in each replicate.
    pub distinct_fractions: Vec<f64>,
    /// Replicate draws discarded because they contained no edge.
    pub redraws: usize,
}

/// How many times each node is drawn in one resample of size `n`.
pub fn draw_multiplicities<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

/// Modularity and Physical fraction of the resampled graph in which node `u`
/// appears `counts[u]` times. Copies keep every incident edge of the
/// original and gain no edge to each other, so an original edge `(u, v)`
/// appears `counts[u] · counts[v]` times. `None` when no edge survives.
pub fn replicate_modularity(g: &LabeledGraph, counts: &[u32]) -> Option<(f64, f64)> {
    let mut m = 0.0;
    let mut within = 0.0;
    let mut physical_strength = 0.0;
    for e in &g.edges {
        let w = e.weight * counts[e.source] as f64 * counts[e.target] as f64;
        if w == 0.0 {
            continue;
        }
        m += w;
        let (a, b) = (g.classes[e.source], g.classes[e.target]);
        if a == b {
            within += w;
        }
        physical_strength += w * ((a == JobClass::Physical) as u8 + (b == JobClass::Physical) as u8) as f64;
    }
    if m <= 0.0 {
        return None;
    }
    let k = [physical_strength, 2.0 * m - physical_strength];
    let q = within / m - k.iter().map(|kc| (kc / (2.0 * m)).powi(2)).sum::<f64>();
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let physical: u64 = counts
        .iter()
        .zip(&g.classes)
        .filter(|(_, c)| **c == JobClass::Physical)
        .map(|(&k, _)| k as u64)
        .sum();
    Some((q, physical as f64 / total as f64))
}

/// Node-resampling bootstrap of `Q` and `Q̄`.
///
/// Replicate `r` uses stream `r` of `seed`, so samples do not depend on the
/// thread count. For the analytic baseline each replicate is divided by the
/// baseline at its own class balance; a numeric baseline is estimated once
/// at the full graph's balance.
pub fn bootstrap_polarization(g: &LabeledGraph, b: usize, seed: u64, baseline: &Baseline) -> Result<BootstrapResult> {
    if b == 0 {
        return Err(Error::param("bootstrap_b", "must be at least 1"));
    }
    let n = g.node_count();
    if n == 0 || g.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let fixed_rand = match baseline {
        Baseline::Analytic => None,
        Baseline::Numeric(_) => Some(baseline.evaluate(g.p0())?),
    };

    let reps: Vec<(f64, f64, f64, usize)> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(seed, r as u64);
            for attempt in 0..MAX_REDRAWS {
                let counts = draw_multiplicities(n, &mut stream);
                if let Some((q, p0)) = replicate_modularity(g, &counts) {
                    let distinct = counts.iter().filter(|&&c| c > 0).count() as f64 / n as f64;
                    let q_rand = match fixed_rand {
                        Some(v) => v,
                        None => grid_modularity_analytic(p0)?,
                    };
                    return Ok((q, q / q_rand, distinct, attempt));
                }
            }
            Err(Error::Degenerate(format!(
                "bootstrap replicate {r} drew no edge in {MAX_REDRAWS} attempts"
            )))
        })
        .collect::<Result<_>>()?;

    Ok(BootstrapResult {
        q: BootstrapSummary::from_samples(reps.iter().map(|r| r.0).collect()),
        q_bar: BootstrapSummary::from_samples(reps.iter().map(|r| r.1).collect()),
        distinct_fractions: reps.iter().map(|r| r.2).collect(),
        redraws: reps.iter().map(|r| r.3).sum(),
    })
}

/// Per-edition polarization summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub year: i32,
    pub nodes: usize,
    pub edges: usize,
    pub q: f64,
    pub q_rand: f64,
    pub q_bar: f64,
    pub p0: f64,
    pub baseline: String,
    pub edge_mode: EdgeMode,
    pub threshold: f64,
    pub weighting: String,
    /// Identifies the labelling model (hash of its serialized form).
    pub classifier: String,
    pub bootstrap: Option<BootstrapResult>,
}
