//! Louvain community detection.
//!
//! Deterministic: nodes are visited in index order, a node moves only on a
//! strictly positive gain, and ties between candidate communities go to the
//! lowest community id. Community ids in the result are numbered by first
//! appearance in node order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, SimilarityGraph};
use crate::polarization::modularity_of_partition;

/// Gains below this are treated as zero.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Communities {
    /// Community of each node.
    pub assignment: Vec<usize>,
    pub count: usize,
    pub modularity: f64,
    /// Community size -> number of communities of that size.
    pub size_histogram: BTreeMap<usize, usize>,
}

/// Symmetric weighted adjacency. A self-loop entry holds twice the internal
/// weight, so row sums are strengths.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
}

impl Level {
    fn from_edges(n: usize, edges: &[Edge]) -> Level {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for e in edges {
            *rows[e.source].entry(e.target).or_insert(0.0) += e.weight;
            *rows[e.target].entry(e.source).or_insert(0.0) += e.weight;
        }
        Level::from_rows(rows)
    }

    fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Level {
        let adj: Vec<Vec<(usize, f64)>> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        let strength = adj.iter().map(|r| r.iter().map(|(_, w)| w).sum()).collect();
        Level { adj, strength }
    }

    /// Local moving phase. Returns the community of each node and whether
    /// any node moved.
    fn local_moves(&self, two_m: f64) -> (Vec<usize>, bool) {
        let n = self.adj.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut total: Vec<f64> = self.strength.clone();
        let mut moved_any = false;
        let mut links: BTreeMap<usize, f64> = BTreeMap::new();
        loop {
            let mut moved = false;
            for i in 0..n {
                let ki = self.strength[i];
                let own = comm[i];
                links.clear();
                for &(j, w) in &self.adj[i] {
                    if j != i {
                        *links.entry(comm[j]).or_insert(0.0) += w;
                    }
                }
                total[own] -= ki;
                let gain = |c: usize, kin: f64| kin - total[c] * ki / two_m;
                let mut best = own;
                let mut best_gain = gain(own, links.get(&own).copied().unwrap_or(0.0));
                for (&c, &kin) in &links {
                    let g = gain(c, kin);
                    if g > best_gain + EPS {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += ki;
                if best != own {
                    comm[i] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        (renumber(&comm), moved_any)
    }

    fn aggregate(&self, comm: &[usize], groups: usize) -> Level {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); groups];
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, w) in row {
                *rows[comm[i]].entry(comm[j]).or_insert(0.0) += w;
            }
        }
        Level::from_rows(rows)
    }
}

fn renumber(comm: &[usize]) -> Vec<usize> {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    comm.iter()
        .map(|c| {
            let next = ids.len();
            *ids.entry(*c).or_insert(next)
        })
        .collect()
}

/// Louvain partition of an `n`-node graph with non-negative weights.
pub fn louvain(n: usize, edges: &[Edge]) -> Result<Communities> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if let Some(e) = edges.iter().find(|e| !(e.weight >= 0.0 && e.weight.is_finite())) {
        return Err(Error::param("edges", format!("weight {} is not finite and non-negative", e.weight)));
    }
    let two_m: f64 = 2.0 * edges.iter().map(|e| e.weight).sum::<f64>();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }

    let mut assignment: Vec<usize> = (0..n).collect();
    let mut level = Level::from_edges(n, edges);
    loop {
        let (comm, moved) = level.local_moves(two_m);
        if !moved {
            break;
        }
        for a in assignment.iter_mut() {
            *a = comm[*a];
        }
        let groups = comm.iter().max().map_or(0, |c| c + 1);
        level = level.aggregate(&comm, groups);
    }

    let assignment = renumber(&assignment);
    let count = assignment.iter().max().map_or(0, |c| c + 1);
    let mut sizes = vec![0usize; count];
    for &c in &assignment {
        sizes[c] += 1;
    }
    let mut size_histogram = BTreeMap::new();
    for s in sizes {
        *size_histogram.entry(s).or_insert(0) += 1;
    }
    Ok(Communities {
        modularity: modularity_of_partition(&assignment, edges)?,
        assignment,
        count,
        size_histogram,
    })
}

pub fn louvain_communities(graph: &SimilarityGraph) -> Result<Communities> {
    louvain(graph.node_count(), &graph.edges)
}
