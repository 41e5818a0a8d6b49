//! Support code for the acceptance suite: a PASS/FAIL reporter and
//! independent dense-matrix oracles.

use std::fmt::Display;
use std::time::Duration;

use jobnet_core::graph::Edge;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub criterion: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Collects one outcome per criterion and prints each as it arrives.
#[derive(Debug, Default)]
pub struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    pub fn record(&mut self, criterion: u32, name: &str, passed: bool, detail: impl Display) {
        let outcome = Outcome {
            criterion,
            name: name.to_string(),
            passed,
            detail: detail.to_string(),
        };
        println!(
            "{} criterion {:>2} ({}): {}",
            if passed { "PASS" } else { "FAIL" },
            criterion,
            outcome.name,
            outcome.detail
        );
        self.outcomes.push(outcome);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failed(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    /// Summary line; `true` when every criterion passed.
    pub fn finish(&self) -> bool {
        let failed = self.failed();
        println!(
            "acceptance: {} passed, {} failed{}",
            self.outcomes.len() - failed.len(),
            failed.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(
                    " ({})",
                    failed.iter().map(|o| o.criterion.to_string()).collect::<Vec<_>>().join(", ")
                )
            }
        );
        failed.is_empty()
    }
}

pub fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

/// `(1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)` over the dense adjacency
/// matrix, written out term by term.
pub fn modularity_double_sum<T: PartialEq>(labels: &[T], edges: &[Edge]) -> f64 {
    let n = labels.len();
    let mut a = vec![vec![0.0; n]; n];
    for e in edges {
        a[e.source][e.target] += e.weight;
        a[e.target][e.source] += e.weight;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                s += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    s / two_m
}

/// Every set partition of `0..n` as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for c in 0..=next {
            prefix.push(c);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let sizes: Vec<usize> = (1..=6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(sizes, [1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn single_edge_oracle() {
        let e = [Edge {
            source: 0,
            target: 1,
            weight: 2.0,
        }];
        // k = (2, 2), 2m = 4, so every cell contributes A_ij − 1
        // together: all four cells sum to 0
        assert_eq!(modularity_double_sum(&[0, 0], &e), 0.0);
        // apart: only the two diagonal cells count, −2 / 4
        assert_eq!(modularity_double_sum(&[0, 1], &e), -0.5);
    }

    #[test]
    fn report_counts_failures() {
        let mut r = Report::default();
        r.record(1, "a", true, "ok");
        r.record(2, "b", false, "no");
        assert_eq!(r.failed().len(), 1);
        assert!(!r.finish());
    }
}
