//! Word-vector models and averaged description embeddings.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::sha256_hex;

/// Read-only word-vector table with a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    source_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

impl EmbeddingModel {
    pub fn from_vectors<I>(dimension: usize, vectors: I, source_id: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        let mut model = EmbeddingModel {
            dimension,
            index: HashMap::new(),
            data: Vec::new(),
            source_id: source_id.into(),
        };
        for (token, v) in vectors {
            if v.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: v.len(),
                });
            }
            model.insert(token, &v);
        }
        Ok(model)
    }

    /// Returns `true` when an existing vector was replaced.
    fn insert(&mut self, token: String, v: &[f64]) -> bool {
        match self.index.get(&token) {
            Some(&slot) => {
                self.data[slot * self.dimension..(slot + 1) * self.dimension].copy_from_slice(v);
                true
            }
            None => {
                self.index.insert(token, self.index.len());
                self.data.extend_from_slice(v);
                false
            }
        }
    }

    /// Parse the text format: an optional `count dim` header, then one token
    /// followed by `dim` whitespace-separated reals per line. Duplicate tokens
    /// keep the last vector and produce a warning.
    pub fn parse<R: BufRead>(
        reader: R,
        expected_dim: Option<usize>,
        name: &str,
    ) -> Result<(Self, Vec<LoadWarning>)> {
        let mut bytes_for_hash = Vec::new();
        let mut dimension = expected_dim;
        let mut model: Option<EmbeddingModel> = None;
        let mut warnings = Vec::new();
        let fail = |line: usize, reason: String| Error::Format {
            path: name.to_string(),
            line,
            reason,
        };

        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(name, e))?;
            bytes_for_hash.extend_from_slice(line.as_bytes());
            bytes_for_hash.push(b'\n');
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();

            if line_no == 1 && rest.len() == 1 {
                if let (Ok(_count), Ok(dim)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                    if let Some(exp) = expected_dim {
                        if exp != dim {
                            return Err(fail(line_no, format!("header dimension {dim}, expected {exp}")));
                        }
                    }
                    dimension = Some(dim);
                    continue;
                }
            }

            let values = rest
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fail(line_no, format!("bad number: {e}")))?;
            let dim = *dimension.get_or_insert(values.len());
            if values.len() != dim || dim == 0 {
                return Err(fail(
                    line_no,
                    format!("token `{token}` has {} values, expected {dim}", values.len()),
                ));
            }
            let m = model.get_or_insert_with(|| EmbeddingModel {
                dimension: dim,
                index: HashMap::new(),
                data: Vec::new(),
                source_id: String::new(),
            });
            if m.insert(token.to_string(), &values) {
                warnings.push(LoadWarning {
                    line: line_no,
                    message: format!("duplicate token `{token}`, keeping this vector"),
                });
            }
        }

        let mut model = model.ok_or_else(|| Error::EmptyInput(format!("{name}: no vectors")))?;
        model.source_id = sha256_hex(&bytes_for_hash);
        Ok((model, warnings))
    }

    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<(Self, Vec<LoadWarning>)> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(
            std::io::BufReader::new(file),
            expected_dim,
            &path.display().to_string(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// `None` for out-of-vocabulary tokens; there is no fallback vector.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&slot| &self.data[slot * self.dimension..(slot + 1) * self.dimension])
    }
}

/// Mean word vector of one description. An empty `vector` marks a
/// description with no in-vocabulary tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionVector {
    pub entry_id: String,
    pub vector: Vec<f64>,
    pub covered_tokens: usize,
    pub total_tokens: usize,
}

impl DescriptionVector {
    pub fn is_empty(&self) -> bool {
        self.covered_tokens == 0
    }
}

/// Average the vectors of the in-vocabulary tokens.
///
/// Covered tokens are summed in sorted order, which makes the result
/// bit-identical under any permutation of `tokens`.
pub fn embed_description(entry_id: &str, tokens: &[String], model: &EmbeddingModel) -> DescriptionVector {
    let mut found: Vec<&str> = tokens
        .iter()
        .map(String::as_str)
        .filter(|t| model.get(t).is_some())
        .collect();
    found.sort_unstable();
    let vector = if found.is_empty() {
        Vec::new()
    } else {
        let mut sum = vec![0.0; model.dimension()];
        for t in &found {
            for (s, x) in sum.iter_mut().zip(model.get(t).unwrap()) {
                *s += x;
            }
        }
        let n = found.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        sum
    };
    DescriptionVector {
        entry_id: entry_id.to_string(),
        vector,
        covered_tokens: found.len(),
        total_tokens: tokens.len(),
    }
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine from precomputed norms; shared with the all-pairs builder so both
/// paths round identically.
pub(crate) fn cosine_with_norms(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn parse(text: &str) -> Result<(EmbeddingModel, Vec<LoadWarning>)> {
        EmbeddingModel::parse(text.as_bytes(), None, "vec.txt")
    }

    #[test]
    fn loads_small_file_with_header() {
        let (m, w) = parse("3 4\nlathe 1 0 0 0\ndrill 0 1 0 0\nplans 0 0 1 0.5\n").unwrap();
        assert_eq!((m.len(), m.dimension()), (3, 4));
        assert!(w.is_empty());
        assert_eq!(m.get("plans"), Some(&[0.0, 0.0, 1.0, 0.5][..]));
        assert!(m.get("tutor").is_none());
        assert_eq!(m.source_id().len(), 64);
    }

    #[test]
    fn malformed_line_names_the_line() {
        let err = parse("lathe 1 0 0 0\ndrill 0 1 0\n").unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_conflicting_with_expected_dim() {
        assert!(EmbeddingModel::parse("2 3\na 1 2 3\n".as_bytes(), Some(4), "v").is_err());
    }

    #[test]
    fn duplicate_token_last_wins() {
        let (m, w) = parse("lathe 1 0\ndrill 0 1\nlathe 2 2\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].line, 3);
        assert_eq!(m.get("lathe"), Some(&[2.0, 2.0][..]));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyInput(_))));
        assert!(matches!(parse("\n\n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn embedding_is_the_mean() {
        let (m, _) = parse("w1 1 0\nw2 0 1\n").unwrap();
        let single = embed_description("e", &toks(&["w1"]), &m);
        assert_eq!(single.vector, vec![1.0, 0.0]);
        let both = embed_description("e", &toks(&["w1", "w2"]), &m);
        assert_eq!(both.vector, vec![0.5, 0.5]);
    }

    #[test]
    fn coverage_counts_and_hand_mean() {
        let (m, _) = parse(
            "a 1 2 3\nb 0 0 6\nc -3 1 0\nd 2 2 2\ne 0.5 0 0\nf 0 0.5 0\ng 1 1 1\n",
        )
        .unwrap();
        let tokens = toks(&["a", "x", "b", "c", "y", "d", "e", "f", "z", "g"]);
        let dv = embed_description("e1", &tokens, &m);
        assert_eq!((dv.covered_tokens, dv.total_tokens), (7, 10));
        // column sums: 1.5, 6.5, 12 over 7 covered tokens
        let expected = [1.5 / 7.0, 6.5 / 7.0, 12.0 / 7.0];
        for (got, want) in dv.vector.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn no_coverage_gives_empty_marker() {
        let (m, _) = parse("a 1 0\n").unwrap();
        let dv = embed_description("e", &toks(&["q", "r"]), &m);
        assert!(dv.is_empty() && dv.vector.is_empty());
        assert_eq!(dv.total_tokens, 2);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 32 / (sqrt(14) * sqrt(77))
        let c = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - 0.974_631_846_197_076_2).abs() < 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }
}
