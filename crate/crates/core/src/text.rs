//! Tokenization and stop words.
//!
//! Tokens are lowercase maximal runs of alphanumeric characters. Hyphenated
//! words split into their parts ("bench-lathe" -> "bench", "lathe") and
//! punctuation never survives as a token.

use std::collections::HashSet;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collapse every whitespace run to a single space and trim the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone)]
pub struct StopWords {
    words: HashSet<String>,
    sha256: String,
}

impl StopWords {
    /// The English list shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_list(BUILTIN_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are ignored. The hash
    /// covers the raw text so reports can pin the exact list used.
    pub fn from_list(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopWords {
            words,
            sha256: sha256_hex(text.as_bytes()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&text))
    }

    pub fn empty() -> Self {
        Self::from_list("")
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    pub fn filter(&self, tokens: Vec<String>) -> Vec<String> {
        tokens.into_iter().filter(|t| !self.contains(t)).collect()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_hyphens_and_drops_punctuation() {
        assert_eq!(
            tokenize("BENCH-LATHE Operator (mach. shop)."),
            vec!["bench", "lathe", "operator", "mach", "shop"]
        );
        assert!(tokenize(" -- ... ").is_empty());
    }

    #[test]
    fn keeps_digits_inside_tokens() {
        assert_eq!(tokenize("4-76.210 x2"), vec!["4", "76", "210", "x2"]);
    }

    #[test]
    fn builtin_list_is_pinned() {
        let sw = StopWords::builtin();
        assert!(sw.len() > 140 && sw.len() < 160);
        assert!(sw.contains("the") && !sw.contains("lathe"));
        assert_eq!(sw.sha256().len(), 64);
    }

    #[test]
    fn whitespace_normalization() {
        assert_eq!(normalize_whitespace("  a \n\t b  "), "a b");
    }
}
