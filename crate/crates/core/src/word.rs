use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A finite alphabet of `size` symbols indexed `0..size`, optionally labelled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Parameter("alphabet must have at least one symbol".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Parameter("alphabet must have at least one symbol".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::Parameter(format!("invalid symbol label {l:?}")));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::Parameter(format!("duplicate symbol label {l:?}")));
            }
        }
        Ok(Self { size: labels.len(), labels: Some(labels) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, symbol: usize) -> String {
        match &self.labels {
            Some(l) => l[symbol].clone(),
            None => symbol.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|x| x == label),
            None => label.parse().ok().filter(|&i| i < self.size),
        }
    }

    pub fn check(&self, word: &Word) -> Result<()> {
        match word.0.iter().find(|&&s| s >= self.size) {
            Some(&symbol) => Err(Error::InvalidWord { symbol, alphabet_size: self.size }),
            None => Ok(()),
        }
    }

    /// Parses whitespace-separated labels. A single token made of one-character
    /// labels is split character by character; `ε` and the empty string denote
    /// the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "ε" {
            return Ok(Word::empty());
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let single_char = self
            .labels
            .as_ref()
            .map(|l| l.iter().all(|s| s.chars().count() == 1))
            .unwrap_or(self.size <= 10);
        let owned: Vec<String>;
        let tokens: Vec<&str> = if tokens.len() == 1 && single_char && self.index_of(tokens[0]).is_none() {
            owned = tokens[0].chars().map(String::from).collect();
            owned.iter().map(String::as_str).collect()
        } else {
            tokens
        };
        tokens
            .iter()
            .map(|t| {
                self.index_of(t)
                    .ok_or_else(|| Error::Parameter(format!("unknown symbol {t:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word::from)
    }

    pub fn format(&self, word: &Word) -> String {
        if word.is_empty() {
            return "ε".into();
        }
        let parts: Vec<String> = word.0.iter().map(|&s| self.label(s)).collect();
        parts.join(" ")
    }
}

/// A finite sequence of symbol indices. Ordered shorter-first, then
/// lexicographically by symbol index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = Vec::with_capacity(self.len() + other.len());
        s.extend_from_slice(&self.0);
        s.extend_from_slice(&other.0);
        Word(s)
    }

    pub fn pushed(&self, symbol: usize) -> Word {
        let mut s = self.0.clone();
        s.push(symbol);
        Word(s)
    }

    pub fn repeat(symbol: usize, n: usize) -> Word {
        Word(vec![symbol; n])
    }

    pub fn count(&self, symbol: usize) -> usize {
        self.0.iter().filter(|&&s| s == symbol).count()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl From<&[usize]> for Word {
    fn from(v: &[usize]) -> Self {
        Word(v.to_vec())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ε");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// All `m^len` words of length `len`, in lexicographic order.
pub fn words_of_length(m: usize, len: usize) -> impl Iterator<Item = Word> {
    let total = if m == 0 && len > 0 { 0 } else { m.pow(len as u32) };
    (0..total).map(move |mut code| {
        let mut symbols = vec![0; len];
        for slot in symbols.iter_mut().rev() {
            *slot = code % m;
            code /= m;
        }
        Word(symbols)
    })
}

/// All words of length at most `max_len`, shorter words first.
pub fn words_up_to(m: usize, max_len: usize) -> impl Iterator<Item = Word> {
    (0..=max_len).flat_map(move |l| words_of_length(m, l))
}
