//! Subtoken embeddings, cosine similarity and nearest-identifier candidates.

mod skipgram;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::split_subtokens;

pub use skipgram::{train_embeddings, train_embeddings_with_stats, EmbeddingConfig, TrainStats};

/// Default number of candidates per identifier.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("embedding dimension must be at least 1")]
    ZeroDim,
    #[error("context window must be at least 1")]
    ZeroWindow,
    #[error("no token reaches min_count")]
    EmptyVocab,
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    window: usize,
    seed: u64,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    pub fn from_parts(
        dim: usize,
        window: usize,
        seed: u64,
        tokens: Vec<String>,
        vectors: Vec<f64>,
    ) -> Self {
        assert_eq!(tokens.len() * dim, vectors.len(), "vector matrix shape");
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        EmbeddingTable {
            dim,
            window,
            seed,
            tokens,
            index,
            vectors,
        }
    }

    pub(crate) fn into_parts(self) -> (usize, usize, u64, Vec<String>, Vec<f64>) {
        (self.dim, self.window, self.seed, self.tokens, self.vectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Vector for an identifier: its own entry when the lowercased name is in
    /// the vocabulary, else the mean of its in-vocabulary subtokens, else `None`.
    pub fn identifier_vector(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.get(&name.to_lowercase()) {
            return Some(v.to_vec());
        }
        let subs = split_subtokens(name);
        let vecs: Vec<&[f64]> = subs.iter().filter_map(|s| self.get(s)).collect();
        if vecs.is_empty() {
            return None;
        }
        Some(mean(&vecs, self.dim))
    }

    /// Writes the text format: a `dim window seed` header, then
    /// `token v1 … vdim` per line with 9 significant digits.
    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {} {}", self.dim, self.window, self.seed).unwrap();
        for (i, tok) in self.tokens.iter().enumerate() {
            s.push_str(tok);
            for x in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                s.push(' ');
                s.push_str(&format_sig9(*x));
            }
            s.push('\n');
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self, EmbedError> {
        let fmt = |line: usize, message: &str| EmbedError::Format {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| fmt(1, "missing header"))?
            .split_whitespace()
            .collect();
        let [dim, window, seed] = header[..] else {
            return Err(fmt(1, "header must be `dim window seed`"));
        };
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| fmt(1, "header fields must be integers"))
        };
        let (dim, window, seed) = (parse(dim)? as usize, parse(window)? as usize, parse(seed)?);
        if dim == 0 {
            return Err(EmbedError::ZeroDim);
        }
        let mut tokens = Vec::new();
        let mut vectors = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let tok = parts.next().expect("split yields one item");
            let vals: Vec<f64> = parts
                .map(|p| p.parse::<f64>().map_err(|_| fmt(lineno, "bad number")))
                .collect::<Result<_, _>>()?;
            if vals.len() != dim {
                return Err(fmt(lineno, "wrong vector length"));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(fmt(lineno, "non-finite component"));
            }
            tokens.push(tok.to_string());
            vectors.extend(vals);
        }
        Ok(Self::from_parts(dim, window, seed, tokens, vectors))
    }
}

/// Plain decimal with 9 significant digits.
pub(crate) fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // `-0.000…` for values that round away entirely
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0".to_string()
    } else {
        s
    }
}

fn mean(vecs: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for v in vecs {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    let n = vecs.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(
        u.len(),
        v.len(),
        "cosine of vectors with different dimensions"
    );
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (d / (nu * nv)).clamp(-1.0, 1.0)
}

/// Mean of the in-vocabulary subtoken vectors; the zero vector when none is known.
pub fn program_embedding(subtokens: &[String], table: &EmbeddingTable) -> Vec<f64> {
    let vecs: Vec<&[f64]> = subtokens.iter().filter_map(|t| table.get(t)).collect();
    if vecs.is_empty() {
        return vec![0.0; table.dim()];
    }
    mean(&vecs, table.dim())
}

/// Global identifier vocabulary with precomputed vectors.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    entries: Vec<(String, Vec<f64>)>,
    unembedded: Vec<String>,
}

impl CandidatePool {
    pub fn new<'a>(vocab: impl IntoIterator<Item = &'a String>, table: &EmbeddingTable) -> Self {
        let names: BTreeSet<&String> = vocab.into_iter().collect();
        let mut entries = Vec::new();
        let mut unembedded = Vec::new();
        for name in names {
            match table.identifier_vector(name) {
                Some(v) => entries.push((name.clone(), v)),
                None => unembedded.push(name.clone()),
            }
        }
        CandidatePool {
            entries,
            unembedded,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    /// Vocabulary members with no embedding; never proposed as candidates.
    pub fn unembedded(&self) -> &[String] {
        &self.unembedded
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub target: String,
    pub candidates: Vec<(String, f64)>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// The `k` pool members most cosine-similar to `w`, excluding `w` itself and
/// every identifier of the current program. Ties go to the lexicographically
/// smaller name. Empty when `w` has no embedding.
pub fn select_candidates(
    w: &str,
    program_identifiers: &BTreeSet<String>,
    pool: &CandidatePool,
    table: &EmbeddingTable,
    k: usize,
) -> CandidateSet {
    let mut candidates = Vec::new();
    if let Some(wv) = table.identifier_vector(w) {
        candidates = pool
            .entries
            .iter()
            .filter(|(name, _)| name != w && !program_identifiers.contains(name))
            .map(|(name, v)| (name.clone(), cosine(&wv, v)))
            .collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        candidates.truncate(k);
    }
    CandidateSet {
        target: w.to_string(),
        candidates,
    }
}
