//! Text-similarity metrics and attack-evaluation arithmetic.
//!
//! All similarity scores are on a 0–100 scale. Texts are tokenized by
//! [`text_tokens`]: lowercase, whitespace split, trailing punctuation stripped.

mod report;

use std::collections::HashMap;

use thiserror::Error;

pub use report::{build_report, Aggregates, EvalRow, ReportRow, RobustnessReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("valid rate over zero samples")]
    EmptyTotal,
}

pub const BLEU_ORDER: usize = 4;
pub const ROUGE_BETA_SQ: f64 = 1.2;
pub const METEOR_RECALL_WEIGHT: f64 = 9.0;
pub const METEOR_FRAG_WEIGHT: f64 = 0.5;
pub const METEOR_FRAG_EXP: f64 = 3.0;

/// Lowercases, splits on whitespace and strips trailing ASCII punctuation
/// from each token; tokens that become empty are dropped.
pub fn text_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.to_lowercase())
        .map(|t| {
            t.trim_end_matches(|c: char| c.is_ascii_punctuation())
                .to_string()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and candidate n-gram total.
fn clipped_matches(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

fn combine_bleu(matches: &[(usize, usize)], cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 || matches[0].0 == 0 {
        return 0.0;
    }
    let log_sum: f64 = matches
        .iter()
        .enumerate()
        .map(|(i, &(m, total))| {
            let p = if i == 0 {
                m as f64 / total as f64
            } else {
                (m as f64 + 1.0) / (total as f64 + 1.0)
            };
            p.ln()
        })
        .sum();
    let bp = if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    100.0 * bp * (log_sum / matches.len() as f64).exp()
}

/// Smoothed sentence-level BLEU-4 over pre-tokenized sequences.
///
/// Add-one smoothing applies to the 2- to 4-gram precisions; a candidate
/// with no unigram match scores 0.
pub fn bleu_tokens(candidate: &[String], reference: &[String]) -> f64 {
    let matches: Vec<_> = (1..=BLEU_ORDER)
        .map(|n| clipped_matches(candidate, reference, n))
        .collect();
    combine_bleu(&matches, candidate.len(), reference.len())
}

pub fn bleu(candidate: &str, reference: &str) -> f64 {
    bleu_tokens(&text_tokens(candidate), &text_tokens(reference))
}

/// Corpus-level BLEU-4: n-gram statistics and lengths are summed over all
/// pairs before combining, with the same smoothing as [`bleu_tokens`].
pub fn corpus_bleu(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    let mut matches = vec![(0usize, 0usize); BLEU_ORDER];
    let (mut cand_len, mut ref_len) = (0, 0);
    for (cand, reference) in pairs {
        cand_len += cand.len();
        ref_len += reference.len();
        for (n, slot) in matches.iter_mut().enumerate() {
            let (m, t) = clipped_matches(cand, reference, n + 1);
            slot.0 += m;
            slot.1 += t;
        }
    }
    combine_bleu(&matches, cand_len, ref_len)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    100.0 * (1.0 + ROUGE_BETA_SQ) * p * r / (r + ROUGE_BETA_SQ * p)
}

/// LCS-based ROUGE-L F-measure with β² = 1.2.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_tokens(&text_tokens(candidate), &text_tokens(reference))
}

/// Exact-match unigram alignment: each candidate token, left to right, takes
/// the reference slot right after the previous alignment when it matches and
/// is free, else the leftmost free matching slot. Returns
/// (candidate index, reference index) pairs.
fn meteor_alignment(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut used = vec![false; reference.len()];
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for (ci, tok) in candidate.iter().enumerate() {
        let next = last
            .map(|l| l + 1)
            .filter(|&j| j < reference.len() && !used[j] && &reference[j] == tok);
        let pick =
            next.or_else(|| (0..reference.len()).find(|&j| !used[j] && &reference[j] == tok));
        if let Some(j) = pick {
            used[j] = true;
            out.push((ci, j));
            last = Some(j);
        }
    }
    out
}

pub fn meteor_lite_tokens(candidate: &[String], reference: &[String]) -> f64 {
    let align = meteor_alignment(candidate, reference);
    let m = align.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = 1 + align
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = (1.0 + METEOR_RECALL_WEIGHT) * p * r / (r + METEOR_RECALL_WEIGHT * p);
    let penalty = METEOR_FRAG_WEIGHT * (chunks as f64 / m as f64).powf(METEOR_FRAG_EXP);
    100.0 * fmean * (1.0 - penalty)
}

/// METEOR restricted to exact matches (no stemming or synonyms).
pub fn meteor_lite(candidate: &str, reference: &str) -> f64 {
    meteor_lite_tokens(&text_tokens(candidate), &text_tokens(reference))
}

/// Relative BLEU degradation and whether the baseline was degenerate (zero),
/// in which case the degradation is reported as 0.
pub fn relative_degradation(bleu_y: f64, bleu_y_adv: f64) -> (f64, bool) {
    if bleu_y == 0.0 {
        (0.0, true)
    } else {
        ((bleu_y - bleu_y_adv) / bleu_y, false)
    }
}

pub fn valid_rate(valid_count: usize, total: usize) -> Result<f64, MetricError> {
    if total == 0 {
        return Err(MetricError::EmptyTotal);
    }
    Ok(valid_count as f64 / total as f64)
}

pub fn success_rate(r_d: f64, v_r: f64) -> f64 {
    r_d * v_r
}
