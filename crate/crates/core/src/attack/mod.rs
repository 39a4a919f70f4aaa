//! Identifier-substitution attacks: ACCENT and the random and
//! Metropolis-Hastings baselines.

mod mh;
mod random;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AdversarialSample, CodeSample, Dataset};
use crate::embed::{cosine, program_embedding, select_candidates, CandidatePool, EmbeddingTable};
use crate::lang::{self, IdentifierInfo, Lang, LexError, TokenKind};
use crate::metrics::{bleu, EvalRow};
use crate::model::{CommentModel, ModelError};

pub use mh::mh_attack;
pub use random::random_attack;

/// Magnitudes below this count as zero when choosing an H branch.
pub const ZERO_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Accent,
    Random,
    Mh,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accent" => Ok(Method::Accent),
            "random" => Ok(Method::Random),
            "mh" => Ok(Method::Mh),
            other => Err(format!(
                "unknown method `{other}` (expected accent, random or mh)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub k: usize,
    pub max: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub method: Method,
    pub mh_iterations: usize,
    pub mh_temperature: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            k: 5,
            max: 2,
            alpha: 0.5,
            beta: 0.5,
            seed: 1,
            method: Method::Accent,
            mh_iterations: 100,
            mh_temperature: 0.05,
        }
    }
}

impl AttackConfig {
    pub fn check(&self) -> Result<(), AttackError> {
        let bad = |m: &str| Err(AttackError::Config(m.to_string()));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.max == 0 {
            return bad("max must be positive");
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return bad("alpha and beta must lie in [0, 1]");
        }
        if !(self.mh_temperature.is_finite() && self.mh_temperature > 0.0) {
            return bad("mh_temperature must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("model query failed: {0}")]
    Model(#[from] ModelError),
    #[error("sample does not lex: {0}")]
    Lex(#[from] LexError),
    #[error("invalid attack config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRecord {
    pub w: String,
    pub w_star: String,
    pub delta_score: f64,
    pub saliency: f64,
    pub h: f64,
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub original: CodeSample,
    pub adv: AdversarialSample,
    pub records: Vec<SubstitutionRecord>,
    pub score_before: f64,
    pub score_after: f64,
    pub output_before: String,
    pub output_after: String,
    pub valid: bool,
    pub queries: u64,
    /// Identifiers or candidates passed over, with the reason.
    pub skipped: Vec<String>,
}

/// Everything an attack needs besides the sample and the model.
pub struct AttackContext<'a> {
    pub table: &'a EmbeddingTable,
    pub pool: &'a CandidatePool,
    /// Replacement names for the random baseline; deliberately unfiltered.
    pub raw_vocab: &'a [String],
}

/// Declared identifiers across a dataset: the candidate vocabulary.
pub fn identifier_vocab(dataset: &Dataset, lang: Lang) -> BTreeSet<String> {
    dataset
        .samples
        .iter()
        .filter_map(|s| lang::extract_identifiers(&s.code, lang).ok())
        .flatten()
        .map(|i| i.name)
        .collect()
}

/// Every identifier and keyword spelling in a dataset, sorted.
pub fn token_vocab(dataset: &Dataset, lang: Lang) -> Vec<String> {
    let set: BTreeSet<String> = dataset
        .samples
        .iter()
        .filter_map(|s| lang::tokenize(&s.code, lang).ok())
        .flatten()
        .filter(|t| matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword))
        .map(|t| t.text)
        .collect();
    set.into_iter().collect()
}

/// Model output for `code` and its BLEU against `reference`. One query.
pub fn score(
    model: &dyn CommentModel,
    code: &str,
    reference: &str,
) -> Result<(f64, String), ModelError> {
    let out = model.generate(code)?;
    Ok((bleu(&out, reference), out))
}

/// Cosine between the identifier's vector and the mean program vector.
pub fn saliency(w: &str, code_subtokens: &[String], table: &EmbeddingTable) -> f64 {
    match table.identifier_vector(w) {
        Some(v) => cosine(&v, &program_embedding(code_subtokens, table)),
        None => 0.0,
    }
}

fn clamp_zero(x: f64) -> f64 {
    if x.abs() < ZERO_EPS {
        0.0
    } else {
        x
    }
}

/// Ranking score combining saliency and score drop, with α/β fallbacks
/// when one factor vanishes.
pub fn h_score(s: f64, delta: f64, alpha: f64, beta: f64) -> f64 {
    match (clamp_zero(s), clamp_zero(delta)) {
        (s, d) if s != 0.0 && d != 0.0 => s * d,
        (s, _) if s != 0.0 => s * beta,
        (_, d) if d != 0.0 => d * alpha,
        _ => 0.0,
    }
}

/// Per-sample generator so results do not depend on processing order.
pub(crate) fn sample_rng(seed: u64, id: &str) -> ChaCha8Rng {
    // FNV-1a over the id
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17))
}

/// Candidate replacements for every declared identifier, in declaration order.
///
/// Single-letter identifiers get one random different letter that no
/// identifier in the program already uses; others get their top-`k` pool
/// neighbours.
pub fn candidate_lists<R: Rng + ?Sized>(
    code: &str,
    lang: Lang,
    idents: &[IdentifierInfo],
    ctx: &AttackContext,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<String>>, LexError> {
    let names = lang::identifier_names(code, lang)?;
    Ok(idents
        .iter()
        .map(|info| {
            if info.single_letter {
                let letters: Vec<char> = ('a'..='z')
                    .filter(|c| !names.contains(c.to_string().as_str()))
                    .collect();
                if letters.is_empty() {
                    return Vec::new();
                }
                vec![letters[rng.gen_range(0..letters.len())].to_string()]
            } else {
                select_candidates(&info.name, &names, ctx.pool, ctx.table, k)
                    .candidates
                    .into_iter()
                    .map(|(n, _)| n)
                    .collect()
            }
        })
        .collect())
}

/// Evaluates every usable candidate for `w` and returns the one with the
/// largest score drop (first wins ties) with that drop, plus queries spent.
/// `None` when no candidate can be applied.
pub fn best_candidate(
    sample: &CodeSample,
    w: &str,
    candidates: &[String],
    score_before: f64,
    model: &dyn CommentModel,
    skipped: &mut Vec<String>,
) -> Result<(Option<(String, f64)>, u64), ModelError> {
    let mut best: Option<(String, f64)> = None;
    let mut queries = 0;
    for cand in candidates {
        let code = match lang::rename(&sample.code, w, cand, sample.lang) {
            Ok(c) => c,
            Err(e) => {
                skipped.push(format!("{w} -> {cand}: {e}"));
                continue;
            }
        };
        let (s, _) = score(model, &code, &sample.comment)?;
        queries += 1;
        let delta = score_before - s;
        if best.as_ref().is_none_or(|(_, d)| delta > *d) {
            best = Some((cand.clone(), delta));
        }
    }
    Ok((best, queries))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sample: &CodeSample,
    adv_code: String,
    substitutions: Vec<(String, String)>,
    records: Vec<SubstitutionRecord>,
    before: (f64, String),
    after: (f64, String),
    queries: u64,
    skipped: Vec<String>,
) -> AttackResult {
    let valid = lang::validate(&adv_code, sample.lang);
    AttackResult {
        original: sample.clone(),
        adv: AdversarialSample {
            original_id: sample.id.clone(),
            adv_code,
            substitutions,
            comment: sample.comment.clone(),
        },
        records,
        score_before: before.0,
        score_after: after.0,
        output_before: before.1,
        output_after: after.1,
        valid,
        queries,
        skipped,
    }
}

/// ACCENT: rank identifiers by H and substitute the top `max` of them.
pub fn accent_attack(
    sample: &CodeSample,
    model: &dyn CommentModel,
    ctx: &AttackContext,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    config.check()?;
    let lang = sample.lang;
    let mut rng = sample_rng(config.seed, &sample.id);
    let idents = lang::extract_identifiers(&sample.code, lang)?;
    let before = score(model, &sample.code, &sample.comment)?;
    let mut queries = 1;
    let mut skipped = Vec::new();
    if idents.is_empty() {
        let after = before.clone();
        return Ok(finish(
            sample,
            sample.code.clone(),
            vec![],
            vec![],
            before,
            after,
            queries,
            skipped,
        ));
    }

    let subtokens = lang::code_subtokens(&sample.code, lang)?;
    let lists = candidate_lists(&sample.code, lang, &idents, ctx, config.k, &mut rng)?;
    let mut records = Vec::new();
    for (info, cands) in idents.iter().zip(&lists) {
        if cands.is_empty() {
            skipped.push(format!("{}: no candidates", info.name));
            continue;
        }
        let (best, q) = best_candidate(sample, &info.name, cands, before.0, model, &mut skipped)?;
        queries += q;
        let Some((w_star, delta)) = best else {
            skipped.push(format!("{}: every candidate collides", info.name));
            continue;
        };
        let s = saliency(&info.name, &subtokens, ctx.table);
        records.push(SubstitutionRecord {
            w: info.name.clone(),
            w_star,
            delta_score: delta,
            saliency: s,
            h: h_score(s, delta, config.alpha, config.beta),
            applied: false,
        });
    }

    // records are in declaration order, so a stable sort keeps it for ties
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[b].h.total_cmp(&records[a].h));
    let mut code = sample.code.clone();
    let mut substitutions = Vec::new();
    for i in order {
        if substitutions.len() == config.max {
            break;
        }
        let r = &mut records[i];
        match lang::rename(&code, &r.w, &r.w_star, lang) {
            Ok(next) => {
                code = next;
                r.applied = true;
                substitutions.push((r.w.clone(), r.w_star.clone()));
            }
            Err(e) => skipped.push(format!("{} -> {}: {e}", r.w, r.w_star)),
        }
    }

    let after = if substitutions.is_empty() {
        before.clone()
    } else {
        queries += 1;
        score(model, &code, &sample.comment)?
    };
    Ok(finish(
        sample,
        code,
        substitutions,
        records,
        before,
        after,
        queries,
        skipped,
    ))
}

/// Dispatches on `config.method`.
pub fn run_attack(
    sample: &CodeSample,
    model: &dyn CommentModel,
    ctx: &AttackContext,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    match config.method {
        Method::Accent => accent_attack(sample, model, ctx, config),
        Method::Random => random_attack(sample, model, ctx.raw_vocab, config),
        Method::Mh => mh_attack(sample, model, ctx, config),
    }
}

/// Attacks every sample with up to `jobs` worker threads; results come back
/// in input order regardless of scheduling.
pub fn attack_all(
    samples: &[CodeSample],
    model: &dyn CommentModel,
    ctx: &AttackContext,
    config: &AttackConfig,
    jobs: usize,
) -> Vec<Result<AttackResult, AttackError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<AttackResult, AttackError>>>> =
        samples.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, samples.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= samples.len() {
                    break;
                }
                let r = run_attack(&samples[i], model, ctx, config);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Report input for a finished attack.
pub fn eval_row(result: &AttackResult) -> EvalRow {
    EvalRow {
        id: result.original.id.clone(),
        reference: result.original.comment.clone(),
        output_before: result.output_before.clone(),
        output_after: result.output_after.clone(),
        valid: result.valid,
        queries: result.queries,
    }
}
