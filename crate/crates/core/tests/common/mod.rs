#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use accent::attack::{identifier_vocab, token_vocab, AttackContext};
use accent::corpus::{CodeSample, Dataset, Role};
use accent::embed::{train_embeddings, CandidatePool, EmbeddingConfig, EmbeddingTable};
use accent::lang::{self, code_subtokens, extract_identifiers, Lang, TokenKind};
use accent::model::{CommentModel, ModelError, SurrogateModel};
use accent::synth::synth_corpus;

// ---------------------------------------------------------------- metrics

pub fn toks(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let mut t = raw.to_lowercase();
        while t.chars().last().is_some_and(|c| c.is_ascii_punctuation()) {
            t.pop();
        }
        if !t.is_empty() {
            out.push(t);
        }
    }
    out
}

fn grams(tokens: &[String], n: usize) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        *m.entry(tokens[i..i + n].join("\u{1f}")).or_insert(0) += 1;
        i += 1;
    }
    m
}

/// (clipped matches, candidate n-grams) for n = 1..=4.
fn bleu_stats(c: &[String], r: &[String]) -> [(f64, f64); 4] {
    let mut out = [(0.0, 0.0); 4];
    for n in 1..=4 {
        let rg = grams(r, n);
        let mut m = 0;
        let mut total = 0;
        for (g, cnt) in grams(c, n) {
            total += cnt;
            m += cnt.min(*rg.get(&g).unwrap_or(&0));
        }
        out[n - 1] = (m as f64, total as f64);
    }
    out
}

fn bleu_from(stats: [(f64, f64); 4], c_len: f64, r_len: f64) -> f64 {
    if c_len == 0.0 || stats[0].0 == 0.0 {
        return 0.0;
    }
    let mut geo = 1.0;
    for (n, (m, t)) in stats.iter().enumerate() {
        let p = if n == 0 { m / t } else { (m + 1.0) / (t + 1.0) };
        geo *= p.powf(0.25);
    }
    let bp = if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len / c_len).exp()
    };
    100.0 * bp * geo
}

pub fn bleu_oracle(c: &[String], r: &[String]) -> f64 {
    bleu_from(bleu_stats(c, r), c.len() as f64, r.len() as f64)
}

pub fn corpus_bleu_oracle(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    let mut acc = [(0.0, 0.0); 4];
    let (mut cl, mut rl) = (0.0, 0.0);
    for (c, r) in pairs {
        for (a, s) in acc.iter_mut().zip(bleu_stats(c, r)) {
            a.0 += s.0;
            a.1 += s.1;
        }
        cl += c.len() as f64;
        rl += r.len() as f64;
    }
    bleu_from(acc, cl, rl)
}

fn lcs(a: &[String], b: &[String], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let key = (a.len(), b.len());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let v = if a[0] == b[0] {
        1 + lcs(&a[1..], &b[1..], memo)
    } else {
        lcs(&a[1..], b, memo).max(lcs(a, &b[1..], memo))
    };
    memo.insert(key, v);
    v
}

pub fn rouge_oracle(c: &[String], r: &[String]) -> f64 {
    let l = lcs(c, r, &mut HashMap::new()) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    let b2 = 1.2;
    100.0 * (1.0 + b2) * p * rec / (rec + b2 * p)
}

pub fn meteor_oracle(c: &[String], r: &[String]) -> f64 {
    let mut free: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (j, t) in r.iter().enumerate() {
        free.entry(t.as_str()).or_default().insert(j);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, t) in c.iter().enumerate() {
        let Some(slots) = free.get_mut(t.as_str()) else {
            continue;
        };
        let follow = pairs
            .last()
            .map(|&(_, j)| j + 1)
            .filter(|j| slots.contains(j));
        let Some(j) = follow.or_else(|| slots.iter().next().copied()) else {
            continue;
        };
        slots.remove(&j);
        pairs.push((i, j));
    }
    if pairs.is_empty() {
        return 0.0;
    }
    let m = pairs.len() as f64;
    let mut chunks = 1.0;
    for k in 1..pairs.len() {
        let (a, b) = (pairs[k - 1], pairs[k]);
        if a.0 + 1 != b.0 || a.1 + 1 != b.1 {
            chunks += 1.0;
        }
    }
    let (p, rec) = (m / c.len() as f64, m / r.len() as f64);
    let f = 10.0 * p * rec / (rec + 9.0 * p);
    100.0 * f * (1.0 - 0.5 * (chunks / m).powi(3))
}

// ---------------------------------------------------------------- surrogate

pub fn jaccard_nearest(memory: &[CodeSample], code: &str, lang: Lang) -> usize {
    let bag = |c: &str| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for s in code_subtokens(c, lang).unwrap() {
            *m.entry(s).or_insert(0) += 1;
        }
        m
    };
    let q = bag(code);
    let mut best = (0, -1.0);
    for (i, e) in memory.iter().enumerate() {
        let b = bag(&e.code);
        let keys: BTreeSet<&String> = q.keys().chain(b.keys()).collect();
        let (mut lo, mut hi) = (0usize, 0usize);
        for k in keys {
            let (x, y) = (*q.get(k).unwrap_or(&0), *b.get(k).unwrap_or(&0));
            lo += x.min(y);
            hi += x.max(y);
        }
        let sim = if hi == 0 { 0.0 } else { lo as f64 / hi as f64 };
        if sim > best.1 {
            best = (i, sim);
        }
    }
    best.0
}

// ---------------------------------------------------------------- attacks

pub struct World {
    pub lang: Lang,
    pub train: Dataset,
    pub table: EmbeddingTable,
    pub pool: CandidatePool,
    pub raw: Vec<String>,
}

impl World {
    pub fn new(lang: Lang, n_train: usize, seed: u64, dim: usize) -> Self {
        Self::from_dataset(
            Dataset::new(
                "train",
                synth_corpus(lang, n_train, seed, "tr"),
                Role::Train,
            ),
            seed,
            dim,
        )
    }

    /// Embeddings (`min_count` 1) and vocabularies built from `train`.
    pub fn from_dataset(train: Dataset, seed: u64, dim: usize) -> Self {
        let lang = train.samples[0].lang;
        let sents: Vec<Vec<String>> = train
            .samples
            .iter()
            .map(|s| code_subtokens(&s.code, lang).unwrap())
            .collect();
        let cfg = EmbeddingConfig {
            dim,
            min_count: 1,
            seed,
            ..Default::default()
        };
        let table = train_embeddings(&sents, &cfg).unwrap();
        let vocab = identifier_vocab(&train, lang);
        let pool = CandidatePool::new(&vocab, &table);
        let raw = token_vocab(&train, lang);
        World {
            lang,
            train,
            table,
            pool,
            raw,
        }
    }

    pub fn ctx(&self) -> AttackContext<'_> {
        AttackContext {
            table: &self.table,
            pool: &self.pool,
            raw_vocab: &self.raw,
        }
    }
}

/// Answers with the first eight alphabetic subtokens of the program, so every
/// rename shows up in the output.
pub struct SubtokenModel(pub Lang);

impl CommentModel for SubtokenModel {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        let subs = code_subtokens(code, self.0).map_err(|e| ModelError::Invalid(e.to_string()))?;
        let words: Vec<String> = subs
            .into_iter()
            .filter(|s| s.chars().all(|c| c.is_ascii_alphabetic()) && !lang::is_reserved(s, self.0))
            .take(8)
            .collect();
        Ok(words.join(" "))
    }
}

/// The two models the attack oracles run against.
pub fn oracle_models(world: &World) -> Vec<(&'static str, Box<dyn CommentModel>)> {
    vec![
        (
            "surrogate",
            Box::new(SurrogateModel::new(&world.train, world.lang).unwrap()),
        ),
        ("subtokens", Box::new(SubtokenModel(world.lang))),
    ]
}

/// Synthetic samples with 1 to 3 identifiers, none of them a single letter.
pub fn small_instances(lang: Lang, n: usize, seed: u64) -> Vec<CodeSample> {
    synth_corpus(lang, 50 * n, seed, "small")
        .into_iter()
        .filter(|s| {
            let ids = extract_identifiers(&s.code, lang).unwrap();
            (1..=3).contains(&ids.len()) && ids.iter().all(|i| !i.single_letter)
        })
        .take(n)
        .collect()
}

fn cos(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Top-`k` pool names by cosine to `w`, skipping `w` and the program's own
/// identifiers; ties alphabetical.
pub fn candidates_oracle(w: &str, code: &str, world: &World, k: usize) -> Vec<String> {
    let Some(wv) = world.table.identifier_vector(w) else {
        return Vec::new();
    };
    let mine = lang::identifier_names(code, world.lang).unwrap();
    let mut scored: Vec<(f64, String)> = world
        .pool
        .names()
        .filter(|n| *n != w && !mine.contains(*n))
        .map(|n| {
            (
                cos(&wv, &world.table.identifier_vector(n).unwrap()),
                n.to_string(),
            )
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, n)| n).collect()
}

pub fn score_oracle(model: &dyn CommentModel, code: &str, reference: &str) -> f64 {
    bleu_oracle(&toks(&model.generate(code).unwrap()), &toks(reference))
}

fn h_oracle(s: f64, d: f64, alpha: f64, beta: f64) -> f64 {
    let zs = s.abs() < 1e-12;
    let zd = d.abs() < 1e-12;
    if !zs && !zd {
        s * d
    } else if !zs {
        s * beta
    } else if !zd {
        d * alpha
    } else {
        0.0
    }
}

/// Recomputes the ACCENT pipeline by exhaustive single-step evaluation and
/// returns the substitutions it applies, in application order.
pub fn accent_oracle(
    sample: &CodeSample,
    model: &dyn CommentModel,
    world: &World,
    k: usize,
    max: usize,
    alpha: f64,
    beta: f64,
) -> Vec<(String, String)> {
    let lang = sample.lang;
    let before = score_oracle(model, &sample.code, &sample.comment);
    let subs = code_subtokens(&sample.code, lang).unwrap();
    let known: Vec<&[f64]> = subs.iter().filter_map(|t| world.table.get(t)).collect();
    let mut pvec = vec![0.0; world.table.dim()];
    for v in &known {
        for (a, b) in pvec.iter_mut().zip(v.iter()) {
            *a += b / known.len() as f64;
        }
    }
    let mut ranked: Vec<(f64, String, String)> = Vec::new();
    for info in extract_identifiers(&sample.code, lang).unwrap() {
        let mut best: Option<(String, f64)> = None;
        for cand in candidates_oracle(&info.name, &sample.code, world, k) {
            let Ok(code) = lang::rename(&sample.code, &info.name, &cand, lang) else {
                continue;
            };
            let d = before - score_oracle(model, &code, &sample.comment);
            if best.as_ref().is_none_or(|b| d > b.1) {
                best = Some((cand, d));
            }
        }
        let Some((w_star, d)) = best else { continue };
        let s = world
            .table
            .identifier_vector(&info.name)
            .map_or(0.0, |v| cos(&v, &pvec));
        ranked.push((h_oracle(s, d, alpha, beta), info.name, w_star));
    }
    let mut code = sample.code.clone();
    let mut applied = Vec::new();
    let mut taken = vec![false; ranked.len()];
    while applied.len() < max {
        let mut pick: Option<usize> = None;
        for i in 0..ranked.len() {
            if !taken[i] && pick.is_none_or(|p| ranked[i].0 > ranked[p].0) {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        taken[i] = true;
        if let Ok(next) = lang::rename(&code, &ranked[i].1, &ranked[i].2, lang) {
            code = next;
            applied.push((ranked[i].1.clone(), ranked[i].2.clone()));
        }
    }
    applied
}

/// Lowest score over every substitution map with at most `max` entries.
pub fn exhaustive_min(
    sample: &CodeSample,
    model: &dyn CommentModel,
    world: &World,
    k: usize,
    max: usize,
) -> f64 {
    let lang = sample.lang;
    let idents = extract_identifiers(&sample.code, lang).unwrap();
    let lists: Vec<Vec<String>> = idents
        .iter()
        .map(|i| candidates_oracle(&i.name, &sample.code, world, k))
        .collect();
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; idents.len()];
    loop {
        if choice.iter().filter(|&&c| c > 0).count() <= max {
            let mut code = Some(sample.code.clone());
            for (i, &c) in choice.iter().enumerate() {
                if c > 0 {
                    code = code.and_then(|p| {
                        lang::rename(&p, &idents[i].name, &lists[i][c - 1], lang).ok()
                    });
                }
            }
            if let Some(code) = code {
                best = best.min(score_oracle(model, &code, &sample.comment));
            }
        }
        // odometer over {unmapped} ∪ candidates
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return best;
            }
            choice[pos] += 1;
            if choice[pos] <= lists[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

// ---------------------------------------------------------------- rename

/// Checks one rename case. `Err` describes the violated property.
pub fn check_rename(code: &str, old: &str, new: &str, lang: Lang) -> Result<(), String> {
    let ident_tokens = |c: &str| -> Vec<String> {
        lang::tokenize(c, lang)
            .unwrap()
            .into_iter()
            .filter(|t| t.kind == TokenKind::Identifier)
            .map(|t| t.text)
            .collect()
    };
    let before = ident_tokens(code);
    let n_old = extract_identifiers(code, lang)
        .unwrap()
        .into_iter()
        .find(|i| i.name == old)
        .map(|i| i.occurrences.len())
        .ok_or("old is not declared")?;
    match lang::rename(code, old, new, lang) {
        Ok(out) => {
            if old == new {
                return if out == code {
                    Ok(())
                } else {
                    Err("identity rename changed code".into())
                };
            }
            let toks =
                lang::tokenize(&out, lang).map_err(|e| format!("output does not lex: {e}"))?;
            if lang::detokenize(&toks) != out {
                return Err("output does not round-trip".into());
            }
            let after = ident_tokens(&out);
            if after.len() != before.len() {
                return Err("identifier token count changed".into());
            }
            let n_new = after.iter().filter(|t| *t == new).count();
            if n_new != n_old || after.iter().any(|t| t == old) {
                return Err(format!("occurrences: {n_old} before, {n_new} after"));
            }
            if lang::rename(&out, new, old, lang).as_deref() != Ok(code) {
                return Err("renaming back does not restore the input".into());
            }
            Ok(())
        }
        Err(lang::RenameError::Collision(_)) if before.iter().any(|t| t == new) => Ok(()),
        Err(lang::RenameError::IllegalName(_)) if !lang::is_legal_identifier(new, lang) => Ok(()),
        Err(e) => Err(format!("unexpected error {e}")),
    }
}

// ---------------------------------------------------------------- runners

/// Compares the library metrics with the oracles on `n` random token pairs;
/// returns one line per disagreement.
pub fn metric_mismatches(n: usize, seed: u64) -> Vec<String> {
    use accent::metrics::{bleu, corpus_bleu, meteor_lite, rouge_l};
    use rand::{Rng, SeedableRng};
    const WORDS: &[&str] = &[
        "the", "Cat", "sat", "on", "mat.", "a", "dog", "ran", "returns", "list,",
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut text = |min: usize| -> String {
        let len = rng.gen_range(min..12);
        (0..len)
            .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut bad = Vec::new();
    let mut pairs = Vec::new();
    for _ in 0..n {
        let (c, r) = (text(0), text(1));
        let (ct, rt) = (toks(&c), toks(&r));
        let checks = [
            ("bleu", bleu(&c, &r), bleu_oracle(&ct, &rt)),
            ("rouge_l", rouge_l(&c, &r), rouge_oracle(&ct, &rt)),
            ("meteor_lite", meteor_lite(&c, &r), meteor_oracle(&ct, &rt)),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > 1e-6 || !(0.0..=100.0).contains(&got) {
                bad.push(format!("{name}({c:?}, {r:?}) = {got}, oracle {want}"));
            }
        }
        pairs.push((ct, rt));
    }
    let (got, want) = (corpus_bleu(&pairs), corpus_bleu_oracle(&pairs));
    if (got - want).abs() > 1e-6 {
        bad.push(format!("corpus_bleu = {got}, oracle {want}"));
    }
    bad
}

/// Runs `accent_attack` on `n` small instances per language against a
/// surrogate and compares the applied substitutions with [`accent_oracle`].
pub fn accent_mismatches(n: usize) -> Vec<String> {
    use accent::attack::{accent_attack, AttackConfig};
    let mut bad = Vec::new();
    for lang in [Lang::Java, Lang::Python] {
        let world = World::new(lang, 80, 21, 16);
        for (name, model) in oracle_models(&world) {
            let model = model.as_ref();
            for (i, sample) in small_instances(lang, n / 2, 5).iter().enumerate() {
                let config = AttackConfig {
                    k: 1 + i % 2,
                    max: 1 + (i / 2) % 2,
                    seed: i as u64,
                    ..Default::default()
                };
                let got = accent_attack(sample, model, &world.ctx(), &config).unwrap();
                let want = accent_oracle(
                    sample,
                    model,
                    &world,
                    config.k,
                    config.max,
                    config.alpha,
                    config.beta,
                );
                if got.adv.substitutions != want {
                    bad.push(format!(
                        "{name} {}: got {:?}, oracle {:?}",
                        sample.id, got.adv.substitutions, want
                    ));
                }
                let after = score_oracle(model, &got.adv.adv_code, &sample.comment);
                if (after - got.score_after).abs() > 1e-9 {
                    bad.push(format!(
                        "{name} {}: score_after {} vs {}",
                        sample.id, got.score_after, after
                    ));
                }
            }
        }
    }
    bad
}

/// Runs `mh_attack` on `n` small instances per language and compares its
/// best score with exhaustive search over all substitution maps.
pub fn mh_mismatches(n: usize) -> Vec<String> {
    use accent::attack::{mh_attack, AttackConfig, Method};
    let mut bad = Vec::new();
    for lang in [Lang::Java, Lang::Python] {
        let world = World::new(lang, 80, 21, 16);
        for (name, model) in oracle_models(&world) {
            let model = model.as_ref();
            for (i, sample) in small_instances(lang, n / 2, 6).iter().enumerate() {
                let config = AttackConfig {
                    k: 1 + i % 2,
                    max: 1 + (i / 2) % 2,
                    seed: i as u64,
                    method: Method::Mh,
                    mh_iterations: 200,
                    mh_temperature: 10.0,
                    ..Default::default()
                };
                let got = mh_attack(sample, model, &world.ctx(), &config).unwrap();
                let want = exhaustive_min(sample, model, &world, config.k, config.max);
                let after = score_oracle(model, &got.adv.adv_code, &sample.comment);
                if (got.score_after - want).abs() > 1e-9 || (after - want).abs() > 1e-9 {
                    bad.push(format!(
                        "{name} {}: mh {} (rescored {after}), exhaustive {want}",
                        sample.id, got.score_after
                    ));
                }
            }
        }
    }
    bad
}

/// Builds rename case `index` of a deterministic family: a synthetic snippet
/// with a trailing comment naming the target, plus a new name that is fresh,
/// a keyword, or another identifier of the snippet depending on `kind`.
pub fn rename_case(
    lang: Lang,
    seed: u64,
    pick: usize,
    kind: u8,
    fresh: &str,
) -> (String, String, String) {
    let sample = synth_corpus(lang, 1, seed, "p").remove(0);
    let ids = extract_identifiers(&sample.code, lang).unwrap();
    let old = ids[pick % ids.len()].name.clone();
    let code = match lang {
        Lang::Java => format!("{}// keeps {old} and \"{old}\"\n", sample.code),
        Lang::Python => format!("{}# keeps {old} and '{old}'\n", sample.code),
    };
    let new = match kind % 4 {
        0 => lang::keywords(lang)[pick % lang::keywords(lang).len()].to_string(),
        1 => ids[(pick + 1) % ids.len()].name.clone(),
        _ => fresh.to_string(),
    };
    (code, old, new)
}
