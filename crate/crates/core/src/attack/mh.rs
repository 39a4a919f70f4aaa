use std::collections::HashMap;

use rand::Rng;

use super::{
    candidate_lists, finish, sample_rng, score, AttackConfig, AttackContext, AttackError,
    AttackResult, SubstitutionRecord,
};
use crate::corpus::CodeSample;
use crate::lang::{self, IdentifierInfo};
use crate::model::CommentModel;

/// Candidate index chosen for each identifier, `None` when unmapped.
type State = Vec<Option<usize>>;

/// (score, model output, program) of a state; `None` when its renames collide.
type Outcome = Option<(f64, String, String)>;

fn apply(
    code: &str,
    lang: lang::Lang,
    idents: &[IdentifierInfo],
    lists: &[Vec<String>],
    state: &State,
) -> Option<String> {
    let mut cur = code.to_string();
    for (i, slot) in state.iter().enumerate() {
        if let Some(c) = slot {
            cur = lang::rename(&cur, &idents[i].name, &lists[i][*c], lang).ok()?;
        }
    }
    Some(cur)
}

enum Move {
    Insert,
    Replace,
    Revert,
}

/// Metropolis-Hastings search over substitution maps of at most `max`
/// entries, targeting `π(x) ∝ exp((score(p) − score(x)) / T)`. Returns the
/// best state the chain occupied.
pub fn mh_attack(
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
    let lists = candidate_lists(&sample.code, lang, &idents, ctx, config.k, &mut rng)?;

    let mut cache: HashMap<State, Outcome> = HashMap::new();
    let empty: State = vec![None; idents.len()];
    cache.insert(
        empty.clone(),
        Some((before.0, before.1.clone(), sample.code.clone())),
    );
    let mut current = empty.clone();
    let mut current_score = before.0;
    let mut best = empty;
    let mut best_score = before.0;

    for _ in 0..config.mh_iterations {
        let mapped: Vec<usize> = (0..idents.len())
            .filter(|&i| current[i].is_some())
            .collect();
        let free: Vec<usize> = (0..idents.len())
            .filter(|&i| current[i].is_none() && !lists[i].is_empty())
            .collect();
        let replaceable: Vec<usize> = mapped
            .iter()
            .copied()
            .filter(|&i| lists[i].len() > 1)
            .collect();
        let mut moves = Vec::new();
        if mapped.len() < config.max && !free.is_empty() {
            moves.push(Move::Insert);
        }
        if !replaceable.is_empty() {
            moves.push(Move::Replace);
        }
        if !mapped.is_empty() {
            moves.push(Move::Revert);
        }
        if moves.is_empty() {
            break;
        }
        let mut proposal = current.clone();
        match moves[rng.gen_range(0..moves.len())] {
            Move::Insert => {
                let i = free[rng.gen_range(0..free.len())];
                proposal[i] = Some(rng.gen_range(0..lists[i].len()));
            }
            Move::Replace => {
                let i = replaceable[rng.gen_range(0..replaceable.len())];
                let old = current[i].expect("mapped");
                // uniform over the other candidates
                let mut c = rng.gen_range(0..lists[i].len() - 1);
                if c >= old {
                    c += 1;
                }
                proposal[i] = Some(c);
            }
            Move::Revert => {
                let i = mapped[rng.gen_range(0..mapped.len())];
                proposal[i] = None;
            }
        }
        let outcome = match cache.get(&proposal) {
            Some(o) => o.clone(),
            None => {
                let o = match apply(&sample.code, lang, &idents, &lists, &proposal) {
                    Some(code) => {
                        queries += 1;
                        let (s, out) = score(model, &code, &sample.comment)?;
                        Some((s, out, code))
                    }
                    None => None,
                };
                cache.insert(proposal.clone(), o.clone());
                o
            }
        };
        let u: f64 = rng.gen();
        let Some((s, _, _)) = outcome else {
            continue;
        };
        let ratio = ((current_score - s) / config.mh_temperature).exp();
        if u < ratio.min(1.0) {
            current = proposal;
            current_score = s;
            if s < best_score {
                best_score = s;
                best = current.clone();
            }
        }
    }

    let (s, out, code) = cache[&best].clone().expect("visited states are applicable");
    let mut substitutions = Vec::new();
    let mut records = Vec::new();
    for (i, slot) in best.iter().enumerate() {
        if let Some(c) = slot {
            let w_star = lists[i][*c].clone();
            substitutions.push((idents[i].name.clone(), w_star.clone()));
            records.push(SubstitutionRecord {
                w: idents[i].name.clone(),
                w_star,
                delta_score: before.0 - s,
                saliency: 0.0,
                h: 0.0,
                applied: true,
            });
        }
    }
    Ok(finish(
        sample,
        code,
        substitutions,
        records,
        before,
        (s, out),
        queries,
        Vec::new(),
    ))
}
