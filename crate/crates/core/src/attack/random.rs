use rand::seq::index;
use rand::Rng;

use super::{finish, sample_rng, score, AttackConfig, AttackError, SubstitutionRecord};
use crate::corpus::CodeSample;
use crate::lang;
use crate::model::CommentModel;

/// Random baseline: `min(max, |V_p|)` random identifiers, each renamed to a
/// random vocabulary entry with no similarity or collision filtering. The
/// result may be invalid; `AttackResult::valid` says so.
///
/// Records carry no drop, saliency or H (all 0): nothing is measured.
pub fn random_attack(
    sample: &CodeSample,
    model: &dyn CommentModel,
    vocab: &[String],
    config: &AttackConfig,
) -> Result<super::AttackResult, AttackError> {
    config.check()?;
    let lang = sample.lang;
    let mut rng = sample_rng(config.seed, &sample.id);
    let idents = lang::extract_identifiers(&sample.code, lang)?;
    let before = score(model, &sample.code, &sample.comment)?;
    let mut queries = 1;
    let mut skipped = Vec::new();

    let mut chosen = index::sample(&mut rng, idents.len(), config.max.min(idents.len())).into_vec();
    chosen.sort_unstable();
    let mut code = sample.code.clone();
    let mut records = Vec::new();
    let mut substitutions = Vec::new();
    if !vocab.is_empty() {
        for i in chosen {
            let w = &idents[i].name;
            let w_star = vocab[rng.gen_range(0..vocab.len())].clone();
            // an earlier rename may have broken the program so that `w` is
            // no longer recognisable; that substitution is simply lost
            let applied = match lang::rename_unchecked(&code, w, &w_star, lang) {
                Ok(next) => {
                    code = next;
                    substitutions.push((w.clone(), w_star.clone()));
                    true
                }
                Err(e) => {
                    skipped.push(format!("{w} -> {w_star}: {e}"));
                    false
                }
            };
            records.push(SubstitutionRecord {
                w: w.clone(),
                w_star,
                delta_score: 0.0,
                saliency: 0.0,
                h: 0.0,
                applied,
            });
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
