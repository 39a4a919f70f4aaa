use rand::seq::index;
use rand::Rng;

use crate::lang::{self, Lang, UNK};

/// Indices of the identifiers to mask: `min(count, n)` distinct values drawn
/// uniformly, returned in ascending order.
pub fn choose_masked<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut chosen = index::sample(rng, n, count.min(n)).into_vec();
    chosen.sort_unstable();
    chosen
}

/// Replaces every occurrence of randomly chosen declared identifiers with `<unk>`.
/// Code that does not lex is returned unchanged.
pub fn mask_identifiers<R: Rng + ?Sized>(
    code: &str,
    lang: Lang,
    count_masked: usize,
    rng: &mut R,
) -> String {
    let Ok(idents) = lang::extract_identifiers(code, lang) else {
        return code.to_string();
    };
    let chosen = choose_masked(idents.len(), count_masked, rng);
    if chosen.is_empty() {
        return code.to_string();
    }
    let mut spans: Vec<(usize, usize)> = chosen
        .iter()
        .flat_map(|&i| idents[i].occurrences.iter().copied())
        .collect();
    spans.sort_unstable();
    lang::splice(code, &spans, UNK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{extract_identifiers, validate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SNIPPET: &str = "int add(int left, int right) { return left + right; }";

    fn ident_count(code: &str) -> usize {
        crate::lang::tokenize(code, Lang::Java)
            .unwrap()
            .iter()
            .filter(|t| t.kind == crate::lang::TokenKind::Identifier)
            .count()
    }

    #[test]
    fn zero_count_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(mask_identifiers(SNIPPET, Lang::Java, 0, &mut rng), SNIPPET);
    }

    #[test]
    fn saturation_masks_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = mask_identifiers(SNIPPET, Lang::Java, 10, &mut rng);
        assert_eq!(
            out,
            "int <unk>(int <unk>, int <unk>) { return <unk> + <unk>; }"
        );
        assert!(validate(&out, Lang::Java));
    }

    #[test]
    fn single_mask_is_one_of_three() {
        let options: Vec<String> = extract_identifiers(SNIPPET, Lang::Java)
            .unwrap()
            .iter()
            .map(|i| crate::lang::rename_unchecked(SNIPPET, &i.name, UNK, Lang::Java).unwrap())
            .collect();
        assert_eq!(options.len(), 3);
        for seed in 0..20 {
            let a = mask_identifiers(SNIPPET, Lang::Java, 1, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = mask_identifiers(SNIPPET, Lang::Java, 1, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
            assert!(options.contains(&a), "{a}");
            assert_eq!(ident_count(&a), ident_count(SNIPPET));
        }
    }
}
