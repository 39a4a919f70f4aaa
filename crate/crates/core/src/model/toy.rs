//! Conditionally-unigram comment model: one linear layer over mean-pooled code
//! subtokens followed by a softmax over comment tokens. Small enough to train
//! in seconds, which is all masked training needs to be demonstrated.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mask::choose_masked;
use super::{CommentModel, ModelError};
use crate::corpus::Dataset;
use crate::embed::EmbeddingTable;
use crate::lang::{code_subtokens, extract_identifiers, split_subtokens, Lang, UNK};
use crate::metrics::text_tokens;

/// Column that absorbs comment tokens outside the vocabulary.
pub const OOV_COMMENT: &str = "<oov>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskedTrainConfig {
    pub lambda: f64,
    pub count_masked: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for MaskedTrainConfig {
    fn default() -> Self {
        MaskedTrainConfig {
            lambda: 0.5,
            count_masked: 2,
            epochs: 100,
            learning_rate: 0.1,
            seed: 7,
            batch_size: 32,
        }
    }
}

impl MaskedTrainConfig {
    pub fn check(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ModelError::Invalid(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Invalid(
                "learning_rate must be positive".to_string(),
            ));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Invalid(
                "batch_size must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Losses over the whole training set after an epoch (epoch 0 is the initial state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub origin: f64,
    /// Loss on this epoch's masked programs; `None` for plain training.
    pub masked: Option<f64>,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    lang: Lang,
    code_vocab: Vec<String>,
    code_index: HashMap<String, usize>,
    comment_vocab: Vec<String>,
    comment_index: HashMap<String, usize>,
    /// Row-major, `code_vocab.len() × comment_vocab.len()`.
    theta: Vec<f64>,
    gen_length: usize,
}

/// Sparse mean-pooling weights: (row, count / total).
type Features = Vec<(usize, f64)>;

impl ToyModel {
    /// Zero-initialised model. `<unk>` is added to the code vocabulary and
    /// [`OOV_COMMENT`] to the comment vocabulary when absent.
    pub fn new(
        lang: Lang,
        mut code_vocab: Vec<String>,
        mut comment_vocab: Vec<String>,
        gen_length: usize,
    ) -> Result<Self, ModelError> {
        if !code_vocab.iter().any(|t| t == UNK) {
            code_vocab.push(UNK.to_string());
        }
        if !comment_vocab.iter().any(|t| t == OOV_COMMENT) {
            comment_vocab.push(OOV_COMMENT.to_string());
        }
        let code_index: HashMap<String, usize> = code_vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let comment_index: HashMap<String, usize> = comment_vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if code_index.len() != code_vocab.len() || comment_index.len() != comment_vocab.len() {
            return Err(ModelError::Invalid(
                "duplicate vocabulary entry".to_string(),
            ));
        }
        let theta = vec![0.0; code_vocab.len() * comment_vocab.len()];
        Ok(ToyModel {
            lang,
            code_vocab,
            code_index,
            comment_vocab,
            comment_index,
            theta,
            gen_length,
        })
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }

    pub fn code_vocab(&self) -> &[String] {
        &self.code_vocab
    }

    pub fn comment_vocab(&self) -> &[String] {
        &self.comment_vocab
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn gen_length(&self) -> usize {
        self.gen_length
    }

    pub fn set_gen_length(&mut self, length: usize) {
        self.gen_length = length;
    }

    fn cols(&self) -> usize {
        self.comment_vocab.len()
    }

    fn unk_row(&self) -> usize {
        self.code_index[UNK]
    }

    /// Code subtokens outside the vocabulary share the `<unk>` row.
    fn features_of(&self, subtokens: &[String]) -> Features {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for s in subtokens {
            let row = self
                .code_index
                .get(s)
                .copied()
                .unwrap_or_else(|| self.unk_row());
            *counts.entry(row).or_insert(0) += 1;
        }
        normalise(counts)
    }

    fn features(&self, code: &str) -> Features {
        self.features_of(&code_subtokens(code, self.lang).unwrap_or_default())
    }

    fn targets(&self, comment: &str) -> Vec<usize> {
        let oov = self.comment_index[OOV_COMMENT];
        text_tokens(comment)
            .iter()
            .map(|t| self.comment_index.get(t).copied().unwrap_or(oov))
            .collect()
    }

    fn probs(&self, feats: &Features) -> Vec<f64> {
        let c = self.cols();
        let mut z = vec![0.0; c];
        for &(row, w) in feats {
            for (zj, t) in z.iter_mut().zip(&self.theta[row * c..(row + 1) * c]) {
                *zj += w * t;
            }
        }
        softmax_in_place(&mut z);
        z
    }

    /// Probability of every comment token given the program.
    pub fn distribution(&self, code: &str) -> Vec<f64> {
        self.probs(&self.features(code))
    }

    /// Loss for one example; adds `weight · ∂loss/∂θ` into `grad` when given.
    fn loss_acc(
        &self,
        feats: &Features,
        targets: &[usize],
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> f64 {
        if targets.is_empty() {
            return 0.0;
        }
        let p = self.probs(feats);
        let m = targets.len() as f64;
        let loss = targets
            .iter()
            .map(|&t| -p[t].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / m;
        if let Some(grad) = grad {
            let c = self.cols();
            let mut diff = p;
            for &t in targets {
                diff[t] -= 1.0 / m;
            }
            for &(row, w) in feats {
                let scale = weight * w;
                for (g, d) in grad[row * c..(row + 1) * c].iter_mut().zip(&diff) {
                    *g += scale * d;
                }
            }
        }
        loss
    }

    /// Loss and dense gradient with respect to θ.
    pub fn loss_and_grad(&self, code: &str, comment: &str) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.theta.len()];
        let loss = self.loss_acc(
            &self.features(code),
            &self.targets(comment),
            1.0,
            Some(&mut grad),
        );
        (loss, grad)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_text()).map_err(|e| ModelError::Invalid(e.to_string()))
    }

    /// Header lines, the comment vocabulary, then θ in the embedding-table
    /// text format (one row per code subtoken).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "lang {}", self.lang).unwrap();
        writeln!(s, "length {}", self.gen_length).unwrap();
        writeln!(s, "comment_vocab {}", self.comment_vocab.len()).unwrap();
        for t in &self.comment_vocab {
            writeln!(s, "{t}").unwrap();
        }
        let table = EmbeddingTable::from_parts(
            self.cols(),
            0,
            0,
            self.code_vocab.clone(),
            self.theta.clone(),
        );
        s.push_str(&table.to_text());
        s
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|e| ModelError::Invalid(e.to_string()))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::Invalid(format!("toy model file: {m}"));
        let mut lines = text.split_inclusive('\n');
        let mut field = |key: &str| -> Result<String, ModelError> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            line.trim_end()
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected `{key}`")))
        };
        let lang: Lang = field("lang")?.parse().map_err(|_| bad("unknown lang"))?;
        let gen_length: usize = field("length")?.parse().map_err(|_| bad("bad length"))?;
        let n: usize = field("comment_vocab")?
            .parse()
            .map_err(|_| bad("bad vocab size"))?;
        let comment_vocab: Vec<String> = (0..n)
            .map(|_| lines.next().map(|l| l.trim_end_matches('\n').to_string()))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("truncated comment vocabulary"))?;
        let rest: String = lines.collect();
        let table = EmbeddingTable::from_text(&rest).map_err(|e| bad(&e.to_string()))?;
        if table.dim() != comment_vocab.len() {
            return Err(bad("theta width does not match comment vocabulary"));
        }
        let (_, _, _, code_vocab, theta) = table.into_parts();
        let mut model = ToyModel::new(lang, code_vocab, comment_vocab, gen_length)?;
        if model.theta.len() != theta.len() {
            return Err(bad("vocabulary lacks <unk> or <oov>"));
        }
        model.theta = theta;
        Ok(model)
    }
}

fn normalise(counts: HashMap<usize, u32>) -> Features {
    let total: u32 = counts.values().sum();
    let mut feats: Features = counts
        .into_iter()
        .map(|(r, c)| (r, c as f64 / total as f64))
        .collect();
    feats.sort_unstable_by_key(|&(r, _)| r);
    feats
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean negative log-likelihood of the comment's tokens. Empty comments score 0.
pub fn toy_loss(model: &ToyModel, code: &str, comment: &str) -> f64 {
    model.loss_acc(&model.features(code), &model.targets(comment), 1.0, None)
}

/// The `length` most probable comment tokens, most probable first; ties go to
/// the earlier vocabulary entry. The OOV column is never emitted.
pub fn toy_generate(model: &ToyModel, code: &str, length: usize) -> String {
    let p = model.distribution(code);
    let oov = model.comment_index[OOV_COMMENT];
    let mut order: Vec<usize> = (0..p.len()).filter(|&j| j != oov).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    order
        .iter()
        .take(length)
        .map(|&j| model.comment_vocab[j].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

impl CommentModel for ToyModel {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        Ok(toy_generate(self, code, self.gen_length))
    }
}

/// Precomputed pieces for masking a training program without re-lexing it.
struct Example {
    counts: HashMap<usize, u32>,
    /// Per declared identifier: (row, count) removed when masked, and how
    /// many `<unk>` tokens replace it.
    idents: Vec<(Vec<(usize, u32)>, u32)>,
    targets: Vec<usize>,
}

impl Example {
    fn features(&self) -> Features {
        normalise(self.counts.clone())
    }

    fn masked_features(&self, chosen: &[usize], unk: usize) -> Features {
        let mut counts = self.counts.clone();
        for &i in chosen {
            let (removed, occurrences) = &self.idents[i];
            for &(row, c) in removed {
                let e = counts.get_mut(&row).expect("removed subtokens are present");
                *e -= c;
                if *e == 0 {
                    counts.remove(&row);
                }
            }
            *counts.entry(unk).or_insert(0) += occurrences;
        }
        normalise(counts)
    }
}

/// Trains a toy model by mini-batch gradient descent on
/// `λ·L(p, com) + (1−λ)·L(p′, com)`, with `p′` a fresh masking of `p` every
/// epoch. With `masked = false` only the first term is used.
pub fn train_toy(
    dataset: &Dataset,
    lang: Lang,
    config: &MaskedTrainConfig,
    masked: bool,
) -> Result<(ToyModel, Vec<EpochLoss>), ModelError> {
    config.check()?;
    if dataset.is_empty() {
        return Err(ModelError::Invalid("training set is empty".to_string()));
    }
    let subtokens: Vec<Vec<String>> = dataset
        .samples
        .iter()
        .map(|s| code_subtokens(&s.code, lang).unwrap_or_default())
        .collect();
    let code_vocab: BTreeSet<String> = subtokens.iter().flatten().cloned().collect();

    let mut freq: HashMap<String, usize> = HashMap::new();
    let mut comment_len = 0usize;
    for s in &dataset.samples {
        let toks = text_tokens(&s.comment);
        comment_len += toks.len();
        for t in toks {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    if code_vocab.is_empty() || freq.is_empty() {
        return Err(ModelError::Invalid("empty vocabulary".to_string()));
    }
    let mut comment_vocab: Vec<(String, usize)> = freq.into_iter().collect();
    comment_vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let gen_length = ((comment_len as f64 / dataset.len() as f64).round() as usize).max(1);
    let mut model = ToyModel::new(
        lang,
        code_vocab.into_iter().collect(),
        comment_vocab.into_iter().map(|(t, _)| t).collect(),
        gen_length,
    )?;

    let unk = model.unk_row();
    let examples: Vec<Example> = dataset
        .samples
        .iter()
        .zip(&subtokens)
        .map(|(s, subs)| {
            let mut counts = HashMap::new();
            for t in subs {
                *counts.entry(model.code_index[t]).or_insert(0) += 1;
            }
            let idents = extract_identifiers(&s.code, lang)
                .unwrap_or_default()
                .into_iter()
                .map(|info| {
                    let occ = info.occurrences.len() as u32;
                    let mut removed: HashMap<usize, u32> = HashMap::new();
                    for sub in split_subtokens(&info.name) {
                        *removed.entry(model.code_index[&sub]).or_insert(0) += occ;
                    }
                    let mut removed: Vec<(usize, u32)> = removed.into_iter().collect();
                    removed.sort_unstable();
                    (removed, occ)
                })
                .collect();
            Example {
                counts,
                idents,
                targets: model.targets(&s.comment),
            }
        })
        .collect();
    let origin_feats: Vec<Features> = examples.iter().map(Example::features).collect();

    let lambda = if masked { config.lambda } else { 1.0 };
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mask_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6d61_736b);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = vec![0.0; model.theta.len()];

    let mean_loss = |model: &ToyModel, feats: &[Features]| -> f64 {
        feats
            .iter()
            .zip(&examples)
            .map(|(f, e)| model.loss_acc(f, &e.targets, 0.0, None))
            .sum::<f64>()
            / examples.len() as f64
    };
    let initial = mean_loss(&model, &origin_feats);
    let mut history = vec![EpochLoss {
        epoch: 0,
        origin: initial,
        masked: masked.then_some(initial),
        combined: initial,
    }];

    for epoch in 1..=config.epochs {
        order.shuffle(&mut order_rng);
        let masked_feats: Option<Vec<Features>> = masked.then(|| {
            examples
                .iter()
                .map(|e| {
                    e.masked_features(
                        &choose_masked(e.idents.len(), config.count_masked, &mut mask_rng),
                        unk,
                    )
                })
                .collect()
        });
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                let e = &examples[i];
                if lambda > 0.0 {
                    model.loss_acc(&origin_feats[i], &e.targets, lambda * w, Some(&mut grad));
                }
                if let Some(mf) = &masked_feats {
                    if lambda < 1.0 {
                        model.loss_acc(&mf[i], &e.targets, (1.0 - lambda) * w, Some(&mut grad));
                    }
                }
            }
            for (t, g) in model.theta.iter_mut().zip(&grad) {
                *t -= config.learning_rate * g;
            }
        }
        let origin = mean_loss(&model, &origin_feats);
        let masked_loss = masked_feats.as_ref().map(|mf| mean_loss(&model, mf));
        history.push(EpochLoss {
            epoch,
            origin,
            masked: masked_loss,
            combined: lambda * origin + (1.0 - lambda) * masked_loss.unwrap_or(0.0),
        });
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeSample, Role};
    use crate::model::mask_identifiers;
    use rand::Rng;

    fn vocab(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn dataset() -> Dataset {
        let pairs = [
            (
                "int add(int a, int b) { return a + b; }",
                "adds two numbers",
            ),
            (
                "void close(Reader reader) { reader.close(); }",
                "closes the reader",
            ),
            (
                "boolean isEmpty(List items) { return items.size() == 0; }",
                "checks if the list is empty",
            ),
            (
                "int max(int x, int y) { return x > y ? x : y; }",
                "returns the larger number",
            ),
            (
                "void print(String text) { System.out.println(text); }",
                "prints the text",
            ),
        ];
        let samples = pairs
            .iter()
            .enumerate()
            .map(|(i, (c, m))| CodeSample {
                id: i.to_string(),
                code: c.to_string(),
                comment: m.to_string(),
                lang: Lang::Java,
            })
            .collect();
        Dataset::new("toy", samples, Role::Train)
    }

    #[test]
    fn uniform_loss_is_log_vocab() {
        let m = ToyModel::new(Lang::Java, vocab(&["int"]), vocab(&["a", "b", "c"]), 2).unwrap();
        assert!((toy_loss(&m, "int f() {}", "b") - 4f64.ln()).abs() < 1e-12);
        assert_eq!(toy_generate(&m, "int f() {}", 2), "a b");
        assert_eq!(toy_generate(&m, "int f() {}", 0), "");
    }

    #[test]
    fn dominant_logit_drives_loss_to_zero() {
        let mut m = ToyModel::new(Lang::Java, vocab(&["int"]), vocab(&["a", "b"]), 1).unwrap();
        let b = m.comment_index["b"];
        let cols = m.cols();
        let row = m.code_index["int"];
        m.theta_mut()[row * cols + b] = 200.0;
        assert!(toy_loss(&m, "int", "b") < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = dataset();
        let (base, _) = train_toy(
            &ds,
            Lang::Java,
            &MaskedTrainConfig {
                epochs: 0,
                ..Default::default()
            },
            false,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for draw in 0..10 {
            let mut m = base.clone();
            m.theta_mut()
                .iter_mut()
                .for_each(|t| *t = rng.gen_range(-0.5..0.5));
            let s = &ds.samples[draw % ds.len()];
            let (_, grad) = m.loss_and_grad(&s.code, &s.comment);
            let h = 1e-5;
            for k in (0..m.theta.len()).step_by(7) {
                let orig = m.theta[k];
                m.theta[k] = orig + h;
                let up = toy_loss(&m, &s.code, &s.comment);
                m.theta[k] = orig - h;
                let down = toy_loss(&m, &s.code, &s.comment);
                m.theta[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let denom = numeric.abs().max(grad[k].abs()).max(1e-8);
                assert!(
                    (numeric - grad[k]).abs() / denom <= 1e-4 || (numeric - grad[k]).abs() < 1e-10,
                    "draw {draw} k {k}: {numeric} vs {}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn fast_masking_matches_text_masking() {
        let ds = dataset();
        let (m, _) = train_toy(
            &ds,
            Lang::Java,
            &MaskedTrainConfig {
                epochs: 0,
                ..Default::default()
            },
            false,
        )
        .unwrap();
        for (seed, s) in ds.samples.iter().enumerate() {
            let idents = extract_identifiers(&s.code, Lang::Java).unwrap();
            let mut counts = HashMap::new();
            for t in code_subtokens(&s.code, Lang::Java).unwrap() {
                *counts.entry(m.code_index[&t]).or_insert(0) += 1;
            }
            let ex = Example {
                counts,
                idents: idents
                    .iter()
                    .map(|i| {
                        let occ = i.occurrences.len() as u32;
                        let mut r: HashMap<usize, u32> = HashMap::new();
                        for sub in split_subtokens(&i.name) {
                            *r.entry(m.code_index[&sub]).or_insert(0) += occ;
                        }
                        (r.into_iter().collect(), occ)
                    })
                    .collect(),
                targets: vec![],
            };
            let mut r1 = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut r2 = ChaCha8Rng::seed_from_u64(seed as u64);
            let text = mask_identifiers(&s.code, Lang::Java, 2, &mut r1);
            let chosen = choose_masked(idents.len(), 2, &mut r2);
            assert_eq!(m.features(&text), ex.masked_features(&chosen, m.unk_row()));
        }
    }

    #[test]
    fn lambda_one_equals_plain_training() {
        let ds = dataset();
        let cfg = MaskedTrainConfig {
            lambda: 1.0,
            epochs: 10,
            ..Default::default()
        };
        let (a, _) = train_toy(&ds, Lang::Java, &cfg, false).unwrap();
        let (b, _) = train_toy(&ds, Lang::Java, &cfg, true).unwrap();
        assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn loss_decreases() {
        let ds = dataset();
        let cfg = MaskedTrainConfig {
            epochs: 50,
            ..Default::default()
        };
        for masked in [false, true] {
            let (_, hist) = train_toy(&ds, Lang::Java, &cfg, masked).unwrap();
            let key = |e: &EpochLoss| if masked { e.origin } else { e.combined };
            let drops = hist.windows(2).filter(|w| key(&w[1]) < key(&w[0])).count();
            assert!(drops * 10 >= 9 * 50, "masked={masked}: {drops}");
            assert!(hist.last().unwrap().combined <= hist[0].combined);
        }
    }

    #[test]
    fn single_pair_ranks_its_tokens_first() {
        let mut ds = dataset();
        ds.samples.truncate(1);
        let cfg = MaskedTrainConfig {
            epochs: 30,
            learning_rate: 1.0,
            ..Default::default()
        };
        let (m, _) = train_toy(&ds, Lang::Java, &cfg, false).unwrap();
        let code = &ds.samples[0].code;
        let p = m.distribution(code);
        let out = toy_generate(&m, code, 3);
        let mut best: Vec<usize> = (0..p.len())
            .filter(|&j| m.comment_vocab[j] != OOV_COMMENT)
            .collect();
        best.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
        let want: Vec<&str> = best[..3]
            .iter()
            .map(|&j| m.comment_vocab[j].as_str())
            .collect();
        assert_eq!(out, want.join(" "));
        let mut got: Vec<&str> = out.split(' ').collect();
        got.sort();
        assert_eq!(got, vec!["adds", "numbers", "two"]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn text_round_trip() {
        let ds = dataset();
        let (m, _) = train_toy(
            &ds,
            Lang::Java,
            &MaskedTrainConfig {
                epochs: 5,
                ..Default::default()
            },
            true,
        )
        .unwrap();
        let back = ToyModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back.code_vocab, m.code_vocab);
        assert_eq!(back.comment_vocab, m.comment_vocab);
        assert_eq!(back.to_text(), m.to_text());
        for (a, b) in back.theta.iter().zip(&m.theta) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-3));
        }
    }
}
