//! Skip-gram with negative sampling, single-threaded and seed-reproducible.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub min_count: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 128,
            window: 5,
            epochs: 5,
            negatives: 5,
            min_count: 2,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

/// Average negative-sampling objective before and after training, measured
/// on the held-out slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub vocab_size: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
}

const HOLDOUT_EVERY: usize = 10;
const HOLDOUT_MIN_SENTENCES: usize = 20;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Model {
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl Model {
    fn row(m: &[f64], i: usize, dim: usize) -> &[f64] {
        &m[i * dim..(i + 1) * dim]
    }

    /// Mean per-pair objective log σ(u·v) + Σ log σ(−u·n) over the given sentences,
    /// with negatives drawn from a fixed-seed generator so runs are comparable.
    fn objective(
        &self,
        sentences: &[Vec<usize>],
        cfg: &EmbeddingConfig,
        noise: &WeightedIndex<f64>,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0b1e);
        let (mut total, mut pairs) = (0.0, 0usize);
        for s in sentences {
            for (t, &center) in s.iter().enumerate() {
                let lo = t.saturating_sub(cfg.window);
                let hi = (t + cfg.window).min(s.len() - 1);
                for j in (lo..=hi).filter(|&j| j != t) {
                    let u = Self::row(&self.input, center, self.dim);
                    let ctx = s[j];
                    let mut term = sigmoid(dot(u, Self::row(&self.output, ctx, self.dim))).ln();
                    for _ in 0..cfg.negatives {
                        let neg = noise.sample(&mut rng);
                        term += sigmoid(-dot(u, Self::row(&self.output, neg, self.dim))).ln();
                    }
                    total += term;
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            0.0
        } else {
            total / pairs as f64
        }
    }
}

pub fn train_embeddings(
    corpus: &[Vec<String>],
    cfg: &EmbeddingConfig,
) -> Result<EmbeddingTable, EmbedError> {
    train_embeddings_with_stats(corpus, cfg).map(|(t, _)| t)
}

/// Trains embeddings and reports the objective on a held-out slice (every
/// tenth sentence, excluded from training) when the corpus has at least 20
/// sentences, otherwise on the training sentences themselves.
pub fn train_embeddings_with_stats(
    corpus: &[Vec<String>],
    cfg: &EmbeddingConfig,
) -> Result<(EmbeddingTable, TrainStats), EmbedError> {
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(EmbedError::EmptyCorpus);
    }
    if cfg.dim == 0 {
        return Err(EmbedError::ZeroDim);
    }
    if cfg.window == 0 {
        return Err(EmbedError::ZeroWindow);
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in corpus {
        for t in s {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_count.max(1))
        .collect();
    if vocab.is_empty() {
        return Err(EmbedError::EmptyVocab);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (*t, i))
        .collect();
    let encoded: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| {
            s.iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();

    let (train, held): (Vec<&Vec<usize>>, Vec<&Vec<usize>>) =
        if encoded.len() >= HOLDOUT_MIN_SENTENCES {
            let (h, t): (Vec<_>, Vec<_>) = encoded
                .iter()
                .enumerate()
                .partition(|(i, _)| i % HOLDOUT_EVERY == HOLDOUT_EVERY - 1);
            (
                t.into_iter().map(|x| x.1).collect(),
                h.into_iter().map(|x| x.1).collect(),
            )
        } else {
            (encoded.iter().collect(), encoded.iter().collect())
        };
    let held: Vec<Vec<usize>> = held.into_iter().cloned().collect();

    let n = vocab.len();
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = 0.5 / dim as f64;
    let mut model = Model {
        dim,
        input: (0..n * dim).map(|_| rng.gen_range(-scale..scale)).collect(),
        output: vec![0.0; n * dim],
    };
    let noise = WeightedIndex::new(vocab.iter().map(|&(_, c)| (c as f64).powf(0.75)))
        .expect("non-empty positive weights");
    let initial_objective = model.objective(&held, cfg, &noise);

    let pairs_per_epoch: usize = train
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|t| {
                    (t + cfg.window).min(s.len().saturating_sub(1)) - t.saturating_sub(cfg.window)
                })
                .sum::<usize>()
        })
        .sum();
    let total_steps = (pairs_per_epoch * cfg.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut grad = vec![0.0; dim];
    for _ in 0..cfg.epochs {
        for s in &train {
            for (t, &center) in s.iter().enumerate() {
                let lo = t.saturating_sub(cfg.window);
                let hi = (t + cfg.window).min(s.len() - 1);
                for j in (lo..=hi).filter(|&j| j != t) {
                    let lr = cfg.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4);
                    step += 1;
                    let ctx = s[j];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let neg = noise.sample(&mut rng);
                            if neg == ctx {
                                continue;
                            }
                            (neg, 0.0)
                        };
                        let u = &model.input[center * dim..(center + 1) * dim];
                        let v = &mut model.output[target * dim..(target + 1) * dim];
                        let g = (label - sigmoid(dot(u, v))) * lr;
                        for d in 0..dim {
                            grad[d] += g * v[d];
                            v[d] += g * u[d];
                        }
                    }
                    let u = &mut model.input[center * dim..(center + 1) * dim];
                    for d in 0..dim {
                        u[d] += grad[d];
                    }
                }
            }
        }
    }
    let final_objective = model.objective(&held, cfg, &noise);

    let table = EmbeddingTable::from_parts(
        dim,
        cfg.window,
        cfg.seed,
        vocab.iter().map(|(t, _)| t.to_string()).collect(),
        model.input,
    );
    Ok((
        table,
        TrainStats {
            vocab_size: n,
            initial_objective,
            final_objective,
        },
    ))
}
