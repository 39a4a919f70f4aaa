use std::collections::HashMap;

use super::{CommentModel, ModelError};
use crate::corpus::Dataset;
use crate::lang::{code_subtokens, Lang};

struct Entry {
    /// (subtoken id, count), sorted by id.
    bag: Vec<(u32, u32)>,
    total: u32,
    comment: String,
}

/// Nearest-neighbour retrieval over subtoken multisets.
pub struct SurrogateModel {
    lang: Lang,
    ids: HashMap<String, u32>,
    memory: Vec<Entry>,
}

fn bag_of(subtokens: &[String], ids: &HashMap<String, u32>) -> (HashMap<u32, u32>, u32) {
    let mut bag = HashMap::new();
    let mut unknown = 0;
    for s in subtokens {
        match ids.get(s) {
            Some(&id) => *bag.entry(id).or_insert(0) += 1,
            None => unknown += 1,
        }
    }
    (bag, unknown)
}

impl SurrogateModel {
    pub fn new(train: &Dataset, lang: Lang) -> Result<Self, ModelError> {
        if train.is_empty() {
            return Err(ModelError::Invalid("surrogate memory is empty".to_string()));
        }
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut memory = Vec::with_capacity(train.len());
        for sample in &train.samples {
            let subs = code_subtokens(&sample.code, lang).unwrap_or_default();
            let mut counts: HashMap<u32, u32> = HashMap::new();
            for s in subs {
                let next = ids.len() as u32;
                let id = *ids.entry(s).or_insert(next);
                *counts.entry(id).or_insert(0) += 1;
            }
            let mut bag: Vec<(u32, u32)> = counts.into_iter().collect();
            bag.sort_unstable();
            memory.push(Entry {
                total: bag.iter().map(|&(_, c)| c).sum(),
                bag,
                comment: sample.comment.clone(),
            });
        }
        Ok(SurrogateModel { lang, ids, memory })
    }

    pub fn len(&self) -> usize {
        self.memory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memory.is_empty()
    }

    /// Index of the retrieved entry and its similarity.
    pub fn nearest(&self, code: &str) -> (usize, f64) {
        let subs = code_subtokens(code, self.lang).unwrap_or_default();
        let (query, unknown) = bag_of(&subs, &self.ids);
        let query_total = query.values().sum::<u32>() + unknown;
        let mut best = (0, f64::NEG_INFINITY);
        for (i, e) in self.memory.iter().enumerate() {
            let inter: u32 = e
                .bag
                .iter()
                .filter_map(|(id, c)| query.get(id).map(|q| (*q).min(*c)))
                .sum();
            let union = e.total + query_total - inter;
            let sim = if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            };
            if sim > best.1 {
                best = (i, sim);
            }
        }
        best
    }
}

impl CommentModel for SurrogateModel {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        Ok(self.memory[self.nearest(code).0].comment.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeSample, Role};

    fn dataset(pairs: &[(&str, &str)]) -> Dataset {
        let samples = pairs
            .iter()
            .enumerate()
            .map(|(i, (code, comment))| CodeSample {
                id: i.to_string(),
                code: code.to_string(),
                comment: comment.to_string(),
                lang: Lang::Java,
            })
            .collect();
        Dataset::new("mem", samples, Role::Train)
    }

    #[test]
    fn self_retrieval_and_tie_rule() {
        let ds = dataset(&[
            ("int sum(int a) { return a; }", "sums"),
            ("void close(Stream s) { s.close(); }", "closes the stream"),
        ]);
        let m = SurrogateModel::new(&ds, Lang::Java).unwrap();
        assert_eq!(
            m.generate("void close(Stream s) { s.close(); }").unwrap(),
            "closes the stream"
        );
        assert_eq!(m.generate("zzz").unwrap(), "sums");
    }

    #[test]
    fn empty_memory_is_rejected() {
        assert!(SurrogateModel::new(&dataset(&[]), Lang::Java).is_err());
    }
}
