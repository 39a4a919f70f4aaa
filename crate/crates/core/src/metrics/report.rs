use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    bleu_tokens, corpus_bleu, meteor_lite_tokens, relative_degradation, rouge_l_tokens,
    success_rate, text_tokens, valid_rate,
};

/// Model outputs for one sample before and after perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub id: String,
    pub reference: String,
    pub output_before: String,
    pub output_after: String,
    pub valid: bool,
    pub queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub bleu_before: f64,
    pub bleu_after: f64,
    pub rouge_l_before: f64,
    pub rouge_l_after: f64,
    pub meteor_before: f64,
    pub meteor_after: f64,
    pub valid: bool,
    pub queries: u64,
    /// Zero baseline BLEU for this row; its relative degradation is reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub samples: usize,
    pub corpus_bleu_before: f64,
    pub corpus_bleu_after: f64,
    pub mean_bleu_before: f64,
    pub mean_bleu_after: f64,
    pub r_d: f64,
    pub v_r: f64,
    pub s_r: f64,
    pub mean_queries: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Aggregates,
    pub config: serde_json::Value,
    pub notes: Vec<String>,
}

const NOTES: &[&str] = &[
    "bleu: smoothed sentence-level BLEU-4 (add-one on 2- to 4-gram precisions); corpus BLEU uses the same smoothing",
    "meteor: meteor_lite, exact-match unigram alignment only",
    "r_d, s_r computed from corpus BLEU; v_r from the validity proxy (lex + balance + declarations)",
];

/// Aggregates per-sample outputs into a report. `rows` must be non-empty.
pub fn build_report(rows: &[EvalRow], config: serde_json::Value) -> RobustnessReport {
    assert!(!rows.is_empty(), "report over zero samples");
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut before_pairs = Vec::with_capacity(rows.len());
    let mut after_pairs = Vec::with_capacity(rows.len());
    for row in rows {
        let reference = text_tokens(&row.reference);
        let before = text_tokens(&row.output_before);
        let after = text_tokens(&row.output_after);
        let bleu_before = bleu_tokens(&before, &reference);
        out_rows.push(ReportRow {
            id: row.id.clone(),
            bleu_before,
            bleu_after: bleu_tokens(&after, &reference),
            rouge_l_before: rouge_l_tokens(&before, &reference),
            rouge_l_after: rouge_l_tokens(&after, &reference),
            meteor_before: meteor_lite_tokens(&before, &reference),
            meteor_after: meteor_lite_tokens(&after, &reference),
            valid: row.valid,
            queries: row.queries,
            degenerate: bleu_before == 0.0,
        });
        before_pairs.push((before, reference.clone()));
        after_pairs.push((after, reference));
    }
    let n = rows.len() as f64;
    let corpus_bleu_before = corpus_bleu(&before_pairs);
    let corpus_bleu_after = corpus_bleu(&after_pairs);
    let (r_d, degenerate) = relative_degradation(corpus_bleu_before, corpus_bleu_after);
    let valid = rows.iter().filter(|r| r.valid).count();
    let v_r = valid_rate(valid, rows.len()).expect("non-empty");
    let aggregates = Aggregates {
        samples: rows.len(),
        corpus_bleu_before,
        corpus_bleu_after,
        mean_bleu_before: out_rows.iter().map(|r| r.bleu_before).sum::<f64>() / n,
        mean_bleu_after: out_rows.iter().map(|r| r.bleu_after).sum::<f64>() / n,
        r_d,
        v_r,
        s_r: success_rate(r_d, v_r),
        mean_queries: rows.iter().map(|r| r.queries as f64).sum::<f64>() / n,
        degenerate,
    };
    RobustnessReport {
        rows: out_rows,
        aggregates,
        config,
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
    }
}

impl RobustnessReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    /// Aligned-column text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let id_w = self
            .rows
            .iter()
            .map(|r| r.id.len())
            .max()
            .unwrap_or(2)
            .max(2);
        writeln!(
            s,
            "{:<id_w$}  {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>5} {:>7}",
            "id", "bleu", "bleu'", "rougeL", "rougeL'", "meteor", "meteor'", "valid", "queries"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:<id_w$}  {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>5} {:>7}",
                r.id,
                r.bleu_before,
                r.bleu_after,
                r.rouge_l_before,
                r.rouge_l_after,
                r.meteor_before,
                r.meteor_after,
                if r.valid { "yes" } else { "no" },
                r.queries
            )
            .unwrap();
        }
        let a = &self.aggregates;
        writeln!(s).unwrap();
        writeln!(s, "samples             {}", a.samples).unwrap();
        writeln!(s, "corpus BLEU before  {:.4}", a.corpus_bleu_before).unwrap();
        writeln!(s, "corpus BLEU after   {:.4}", a.corpus_bleu_after).unwrap();
        writeln!(
            s,
            "r_d                 {:.4}{}",
            a.r_d,
            if a.degenerate { " (degenerate)" } else { "" }
        )
        .unwrap();
        writeln!(s, "v_r                 {:.4}", a.v_r).unwrap();
        writeln!(s, "s_r                 {:.4}", a.s_r).unwrap();
        writeln!(s, "mean queries        {:.2}", a.mean_queries).unwrap();
        for note in &self.notes {
            writeln!(s, "note: {note}").unwrap();
        }
        s
    }
}
