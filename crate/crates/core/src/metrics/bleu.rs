use std::collections::HashMap;

use super::{Corpus, MetricError};

/// Smoothing for sentence-level BLEU. Corpus BLEU is never smoothed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Smoothing {
    #[default]
    None,
    /// Add one to numerator and denominator for n > 1.
    AddOne,
}

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and total candidate n-grams for one pair.
fn clipped(candidate: &[String], references: &[Vec<String>], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: HashMap<&[String], usize> = HashMap::new();
    for r in references {
        for (g, c) in ngram_counts(r, n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

/// Reference length closest to the candidate length; ties go to the shorter.
fn closest_ref_len(cand_len: usize, references: &[Vec<String>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(cand_len), r))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    }
}

fn combine(precisions: &[(f64, f64)], bp: f64) -> Vec<f64> {
    let mut log_sum = 0.0;
    let mut zero = false;
    precisions
        .iter()
        .enumerate()
        .map(|(k, &(m, t))| {
            if m <= 0.0 || t <= 0.0 {
                zero = true;
            } else {
                log_sum += (m / t).ln();
            }
            if zero {
                0.0
            } else {
                bp * (log_sum / (k + 1) as f64).exp()
            }
        })
        .collect()
}

/// Corpus BLEU-1..=`max_n`: clipped n-gram precision summed over the corpus,
/// geometric mean over orders, brevity penalty `exp(1 - r/c)` when `c < r`.
/// Any zero precision makes that order (and all higher ones) zero.
pub fn bleu(corpus: &Corpus, max_n: usize) -> Result<Vec<f64>, MetricError> {
    if corpus.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut totals = vec![(0.0, 0.0); max_n];
    let (mut c, mut r) = (0, 0);
    for p in corpus.pairs() {
        c += p.candidate.len();
        r += closest_ref_len(p.candidate.len(), &p.references);
        for (n, t) in totals.iter_mut().enumerate() {
            let (m, total) = clipped(&p.candidate, &p.references, n + 1);
            t.0 += m as f64;
            t.1 += total as f64;
        }
    }
    Ok(combine(&totals, brevity_penalty(c, r)))
}

pub fn sentence_bleu(candidate: &[String], references: &[Vec<String>], max_n: usize, smoothing: Smoothing) -> Vec<f64> {
    let precisions: Vec<(f64, f64)> = (1..=max_n)
        .map(|n| {
            let (m, t) = clipped(candidate, references, n);
            match smoothing {
                Smoothing::AddOne if n > 1 => (m as f64 + 1.0, t as f64 + 1.0),
                _ => (m as f64, t as f64),
            }
        })
        .collect();
    let bp = brevity_penalty(candidate.len(), closest_ref_len(candidate.len(), references));
    combine(&precisions, bp)
}
