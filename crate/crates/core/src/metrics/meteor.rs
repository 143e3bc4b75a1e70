use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::{Corpus, MetricError};

/// Parameters of the simplified METEOR score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Porter2 (Snowball English) stem of a lowercase token.
pub fn stem(token: &str) -> String {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER
        .get_or_init(|| Stemmer::create(Algorithm::English))
        .stem(token)
        .into_owned()
}

/// Unigram alignment as `(candidate_idx, reference_idx)` pairs sorted by
/// candidate index. Exact matches are aligned first, then stem matches among
/// the leftovers. Within a stage a token prefers the reference position right
/// after its predecessor's, which keeps contiguous runs in one chunk.
fn align(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let cand_stems: Vec<String> = candidate.iter().map(|t| stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    let mut cand_to_ref: Vec<Option<usize>> = vec![None; candidate.len()];
    let mut ref_used = vec![false; reference.len()];

    let stages: [&dyn Fn(usize, usize) -> bool; 2] = [&|i, j| candidate[i] == reference[j], &|i, j| {
        cand_stems[i] == ref_stems[j]
    }];
    for same in stages {
        for i in 0..candidate.len() {
            if cand_to_ref[i].is_some() {
                continue;
            }
            let free = |j: usize| !ref_used[j] && same(i, j);
            let preferred = i
                .checked_sub(1)
                .and_then(|p| cand_to_ref[p])
                .map(|j| j + 1)
                .filter(|&j| j < reference.len() && free(j));
            if let Some(j) = preferred.or_else(|| (0..reference.len()).find(|&j| free(j))) {
                cand_to_ref[i] = Some(j);
                ref_used[j] = true;
            }
        }
    }
    cand_to_ref
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect()
}

fn chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

/// `Fmean · (1 − γ·(chunks/matches)^β)` with `Fmean = P·R / (α·P + (1−α)·R)`.
pub fn meteor_pair(candidate: &[String], reference: &[String], params: MeteorParams) -> f64 {
    let alignment = align(candidate, reference);
    let m = alignment.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    let fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let penalty = params.gamma * (chunks(&alignment) as f64 / m).powf(params.beta);
    fmean * (1.0 - penalty)
}

/// Mean over pairs of the best score against any reference.
pub fn meteor(corpus: &Corpus, params: MeteorParams) -> Result<f64, MetricError> {
    if corpus.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let total: f64 = corpus
        .pairs()
        .iter()
        .map(|p| {
            p.references
                .iter()
                .map(|r| meteor_pair(&p.candidate, r, params))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / corpus.len() as f64)
}
