use std::collections::{HashMap, HashSet};

use super::bleu::ngram_counts;
use super::{Corpus, MetricError};

const MAX_N: usize = 4;

type Vector<'a> = HashMap<&'a [String], f64>;

fn tfidf<'a>(tokens: &'a [String], n: usize, idf: &dyn Fn(&[String]) -> f64) -> Vector<'a> {
    ngram_counts(tokens, n)
        .into_iter()
        .map(|(g, c)| (g, c as f64 * idf(g)))
        .collect()
}

fn cosine(a: &Vector, b: &Vector) -> f64 {
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Plain CIDEr, unscaled.
///
/// Document frequency of an n-gram is the number of pairs whose reference set
/// contains it; `idf = ln(|corpus| / max(df, 1))`, so n-grams present in every
/// pair's references weigh nothing and candidate-only n-grams weigh `ln |corpus|`.
/// Each pair scores the mean over n = 1..4 of its average cosine similarity
/// to the references; the corpus score is the mean over pairs.
pub fn cider(corpus: &Corpus) -> Result<f64, MetricError> {
    if corpus.len() < 2 {
        return Err(MetricError::CorpusTooSmall(corpus.len()));
    }
    let total_docs = corpus.len() as f64;
    let mut score_sum = 0.0;
    let mut per_pair = vec![0.0; corpus.len()];

    for n in 1..=MAX_N {
        let mut df: HashMap<&[String], usize> = HashMap::new();
        for p in corpus.pairs() {
            let grams: HashSet<&[String]> = p
                .references
                .iter()
                .flat_map(|r| r.windows(n).filter(|_| r.len() >= n))
                .collect();
            for g in grams {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        let idf = |g: &[String]| (total_docs / df.get(g).copied().unwrap_or(0).max(1) as f64).ln();

        for (slot, p) in per_pair.iter_mut().zip(corpus.pairs()) {
            let cand = tfidf(&p.candidate, n, &idf);
            let sims: f64 = p.references.iter().map(|r| cosine(&cand, &tfidf(r, n, &idf))).sum();
            *slot += sims / p.references.len() as f64;
        }
    }
    for s in per_pair {
        score_sum += s / MAX_N as f64;
    }
    Ok(score_sum / total_docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_util::corpus;

    #[test]
    fn too_small() {
        let c = corpus(&[("a", &["a"])]);
        assert!(matches!(cider(&c), Err(MetricError::CorpusTooSmall(1))));
    }

    #[test]
    fn shared_ngrams_weigh_nothing() {
        // "the" is in both pairs' references so its idf is 0; only the
        // distinct unigram carries weight and matches perfectly.
        let c = corpus(&[("the a", &["the a"]), ("the b", &["the b"])]);
        // n=1: cosine 1 (only a/b weighted); n=2: "the a" vs "the b" distinct → 1;
        // n=3,4: no n-grams → 0
        let s = cider(&c).unwrap();
        assert!((s - 0.5).abs() < 1e-12);

        let c = corpus(&[("the", &["the"]), ("the", &["the"])]);
        assert_eq!(cider(&c).unwrap(), 0.0);
    }

    #[test]
    fn unrelated_candidate_scores_zero() {
        let c = corpus(&[("x y z w", &["a b c d"]), ("a b c d", &["e f g h"])]);
        assert_eq!(cider(&c).unwrap(), 0.0);
    }
}
