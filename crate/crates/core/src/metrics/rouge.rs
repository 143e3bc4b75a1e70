use super::{Corpus, MetricError};

/// How ROUGE-L weighs LCS precision against recall.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum RougeWeighting {
    /// β² → ∞: the F-measure reduces to LCS recall.
    #[default]
    Recall,
    /// β = 1.
    Balanced,
    Beta(f64),
}

impl RougeWeighting {
    fn f_measure(self, p: f64, r: f64) -> f64 {
        if p <= 0.0 || r <= 0.0 {
            return 0.0;
        }
        let beta2 = match self {
            RougeWeighting::Recall => return r,
            RougeWeighting::Balanced => 1.0,
            RougeWeighting::Beta(b) => b * b,
        };
        (1.0 + beta2) * p * r / (r + beta2 * p)
    }
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn pair_score(candidate: &[String], reference: &[String], w: RougeWeighting) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let l = lcs_len(candidate, reference) as f64;
    w.f_measure(l / candidate.len() as f64, l / reference.len() as f64)
}

/// Mean over pairs of the best LCS F-measure against any reference.
pub fn rouge_l(corpus: &Corpus, weighting: RougeWeighting) -> Result<f64, MetricError> {
    if corpus.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let total: f64 = corpus
        .pairs()
        .iter()
        .map(|p| {
            p.references
                .iter()
                .map(|r| pair_score(&p.candidate, r, weighting))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / corpus.len() as f64)
}
