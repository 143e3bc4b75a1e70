//! Brute-force metric oracles, random corpora and fixture paths shared by the
//! integration tests. Oracles work on joined n-gram strings and plain loops,
//! deliberately sharing nothing with the library code.
#![allow(dead_code)]

use std::path::PathBuf;

use capbench::metrics::{Corpus, CorpusPair};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub type Pair = (Vec<String>, Vec<Vec<String>>);

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn to_corpus(pairs: &[Pair]) -> Corpus {
    Corpus::new(
        pairs
            .iter()
            .enumerate()
            .map(|(i, (c, r))| CorpusPair {
                file_id: format!("id{i}"),
                candidate: c.clone(),
                references: r.clone(),
            })
            .collect(),
    )
    .unwrap()
}

/// Up to `max_pairs` pairs (at least `min_pairs`), up to 10 tokens per
/// sentence from a vocabulary of at most 12 words, 1 to 3 references.
pub fn random_pairs<R: Rng>(rng: &mut R, min_pairs: usize, max_pairs: usize) -> Vec<Pair> {
    let vocab = rng.gen_range(1..=12);
    let sentence = |rng: &mut R, min_len: usize| -> Vec<String> {
        let len = rng.gen_range(min_len..=10);
        (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect()
    };
    let n = rng.gen_range(min_pairs..=max_pairs);
    (0..n)
        .map(|_| {
            let cand = sentence(rng, 0);
            let refs = (0..rng.gen_range(1..=3)).map(|_| sentence(rng, 1)).collect();
            (cand, refs)
        })
        .collect()
}

pub fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].join(" ")).collect()
}

fn occurrences(list: &[String], g: &str) -> usize {
    list.iter().filter(|x| x.as_str() == g).count()
}

fn distinct(list: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for x in list {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

/// Corpus BLEU-1..=max_n without smoothing. An empty candidate side gives a
/// zero brevity penalty.
pub fn bleu_oracle(pairs: &[Pair], max_n: usize) -> Vec<f64> {
    let mut precisions = Vec::new();
    for n in 1..=max_n {
        let (mut matched, mut total) = (0usize, 0usize);
        for (cand, refs) in pairs {
            let cg = ngrams(cand, n);
            total += cg.len();
            for g in distinct(&cg) {
                let best_ref = refs.iter().map(|r| occurrences(&ngrams(r, n), &g)).max().unwrap_or(0);
                matched += occurrences(&cg, &g).min(best_ref);
            }
        }
        precisions.push(if total == 0 { 0.0 } else { matched as f64 / total as f64 });
    }
    let c: usize = pairs.iter().map(|(c, _)| c.len()).sum();
    let r: usize = pairs
        .iter()
        .map(|(c, refs)| {
            let mut lens: Vec<usize> = refs.iter().map(Vec::len).collect();
            lens.sort_by_key(|&l| ((l as i64 - c.len() as i64).abs(), l));
            lens[0]
        })
        .sum();
    let bp = if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    (1..=max_n)
        .map(|n| {
            let ps = &precisions[..n];
            if ps.contains(&0.0) {
                0.0
            } else {
                bp * ps.iter().product::<f64>().powf(1.0 / n as f64)
            }
        })
        .collect()
}

fn is_subsequence(sub: &[&String], seq: &[String]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|x| it.any(|y| y == *x))
}

/// LCS length by enumerating every subsequence of `a`.
pub fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 16);
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
            is_subsequence(&sub, b).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

/// Mean best-reference ROUGE-L; `beta2 = None` is the recall-only limit.
pub fn rouge_oracle(pairs: &[Pair], beta2: Option<f64>) -> f64 {
    let per_pair = pairs.iter().map(|(cand, refs)| {
        refs.iter()
            .map(|r| {
                if cand.is_empty() || r.is_empty() {
                    return 0.0;
                }
                let l = lcs_oracle(cand, r) as f64;
                let (p, rec) = (l / cand.len() as f64, l / r.len() as f64);
                match beta2 {
                    _ if l == 0.0 => 0.0,
                    None => rec,
                    Some(b2) => (1.0 + b2) * p * rec / (rec + b2 * p),
                }
            })
            .fold(0.0, f64::max)
    });
    per_pair.sum::<f64>() / pairs.len() as f64
}

/// Plain CIDEr over dense TF-IDF vectors indexed by the corpus n-gram vocabulary.
pub fn cider_oracle(pairs: &[Pair]) -> f64 {
    let docs = pairs.len() as f64;
    let mut per_pair = vec![0.0; pairs.len()];
    for n in 1..=4 {
        let mut vocab: Vec<String> = Vec::new();
        for (c, refs) in pairs {
            vocab.extend(ngrams(c, n));
            for r in refs {
                vocab.extend(ngrams(r, n));
            }
        }
        let vocab = distinct(&vocab);
        let idf: Vec<f64> = vocab
            .iter()
            .map(|g| {
                let df = pairs
                    .iter()
                    .filter(|(_, refs)| refs.iter().any(|r| ngrams(r, n).contains(g)))
                    .count();
                (docs / df.max(1) as f64).ln()
            })
            .collect();
        let vector = |t: &[String]| -> Vec<f64> {
            let g = ngrams(t, n);
            vocab
                .iter()
                .zip(&idf)
                .map(|(v, w)| occurrences(&g, v) as f64 * w)
                .collect()
        };
        let cosine = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                dot / (na * nb)
            }
        };
        for (slot, (c, refs)) in per_pair.iter_mut().zip(pairs) {
            let cv = vector(c);
            let sims: f64 = refs.iter().map(|r| cosine(&cv, &vector(r))).sum();
            *slot += sims / refs.len() as f64 / 4.0;
        }
    }
    per_pair.iter().sum::<f64>() / docs
}

/// CIDEr when each candidate equals its single reference: a pair scores 1 for
/// every order n at which it has an n-gram missing from some other pair's
/// references, and 0 otherwise.
pub fn cider_identity_max(sentences: &[Vec<String>]) -> f64 {
    let docs = sentences.len();
    let total: f64 = sentences
        .iter()
        .map(|s| {
            (1..=4)
                .filter(|&n| {
                    ngrams(s, n)
                        .iter()
                        .any(|g| sentences.iter().filter(|o| ngrams(o, n).contains(g)).count() < docs)
                })
                .count() as f64
                / 4.0
        })
        .sum();
    total / docs as f64
}

/// METEOR when each candidate equals its single reference: one chunk of
/// `len` matches, so `1 - gamma * (1/len)^beta` with the default parameters.
pub fn meteor_identity_max(sentences: &[Vec<String>]) -> f64 {
    let total: f64 = sentences
        .iter()
        .map(|s| 1.0 - 0.5 * (1.0 / s.len() as f64).powi(3))
        .sum();
    total / sentences.len() as f64
}
