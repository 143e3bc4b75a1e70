use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{tokenize, Corpus, MetricError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RoleAveraging {
    /// Pool intersections and set sizes over all pairs.
    #[default]
    Micro,
    /// Average per-pair precision over pairs that produced a name, and
    /// per-pair recall over pairs whose references name someone.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RoleScores {
    fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

/// Finds roster names in token streams: longest match first, non-overlapping,
/// scanning left to right.
#[derive(Debug, Clone)]
pub struct NameMatcher {
    names: HashSet<Vec<String>>,
    max_len: usize,
}

impl NameMatcher {
    pub fn new<S: AsRef<str>>(roster: &[S]) -> Self {
        let names: HashSet<Vec<String>> = roster
            .iter()
            .map(|n| tokenize(n.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        let max_len = names.iter().map(Vec::len).max().unwrap_or(0);
        Self { names, max_len }
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Names found in `tokens`, as space-joined lowercase tokens.
    pub fn extract(&self, tokens: &[String]) -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        let mut i = 0;
        while i < tokens.len() {
            let longest = (1..=self.max_len.min(tokens.len() - i))
                .rev()
                .find(|&len| self.names.contains(&tokens[i..i + len]));
            match longest {
                Some(len) => {
                    found.insert(tokens[i..i + len].join(" "));
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }
}

/// Entity-name precision, recall and F1. Reference names are the union over a
/// pair's references. Undefined ratios count as zero.
pub fn role_f1<S: AsRef<str>>(
    corpus: &Corpus,
    roster: &[S],
    averaging: RoleAveraging,
) -> Result<RoleScores, MetricError> {
    let matcher = NameMatcher::new(roster);
    if matcher.is_empty() {
        return Err(MetricError::EmptyRoster);
    }
    let per_pair: Vec<(usize, usize, usize)> = corpus
        .pairs()
        .iter()
        .map(|p| {
            let predicted = matcher.extract(&p.candidate);
            let truth: BTreeSet<String> = p.references.iter().flat_map(|r| matcher.extract(r)).collect();
            (predicted.intersection(&truth).count(), predicted.len(), truth.len())
        })
        .collect();

    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let scores = match averaging {
        RoleAveraging::Micro => {
            let (hit, pred, truth) = per_pair
                .iter()
                .fold((0, 0, 0), |acc, &(h, p, t)| (acc.0 + h, acc.1 + p, acc.2 + t));
            RoleScores::new(ratio(hit as f64, pred as f64), ratio(hit as f64, truth as f64))
        }
        RoleAveraging::Macro => {
            let mean = |vals: Vec<f64>| ratio(vals.iter().sum(), vals.len() as f64);
            let p = per_pair
                .iter()
                .filter(|x| x.1 > 0)
                .map(|&(h, p, _)| h as f64 / p as f64)
                .collect();
            let r = per_pair
                .iter()
                .filter(|x| x.2 > 0)
                .map(|&(h, _, t)| h as f64 / t as f64)
                .collect();
            RoleScores::new(mean(p), mean(r))
        }
    };
    Ok(scores)
}
