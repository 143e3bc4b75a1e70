//! Caption metrics: corpus BLEU-1..4, ROUGE-L, a simplified METEOR, CIDEr and
//! the entity-name RoleF1.
//!
//! | Metric | Range | Notes |
//! | ------ | ----- | ----- |
//! | BLEU-n | [0, 1] | corpus-level, no smoothing |
//! | ROUGE-L | [0, 1] | LCS F-measure, recall-weighted by default |
//! | METEOR | [0, 1] | exact + stem stages only |
//! | CIDEr | ≥ 0 | mean TF-IDF cosine over n = 1..4, unscaled |
//! | RoleF1 | [0, 1] | longest-match roster names, micro-averaged by default |

mod bleu;
mod cider;
mod meteor;
mod role;
mod rouge;
mod tokenize;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, sentence_bleu, Smoothing};
pub use cider::cider;
pub use meteor::{meteor, meteor_pair, stem, MeteorParams};
pub use role::{role_f1, NameMatcher, RoleAveraging, RoleScores};
pub use rouge::{lcs_len, rouge_l, RougeWeighting};
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("CIDEr needs at least 2 pairs, got {0}")]
    CorpusTooSmall(usize),
    #[error("pair {0:?} has no references")]
    NoReferences(String),
    #[error("duplicate file id {0:?}")]
    DuplicateFileId(String),
    #[error("file id {file_id:?} is missing from the {side}")]
    MissingFileId { file_id: String, side: &'static str },
    #[error("roster is empty")]
    EmptyRoster,
    #[error("{path} line {line}: {message}")]
    BadRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusPair {
    pub file_id: String,
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

/// Tokenized candidate/reference pairs with unique file ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pairs: Vec<CorpusPair>,
}

impl Corpus {
    pub fn new(pairs: Vec<CorpusPair>) -> Result<Self, MetricError> {
        let mut seen = HashSet::new();
        for p in &pairs {
            if p.references.is_empty() {
                return Err(MetricError::NoReferences(p.file_id.clone()));
            }
            if !seen.insert(p.file_id.as_str()) {
                return Err(MetricError::DuplicateFileId(p.file_id.clone()));
            }
        }
        Ok(Self { pairs })
    }

    /// Tokenizes raw `(file_id, candidate, references)` triples.
    pub fn from_text<I, S>(items: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (S, S, Vec<S>)>,
        S: AsRef<str>,
    {
        let pairs = items
            .into_iter()
            .map(|(id, cand, refs)| CorpusPair {
                file_id: id.as_ref().to_string(),
                candidate: tokenize(cand.as_ref()),
                references: refs.iter().map(|r| tokenize(r.as_ref())).collect(),
            })
            .collect();
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[CorpusPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub rouge: RougeWeighting,
    pub role: RoleAveraging,
    pub meteor: MeteorParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pairs: usize,
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cider: f64,
    pub role_precision: f64,
    pub role_recall: f64,
    pub role_f1: f64,
}

impl EvaluationReport {
    /// Fixed-width table with every score multiplied by 100.
    pub fn to_table(&self) -> String {
        let cols = [
            ("CIDEr", self.cider),
            ("METEOR", self.meteor),
            ("Rouge-L", self.rouge_l),
            ("BLEU-1", self.bleu_1),
            ("BLEU-2", self.bleu_2),
            ("BLEU-3", self.bleu_3),
            ("BLEU-4", self.bleu_4),
            ("RoleP", self.role_precision),
            ("RoleR", self.role_recall),
            ("RoleF1", self.role_f1),
        ];
        let mut out = String::new();
        for (name, _) in &cols {
            let _ = write!(out, "{name:>9}");
        }
        out.push('\n');
        for (_, v) in &cols {
            let _ = write!(out, "{:>9.1}", v * 100.0);
        }
        out.push('\n');
        out
    }
}

pub fn evaluate(corpus: &Corpus, roster: &[String], opts: EvalOptions) -> Result<EvaluationReport, MetricError> {
    let b = bleu(corpus, 4)?;
    let role = role_f1(corpus, roster, opts.role)?;
    Ok(EvaluationReport {
        pairs: corpus.len(),
        bleu_1: b[0],
        bleu_2: b[1],
        bleu_3: b[2],
        bleu_4: b[3],
        rouge_l: rouge_l(corpus, opts.rouge)?,
        meteor: meteor(corpus, opts.meteor)?,
        cider: cider(corpus)?,
        role_precision: role.precision,
        role_recall: role.recall,
        role_f1: role.f1,
    })
}

#[derive(Debug, Deserialize)]
struct CaptionRecord {
    file_id: String,
    caption: String,
}

fn read_captions(path: &Path) -> Result<Vec<CaptionRecord>, MetricError> {
    let text = fs::read_to_string(path).map_err(|source| MetricError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MetricError::BadRecord {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// One full name per line; blank lines ignored.
pub fn read_roster_names(path: &Path) -> Result<Vec<String>, MetricError> {
    let text = fs::read_to_string(path).map_err(|source| MetricError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Pairs predictions with references by file id. Several reference lines with
/// the same id become multiple references; every id must appear on both sides.
pub fn load_corpus(predictions: &Path, references: &Path) -> Result<Corpus, MetricError> {
    let preds = read_captions(predictions)?;
    let refs = read_captions(references)?;

    let mut order: Vec<&str> = Vec::new();
    let mut by_id: HashMap<&str, Vec<Vec<String>>> = HashMap::new();
    for r in &refs {
        let entry = by_id.entry(r.file_id.as_str()).or_default();
        if entry.is_empty() {
            order.push(&r.file_id);
        }
        entry.push(tokenize(&r.caption));
    }

    let mut pred_by_id: HashMap<&str, &str> = HashMap::new();
    for p in &preds {
        if pred_by_id.insert(&p.file_id, &p.caption).is_some() {
            return Err(MetricError::DuplicateFileId(p.file_id.clone()));
        }
        if !by_id.contains_key(p.file_id.as_str()) {
            return Err(MetricError::MissingFileId {
                file_id: p.file_id.clone(),
                side: "references",
            });
        }
    }

    let mut pairs = Vec::with_capacity(order.len());
    for id in order {
        let cand = pred_by_id.get(id).ok_or_else(|| MetricError::MissingFileId {
            file_id: id.to_string(),
            side: "predictions",
        })?;
        pairs.push(CorpusPair {
            file_id: id.to_string(),
            candidate: tokenize(cand),
            references: by_id.remove(id).unwrap_or_default(),
        });
    }
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    Corpus::new(pairs)
}

pub fn evaluate_corpus(
    predictions: &Path,
    references: &Path,
    roster: &Path,
    opts: EvalOptions,
) -> Result<EvaluationReport, MetricError> {
    let corpus = load_corpus(predictions, references)?;
    let roster = read_roster_names(roster)?;
    evaluate(&corpus, &roster, opts)
}
