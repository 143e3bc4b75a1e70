//! Captioning dataset extraction.
//!
//! Shots are merged with the rebound that immediately follows a miss, labelled
//! with the nine-way shot taxonomy, rewritten into full-name captions, given a
//! candidate player list (the involved players and all their teammates) and a
//! fixed number of frame indices sampled over the clip window.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::FrameWindow;
use crate::ingest::{clip_window, event_from_graph, event_key, IngestError};
use crate::kgraph::{AttrValue, GraphError, KnowledgeGraph, NodeId, NodeKind, RelationKind};
use crate::metrics::tokenize;
use crate::pbp::{
    expand_player_name, parse_event, EventCategory, EventTuple, GameEvent, Outcome, PbpError, PlayerRef, ReboundSide,
    ShotKind,
};

pub const FRAMES_PER_SAMPLE: usize = 72;

const DEFAULT_VERBS: &str = include_str!("../data/verbs.txt");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missed shot without a rebound side")]
    IncompleteEvent,
    #[error("event is not a shot")]
    NotAShot,
    #[error(transparent)]
    Name(#[from] PbpError),
    #[error("player {0:?} has no name resolved against the roster")]
    UnresolvedPlayer(String),
    #[error("player {0:?} belongs to no team")]
    MissingTeamMembership(String),
    #[error("player {0:?} has no image")]
    MissingImage(String),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("verb lexicon is empty")]
    LexiconMissing,
    #[error("{samples} samples but {durations} durations")]
    DurationMismatch { samples: usize, durations: usize },
    #[error("total duration must be positive")]
    NonPositiveDuration,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SampleLabel {
    #[serde(rename = "2p-succ.")]
    TwoSucc,
    #[serde(rename = "2p-fail.-off.")]
    TwoFailOff,
    #[serde(rename = "2p-fail.-def.")]
    TwoFailDef,
    #[serde(rename = "2p-layup-succ.")]
    LayupSucc,
    #[serde(rename = "2p-layup-fail.-off.")]
    LayupFailOff,
    #[serde(rename = "2p-layup-fail.-def.")]
    LayupFailDef,
    #[serde(rename = "3p-succ.")]
    ThreeSucc,
    #[serde(rename = "3p-fail.-off.")]
    ThreeFailOff,
    #[serde(rename = "3p-fail.-def.")]
    ThreeFailDef,
}

impl SampleLabel {
    pub const ALL: [SampleLabel; 9] = [
        SampleLabel::TwoSucc,
        SampleLabel::TwoFailOff,
        SampleLabel::TwoFailDef,
        SampleLabel::LayupSucc,
        SampleLabel::LayupFailOff,
        SampleLabel::LayupFailDef,
        SampleLabel::ThreeSucc,
        SampleLabel::ThreeFailOff,
        SampleLabel::ThreeFailDef,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SampleLabel::TwoSucc => "2p-succ.",
            SampleLabel::TwoFailOff => "2p-fail.-off.",
            SampleLabel::TwoFailDef => "2p-fail.-def.",
            SampleLabel::LayupSucc => "2p-layup-succ.",
            SampleLabel::LayupFailOff => "2p-layup-fail.-off.",
            SampleLabel::LayupFailDef => "2p-layup-fail.-def.",
            SampleLabel::ThreeSucc => "3p-succ.",
            SampleLabel::ThreeFailOff => "3p-fail.-off.",
            SampleLabel::ThreeFailDef => "3p-fail.-def.",
        }
    }
}

impl fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A shot, plus the rebound that followed it when it missed.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedEvent {
    pub shot: GameEvent,
    pub rebound: Option<GameEvent>,
}

impl MergedEvent {
    pub fn involved(&self) -> impl Iterator<Item = &PlayerRef> {
        let shot = &self.shot.tuple;
        std::iter::once(&shot.actor)
            .chain(shot.co_actor.as_ref())
            .chain(self.rebound.as_ref().map(|r| &r.tuple.actor))
    }
}

/// Pairs each missed shot with the rebound recorded immediately after it in
/// the same game and period. Made shots stand alone. A missed shot whose next
/// event is anything else is dropped and reported in the returned warnings.
pub fn merge_shot_rebound(events: &[GameEvent]) -> (Vec<MergedEvent>, Vec<String>) {
    let mut merged = Vec::new();
    let mut warnings = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let e = &events[i];
        i += 1;
        if e.tuple.category != EventCategory::Shot {
            continue;
        }
        if e.tuple.outcome != Some(Outcome::Miss) {
            merged.push(MergedEvent {
                shot: e.clone(),
                rebound: None,
            });
            continue;
        }
        match events.get(i) {
            Some(next)
                if next.tuple.category == EventCategory::Rebound
                    && next.game_id == e.game_id
                    && next.period == e.period =>
            {
                merged.push(MergedEvent {
                    shot: e.clone(),
                    rebound: Some(next.clone()),
                });
                i += 1;
            }
            _ => warnings.push(format!(
                "{}: missed shot not followed by a rebound, dropped",
                event_key(&e.game_id, e.seq)
            )),
        }
    }
    (merged, warnings)
}

pub fn label_for(kind: ShotKind, outcome: Outcome, side: Option<ReboundSide>) -> Result<SampleLabel, DatasetError> {
    use SampleLabel::*;
    let row = match kind {
        ShotKind::TwoPtJump => [TwoSucc, TwoFailOff, TwoFailDef],
        ShotKind::Layup => [LayupSucc, LayupFailOff, LayupFailDef],
        ShotKind::ThreePtJump => [ThreeSucc, ThreeFailOff, ThreeFailDef],
    };
    match (outcome, side) {
        (Outcome::Make, _) => Ok(row[0]),
        (Outcome::Miss, Some(ReboundSide::Offensive)) => Ok(row[1]),
        (Outcome::Miss, Some(ReboundSide::Defensive)) => Ok(row[2]),
        (Outcome::Miss, None) => Err(DatasetError::IncompleteEvent),
    }
}

pub fn assign_label(m: &MergedEvent) -> Result<SampleLabel, DatasetError> {
    let shot = &m.shot.tuple;
    let (Some(kind), Some(outcome)) = (shot.shot_kind, shot.outcome) else {
        return Err(DatasetError::NotAShot);
    };
    let side = m.rebound.as_ref().and_then(|r| r.tuple.rebound_side);
    label_for(kind, outcome, side)
}

fn kind_phrase(kind: ShotKind) -> &'static str {
    match kind {
        ShotKind::TwoPtJump => "2pt jump shot",
        ShotKind::ThreePtJump => "3pt jump shot",
        ShotKind::Layup => "2pt layup",
    }
}

/// `"NAME makes the KIND"` or `"NAME misses the KIND"`, plus the assist clause
/// on a make.
pub fn render_shot_clause(name: &str, outcome: Outcome, kind: ShotKind, assist: Option<&str>) -> String {
    let verb = match outcome {
        Outcome::Make => "makes",
        Outcome::Miss => "misses",
    };
    let mut s = format!("{name} {verb} the {}", kind_phrase(kind));
    if let (Outcome::Make, Some(a)) = (outcome, assist) {
        s.push_str(" with an assist from ");
        s.push_str(a);
    }
    s
}

/// `"NAME gets the SIDE rebound"`.
pub fn render_rebound_clause(name: &str, side: ReboundSide) -> String {
    format!("{name} gets the {} rebound", side.as_str())
}

fn full_name<S: AsRef<str>>(p: &PlayerRef, roster: &[S]) -> Result<String, DatasetError> {
    match &p.full_name {
        Some(n) if roster.iter().any(|r| r.as_ref() == n) => Ok(n.clone()),
        _ => Ok(expand_player_name(&p.surface_form, roster)?),
    }
}

fn caption_from_tuples<S: AsRef<str>>(
    shot: &EventTuple,
    rebound: Option<&EventTuple>,
    roster: &[S],
) -> Result<String, DatasetError> {
    let (Some(kind), Some(outcome)) = (shot.shot_kind, shot.outcome) else {
        return Err(DatasetError::NotAShot);
    };
    let shooter = full_name(&shot.actor, roster)?;
    let assist = match (outcome, &shot.co_actor) {
        (Outcome::Make, Some(a)) => Some(full_name(a, roster)?),
        _ => None,
    };
    let mut caption = render_shot_clause(&shooter, outcome, kind, assist.as_deref());
    if outcome == Outcome::Miss {
        let rebound = rebound.ok_or(DatasetError::IncompleteEvent)?;
        let side = rebound.rebound_side.ok_or(DatasetError::IncompleteEvent)?;
        let name = full_name(&rebound.actor, roster)?;
        caption.push_str(" and ");
        caption.push_str(&render_rebound_clause(&name, side));
    }
    Ok(caption)
}

/// Caption for a merged event: distance dropped, names expanded and the
/// rebound clause turned around (`"defensive rebound by X"` →
/// `"X gets the defensive rebound"`).
pub fn rewrite_caption<S: AsRef<str>>(m: &MergedEvent, roster: &[S]) -> Result<String, DatasetError> {
    caption_from_tuples(&m.shot.tuple, m.rebound.as_ref().map(|r| &r.tuple), roster)
}

/// Rewrites a raw merged sentence such as
/// `"B. Ingram misses 2-pt jump shot from 19 ft and defensive rebound by J. Winslow"`.
pub fn rewrite_description<S: AsRef<str>>(sentence: &str, roster: &[S]) -> Result<String, DatasetError> {
    let lower = sentence.to_ascii_lowercase();
    let split = [" and defensive rebound by", " and offensive rebound by"]
        .iter()
        .filter_map(|m| lower.find(m))
        .min();
    let (shot_text, rebound_text) = match split {
        Some(at) => (&sentence[..at], Some(&sentence[at + " and ".len()..])),
        None => (sentence, None),
    };
    let shot = parse_event(shot_text, EventCategory::Shot, 0.0)?;
    let rebound = rebound_text
        .map(|t| parse_event(t, EventCategory::Rebound, 0.0))
        .transpose()?;
    caption_from_tuples(&shot, rebound.as_ref(), roster)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub image: String,
}

/// Involved players and all of their teammates, sorted by name.
pub fn candidate_players(m: &MergedEvent, graph: &KnowledgeGraph) -> Result<Vec<Candidate>, DatasetError> {
    let mut players = BTreeSet::new();
    for p in m.involved() {
        let name = p
            .full_name
            .as_deref()
            .ok_or_else(|| DatasetError::UnresolvedPlayer(p.surface_form.clone()))?;
        let node = NodeId::new(NodeKind::Player, name);
        if !graph.contains(&node) {
            return Err(DatasetError::MissingTeamMembership(name.to_string()));
        }
        let teams = graph.incoming(&node, RelationKind::TeamPlayer)?;
        if teams.is_empty() {
            return Err(DatasetError::MissingTeamMembership(name.to_string()));
        }
        for team in teams {
            players.extend(graph.neighbors(&team, RelationKind::TeamPlayer)?);
        }
    }
    let mut out = Vec::with_capacity(players.len());
    for player in players {
        let name = graph
            .neighbors(&player, RelationKind::PlayerName)?
            .into_iter()
            .next()
            .map_or_else(|| player.key.clone(), |n| n.key);
        let image = graph
            .neighbors(&player, RelationKind::PlayerImage)?
            .into_iter()
            .next()
            .map(|img| {
                graph
                    .attr(&img, "path")
                    .and_then(AttrValue::as_str)
                    .map_or_else(|| img.key.clone(), str::to_string)
            })
            .ok_or_else(|| DatasetError::MissingImage(player.key.clone()))?;
        out.push(Candidate { name, image });
    }
    out.sort();
    out.dedup_by(|a, b| a.name == b.name);
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Center frame of each segment (floor).
    #[default]
    Midpoint,
    /// A uniform draw inside each segment.
    SeededRandom,
}

/// Splits `[0, window_length)` into `count` equal segments and picks one frame
/// per segment. Indices are relative to the window start, non-decreasing and
/// repeat when the window is shorter than `count`.
pub fn sample_frame_indices(window_length: u64, count: usize, mode: SamplingMode, seed: u64) -> Vec<u64> {
    let len = window_length.max(1);
    let n = count as u64;
    match mode {
        SamplingMode::Midpoint => (0..n).map(|i| (2 * i + 1) * len / (2 * n)).collect(),
        SamplingMode::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seg = |i: u64| i as f64 * len as f64 / n as f64;
            (0..n)
                .map(|i| {
                    let (lo, hi) = (seg(i), seg(i + 1));
                    let x = lo + rng.gen::<f64>() * (hi - lo);
                    (x.floor() as u64).min(len - 1)
                })
                .collect()
        }
    }
}

/// Random train/test split; each side keeps the input order.
/// The train side gets `round(train_fraction · n)` samples.
pub fn split_dataset<T: Clone>(
    samples: &[T],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    let n_train = (train_fraction * samples.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_idx: HashSet<usize> = order[..n_train].iter().copied().collect();
    let (train, test): (Vec<_>, Vec<_>) = samples.iter().enumerate().partition(|(i, _)| train_idx.contains(i));
    Ok((
        train.into_iter().map(|(_, s)| s.clone()).collect(),
        test.into_iter().map(|(_, s)| s.clone()).collect(),
    ))
}

/// Verbs recognised by [`dataset_stats`]; statistics are relative to it.
#[derive(Debug, Clone)]
pub struct VerbLexicon(HashSet<String>);

impl Default for VerbLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_VERBS)
    }
}

impl VerbLexicon {
    /// One word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub sentences_per_second: f64,
    pub verbs_per_sentence: f64,
    pub verb_ratio: f64,
    pub sentences: usize,
    pub words: usize,
    pub verbs: usize,
    pub total_seconds: f64,
}

/// Each caption counts as one sentence; words are [`tokenize`] tokens and
/// verbs are tokens found in the lexicon.
pub fn dataset_stats<S: AsRef<str>>(
    captions: &[S],
    durations_seconds: &[f64],
    lexicon: &VerbLexicon,
) -> Result<DatasetStats, DatasetError> {
    if captions.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    if lexicon.is_empty() {
        return Err(DatasetError::LexiconMissing);
    }
    if captions.len() != durations_seconds.len() {
        return Err(DatasetError::DurationMismatch {
            samples: captions.len(),
            durations: durations_seconds.len(),
        });
    }
    let total_seconds: f64 = durations_seconds.iter().sum();
    if total_seconds.is_nan() || total_seconds <= 0.0 {
        return Err(DatasetError::NonPositiveDuration);
    }
    let (mut words, mut verbs) = (0, 0);
    for c in captions {
        let tokens = tokenize(c.as_ref());
        words += tokens.len();
        verbs += tokens.iter().filter(|t| lexicon.contains(t)).count();
    }
    let sentences = captions.len();
    Ok(DatasetStats {
        sentences_per_second: sentences as f64 / total_seconds,
        verbs_per_sentence: verbs as f64 / sentences as f64,
        verb_ratio: if words == 0 { 0.0 } else { verbs as f64 / words as f64 },
        sentences,
        words,
        verbs,
        total_seconds,
    })
}

/// One dataset line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionSample {
    pub file_id: String,
    pub label: SampleLabel,
    pub caption: String,
    pub candidates: Vec<Candidate>,
    pub frames: Vec<u64>,
    #[serde(skip)]
    pub window: FrameWindow,
}

impl CaptionSample {
    /// Checks the per-sample invariants; `mentioned` are the full names used
    /// in the caption.
    pub fn validate<S: AsRef<str>>(&self, mentioned: &[S]) -> Result<(), String> {
        if self.caption.trim().is_empty() {
            return Err("empty caption".into());
        }
        for name in mentioned {
            if !self.candidates.iter().any(|c| c.name == name.as_ref()) {
                return Err(format!("{} is not a candidate", name.as_ref()));
            }
        }
        if self.frames.len() != FRAMES_PER_SAMPLE {
            return Err(format!("{} frames", self.frames.len()));
        }
        if self.frames.windows(2).any(|w| w[0] > w[1]) {
            return Err("frames decrease".into());
        }
        if self.frames.iter().any(|f| !self.window.contains(*f)) {
            return Err("frame outside window".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    pub sampling_mode: SamplingMode,
    pub seed: u64,
    pub fps: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            sampling_mode: SamplingMode::Midpoint,
            seed: 42,
            fps: 25.0,
        }
    }
}

#[derive(Debug, Default)]
pub struct Extraction {
    pub samples: Vec<CaptionSample>,
    pub durations_seconds: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn file_id(game_id: &str, seq: usize) -> String {
    format!("{game_id}_{seq:06}")
}

// FNV-1a, used to give every sample its own sampling stream.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Extracts samples game by game (in game id order); failures on individual
/// samples become warnings.
pub fn extract_dataset(graph: &KnowledgeGraph, opts: ExtractOptions) -> Result<Extraction, DatasetError> {
    let roster: Vec<String> = graph
        .nodes_of_kind(NodeKind::Name)
        .map(|(n, _)| n.key.clone())
        .collect();
    let games: Vec<NodeId> = graph.nodes_of_kind(NodeKind::Game).map(|(n, _)| n.clone()).collect();

    let per_game: Vec<Result<Extraction, DatasetError>> = games
        .par_iter()
        .map(|game| extract_game(graph, game, &roster, opts))
        .collect();

    let mut out = Extraction::default();
    for game in per_game {
        let game = game?;
        out.samples.extend(game.samples);
        out.durations_seconds.extend(game.durations_seconds);
        out.warnings.extend(game.warnings);
    }
    Ok(out)
}

fn extract_game(
    graph: &KnowledgeGraph,
    game: &NodeId,
    roster: &[String],
    opts: ExtractOptions,
) -> Result<Extraction, DatasetError> {
    let mut events = graph
        .neighbors(game, RelationKind::GameEvent)?
        .iter()
        .map(|e| event_from_graph(graph, &game.key, e))
        .collect::<Result<Vec<_>, _>>()?;
    events.sort_by_key(|e| e.seq);

    let (merged, mut warnings) = merge_shot_rebound(&events);
    let mut out = Extraction::default();
    for m in merged {
        let id = file_id(&m.shot.game_id, m.shot.seq);
        match build_sample(graph, &m, &id, roster, opts) {
            Ok(sample) => {
                out.durations_seconds.push(sample.window.len() as f64 / opts.fps);
                out.samples.push(sample);
            }
            Err(e) => warnings.push(format!("{id}: {e}")),
        }
    }
    out.warnings = warnings;
    Ok(out)
}

#[derive(Debug, Error)]
enum SampleError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("no frame window for the clip")]
    NoWindow,
    #[error("invalid sample: {0}")]
    Invalid(String),
}

fn build_sample(
    graph: &KnowledgeGraph,
    m: &MergedEvent,
    id: &str,
    roster: &[String],
    opts: ExtractOptions,
) -> Result<CaptionSample, SampleError> {
    let label = assign_label(m)?;
    let caption = rewrite_caption(m, roster)?;
    let candidates = candidate_players(m, graph)?;

    let shot_window = clip_window(graph, &event_key(&m.shot.game_id, m.shot.seq)).ok_or(SampleError::NoWindow)?;
    let window = match &m.rebound {
        Some(r) => match clip_window(graph, &event_key(&r.game_id, r.seq)) {
            Some(rw) => FrameWindow::new(
                shot_window.start_frame.min(rw.start_frame),
                shot_window.end_frame.max(rw.end_frame),
            ),
            None => shot_window,
        },
        None => shot_window,
    };
    let seed = opts.seed ^ stable_hash(id);
    let frames = sample_frame_indices(window.len(), FRAMES_PER_SAMPLE, opts.sampling_mode, seed)
        .into_iter()
        .map(|f| window.start_frame + f)
        .collect();

    let sample = CaptionSample {
        file_id: id.to_string(),
        label,
        caption,
        candidates,
        frames,
        window,
    };
    let mentioned: Vec<&str> = mentioned_names(m);
    sample.validate(&mentioned).map_err(SampleError::Invalid)?;
    Ok(sample)
}

fn mentioned_names(m: &MergedEvent) -> Vec<&str> {
    let shot = &m.shot.tuple;
    let mut names: Vec<&str> = shot.actor.full_name.as_deref().into_iter().collect();
    if shot.outcome == Some(Outcome::Make) {
        names.extend(shot.co_actor.as_ref().and_then(|c| c.full_name.as_deref()));
    }
    names.extend(m.rebound.as_ref().and_then(|r| r.tuple.actor.full_name.as_deref()));
    names
}

/// Label histogram, all nine labels present.
pub fn label_counts(samples: &[CaptionSample]) -> BTreeMap<SampleLabel, usize> {
    let mut counts: BTreeMap<SampleLabel, usize> = SampleLabel::ALL.iter().map(|l| (*l, 0)).collect();
    for s in samples {
        *counts.entry(s.label).or_default() += 1;
    }
    counts
}
