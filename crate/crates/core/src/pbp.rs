//! Play-by-play parsing.
//!
//! Raw play-by-play lines are classified by keyword into one of nine event
//! categories and then split into slot tuples (actor, co-actor, outcome, shot
//! kind, distance, rebound side) using the position of the keyword and a few
//! fixed markers such as `drawn by` or `assist by`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{parse_clock, ClockError};

const DEFAULT_KEYWORDS: &str = include_str!("../data/keywords.tsv");

#[derive(Debug, Error)]
pub enum PbpError {
    #[error("empty event description")]
    EmptyDescription,
    #[error("no keyword matches description {0:?}")]
    UnclassifiableDescription(String),
    #[error("malformed {slot} slot in {description:?}")]
    MalformedSlot { slot: &'static str, description: String },
    #[error("no roster entry matches {0:?}")]
    NoMatch(String),
    #[error("{surface:?} matches several roster entries: {candidates:?}")]
    AmbiguousMatch { surface: String, candidates: Vec<String> },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error("keyword table line {line}: {message}")]
    KeywordTable { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The nine play-by-play event categories, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventCategory {
    Foul,
    Rebound,
    Violation,
    Timeout,
    Freethrow,
    EnterGame,
    Turnover,
    JumpBall,
    Shot,
}

impl EventCategory {
    pub const ALL: [EventCategory; 9] = [
        EventCategory::Foul,
        EventCategory::Rebound,
        EventCategory::Violation,
        EventCategory::Timeout,
        EventCategory::Freethrow,
        EventCategory::EnterGame,
        EventCategory::Turnover,
        EventCategory::JumpBall,
        EventCategory::Shot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventCategory::Foul => "Foul",
            EventCategory::Rebound => "Rebound",
            EventCategory::Violation => "Violation",
            EventCategory::Timeout => "Timeout",
            EventCategory::Freethrow => "Freethrow",
            EventCategory::EnterGame => "EnterGame",
            EventCategory::Turnover => "Turnover",
            EventCategory::JumpBall => "JumpBall",
            EventCategory::Shot => "Shot",
        }
    }
}

impl fmt::Display for EventCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventCategory::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown event category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Make,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShotKind {
    #[serde(rename = "2pt_jump")]
    TwoPtJump,
    #[serde(rename = "3pt_jump")]
    ThreePtJump,
    #[serde(rename = "layup")]
    Layup,
}

impl ShotKind {
    pub const ALL: [ShotKind; 3] = [ShotKind::TwoPtJump, ShotKind::ThreePtJump, ShotKind::Layup];

    pub fn as_str(self) -> &'static str {
        match self {
            ShotKind::TwoPtJump => "2pt_jump",
            ShotKind::ThreePtJump => "3pt_jump",
            ShotKind::Layup => "layup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReboundSide {
    Offensive,
    Defensive,
}

impl ReboundSide {
    pub fn as_str(self) -> &'static str {
        match self {
            ReboundSide::Offensive => "offensive",
            ReboundSide::Defensive => "defensive",
        }
    }
}

/// A player as written in the play-by-play, optionally resolved against a roster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerRef {
    pub surface_form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<String>,
}

impl PlayerRef {
    pub fn new(surface_form: impl Into<String>) -> Self {
        Self {
            surface_form: surface_form.into(),
            full_name: None,
            team_id: None,
        }
    }

    /// The resolved name if there is one, else the surface form.
    pub fn display_name(&self) -> &str {
        self.full_name.as_deref().unwrap_or(&self.surface_form)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTuple {
    pub category: EventCategory,
    pub actor: PlayerRef,
    pub co_actor: Option<PlayerRef>,
    pub outcome: Option<Outcome>,
    pub shot_kind: Option<ShotKind>,
    pub distance_ft: Option<u32>,
    pub rebound_side: Option<ReboundSide>,
    pub clock_seconds: f64,
}

/// One line of the play-by-play JSONL input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub game_id: String,
    pub period: u32,
    pub clock: String,
    pub description: String,
    #[serde(default)]
    pub score: Option<String>,
}

/// A parsed event together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GameEvent {
    pub game_id: String,
    pub period: u32,
    /// Zero-based position of the record in its source file.
    pub seq: usize,
    pub description: String,
    pub tuple: EventTuple,
}

/// Data-driven keyword → category mapping.
#[derive(Debug, Clone)]
pub struct KeywordTable {
    entries: Vec<(String, EventCategory)>,
}

impl Default for KeywordTable {
    fn default() -> Self {
        Self::from_tsv(DEFAULT_KEYWORDS).expect("bundled keyword table is valid")
    }
}

impl KeywordTable {
    /// Parses `keyword<TAB>category` lines. Blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, PbpError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (keyword, category) = line.split_once('\t').ok_or_else(|| PbpError::KeywordTable {
                line: i + 1,
                message: "expected keyword<TAB>category".into(),
            })?;
            let keyword = keyword.trim().to_lowercase();
            if keyword.is_empty() {
                return Err(PbpError::KeywordTable {
                    line: i + 1,
                    message: "empty keyword".into(),
                });
            }
            let category = category
                .trim()
                .parse()
                .map_err(|message| PbpError::KeywordTable { line: i + 1, message })?;
            entries.push((keyword, category));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, PbpError> {
        let text = fs::read_to_string(path).map_err(|source| PbpError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Categories covered by at least one keyword.
    pub fn categories(&self) -> Vec<EventCategory> {
        let mut cats: Vec<_> = self.entries.iter().map(|(_, c)| *c).collect();
        cats.sort();
        cats.dedup();
        cats
    }
}

/// Classifies a description by its longest matching keyword.
pub fn classify_event(description: &str, table: &KeywordTable) -> Result<EventCategory, PbpError> {
    if description.trim().is_empty() {
        return Err(PbpError::EmptyDescription);
    }
    let lower = description.to_lowercase();
    table
        .entries
        .iter()
        .filter(|(kw, _)| lower.contains(kw.as_str()))
        // longest keyword first, then table order of the category
        .min_by(|(ka, ca), (kb, cb)| kb.len().cmp(&ka.len()).then(ca.cmp(cb)))
        .map(|(_, c)| *c)
        .ok_or_else(|| PbpError::UnclassifiableDescription(description.to_string()))
}

/// Splits a description into its event tuple.
pub fn parse_event(description: &str, category: EventCategory, clock_seconds: f64) -> Result<EventTuple, PbpError> {
    let desc = description.trim();
    if desc.is_empty() {
        return Err(PbpError::EmptyDescription);
    }
    // ASCII lowercasing keeps byte offsets aligned with `desc`.
    let lower = desc.to_ascii_lowercase();
    let malformed = |slot| PbpError::MalformedSlot {
        slot,
        description: desc.to_string(),
    };

    let mut tuple = EventTuple {
        category,
        actor: PlayerRef::new(""),
        co_actor: None,
        outcome: None,
        shot_kind: None,
        distance_ft: None,
        rebound_side: None,
        clock_seconds,
    };

    match category {
        EventCategory::Shot | EventCategory::Freethrow => {
            let (verb_at, verb_len, outcome) = find_outcome(&lower).ok_or_else(|| malformed("outcome"))?;
            tuple.actor = name_slot(&desc[..verb_at]).ok_or_else(|| malformed("actor"))?;
            tuple.outcome = Some(outcome);
            if category == EventCategory::Shot {
                let rest = &lower[verb_at + verb_len..];
                tuple.shot_kind = Some(shot_kind(rest).ok_or_else(|| malformed("shot_kind"))?);
                tuple.distance_ft = distance_ft(rest);
                tuple.co_actor = paren_slot(desc, &lower, "assist by")?.or(paren_slot(desc, &lower, "block by")?);
            }
        }
        EventCategory::Foul | EventCategory::Violation | EventCategory::Turnover | EventCategory::Rebound => {
            let kw_at = match category {
                EventCategory::Foul => lower.find("foul"),
                EventCategory::Violation => lower.find("violation"),
                EventCategory::Turnover => lower.find("turnover"),
                _ => lower.find("rebound"),
            }
            .unwrap_or(0);
            let by_at = lower[kw_at..]
                .find(" by ")
                .map(|i| kw_at + i + " by ".len())
                .ok_or_else(|| malformed("actor"))?;
            let end = desc[by_at..].find(" (").map_or(desc.len(), |i| by_at + i);
            tuple.actor = name_slot(&desc[by_at..end]).ok_or_else(|| malformed("actor"))?;
            match category {
                EventCategory::Foul => tuple.co_actor = paren_slot(desc, &lower, "drawn by")?,
                EventCategory::Turnover => tuple.co_actor = paren_slot(desc, &lower, "steal by")?,
                EventCategory::Rebound => {
                    tuple.rebound_side = Some(if lower.contains("defensive") {
                        ReboundSide::Defensive
                    } else if lower.contains("offensive") {
                        ReboundSide::Offensive
                    } else {
                        return Err(malformed("rebound_side"));
                    });
                }
                _ => {}
            }
        }
        EventCategory::EnterGame => {
            let at = lower.find(" enters the game").ok_or_else(|| malformed("actor"))?;
            tuple.actor = name_slot(&desc[..at]).ok_or_else(|| malformed("actor"))?;
            if let Some(i) = lower[at..].find(" for ") {
                let start = at + i + " for ".len();
                tuple.co_actor = Some(name_slot(&desc[start..]).ok_or_else(|| malformed("co_actor"))?);
            }
        }
        EventCategory::JumpBall => {
            let start = lower
                .find("jump ball:")
                .map(|i| i + "jump ball:".len())
                .ok_or_else(|| malformed("actor"))?;
            let vs = lower[start..]
                .find(" vs")
                .map(|i| start + i)
                .ok_or_else(|| malformed("co_actor"))?;
            tuple.actor = name_slot(&desc[start..vs]).ok_or_else(|| malformed("actor"))?;
            let mut co_start = vs + " vs".len();
            if desc[co_start..].starts_with('.') {
                co_start += 1;
            }
            let co_end = desc[co_start..].find(" (").map_or(desc.len(), |i| co_start + i);
            tuple.co_actor = Some(name_slot(&desc[co_start..co_end]).ok_or_else(|| malformed("co_actor"))?);
        }
        EventCategory::Timeout => {
            let first = desc.split_whitespace().next().ok_or_else(|| malformed("actor"))?;
            tuple.actor = PlayerRef::new(first);
        }
    }
    Ok(tuple)
}

fn find_outcome(lower: &str) -> Option<(usize, usize, Outcome)> {
    let makes = lower.find(" makes ").map(|i| (i, " makes ".len(), Outcome::Make));
    let misses = lower.find(" misses ").map(|i| (i, " misses ".len(), Outcome::Miss));
    match (makes, misses) {
        (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
        (a, b) => a.or(b),
    }
}

fn shot_kind(rest: &str) -> Option<ShotKind> {
    let phrase = rest.split(" from ").next().unwrap_or(rest);
    let phrase = phrase.split(" (").next().unwrap_or(phrase);
    if phrase.contains("layup") {
        Some(ShotKind::Layup)
    } else if phrase.contains("3-pt") {
        Some(ShotKind::ThreePtJump)
    } else if phrase.contains("2-pt") {
        Some(ShotKind::TwoPtJump)
    } else {
        None
    }
}

/// Only the "from N ft" phrasing is recognised.
fn distance_ft(rest: &str) -> Option<u32> {
    let (_, after) = rest.split_once("from ")?;
    let (n, tail) = after.split_once(' ')?;
    if !tail.starts_with("ft") || n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    n.parse().ok()
}

fn name_slot(text: &str) -> Option<PlayerRef> {
    let name = text.trim().trim_end_matches(',').trim();
    (!name.is_empty()).then(|| PlayerRef::new(name))
}

/// Reads the name following `marker` inside a parenthetical, e.g. `(drawn by X)`.
/// Returns `Ok(None)` when the marker is absent.
fn paren_slot(desc: &str, lower: &str, marker: &str) -> Result<Option<PlayerRef>, PbpError> {
    let Some(at) = lower.find(marker) else {
        return Ok(None);
    };
    let start = at + marker.len();
    let end = desc[start..].find([')', ';']).map(|i| start + i);
    let slot = end.and_then(|end| name_slot(&desc[start..end]));
    slot.map(Some).ok_or_else(|| PbpError::MalformedSlot {
        slot: "co_actor",
        description: desc.to_string(),
    })
}

/// Resolves `"J. Winslow"` (or an already full name) against a roster.
pub fn expand_player_name<S: AsRef<str>>(surface: &str, roster: &[S]) -> Result<String, PbpError> {
    let surface = surface.trim();
    let mut matches: Vec<&str> = roster
        .iter()
        .map(AsRef::as_ref)
        .filter(|name| name.trim().to_lowercase() == surface.to_lowercase())
        .collect();

    if matches.is_empty() {
        if let Some((initial, surname)) = abbreviated(surface) {
            matches = roster
                .iter()
                .map(AsRef::as_ref)
                .filter(|name| {
                    let Some((first, rest)) = name.trim().split_once(char::is_whitespace) else {
                        return false;
                    };
                    let first_initial = first.chars().next().map(|c| c.to_lowercase().collect::<String>());
                    first_initial.as_deref() == Some(initial.as_str()) && rest.trim().to_lowercase() == surname
                })
                .collect();
        }
    }

    let mut distinct: Vec<String> = matches.iter().map(|m| m.trim().to_string()).collect();
    distinct.sort();
    distinct.dedup();
    match distinct.len() {
        0 => Err(PbpError::NoMatch(surface.to_string())),
        1 => Ok(distinct.remove(0)),
        _ => Err(PbpError::AmbiguousMatch {
            surface: surface.to_string(),
            candidates: distinct,
        }),
    }
}

/// `"J. Winslow"` → `("j", "winslow")`.
fn abbreviated(surface: &str) -> Option<(String, String)> {
    let (initial, surname) = surface.split_once(". ")?;
    let mut chars = initial.chars();
    let c = chars.next()?;
    if chars.next().is_some() || !c.is_alphabetic() || surname.trim().is_empty() {
        return None;
    }
    Some((c.to_lowercase().collect(), surname.trim().to_lowercase()))
}

/// A record that failed to parse, with its 1-based line number.
#[derive(Debug)]
pub struct RecordError {
    pub line: usize,
    pub error: PbpError,
}

#[derive(Debug, Default)]
pub struct PbpParse {
    pub events: Vec<GameEvent>,
    pub errors: Vec<RecordError>,
}

impl PbpParse {
    pub fn record_count(&self) -> usize {
        self.events.len() + self.errors.len()
    }
}

/// Parses one raw record into a game event.
pub fn parse_record(record: &RawRecord, seq: usize, table: &KeywordTable) -> Result<GameEvent, PbpError> {
    if record.period < 1 {
        return Err(PbpError::InvalidRecord(format!(
            "period must be >= 1, got {}",
            record.period
        )));
    }
    let category = classify_event(&record.description, table)?;
    let clock = parse_clock(&record.clock)?;
    let tuple = parse_event(&record.description, category, clock)?;
    Ok(GameEvent {
        game_id: record.game_id.clone(),
        period: record.period,
        seq,
        description: record.description.trim().to_string(),
        tuple,
    })
}

/// Parses a JSONL play-by-play file. Per-record failures are collected rather
/// than aborting; only an unreadable file is fatal.
pub fn parse_pbp_file(path: &Path, table: &KeywordTable) -> Result<PbpParse, PbpError> {
    let text = fs::read_to_string(path).map_err(|source| PbpError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_pbp_str(&text, table))
}

pub fn parse_pbp_str(text: &str, table: &KeywordTable) -> PbpParse {
    let mut out = PbpParse::default();
    let records = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    for (seq, (i, line)) in records.enumerate() {
        let parsed = serde_json::from_str::<RawRecord>(line)
            .map_err(|e| PbpError::InvalidRecord(e.to_string()))
            .and_then(|record| parse_record(&record, seq, table));
        match parsed {
            Ok(event) => out.events.push(event),
            Err(error) => out.errors.push(RecordError { line: i + 1, error }),
        }
    }
    out
}
