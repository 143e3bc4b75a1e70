//! Scoreboard clock parsing, two-engine OCR fusion and event window lookup.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PRE_MARGIN: u64 = 60;
pub const DEFAULT_POST_MARGIN: u64 = 90;

#[derive(Debug, Error)]
pub enum ClockError {
    #[error("unparsable clock {0:?}")]
    UnparsableClock(String),
    #[error("no usable clock reading at or below {clock_seconds}s in period {period}")]
    NoUsableAnchor { period: u32, clock_seconds: f64 },
    #[error("{path} line {line}: {message}")]
    BadStream {
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

/// Parses a scoreboard clock: `"M:SS"` or the sub-minute `"SS.d"` form.
pub fn parse_clock(text: &str) -> Result<f64, ClockError> {
    let t = text.trim();
    let err = || ClockError::UnparsableClock(text.to_string());
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());

    if let Some((m, s)) = t.split_once(':') {
        if !digits(m) || m.len() > 2 || s.len() != 2 || !digits(s) {
            return Err(err());
        }
        let minutes: u32 = m.parse().map_err(|_| err())?;
        let seconds: u32 = s.parse().map_err(|_| err())?;
        if seconds > 59 {
            return Err(err());
        }
        return Ok(f64::from(60 * minutes + seconds));
    }
    if let Some((s, frac)) = t.split_once('.') {
        if !digits(s) || s.len() > 2 || !digits(frac) {
            return Err(err());
        }
        let value: f64 = t.parse().map_err(|_| err())?;
        if value >= 60.0 {
            return Err(err());
        }
        return Ok(value);
    }
    Err(err())
}

fn default_period() -> u32 {
    1
}

/// One sampled frame with the clock text each OCR engine produced for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockReading {
    pub frame_index: u64,
    #[serde(default = "default_period")]
    pub period: u32,
    #[serde(default)]
    pub engine_a_text: Option<String>,
    #[serde(default)]
    pub engine_b_text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Agreed,
    Single,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub frame_index: u64,
    pub period: u32,
    /// For conflicts this is engine A's value; conflicts never anchor a window.
    pub clock_seconds: f64,
    pub confidence: Confidence,
}

impl TimelineEntry {
    pub fn is_usable(&self) -> bool {
        self.confidence != Confidence::Conflict
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FusedTimeline {
    pub entries: Vec<TimelineEntry>,
    /// Highest frame index seen in the input stream.
    pub last_frame: u64,
}

impl FusedTimeline {
    pub fn usable(&self) -> impl Iterator<Item = &TimelineEntry> {
        self.entries.iter().filter(|e| e.is_usable())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameWindow {
    pub start_frame: u64,
    pub end_frame: u64,
}

impl FrameWindow {
    pub fn new(start_frame: u64, end_frame: u64) -> Self {
        debug_assert!(start_frame <= end_frame);
        Self { start_frame, end_frame }
    }

    /// Number of frames, both ends inclusive.
    pub fn len(&self) -> u64 {
        self.end_frame - self.start_frame + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, frame: u64) -> bool {
        (self.start_frame..=self.end_frame).contains(&frame)
    }
}

/// Fuses the two engine streams into a timeline.
///
/// Both engines parse and agree → `Agreed`; exactly one parses → `Single`;
/// both parse and disagree → `Conflict`. Readings neither engine could parse
/// are dropped, as are readings whose frame index does not increase.
/// Afterwards, each period's usable entries are reduced to their longest
/// non-increasing clock subsequence so a single misread cannot hide the rest
/// of the period.
pub fn fuse_ocr_streams(readings: &[ClockReading]) -> FusedTimeline {
    let mut entries = Vec::with_capacity(readings.len());
    let mut last_frame = None;
    for r in readings {
        if last_frame.is_some_and(|f| r.frame_index <= f) {
            continue;
        }
        last_frame = Some(r.frame_index);
        let a = r.engine_a_text.as_deref().and_then(|t| parse_clock(t).ok());
        let b = r.engine_b_text.as_deref().and_then(|t| parse_clock(t).ok());
        let (clock_seconds, confidence) = match (a, b) {
            (Some(a), Some(b)) if (a - b).abs() <= 1e-9 => (a, Confidence::Agreed),
            (Some(a), Some(_)) => (a, Confidence::Conflict),
            (Some(x), None) | (None, Some(x)) => (x, Confidence::Single),
            (None, None) => continue,
        };
        entries.push(TimelineEntry {
            frame_index: r.frame_index,
            period: r.period,
            clock_seconds,
            confidence,
        });
    }

    let mut keep = vec![true; entries.len()];
    let mut periods: Vec<u32> = entries.iter().map(|e| e.period).collect();
    periods.sort_unstable();
    periods.dedup();
    for period in periods {
        let idx: Vec<usize> = (0..entries.len())
            .filter(|&i| entries[i].period == period && entries[i].is_usable())
            .collect();
        let clocks: Vec<f64> = idx.iter().map(|&i| entries[i].clock_seconds).collect();
        let kept = longest_non_increasing(&clocks);
        let mut kept_iter = kept.into_iter().peekable();
        for (pos, &i) in idx.iter().enumerate() {
            if kept_iter.peek() == Some(&pos) {
                kept_iter.next();
            } else {
                keep[i] = false;
            }
        }
    }
    let mut keep_iter = keep.into_iter();
    entries.retain(|_| keep_iter.next().unwrap_or(true));

    FusedTimeline {
        entries,
        last_frame: last_frame.unwrap_or(0),
    }
}

/// Positions (ascending) of a longest non-increasing subsequence.
fn longest_non_increasing(values: &[f64]) -> Vec<usize> {
    // tails[k]: index of the smallest-magnitude ending value of a run of length k+1,
    // tracked on negated values so the run is non-decreasing.
    let mut tails: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; values.len()];
    for (i, &v) in values.iter().enumerate() {
        let x = -v;
        let pos = tails.partition_point(|&t| (-values[t]).total_cmp(&x) != Ordering::Greater);
        prev[i] = pos.checked_sub(1).map(|p| tails[p]);
        if pos == tails.len() {
            tails.push(i);
        } else {
            tails[pos] = i;
        }
    }
    let mut out = Vec::with_capacity(tails.len());
    let mut cur = tails.last().copied();
    while let Some(i) = cur {
        out.push(i);
        cur = prev[i];
    }
    out.reverse();
    out
}

/// Finds the frame window for an event: the anchor is the first usable entry of
/// the period whose clock is at or below the event clock.
pub fn locate_event_window(
    period: u32,
    event_clock: f64,
    timeline: &FusedTimeline,
    pre_margin: u64,
    post_margin: u64,
) -> Result<FrameWindow, ClockError> {
    let anchor = timeline
        .usable()
        .find(|e| e.period == period && e.clock_seconds <= event_clock + 1e-9)
        .ok_or(ClockError::NoUsableAnchor {
            period,
            clock_seconds: event_clock,
        })?;
    let last = timeline.last_frame.max(anchor.frame_index);
    let start = anchor.frame_index.saturating_sub(pre_margin);
    let end = anchor.frame_index.saturating_add(post_margin).min(last);
    Ok(FrameWindow::new(start, end))
}

/// Reads a JSONL stream of clock readings; frame indices must strictly increase.
pub fn read_ocr_stream(path: &Path) -> Result<Vec<ClockReading>, ClockError> {
    let text = fs::read_to_string(path).map_err(|source| ClockError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, message: String| ClockError::BadStream {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut readings: Vec<ClockReading> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ClockReading = serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
        if let Some(last) = readings.last() {
            if r.frame_index <= last.frame_index {
                return Err(bad(i + 1, format!("frame index {} does not increase", r.frame_index)));
            }
        }
        readings.push(r);
    }
    Ok(readings)
}
