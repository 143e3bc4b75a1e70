//! Builds the knowledge graph from parsed play-by-play, a roster and fused
//! clock timelines.
//!
//! Per event the graph holds an `Event` node, its `Action` (the category), and
//! a `Video` clip node keyed like the event with `Time` and `Description`
//! nodes hanging off it. Players hang off their `Team` with `Name` and `Image`
//! nodes.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{locate_event_window, FrameWindow, FusedTimeline};
use crate::kgraph::{attrs, AttrValue, Attributes, GraphError, KnowledgeGraph, NodeId, NodeKind, RelationKind};
use crate::pbp::{expand_player_name, EventCategory, EventTuple, GameEvent, Outcome, PlayerRef, ReboundSide, ShotKind};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("roster line {line}: {message}")]
    BadRoster { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("event node {key}: {message}")]
    BadEventNode { key: String, message: String },
}

/// One roster line: a player, their team and a path to their image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub team: String,
    pub image: String,
}

pub fn read_roster(path: &Path) -> Result<Vec<RosterEntry>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_roster(&text)
}

pub fn parse_roster(text: &str) -> Result<Vec<RosterEntry>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: RosterEntry = serde_json::from_str(line).map_err(|e| IngestError::BadRoster {
            line: i + 1,
            message: e.to_string(),
        })?;
        if entry.name.trim().is_empty() || entry.team.trim().is_empty() {
            return Err(IngestError::BadRoster {
                line: i + 1,
                message: "name and team must be non-empty".into(),
            });
        }
        out.push(entry);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub pre_margin: u64,
    pub post_margin: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            pre_margin: crate::clock::DEFAULT_PRE_MARGIN,
            post_margin: crate::clock::DEFAULT_POST_MARGIN,
        }
    }
}

#[derive(Debug, Default)]
pub struct BuildOutput {
    pub graph: KnowledgeGraph,
    pub warnings: Vec<String>,
}

pub fn event_key(game_id: &str, seq: usize) -> String {
    format!("{game_id}:{seq:06}")
}

type Located<'a> = (&'a GameEvent, Option<FrameWindow>, Option<String>);

/// Builds the graph. `timelines` maps game id to its fused clock timeline;
/// games without one get clip nodes with no frame window.
pub fn build_graph(
    events: &[GameEvent],
    roster: &[RosterEntry],
    timelines: &HashMap<String, FusedTimeline>,
    opts: BuildOptions,
) -> Result<BuildOutput, IngestError> {
    let mut out = BuildOutput::default();
    let g = &mut out.graph;
    let names: Vec<&str> = roster.iter().map(|r| r.name.as_str()).collect();
    let team_of: HashMap<&str, &str> = roster.iter().map(|r| (r.name.as_str(), r.team.as_str())).collect();

    for r in roster {
        let team = NodeId::new(NodeKind::Team, r.team.as_str());
        let player = NodeId::new(NodeKind::Player, r.name.as_str());
        let name = NodeId::new(NodeKind::Name, r.name.as_str());
        let image = NodeId::new(NodeKind::Image, r.image.as_str());
        g.add_node(team.clone(), Attributes::new());
        g.add_node(player.clone(), attrs([("team", r.team.as_str())]));
        g.add_node(name.clone(), Attributes::new());
        g.add_node(image.clone(), attrs([("path", r.image.as_str())]));
        g.relate(RelationKind::TeamPlayer, &team, &player)?;
        g.relate(RelationKind::PlayerName, &player, &name)?;
        g.relate(RelationKind::PlayerImage, &player, &image)?;
    }

    let mut by_game: BTreeMap<&str, Vec<&GameEvent>> = BTreeMap::new();
    for e in events {
        by_game.entry(e.game_id.as_str()).or_default().push(e);
    }

    // Window lookup is independent per game.
    let per_game: Vec<(&str, Vec<Located>)> = by_game
        .into_par_iter()
        .map(|(game, evs)| {
            let timeline = timelines.get(game);
            let located = evs
                .into_iter()
                .map(|e| match timeline {
                    None => (e, None, None),
                    Some(t) => {
                        match locate_event_window(e.period, e.tuple.clock_seconds, t, opts.pre_margin, opts.post_margin)
                        {
                            Ok(w) => (e, Some(w), None),
                            Err(err) => (e, None, Some(format!("{}: {err}", event_key(game, e.seq)))),
                        }
                    }
                })
                .collect();
            (game, located)
        })
        .collect();

    for (game, located) in per_game {
        let game_node = NodeId::new(NodeKind::Game, game);
        g.add_node(game_node.clone(), Attributes::new());
        if !timelines.contains_key(game) {
            out.warnings
                .push(format!("game {game}: no clock stream, clips have no frame window"));
        }
        for (e, window, warning) in located {
            out.warnings.extend(warning);
            let key = event_key(game, e.seq);
            let mut tuple = e.tuple.clone();
            for p in std::iter::once(&mut tuple.actor).chain(tuple.co_actor.as_mut()) {
                resolve(p, &names, &team_of, &key, tuple.category, &mut out.warnings);
            }

            let event = NodeId::new(NodeKind::Event, key.as_str());
            let action = NodeId::new(NodeKind::Action, tuple.category.as_str());
            let video = NodeId::new(NodeKind::Video, key.as_str());
            let time = NodeId::new(NodeKind::Time, key.as_str());
            let desc = NodeId::new(NodeKind::Description, key.as_str());

            let mut event_attrs = tuple_attributes(&tuple);
            event_attrs.insert("period".into(), AttrValue::Int(i64::from(e.period)));
            event_attrs.insert("seq".into(), AttrValue::Int(e.seq as i64));
            g.add_node(event.clone(), event_attrs);
            g.add_node(action.clone(), Attributes::new());
            let mut video_attrs = attrs([("game_id", game)]);
            if let Some(w) = window {
                video_attrs.insert("start_frame".into(), AttrValue::Int(w.start_frame as i64));
                video_attrs.insert("end_frame".into(), AttrValue::Int(w.end_frame as i64));
            }
            g.add_node(video.clone(), video_attrs);
            g.add_node(
                time.clone(),
                attrs([
                    ("period", AttrValue::Int(i64::from(e.period))),
                    ("clock_seconds", AttrValue::Float(tuple.clock_seconds)),
                ]),
            );
            g.add_node(desc.clone(), attrs([("text", e.description.as_str())]));

            g.relate(RelationKind::GameEvent, &game_node, &event)?;
            g.relate(RelationKind::EventAction, &event, &action)?;
            g.relate(RelationKind::GameVideo, &game_node, &video)?;
            g.relate(RelationKind::VideoTime, &video, &time)?;
            g.relate(RelationKind::VideoDescription, &video, &desc)?;
        }
    }
    Ok(out)
}

fn resolve(
    p: &mut PlayerRef,
    names: &[&str],
    team_of: &HashMap<&str, &str>,
    key: &str,
    category: EventCategory,
    warnings: &mut Vec<String>,
) {
    match expand_player_name(&p.surface_form, names) {
        Ok(full) => {
            p.team_id = team_of.get(full.as_str()).map(|t| t.to_string());
            p.full_name = Some(full);
        }
        // timeouts name a team or an official, not a player
        Err(_) if category == EventCategory::Timeout => {}
        Err(e) => warnings.push(format!("{key}: {e}")),
    }
}

fn tuple_attributes(t: &EventTuple) -> Attributes {
    let mut a = attrs([
        ("category", AttrValue::from(t.category.as_str())),
        ("clock_seconds", AttrValue::Float(t.clock_seconds)),
    ]);
    let mut player = |prefix: &str, p: &PlayerRef| {
        a.insert(prefix.to_string(), p.surface_form.as_str().into());
        if let Some(n) = &p.full_name {
            a.insert(format!("{prefix}_name"), n.as_str().into());
        }
        if let Some(team) = &p.team_id {
            a.insert(format!("{prefix}_team"), team.as_str().into());
        }
    };
    player("actor", &t.actor);
    if let Some(co) = &t.co_actor {
        player("co_actor", co);
    }
    if let Some(o) = t.outcome {
        a.insert(
            "outcome".into(),
            (if o == Outcome::Make { "make" } else { "miss" }).into(),
        );
    }
    if let Some(k) = t.shot_kind {
        a.insert("shot_kind".into(), k.as_str().into());
    }
    if let Some(d) = t.distance_ft {
        a.insert("distance_ft".into(), AttrValue::Int(i64::from(d)));
    }
    if let Some(s) = t.rebound_side {
        a.insert("rebound_side".into(), s.as_str().into());
    }
    a
}

/// Reconstructs a [`GameEvent`] from its event node, reading the description
/// through the clip's `video_description` relation.
pub fn event_from_graph(graph: &KnowledgeGraph, game_id: &str, event: &NodeId) -> Result<GameEvent, IngestError> {
    let bad = |message: &str| IngestError::BadEventNode {
        key: event.key.clone(),
        message: message.to_string(),
    };
    let a = graph.attributes(event).ok_or_else(|| bad("missing node"))?;
    let s = |name: &str| a.get(name).and_then(AttrValue::as_str);
    let player = |prefix: &str| -> Option<PlayerRef> {
        Some(PlayerRef {
            surface_form: s(prefix)?.to_string(),
            full_name: s(&format!("{prefix}_name")).map(str::to_string),
            team_id: s(&format!("{prefix}_team")).map(str::to_string),
        })
    };
    let category: EventCategory = s("category")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| bad("missing category"))?;
    let tuple = EventTuple {
        category,
        actor: player("actor").ok_or_else(|| bad("missing actor"))?,
        co_actor: player("co_actor"),
        outcome: match s("outcome") {
            Some("make") => Some(Outcome::Make),
            Some("miss") => Some(Outcome::Miss),
            _ => None,
        },
        shot_kind: s("shot_kind").and_then(|k| ShotKind::ALL.into_iter().find(|x| x.as_str() == k)),
        distance_ft: a.get("distance_ft").and_then(AttrValue::as_i64).map(|d| d as u32),
        rebound_side: match s("rebound_side") {
            Some("offensive") => Some(ReboundSide::Offensive),
            Some("defensive") => Some(ReboundSide::Defensive),
            _ => None,
        },
        clock_seconds: a
            .get("clock_seconds")
            .and_then(AttrValue::as_f64)
            .ok_or_else(|| bad("missing clock"))?,
    };
    let video = NodeId::new(NodeKind::Video, event.key.as_str());
    let description = match graph.neighbors(&video, RelationKind::VideoDescription) {
        Ok(d) => d
            .first()
            .and_then(|d| graph.attr(d, "text"))
            .and_then(AttrValue::as_str)
            .unwrap_or_default()
            .to_string(),
        Err(_) => String::new(),
    };
    Ok(GameEvent {
        game_id: game_id.to_string(),
        period: a
            .get("period")
            .and_then(AttrValue::as_i64)
            .ok_or_else(|| bad("missing period"))? as u32,
        seq: a
            .get("seq")
            .and_then(AttrValue::as_i64)
            .ok_or_else(|| bad("missing seq"))? as usize,
        description,
        tuple,
    })
}

/// Frame window stored on an event's clip node, if it was aligned.
pub fn clip_window(graph: &KnowledgeGraph, event_key: &str) -> Option<FrameWindow> {
    let video = NodeId::new(NodeKind::Video, event_key);
    let start = graph.attr(&video, "start_frame")?.as_i64()?;
    let end = graph.attr(&video, "end_frame")?.as_i64()?;
    (0 <= start && start <= end).then(|| FrameWindow::new(start as u64, end as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbp::{parse_pbp_str, KeywordTable};

    const ROSTER: &str = r#"{"name":"Brandon Ingram","team":"NOP","image":"images/brandon_ingram.jpg"}
{"name":"Justise Winslow","team":"POR","image":"images/justise_winslow.jpg"}
"#;

    #[test]
    fn builds_and_reconstructs_events() {
        let pbp = [
            r#"{"game_id":"g1","period":1,"clock":"11:41","description":"B. Ingram misses 2-pt jump shot from 19 ft"}"#,
            r#"{"game_id":"g1","period":1,"clock":"11:39","description":"Defensive rebound by J. Winslow"}"#,
        ]
        .join("\n");
        let parsed = parse_pbp_str(&pbp, &KeywordTable::default());
        let roster = parse_roster(ROSTER).unwrap();
        let out = build_graph(&parsed.events, &roster, &HashMap::new(), BuildOptions::default()).unwrap();
        let g = &out.graph;
        // 2 teams, 2 players, 2 names, 2 images, 1 game, 2 events, 2 actions, 2×(video, time, description)
        assert_eq!(g.node_count(), 2 + 2 + 2 + 2 + 1 + 2 + 2 + 6);
        assert_eq!(g.relation_count(), 6 + 2 * 5);

        let key = event_key("g1", 0);
        let e = event_from_graph(g, "g1", &NodeId::new(NodeKind::Event, key.as_str())).unwrap();
        assert_eq!(e.description, "B. Ingram misses 2-pt jump shot from 19 ft");
        assert_eq!(e.tuple.actor.full_name.as_deref(), Some("Brandon Ingram"));
        assert_eq!(e.tuple.actor.team_id.as_deref(), Some("NOP"));
        assert_eq!(e.tuple.shot_kind, Some(ShotKind::TwoPtJump));
        assert_eq!(e.tuple.distance_ft, Some(19));
        let mut expected = parsed.events[0].clone();
        expected.tuple.actor.full_name = Some("Brandon Ingram".into());
        expected.tuple.actor.team_id = Some("NOP".into());
        assert_eq!(e, expected);
        assert!(clip_window(g, &key).is_none());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn roster_errors() {
        assert!(matches!(
            parse_roster("{\"name\":\"x\"}"),
            Err(IngestError::BadRoster { line: 1, .. })
        ));
        assert!(parse_roster(r#"{"name":"","team":"A","image":"i"}"#).is_err());
    }
}
