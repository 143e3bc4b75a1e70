//! Multimodal game knowledge graph.
//!
//! Nodes are identified by `(kind, key)` and carry flat scalar attribute maps.
//! Images are referenced by path attribute, never embedded. Relations are typed
//! and directed; each relation kind fixes the kinds of both endpoints.
//!
//! The on-disk format (`.kg.jsonl`) is one header line, then one line per node
//! sorted by kind and key, then one line per relation in sorted order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pbp::EventCategory;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("relation endpoint {0} does not exist")]
    DanglingEndpoint(NodeId),
    #[error("{kind} cannot join {from} to {to}")]
    EndpointKindMismatch {
        kind: RelationKind,
        from: NodeId,
        to: NodeId,
    },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("graph schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("corrupt graph file at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Game,
    Event,
    Player,
    Team,
    Video,
    Image,
    Name,
    Action,
    Time,
    Description,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub key: String,
}

impl NodeId {
    pub fn new(kind: NodeKind, key: impl Into<String>) -> Self {
        Self { kind, key: key.into() }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}", self.kind, self.key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    EventAction,
    VideoTime,
    VideoDescription,
    TeamPlayer,
    PlayerName,
    PlayerImage,
    GameEvent,
    GameVideo,
}

impl RelationKind {
    pub const ALL: [RelationKind; 8] = [
        RelationKind::EventAction,
        RelationKind::VideoTime,
        RelationKind::VideoDescription,
        RelationKind::TeamPlayer,
        RelationKind::PlayerName,
        RelationKind::PlayerImage,
        RelationKind::GameEvent,
        RelationKind::GameVideo,
    ];

    /// Required `(from, to)` node kinds.
    pub fn endpoints(self) -> (NodeKind, NodeKind) {
        use NodeKind::*;
        match self {
            RelationKind::EventAction => (Event, Action),
            RelationKind::VideoTime => (Video, Time),
            RelationKind::VideoDescription => (Video, Description),
            RelationKind::TeamPlayer => (Team, Player),
            RelationKind::PlayerName => (Player, Name),
            RelationKind::PlayerImage => (Player, Image),
            RelationKind::GameEvent => (Game, Event),
            RelationKind::GameVideo => (Game, Video),
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub from: NodeId,
    pub to: NodeId,
}

impl Relation {
    pub fn new(kind: RelationKind, from: NodeId, to: NodeId) -> Self {
        Self { kind, from, to }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl AttrValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            AttrValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Float(f) => Some(*f),
            AttrValue::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_string())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<i64> for AttrValue {
    fn from(i: i64) -> Self {
        AttrValue::Int(i)
    }
}

impl From<f64> for AttrValue {
    fn from(f: f64) -> Self {
        AttrValue::Float(f)
    }
}

impl From<bool> for AttrValue {
    fn from(b: bool) -> Self {
        AttrValue::Bool(b)
    }
}

pub type Attributes = BTreeMap<String, AttrValue>;

/// Builds an attribute map from `(key, value)` pairs.
pub fn attrs<I, K, V>(pairs: I) -> Attributes
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<AttrValue>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

type AdjacencyKey = (NodeId, RelationKind);

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, Attributes>,
    relations: BTreeSet<Relation>,
    outgoing: HashMap<AdjacencyKey, BTreeSet<NodeId>>,
    incoming: HashMap<AdjacencyKey, BTreeSet<NodeId>>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.relations == other.relations
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Inserts a node, or merges `attributes` into an existing one (last write wins).
    pub fn add_node(&mut self, node: NodeId, attributes: Attributes) -> &mut Self {
        self.nodes.entry(node).or_default().extend(attributes);
        self
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn attributes(&self, node: &NodeId) -> Option<&Attributes> {
        self.nodes.get(node)
    }

    pub fn attr(&self, node: &NodeId, name: &str) -> Option<&AttrValue> {
        self.nodes.get(node)?.get(name)
    }

    /// Adds a relation; both endpoints must already exist and match the kind.
    pub fn add_relation(&mut self, relation: Relation) -> Result<&mut Self, GraphError> {
        for end in [&relation.from, &relation.to] {
            if !self.nodes.contains_key(end) {
                return Err(GraphError::DanglingEndpoint(end.clone()));
            }
        }
        let (from_kind, to_kind) = relation.kind.endpoints();
        if relation.from.kind != from_kind || relation.to.kind != to_kind {
            return Err(GraphError::EndpointKindMismatch {
                kind: relation.kind,
                from: relation.from,
                to: relation.to,
            });
        }
        self.outgoing
            .entry((relation.from.clone(), relation.kind))
            .or_default()
            .insert(relation.to.clone());
        self.incoming
            .entry((relation.to.clone(), relation.kind))
            .or_default()
            .insert(relation.from.clone());
        self.relations.insert(relation);
        Ok(self)
    }

    pub fn relate(&mut self, kind: RelationKind, from: &NodeId, to: &NodeId) -> Result<&mut Self, GraphError> {
        self.add_relation(Relation::new(kind, from.clone(), to.clone()))
    }

    /// Targets of `kind` relations leaving `node`, sorted by key.
    pub fn neighbors(&self, node: &NodeId, kind: RelationKind) -> Result<Vec<NodeId>, GraphError> {
        self.adjacent(&self.outgoing, node, kind)
    }

    /// Sources of `kind` relations entering `node`, sorted by key.
    pub fn incoming(&self, node: &NodeId, kind: RelationKind) -> Result<Vec<NodeId>, GraphError> {
        self.adjacent(&self.incoming, node, kind)
    }

    fn adjacent(
        &self,
        index: &HashMap<AdjacencyKey, BTreeSet<NodeId>>,
        node: &NodeId,
        kind: RelationKind,
    ) -> Result<Vec<NodeId>, GraphError> {
        if !self.nodes.contains_key(node) {
            return Err(GraphError::UnknownNode(node.clone()));
        }
        Ok(index
            .get(&(node.clone(), kind))
            .map(|set| set.iter().cloned().collect())
            .unwrap_or_default())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, &Attributes)> {
        self.nodes.iter()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = (&NodeId, &Attributes)> {
        self.nodes.iter().filter(move |(id, _)| id.kind == kind)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    /// Event counts per category; every category is present, zero if unused.
    pub fn event_category_counts(&self) -> BTreeMap<EventCategory, usize> {
        let mut counts: BTreeMap<EventCategory, usize> = EventCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for (_, a) in self.nodes_of_kind(NodeKind::Event) {
            if let Some(cat) = a
                .get("category")
                .and_then(AttrValue::as_str)
                .and_then(|s| s.parse().ok())
            {
                *counts.entry(cat).or_default() += 1;
            }
        }
        counts
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &GraphLine| {
            out.push_str(&serde_json::to_string(line).expect("graph lines serialize"));
            out.push('\n');
        };
        push(&GraphLine::Header {
            schema_version: SCHEMA_VERSION,
        });
        for (id, a) in &self.nodes {
            push(&GraphLine::Node {
                kind: id.kind,
                key: id.key.clone(),
                attrs: a.clone(),
            });
        }
        for r in &self.relations {
            push(&GraphLine::Relation(r.clone()));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let corrupt = |line: usize, message: String| GraphError::Corrupt { line, message };
        let (i, first) = lines.next().ok_or_else(|| corrupt(1, "missing header".into()))?;
        match serde_json::from_str::<GraphLine>(first) {
            Ok(GraphLine::Header { schema_version }) if schema_version == SCHEMA_VERSION => {}
            Ok(GraphLine::Header { schema_version }) => {
                return Err(GraphError::SchemaVersionMismatch {
                    found: schema_version,
                    expected: SCHEMA_VERSION,
                })
            }
            Ok(_) => return Err(corrupt(i + 1, "first line is not a header".into())),
            Err(e) => return Err(corrupt(i + 1, e.to_string())),
        }
        let mut graph = KnowledgeGraph::new();
        for (i, line) in lines {
            match serde_json::from_str::<GraphLine>(line).map_err(|e| corrupt(i + 1, e.to_string()))? {
                GraphLine::Header { .. } => return Err(corrupt(i + 1, "duplicate header".into())),
                GraphLine::Node { kind, key, attrs } => {
                    graph.add_node(NodeId::new(kind, key), attrs);
                }
                GraphLine::Relation(r) => {
                    graph.add_relation(r)?;
                }
            }
        }
        Ok(graph)
    }

    /// Writes the graph atomically (temp file in the same directory, then rename).
    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        crate::io::write_atomic(path, self.to_jsonl().as_bytes()).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_jsonl(&text)
    }

    /// Writes to any sink without the atomic rename.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum GraphLine {
    Header {
        schema_version: u32,
    },
    Node {
        kind: NodeKind,
        key: String,
        attrs: Attributes,
    },
    Relation(Relation),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn player(name: &str) -> NodeId {
        NodeId::new(NodeKind::Player, name)
    }

    #[test]
    fn add_node_is_idempotent_and_merges() {
        let mut g = KnowledgeGraph::new();
        g.add_node(player("Justise Winslow"), attrs([("team", "POR")]));
        g.add_node(player("Justise Winslow"), attrs([("team", "MIA"), ("pos", "F")]));
        assert_eq!(g.node_count(), 1);
        assert_eq!(
            g.attr(&player("Justise Winslow"), "team").unwrap().as_str(),
            Some("MIA")
        );
        assert_eq!(g.attr(&player("Justise Winslow"), "pos").unwrap().as_str(), Some("F"));

        let img = NodeId::new(NodeKind::Image, "images/justise_winslow.jpg");
        g.add_node(img.clone(), attrs([("path", "images/justise_winslow.jpg")]));
        assert_eq!(
            g.attr(&img, "path").unwrap().as_str(),
            Some("images/justise_winslow.jpg")
        );
    }

    #[test]
    fn relations_and_neighbors() {
        let mut g = KnowledgeGraph::new();
        let team = NodeId::new(NodeKind::Team, "NOP");
        g.add_node(team.clone(), Attributes::new());
        g.add_node(player("Brandon Ingram"), Attributes::new());
        g.add_node(player("Herbert Jones"), Attributes::new());
        g.relate(RelationKind::TeamPlayer, &team, &player("Herbert Jones"))
            .unwrap();
        g.relate(RelationKind::TeamPlayer, &team, &player("Brandon Ingram"))
            .unwrap();
        g.relate(RelationKind::TeamPlayer, &team, &player("Brandon Ingram"))
            .unwrap();
        assert_eq!(g.relation_count(), 2);
        assert_eq!(
            g.neighbors(&team, RelationKind::TeamPlayer).unwrap(),
            [player("Brandon Ingram"), player("Herbert Jones")]
        );
        assert_eq!(
            g.incoming(&player("Brandon Ingram"), RelationKind::TeamPlayer).unwrap(),
            std::slice::from_ref(&team)
        );
        assert!(g
            .neighbors(&player("Brandon Ingram"), RelationKind::PlayerName)
            .unwrap()
            .is_empty());
        assert!(matches!(
            g.neighbors(&player("Nobody"), RelationKind::TeamPlayer),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn rejects_dangling_and_mistyped_relations() {
        let mut g = KnowledgeGraph::new();
        let team = NodeId::new(NodeKind::Team, "NOP");
        g.add_node(team.clone(), Attributes::new());
        assert!(matches!(
            g.relate(RelationKind::TeamPlayer, &team, &player("Ghost")),
            Err(GraphError::DanglingEndpoint(_))
        ));
        g.add_node(player("Ghost"), Attributes::new());
        assert!(matches!(
            g.relate(RelationKind::PlayerName, &team, &player("Ghost")),
            Err(GraphError::EndpointKindMismatch { .. })
        ));
        assert_eq!(g.relation_count(), 0);
    }

    #[test]
    fn category_counts() {
        let mut g = KnowledgeGraph::new();
        assert!(g.event_category_counts().values().all(|&c| c == 0));
        assert_eq!(g.event_category_counts().len(), 9);
        g.add_node(NodeId::new(NodeKind::Event, "e1"), attrs([("category", "Shot")]));
        g.add_node(NodeId::new(NodeKind::Event, "e2"), attrs([("category", "Shot")]));
        g.add_node(NodeId::new(NodeKind::Event, "e3"), attrs([("category", "Foul")]));
        let counts = g.event_category_counts();
        assert_eq!(counts[&EventCategory::Shot], 2);
        assert_eq!(counts[&EventCategory::Foul], 1);
        assert_eq!(counts.values().sum::<usize>(), 3);
    }

    #[test]
    fn jsonl_round_trip_and_errors() {
        let mut g = KnowledgeGraph::new();
        let team = NodeId::new(NodeKind::Team, "NOP");
        g.add_node(team.clone(), attrs([("name", "Pelicans")]));
        g.add_node(
            player("Brandon Ingram"),
            attrs([("number", AttrValue::Int(14)), ("height", AttrValue::Float(2.03))]),
        );
        g.relate(RelationKind::TeamPlayer, &team, &player("Brandon Ingram"))
            .unwrap();
        let text = g.to_jsonl();
        assert_eq!(KnowledgeGraph::from_jsonl(&text).unwrap(), g);
        assert!(text.starts_with(r#"{"type":"header","schema_version":1}"#));

        let newer = text.replacen("\"schema_version\":1", "\"schema_version\":2", 1);
        assert!(matches!(
            KnowledgeGraph::from_jsonl(&newer),
            Err(GraphError::SchemaVersionMismatch { found: 2, .. })
        ));
        let truncated = &text[..text.len() - 10];
        assert!(matches!(
            KnowledgeGraph::from_jsonl(truncated),
            Err(GraphError::Corrupt { .. })
        ));
        assert!(KnowledgeGraph::from_jsonl("").is_err());
    }
}
