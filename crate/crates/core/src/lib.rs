//! Play-by-play parsing, a typed sports knowledge graph, scoreboard clock
//! alignment, an entity-aware captioning dataset builder and caption metrics.

pub mod cli;
pub mod clock;
pub mod dataset;
pub mod ingest;
pub mod io;
pub mod kgraph;
pub mod metrics;
pub mod pbp;
