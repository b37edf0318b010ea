//! Importers from source-specific game formats into the interchange graph.
//!
//! Besides the interchange format itself, the importer understands a
//! "scene map" layout common to CYOA dumps:
//!
//! ```json
//! {"game_id": "g", "scenes": {"start": {"text": "...", "choices": [{"text": "...", "next": "end"}]}}}
//! ```
//!
//! Scenes are emitted in key order, choices in listed order.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::graph::{parse_graph, ChoiceEdge, GameGraph, GraphError, StoryNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SourceFormat {
    Interchange,
    SceneMap,
}

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("cannot detect source format: expected a top-level `nodes` or `scenes` key")]
    UnknownFormat,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Deserialize)]
struct SceneMapDocument {
    #[serde(default)]
    game_id: Option<String>,
    scenes: BTreeMap<String, Scene>,
}

#[derive(Deserialize)]
struct Scene {
    #[serde(default)]
    text: String,
    #[serde(default)]
    choices: Vec<SceneChoice>,
}

#[derive(Deserialize)]
struct SceneChoice {
    text: String,
    next: String,
}

fn malformed(e: serde_json::Error) -> GraphError {
    GraphError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Detects the layout of a document from its top-level keys.
pub fn detect_format(document: &[u8]) -> Result<SourceFormat, ImportError> {
    let value: serde_json::Value = serde_json::from_slice(document).map_err(malformed)?;
    match value {
        serde_json::Value::Object(map) if map.contains_key("nodes") => Ok(SourceFormat::Interchange),
        serde_json::Value::Object(map) if map.contains_key("scenes") => Ok(SourceFormat::SceneMap),
        _ => Err(ImportError::UnknownFormat),
    }
}

pub fn import_graph(
    document: &[u8],
    fallback_game_id: &str,
    format: Option<SourceFormat>,
) -> Result<GameGraph, ImportError> {
    let format = match format {
        Some(f) => f,
        None => detect_format(document)?,
    };
    match format {
        SourceFormat::Interchange => Ok(parse_graph(document, fallback_game_id)?),
        SourceFormat::SceneMap => {
            let doc: SceneMapDocument = serde_json::from_slice(document).map_err(malformed)?;
            let game_id = doc.game_id.unwrap_or_else(|| fallback_game_id.to_string());
            let mut nodes = Vec::with_capacity(doc.scenes.len());
            let mut edges = Vec::new();
            for (id, scene) in doc.scenes {
                for choice in scene.choices {
                    edges.push(ChoiceEdge {
                        source: id.clone(),
                        action_text: choice.text,
                        target: choice.next,
                    });
                }
                nodes.push(StoryNode { id, text: scene.text });
            }
            Ok(GameGraph::new(game_id, nodes, edges)?)
        }
    }
}
