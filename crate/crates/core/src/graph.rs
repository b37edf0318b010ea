//! Game graphs in the normalized interchange format and triplet extraction.
//!
//! One JSON document per game:
//!
//! ```json
//! {"game_id": "g", "nodes": [{"id": "a", "text": "..."}],
//!  "edges": [{"source": "a", "action": "...", "target": "b"}]}
//! ```
//!
//! Self-loops and parallel edges are accepted; filtering happens downstream.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryNode {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceEdge {
    pub source: String,
    #[serde(rename = "action")]
    pub action_text: String,
    pub target: String,
}

/// A validated game graph: node ids are unique and every edge endpoint exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameGraph {
    game_id: String,
    nodes: Vec<StoryNode>,
    edges: Vec<ChoiceEdge>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// `<node1; action; node2>` with the out-degree of node1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub game_id: String,
    pub source_id: String,
    pub target_id: String,
    pub prefix: String,
    pub action: String,
    pub postfix: String,
    pub source_out_degree: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("malformed graph document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: game_id must be non-empty")]
    EmptyGameId { location: String },
    #[error("nodes[{index}]: node id must be non-empty")]
    EmptyNodeId { index: usize },
    #[error("nodes[{index}]: duplicate node id `{id}` (first defined at nodes[{first}])")]
    DuplicateNode { id: String, index: usize, first: usize },
    #[error("edges[{index}].{field}: dangling reference to missing node `{id}`")]
    DanglingEdge {
        index: usize,
        field: &'static str,
        id: String,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    #[serde(default)]
    game_id: Option<String>,
    nodes: Vec<StoryNode>,
    #[serde(default)]
    edges: Vec<ChoiceEdge>,
}

impl GameGraph {
    /// Validates and builds a graph.
    pub fn new(
        game_id: impl Into<String>,
        nodes: Vec<StoryNode>,
        edges: Vec<ChoiceEdge>,
    ) -> Result<Self, GraphError> {
        let game_id = game_id.into();
        if game_id.is_empty() {
            return Err(GraphError::EmptyGameId {
                location: "game_id".into(),
            });
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.id.is_empty() {
                return Err(GraphError::EmptyNodeId { index: i });
            }
            if let Some(&first) = index.get(&node.id) {
                return Err(GraphError::DuplicateNode {
                    id: node.id.clone(),
                    index: i,
                    first,
                });
            }
            index.insert(node.id.clone(), i);
        }
        for (i, edge) in edges.iter().enumerate() {
            for (field, id) in [("source", &edge.source), ("target", &edge.target)] {
                if !index.contains_key(id) {
                    return Err(GraphError::DanglingEdge {
                        index: i,
                        field,
                        id: id.clone(),
                    });
                }
            }
        }
        Ok(GameGraph {
            game_id,
            nodes,
            edges,
            index,
        })
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn nodes(&self) -> &[StoryNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[ChoiceEdge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&StoryNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    /// Number of edges leaving `id`.
    pub fn out_degree(&self, id: &str) -> usize {
        self.edges.iter().filter(|e| e.source == id).count()
    }
}

/// Parses an interchange document. `fallback_game_id` is used when the
/// document carries no `game_id` of its own.
pub fn parse_graph(document: &[u8], fallback_game_id: &str) -> Result<GameGraph, GraphError> {
    let doc: GraphDocument = serde_json::from_slice(document).map_err(|e| GraphError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let game_id = match doc.game_id {
        Some(id) if id.is_empty() => {
            return Err(GraphError::EmptyGameId {
                location: "game_id".into(),
            })
        }
        Some(id) => id,
        None => fallback_game_id.to_string(),
    };
    GameGraph::new(game_id, doc.nodes, doc.edges)
}

/// Serializes to the interchange format (pretty JSON, trailing newline).
pub fn serialize_graph(graph: &GameGraph) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(graph).expect("graph serializes");
    out.push(b'\n');
    out
}

/// One triplet per edge, in edge order, each annotated with its source's out-degree.
pub fn extract_triplets(graph: &GameGraph) -> Vec<Triplet> {
    let mut degree: HashMap<&str, usize> = HashMap::new();
    for edge in graph.edges() {
        *degree.entry(edge.source.as_str()).or_default() += 1;
    }
    graph
        .edges()
        .iter()
        .map(|edge| {
            let source = graph.node(&edge.source).expect("validated edge source");
            let target = graph.node(&edge.target).expect("validated edge target");
            Triplet {
                game_id: graph.game_id().to_string(),
                source_id: source.id.clone(),
                target_id: target.id.clone(),
                prefix: source.text.clone(),
                action: edge.action_text.clone(),
                postfix: target.text.clone(),
                source_out_degree: degree[edge.source.as_str()],
            }
        })
        .collect()
}
