//! Concept/entity ontology linked by `isA` edges.
//!
//! Edges point child → parent (subordinate → superordinate). Entities only
//! ever appear as children.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const ISA: &str = "isA";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Concept,
    Entity,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Concept => "concept",
            NodeKind::Entity => "entity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "concept" => Some(NodeKind::Concept),
            "entity" => Some(NodeKind::Entity),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub kind: NodeKind,
    pub surface: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConceptGraph {
    nodes: BTreeMap<String, GraphNode>,
    edges: BTreeSet<(String, String)>,
    parents: BTreeMap<String, BTreeSet<String>>,
    children: BTreeMap<String, BTreeSet<String>>,
}

impl ConceptGraph {
    /// Builds and validates a graph. Duplicate edges collapse silently.
    pub fn new(
        nodes: impl IntoIterator<Item = GraphNode>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for n in nodes {
            if n.surface.is_empty() {
                return Err(Error::Validation(format!("node {} has empty surface", n.id)));
            }
            if map.insert(n.id.clone(), n).is_some() {
                return Err(Error::Validation("duplicate node id".into()));
            }
        }
        let mut g = ConceptGraph {
            nodes: map,
            ..Default::default()
        };
        for (child, parent) in edges {
            g.insert_edge(child, parent)?;
        }
        Ok(g)
    }

    fn insert_edge(&mut self, child: String, parent: String) -> Result<()> {
        if child == parent {
            return Err(Error::Validation(format!("self-loop isA edge on {child}")));
        }
        for end in [&child, &parent] {
            if !self.nodes.contains_key(end) {
                return Err(Error::Validation(format!("dangling edge endpoint {end}")));
            }
        }
        if self.nodes[&parent].kind == NodeKind::Entity {
            return Err(Error::Validation(format!(
                "entity {parent} cannot be the parent of an isA edge"
            )));
        }
        self.parents
            .entry(child.clone())
            .or_default()
            .insert(parent.clone());
        self.children
            .entry(parent.clone())
            .or_default()
            .insert(child.clone());
        self.edges.insert((child, parent));
        Ok(())
    }

    /// Loads the edge list, with node kinds and surfaces from `nodes_path`
    /// when given. Without a node file, nodes that ever appear as a parent
    /// are concepts, the rest entities, and surfaces are the ids.
    pub fn load(edges_path: &Path, nodes_path: Option<&Path>) -> Result<Self> {
        let edges = read_edges(edges_path)?;
        let nodes = match nodes_path {
            Some(p) => read_nodes(p)?,
            None => infer_nodes(&edges),
        };
        ConceptGraph::new(nodes, edges)
    }

    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges as `(child, parent)` in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(c, p)| (c.as_str(), p.as_str()))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, child: &str, parent: &str) -> bool {
        self.edges
            .contains(&(child.to_string(), parent.to_string()))
    }

    pub fn parents_of(&self, id: &str) -> impl Iterator<Item = &str> {
        self.parents
            .get(id)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn children_of(&self, id: &str) -> impl Iterator<Item = &str> {
        self.children
            .get(id)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn concepts(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values().filter(|n| n.kind == NodeKind::Concept)
    }

    fn expect_concept(&self, id: &str) -> Result<&GraphNode> {
        match self.nodes.get(id) {
            Some(n) if n.kind == NodeKind::Concept => Ok(n),
            Some(_) => Err(Error::NotFound(format!("{id} is an entity, not a concept"))),
            None => Err(Error::NotFound(format!("concept {id}"))),
        }
    }

    /// Entities with a direct `isA` edge to `concept`.
    pub fn entities_of(&self, concept: &str) -> Result<BTreeSet<String>> {
        self.expect_concept(concept)?;
        Ok(self
            .children_of(concept)
            .filter(|c| self.nodes[*c].kind == NodeKind::Entity)
            .map(str::to_string)
            .collect())
    }

    /// Local context around `target` for one pair.
    ///
    /// Keeps the target, every concept within `hops` concept-to-concept
    /// `isA` steps (either direction), every concept an entity in `shared`
    /// belongs to, the target's own entities, and the shared entities.
    /// Edges are all `isA` edges among the kept nodes.
    pub fn context_subgraph(
        &self,
        target: &str,
        shared_entities: &BTreeSet<String>,
        hops: usize,
    ) -> Result<ConceptGraph> {
        self.expect_concept(target)?;
        if hops == 0 {
            return Err(Error::Argument("hops must be at least 1".into()));
        }
        let mut keep: BTreeSet<&str> = BTreeSet::new();
        keep.insert(target);

        let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
        depth.insert(target, 0);
        let mut queue = VecDeque::from([target]);
        while let Some(cur) = queue.pop_front() {
            let d = depth[cur];
            if d == hops {
                continue;
            }
            for next in self.parents_of(cur).chain(self.children_of(cur)) {
                if self.nodes[next].kind != NodeKind::Concept || depth.contains_key(next) {
                    continue;
                }
                depth.insert(next, d + 1);
                keep.insert(next);
                queue.push_back(next);
            }
        }

        for e in shared_entities {
            let Some(node) = self.nodes.get(e) else { continue };
            if node.kind != NodeKind::Entity {
                continue;
            }
            keep.insert(node.id.as_str());
            keep.extend(self.parents_of(e));
        }
        for c in self.children_of(target) {
            if self.nodes[c].kind == NodeKind::Entity {
                keep.insert(c);
            }
        }

        let nodes = keep.iter().map(|id| self.nodes[*id].clone());
        let edges = self
            .edges
            .iter()
            .filter(|(c, p)| keep.contains(c.as_str()) && keep.contains(p.as_str()))
            .cloned();
        ConceptGraph::new(nodes, edges)
    }

    /// Edge-list text, one `child\tisA\tparent` line per edge.
    pub fn to_edge_text(&self) -> String {
        let mut s = String::new();
        for (c, p) in &self.edges {
            let _ = writeln!(s, "{c}\t{ISA}\t{p}");
        }
        s
    }

    /// Node text, one `id\tkind\tsurface` line per node.
    pub fn to_node_text(&self) -> String {
        let mut s = String::new();
        for n in self.nodes.values() {
            let _ = writeln!(s, "{}\t{}\t{}", n.id, n.kind.as_str(), n.surface.join(" "));
        }
        s
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn read_edges(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f = split_fields(line);
        if f.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected `child<TAB>isA<TAB>parent`"));
        }
        if f[1] != ISA {
            return Err(Error::parse(path, i + 1, format!("unsupported relation {:?}", f[1])));
        }
        if f[0].is_empty() || f[2].is_empty() {
            return Err(Error::parse(path, i + 1, "empty node id"));
        }
        out.push((f[0].to_string(), f[2].to_string()));
    }
    Ok(out)
}

fn read_nodes(path: &Path) -> Result<Vec<GraphNode>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected `id<TAB>kind<TAB>surface`"));
        }
        let kind = NodeKind::parse(f[1])
            .ok_or_else(|| Error::parse(path, i + 1, format!("unknown node kind {:?}", f[1])))?;
        let surface: Vec<String> = f[2].split_whitespace().map(str::to_string).collect();
        if surface.is_empty() {
            return Err(Error::parse(path, i + 1, "empty surface"));
        }
        out.push(GraphNode {
            id: f[0].to_string(),
            kind,
            surface,
        });
    }
    Ok(out)
}

fn infer_nodes(edges: &[(String, String)]) -> Vec<GraphNode> {
    let parents: BTreeSet<&str> = edges.iter().map(|(_, p)| p.as_str()).collect();
    let mut ids: BTreeSet<&str> = parents.clone();
    ids.extend(edges.iter().map(|(c, _)| c.as_str()));
    ids.into_iter()
        .map(|id| GraphNode {
            id: id.to_string(),
            kind: if parents.contains(id) {
                NodeKind::Concept
            } else {
                NodeKind::Entity
            },
            surface: vec![id.to_string()],
        })
        .collect()
}
