use std::collections::BTreeSet;
use std::sync::Arc;

use crate::value::{NodeId, Value};

/// Predicate of the marker row recording folder membership.
pub const MEMBER_OF: &str = "@memberOf";
/// Predicate linking a child folder to its parent in the graph store.
pub const PART_OF: &str = "partOf";
/// Attribute naming a folder in the entity store.
pub const FOLDER_NAME_ATTR: &str = "@Name";
/// Attribute naming a path node in the entity store.
pub const PATH_NAME_ATTR: &str = "@name";
/// Attribute carrying the predicate of a reified edge.
pub const LABEL_ATTR: &str = "@label";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AttributeRow {
    pub subject: NodeId,
    pub attribute: Arc<str>,
    pub value: Value,
}

impl AttributeRow {
    pub fn new(subject: NodeId, attribute: &str, value: Value) -> Self {
        AttributeRow {
            subject,
            attribute: Arc::from(attribute),
            value,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RelationshipRow {
    pub subject: NodeId,
    pub predicate: Arc<str>,
    pub object: NodeId,
    pub edge_id: Option<NodeId>,
}

impl RelationshipRow {
    pub fn new(subject: NodeId, predicate: &str, object: NodeId) -> Self {
        RelationshipRow {
            subject,
            predicate: Arc::from(predicate),
            object,
            edge_id: None,
        }
    }

    pub fn with_edge_id(mut self, edge_id: NodeId) -> Self {
        self.edge_id = Some(edge_id);
        self
    }
}

/// One row of the folder store. Marker rows use [`MEMBER_OF`] as predicate
/// and the folder id as object.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FolderMemberRow {
    pub folder_id: NodeId,
    pub subject: NodeId,
    pub predicate: Arc<str>,
    pub object: NodeId,
}

impl FolderMemberRow {
    pub fn is_marker(&self) -> bool {
        &*self.predicate == MEMBER_OF && self.object == self.folder_id
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FolderRecord {
    pub folder_id: NodeId,
    pub name: String,
    pub attrs: BTreeSet<AttributeRow>,
    pub member_rows: BTreeSet<FolderMemberRow>,
    pub child_folders: BTreeSet<NodeId>,
}

impl FolderRecord {
    /// Direct members, recovered from the marker rows.
    pub fn members(&self) -> BTreeSet<NodeId> {
        self.member_rows
            .iter()
            .filter(|r| r.is_marker())
            .map(|r| r.subject.clone())
            .collect()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PathEdge {
    pub predicate: Arc<str>,
    pub edge_id: Option<NodeId>,
}

impl PathEdge {
    pub fn new(predicate: &str) -> Self {
        PathEdge {
            predicate: Arc::from(predicate),
            edge_id: None,
        }
    }
}

/// A concrete path: `nodes[0] edges[0] nodes[1] ... edges[k-1] nodes[k]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PathWord {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<PathEdge>,
}

impl PathWord {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn start(&self) -> &NodeId {
        &self.nodes[0]
    }

    pub fn end(&self) -> &NodeId {
        &self.nodes[self.nodes.len() - 1]
    }

    /// Steps as `(subject, edge, object)`.
    pub fn steps(&self) -> impl Iterator<Item = (&NodeId, &PathEdge, &NodeId)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (&self.nodes[i], e, &self.nodes[i + 1]))
    }

    /// `paper2 citedBy paper4 citedBy paper1`.
    pub fn to_line(&self) -> String {
        let mut out = self.nodes[0].to_string();
        for (_, e, o) in self.steps() {
            out.push(' ');
            out.push_str(&e.predicate);
            out.push(' ');
            out.push_str(o.as_str());
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PathElementRow {
    pub path_node_id: NodeId,
    pub path_index: usize,
    pub seq: usize,
    pub subject: NodeId,
    pub predicate: Arc<str>,
    pub object: NodeId,
    pub edge_id: Option<NodeId>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PathRecord {
    pub path_node_id: NodeId,
    pub name: String,
    pub attrs: BTreeSet<AttributeRow>,
    pub paths: Vec<PathWord>,
    pub element_rows: BTreeSet<PathElementRow>,
}

impl PathRecord {
    pub(crate) fn element_rows_for(
        path_node_id: &NodeId,
        paths: &[PathWord],
    ) -> BTreeSet<PathElementRow> {
        paths
            .iter()
            .enumerate()
            .flat_map(|(path_index, w)| {
                w.steps()
                    .enumerate()
                    .map(move |(seq, (s, e, o))| PathElementRow {
                        path_node_id: path_node_id.clone(),
                        path_index,
                        seq,
                        subject: s.clone(),
                        predicate: e.predicate.clone(),
                        object: o.clone(),
                        edge_id: e.edge_id.clone(),
                    })
            })
            .collect()
    }

    /// Rebuilds the ordered path list from element rows.
    pub(crate) fn paths_from_rows(
        rows: &BTreeSet<PathElementRow>,
    ) -> Result<Vec<PathWord>, String> {
        let mut grouped: std::collections::BTreeMap<usize, Vec<&PathElementRow>> =
            Default::default();
        for r in rows {
            grouped.entry(r.path_index).or_default().push(r);
        }
        let mut paths = Vec::with_capacity(grouped.len());
        for (expected, (index, mut steps)) in grouped.into_iter().enumerate() {
            if index != expected {
                return Err(format!("path index {expected} missing"));
            }
            steps.sort_by_key(|r| r.seq);
            let mut nodes = vec![steps[0].subject.clone()];
            let mut edges = Vec::with_capacity(steps.len());
            for (seq, r) in steps.iter().enumerate() {
                if r.seq != seq || r.subject != nodes[seq] {
                    return Err(format!("path {index} has a broken step at seq {seq}"));
                }
                edges.push(PathEdge {
                    predicate: r.predicate.clone(),
                    edge_id: r.edge_id.clone(),
                });
                nodes.push(r.object.clone());
            }
            paths.push(PathWord { nodes, edges });
        }
        Ok(paths)
    }

    pub fn elements(&self) -> BTreeSet<NodeId> {
        self.element_rows
            .iter()
            .flat_map(|r| [r.subject.clone(), r.object.clone()])
            .collect()
    }
}
