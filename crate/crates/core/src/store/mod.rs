//! The four stores: entity (attribute rows), graph (relationship rows),
//! folder and path, plus their indexes.
//!
//! Reads take `&self` and may run from many threads at once; every mutation
//! takes `&mut self`. Folder and path construction validate fully before
//! writing anything, so a failed construction leaves the store unchanged.

mod persist;
mod records;
mod triples;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::BufRead;
use std::sync::{Arc, Mutex};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::path::TransitiveClosure;
use crate::value::{is_valid_id, NodeId, TermKey, Value};

pub use records::{
    AttributeRow, FolderMemberRow, FolderRecord, PathEdge, PathElementRow, PathRecord, PathWord,
    RelationshipRow, FOLDER_NAME_ATTR, LABEL_ATTR, MEMBER_OF, PART_OF, PATH_NAME_ATTR,
};

const LOAD_CHUNK_LINES: usize = 1 << 16;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub triples_read: usize,
    pub attribute_rows: usize,
    pub relationship_rows: usize,
    /// `(1-based line number, reason)`.
    pub rejected_lines: Vec<(usize, String)>,
}

impl std::fmt::Display for LoadReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "read {} triples: {} attribute rows, {} relationship rows, {} rejected",
            self.triples_read,
            self.attribute_rows,
            self.relationship_rows,
            self.rejected_lines.len()
        )
    }
}

/// What a folder or path-node name is bound to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NamedNode {
    Folder(NodeId),
    Path(NodeId),
}

#[derive(Default)]
pub struct Store {
    entity: Vec<AttributeRow>,
    entity_set: FxHashSet<AttributeRow>,
    by_attr_value: FxHashMap<(Arc<str>, TermKey), Vec<u32>>,
    by_attr: FxHashMap<Arc<str>, Vec<u32>>,
    by_subject: FxHashMap<NodeId, Vec<u32>>,

    graph: Vec<RelationshipRow>,
    graph_set: FxHashSet<RelationshipRow>,
    out_edges: FxHashMap<NodeId, Vec<u32>>,
    in_edges: FxHashMap<NodeId, Vec<u32>>,
    by_predicate: FxHashMap<Arc<str>, Vec<u32>>,

    folders: BTreeMap<NodeId, FolderRecord>,
    paths: BTreeMap<NodeId, PathRecord>,
    names: FxHashMap<String, NamedNode>,

    interner: FxHashSet<Arc<str>>,
    closure: Mutex<Option<Arc<TransitiveClosure>>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("entity_rows", &self.entity.len())
            .field("graph_rows", &self.graph.len())
            .field("folders", &self.folders.len())
            .field("paths", &self.paths.len())
            .finish()
    }
}

fn validate_attribute(attribute: &str) -> Result<()> {
    if attribute.len() < 2 || !attribute.starts_with('@') || !is_valid_id(attribute) {
        return Err(Error::Validation(format!(
            "attribute {attribute:?} must start with '@' and contain no whitespace"
        )));
    }
    Ok(())
}

fn validate_predicate(predicate: &str) -> Result<()> {
    if predicate.starts_with('@') || !is_valid_id(predicate) {
        return Err(Error::Validation(format!(
            "relationship predicate {predicate:?} must not start with '@' or contain whitespace"
        )));
    }
    Ok(())
}

fn validate_name(name: &str) -> Result<()> {
    if !is_valid_id(name) {
        return Err(Error::Validation(format!("invalid node name {name:?}")));
    }
    Ok(())
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, s: &str) -> Arc<str> {
        if let Some(a) = self.interner.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.interner.insert(a.clone());
        a
    }

    fn intern_node(&mut self, id: &NodeId) -> NodeId {
        NodeId::from_arc(self.intern(id.as_str()))
    }

    fn intern_value(&mut self, v: &Value) -> Value {
        match v {
            Value::Node(id) => Value::Node(self.intern_node(id)),
            Value::Str(s) => Value::Str(self.intern(s)),
            Value::Typed { lexical, datatype } => Value::Typed {
                lexical: self.intern(lexical),
                datatype: self.intern(datatype),
            },
        }
    }

    fn invalidate(&mut self) {
        *self.closure.get_mut().unwrap_or_else(|e| e.into_inner()) = None;
    }

    // ---- entity and graph stores ----

    /// Inserts an attribute row; returns `false` if it was already present.
    pub fn insert_attribute(&mut self, row: AttributeRow) -> Result<bool> {
        validate_attribute(&row.attribute)?;
        if let Value::Typed { lexical, datatype } = &row.value {
            Value::typed(&**lexical, &**datatype)?;
        }
        Ok(self.insert_attribute_unchecked(row))
    }

    fn insert_attribute_unchecked(&mut self, row: AttributeRow) -> bool {
        if self.entity_set.contains(&row) {
            return false;
        }
        let row = AttributeRow {
            subject: self.intern_node(&row.subject),
            attribute: self.intern(&row.attribute),
            value: self.intern_value(&row.value),
        };
        let idx = self.entity.len() as u32;
        self.by_attr_value
            .entry((row.attribute.clone(), row.value.term_key()))
            .or_default()
            .push(idx);
        self.by_attr
            .entry(row.attribute.clone())
            .or_default()
            .push(idx);
        self.by_subject
            .entry(row.subject.clone())
            .or_default()
            .push(idx);
        self.entity_set.insert(row.clone());
        self.entity.push(row);
        self.invalidate();
        true
    }

    /// Inserts a relationship row; returns `false` if it was already present.
    /// A row carrying an edge id also records `(edge_id, @label, predicate)`.
    pub fn insert_relationship(&mut self, row: RelationshipRow) -> Result<bool> {
        validate_predicate(&row.predicate)?;
        Ok(self.insert_relationship_unchecked(row))
    }

    fn insert_relationship_unchecked(&mut self, row: RelationshipRow) -> bool {
        if self.graph_set.contains(&row) {
            return false;
        }
        let row = RelationshipRow {
            subject: self.intern_node(&row.subject),
            predicate: self.intern(&row.predicate),
            object: self.intern_node(&row.object),
            edge_id: row.edge_id.as_ref().map(|e| self.intern_node(e)),
        };
        if let Some(edge_id) = &row.edge_id {
            let label = Value::Node(NodeId::from_arc(row.predicate.clone()));
            self.insert_attribute_unchecked(AttributeRow::new(edge_id.clone(), LABEL_ATTR, label));
        }
        let idx = self.graph.len() as u32;
        self.out_edges
            .entry(row.subject.clone())
            .or_default()
            .push(idx);
        self.in_edges
            .entry(row.object.clone())
            .or_default()
            .push(idx);
        self.by_predicate
            .entry(row.predicate.clone())
            .or_default()
            .push(idx);
        self.graph_set.insert(row.clone());
        self.graph.push(row);
        self.invalidate();
        true
    }

    pub fn load_triples(&mut self, source: impl BufRead) -> Result<LoadReport> {
        self.load_triples_with(source, ExecMode::default())
    }

    /// Loads the triple text format. Malformed lines are reported in the
    /// returned [`LoadReport`], never fatal; only I/O failures are errors.
    pub fn load_triples_with(
        &mut self,
        source: impl BufRead,
        mode: ExecMode,
    ) -> Result<LoadReport> {
        let mut report = LoadReport::default();
        let mut lines = source.lines();
        let mut line_no = 0usize;
        loop {
            let mut chunk = Vec::with_capacity(LOAD_CHUNK_LINES);
            for line in lines.by_ref().take(LOAD_CHUNK_LINES) {
                chunk.push(line?);
            }
            if chunk.is_empty() {
                break;
            }
            let parsed = par::map(mode, &chunk, |l| triples::parse_line(l));
            for result in parsed {
                line_no += 1;
                match result {
                    Ok(triples::Line::Blank) => {}
                    Ok(triples::Line::Triple {
                        subject,
                        predicate,
                        object,
                    }) => {
                        report.triples_read += 1;
                        match self.insert_parsed(&subject, &predicate, object) {
                            Ok(true) => report.attribute_rows += 1,
                            Ok(false) => report.relationship_rows += 1,
                            Err(reason) => report.rejected_lines.push((line_no, reason)),
                        }
                    }
                    Err(reason) => {
                        report.triples_read += 1;
                        report.rejected_lines.push((line_no, reason));
                    }
                }
            }
        }
        Ok(report)
    }

    /// Returns `Ok(true)` for an attribute row, `Ok(false)` for a relationship.
    fn insert_parsed(
        &mut self,
        subject: &str,
        predicate: &str,
        object: triples::Object,
    ) -> Result<bool, String> {
        let subject = NodeId::new(subject).map_err(|e| e.to_string())?;
        if predicate.starts_with('@') {
            validate_attribute(predicate).map_err(|e| e.to_string())?;
            let value = match object {
                triples::Object::Bare(s) => Value::node(s),
                triples::Object::Quoted(s) => Ok(Value::string(s)),
                triples::Object::Typed(l, d) => Value::typed(l, d),
            }
            .map_err(|e| e.to_string())?;
            self.insert_attribute_unchecked(AttributeRow::new(subject, predicate, value));
            Ok(true)
        } else {
            validate_predicate(predicate).map_err(|e| e.to_string())?;
            let object = match object {
                triples::Object::Bare(s) | triples::Object::Quoted(s) => {
                    NodeId::new(s).map_err(|e| e.to_string())?
                }
                triples::Object::Typed(..) => {
                    return Err("relationship object must be a node, not a typed literal".into())
                }
            };
            self.insert_relationship_unchecked(RelationshipRow::new(subject, predicate, object));
            Ok(false)
        }
    }

    pub fn attribute_rows(&self) -> &[AttributeRow] {
        &self.entity
    }

    pub fn relationship_rows(&self) -> &[RelationshipRow] {
        &self.graph
    }

    pub fn entity_len(&self) -> usize {
        self.entity.len()
    }

    pub fn graph_len(&self) -> usize {
        self.graph.len()
    }

    pub fn contains_relationship(&self, row: &RelationshipRow) -> bool {
        self.graph_set.contains(row)
    }

    /// Subjects having `attribute = value`.
    pub fn scan_by_attribute(&self, attribute: &str, value: &Value) -> BTreeSet<NodeId> {
        self.attr_value_rows(attribute, value)
            .map(|r| r.subject.clone())
            .collect()
    }

    pub fn attr_value_count(&self, attribute: &str, value: &Value) -> usize {
        self.by_attr_value
            .get(&(Arc::from(attribute), value.term_key()))
            .map_or(0, Vec::len)
    }

    pub fn attr_value_rows<'a>(
        &'a self,
        attribute: &str,
        value: &Value,
    ) -> impl Iterator<Item = &'a AttributeRow> + 'a {
        self.by_attr_value
            .get(&(Arc::from(attribute), value.term_key()))
            .into_iter()
            .flatten()
            .map(|&i| &self.entity[i as usize])
    }

    pub fn attr_rows<'a>(&'a self, attribute: &str) -> impl Iterator<Item = &'a AttributeRow> + 'a {
        self.by_attr
            .get(attribute)
            .into_iter()
            .flatten()
            .map(|&i| &self.entity[i as usize])
    }

    pub fn attr_count(&self, attribute: &str) -> usize {
        self.by_attr.get(attribute).map_or(0, Vec::len)
    }

    pub fn attributes_of<'a>(
        &'a self,
        subject: &str,
    ) -> impl Iterator<Item = &'a AttributeRow> + 'a {
        self.by_subject
            .get(subject)
            .into_iter()
            .flatten()
            .map(|&i| &self.entity[i as usize])
    }

    pub fn attributes_of_count(&self, subject: &str) -> usize {
        self.by_subject.get(subject).map_or(0, Vec::len)
    }

    pub fn out_edges<'a>(
        &'a self,
        subject: &str,
    ) -> impl Iterator<Item = &'a RelationshipRow> + 'a {
        self.out_edges
            .get(subject)
            .into_iter()
            .flatten()
            .map(|&i| &self.graph[i as usize])
    }

    pub fn out_degree(&self, subject: &str) -> usize {
        self.out_edges.get(subject).map_or(0, Vec::len)
    }

    pub fn in_edges<'a>(&'a self, object: &str) -> impl Iterator<Item = &'a RelationshipRow> + 'a {
        self.in_edges
            .get(object)
            .into_iter()
            .flatten()
            .map(|&i| &self.graph[i as usize])
    }

    pub fn in_degree(&self, object: &str) -> usize {
        self.in_edges.get(object).map_or(0, Vec::len)
    }

    pub fn predicate_rows<'a>(
        &'a self,
        predicate: &str,
    ) -> impl Iterator<Item = &'a RelationshipRow> + 'a {
        self.by_predicate
            .get(predicate)
            .into_iter()
            .flatten()
            .map(|&i| &self.graph[i as usize])
    }

    pub fn predicate_count(&self, predicate: &str) -> usize {
        self.by_predicate.get(predicate).map_or(0, Vec::len)
    }

    /// Distinct relationship predicates, in no particular order.
    pub fn predicates(&self) -> impl Iterator<Item = &Arc<str>> {
        self.by_predicate.keys()
    }

    /// Every node id appearing in the entity or graph store.
    /// Approximate number of distinct subjects: the larger of the entity
    /// and graph subject counts.
    pub fn subject_count(&self) -> usize {
        self.by_subject.len().max(self.out_edges.len())
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.by_subject.keys().cloned().collect();
        out.extend(self.out_edges.keys().cloned());
        out.extend(self.in_edges.keys().cloned());
        out
    }

    pub fn is_node(&self, id: &str) -> bool {
        self.by_subject.contains_key(id)
            || self.out_edges.contains_key(id)
            || self.in_edges.contains_key(id)
    }

    /// Canonical (interned) id for `text`, if it names a known node.
    pub fn node(&self, text: &str) -> Option<&NodeId> {
        self.by_subject
            .get_key_value(text)
            .or_else(|| self.out_edges.get_key_value(text))
            .or_else(|| self.in_edges.get_key_value(text))
            .map(|(k, _)| k)
    }

    // ---- folder and path stores ----

    pub fn lookup_name(&self, name: &str) -> Option<&NamedNode> {
        self.names.get(name)
    }

    pub fn folders(&self) -> impl Iterator<Item = &FolderRecord> {
        self.folders.values()
    }

    pub fn path_nodes(&self) -> impl Iterator<Item = &PathRecord> {
        self.paths.values()
    }

    pub fn folder(&self, id: &NodeId) -> Option<&FolderRecord> {
        self.folders.get(id)
    }

    pub fn path_node(&self, id: &NodeId) -> Option<&PathRecord> {
        self.paths.get(id)
    }

    pub fn folder_by_name(&self, name: &str) -> Option<&FolderRecord> {
        match self.names.get(name)? {
            NamedNode::Folder(id) => self.folders.get(id),
            NamedNode::Path(_) => None,
        }
    }

    pub fn path_by_name(&self, name: &str) -> Option<&PathRecord> {
        match self.names.get(name)? {
            NamedNode::Path(id) => self.paths.get(id),
            NamedNode::Folder(_) => None,
        }
    }

    fn claim_name(&self, name: &str, prefix: &str) -> Result<NodeId> {
        validate_name(name)?;
        if self.names.contains_key(name) {
            return Err(Error::Conflict(format!("name '{name}' is already bound")));
        }
        let id = NodeId::new(format!("{prefix}:{name}"))?;
        if self.is_node(id.as_str()) {
            return Err(Error::Conflict(format!("node id '{id}' already exists")));
        }
        Ok(id)
    }

    fn attr_rows_for(
        subject: &NodeId,
        attrs: &[(String, Value)],
    ) -> Result<BTreeSet<AttributeRow>> {
        attrs
            .iter()
            .map(|(a, v)| {
                validate_attribute(a)?;
                Ok(AttributeRow::new(subject.clone(), a, v.clone()))
            })
            .collect()
    }

    /// Materializes a folder: the graph rows of every member plus one marker
    /// row per member.
    pub fn create_folder(
        &mut self,
        name: &str,
        attrs: &[(String, Value)],
        members: impl IntoIterator<Item = NodeId>,
    ) -> Result<NodeId> {
        let folder_id = self.claim_name(name, "folder")?;
        let attrs = Self::attr_rows_for(&folder_id, attrs)?;
        let marker: Arc<str> = Arc::from(MEMBER_OF);
        let mut member_rows = BTreeSet::new();
        for m in members.into_iter().collect::<BTreeSet<_>>() {
            for r in self.out_edges(m.as_str()) {
                member_rows.insert(FolderMemberRow {
                    folder_id: folder_id.clone(),
                    subject: r.subject.clone(),
                    predicate: r.predicate.clone(),
                    object: r.object.clone(),
                });
            }
            member_rows.insert(FolderMemberRow {
                folder_id: folder_id.clone(),
                subject: m,
                predicate: marker.clone(),
                object: folder_id.clone(),
            });
        }
        let record = FolderRecord {
            folder_id: folder_id.clone(),
            name: name.to_string(),
            attrs,
            member_rows,
            child_folders: BTreeSet::new(),
        };
        self.commit_folder(record, &[]);
        Ok(folder_id)
    }

    /// Creates a folder grouping existing folders; each child gains a
    /// `partOf` edge to the new folder.
    pub fn create_folder_of_folders(
        &mut self,
        name: &str,
        attrs: &[(String, Value)],
        children: &[String],
    ) -> Result<NodeId> {
        validate_name(name)?;
        if children.iter().any(|c| c == name) {
            return Err(Error::Cycle(name.to_string()));
        }
        let folder_id = self.claim_name(name, "folder")?;
        let attrs = Self::attr_rows_for(&folder_id, attrs)?;
        let mut child_ids = BTreeSet::new();
        for c in children {
            let rec = self
                .folder_by_name(c)
                .ok_or_else(|| Error::unknown("folder", c.as_str()))?;
            child_ids.insert(rec.folder_id.clone());
        }
        if self.descendants(&child_ids).contains(&folder_id) {
            return Err(Error::Cycle(name.to_string()));
        }
        let record = FolderRecord {
            folder_id: folder_id.clone(),
            name: name.to_string(),
            attrs,
            member_rows: BTreeSet::new(),
            child_folders: child_ids.clone(),
        };
        let part_of: Vec<RelationshipRow> = child_ids
            .iter()
            .map(|c| RelationshipRow::new(c.clone(), PART_OF, folder_id.clone()))
            .collect();
        self.commit_folder(record, &part_of);
        Ok(folder_id)
    }

    fn commit_folder(&mut self, record: FolderRecord, graph_rows: &[RelationshipRow]) {
        let id = record.folder_id.clone();
        self.insert_attribute_unchecked(AttributeRow::new(
            id.clone(),
            FOLDER_NAME_ATTR,
            Value::string(&record.name),
        ));
        for a in &record.attrs {
            self.insert_attribute_unchecked(a.clone());
        }
        for r in graph_rows {
            self.insert_relationship_unchecked(r.clone());
        }
        self.names
            .insert(record.name.clone(), NamedNode::Folder(id.clone()));
        self.folders.insert(id, record);
    }

    /// Folder ids reachable through `child_folders`, including the roots.
    fn descendants(&self, roots: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<NodeId> = roots.iter().cloned().collect();
        while let Some(f) = queue.pop_front() {
            if !seen.insert(f.clone()) {
                continue;
            }
            if let Some(rec) = self.folders.get(&f) {
                queue.extend(rec.child_folders.iter().cloned());
            }
        }
        seen
    }

    pub fn members_of(&self, folder: &NodeId, recursive: bool) -> Result<BTreeSet<NodeId>> {
        let rec = self
            .folders
            .get(folder)
            .ok_or_else(|| Error::unknown("folder", folder.as_str()))?;
        if !recursive {
            return Ok(rec.members());
        }
        let mut out = BTreeSet::new();
        for f in self.descendants(&BTreeSet::from([folder.clone()])) {
            if let Some(r) = self.folders.get(&f) {
                out.extend(r.members());
            }
        }
        Ok(out)
    }

    /// Stores a path node. Every step of every path must exist in the graph
    /// store.
    pub fn create_path_node(
        &mut self,
        name: &str,
        attrs: &[(String, Value)],
        paths: Vec<PathWord>,
    ) -> Result<NodeId> {
        let path_node_id = self.claim_name(name, "path")?;
        let attrs = Self::attr_rows_for(&path_node_id, attrs)?;
        for (i, w) in paths.iter().enumerate() {
            if w.edges.is_empty() || w.nodes.len() != w.edges.len() + 1 {
                return Err(Error::Validation(format!(
                    "path {i} must have k >= 1 edges and k + 1 nodes"
                )));
            }
            for (s, e, o) in w.steps() {
                let row = RelationshipRow {
                    subject: s.clone(),
                    predicate: e.predicate.clone(),
                    object: o.clone(),
                    edge_id: e.edge_id.clone(),
                };
                if !self.graph_set.contains(&row) {
                    return Err(Error::Validation(format!(
                        "path {i} uses edge ({s}, {}, {o}) which is not in the graph store",
                        e.predicate
                    )));
                }
            }
        }
        let element_rows = PathRecord::element_rows_for(&path_node_id, &paths);
        let record = PathRecord {
            path_node_id: path_node_id.clone(),
            name: name.to_string(),
            attrs,
            paths,
            element_rows,
        };
        self.commit_path(record);
        Ok(path_node_id)
    }

    fn commit_path(&mut self, record: PathRecord) {
        let id = record.path_node_id.clone();
        self.insert_attribute_unchecked(AttributeRow::new(
            id.clone(),
            PATH_NAME_ATTR,
            Value::string(&record.name),
        ));
        for a in &record.attrs {
            self.insert_attribute_unchecked(a.clone());
        }
        self.names
            .insert(record.name.clone(), NamedNode::Path(id.clone()));
        self.paths.insert(id, record);
    }

    pub fn elements_of(&self, path_node: &NodeId) -> Result<BTreeSet<NodeId>> {
        self.paths
            .get(path_node)
            .map(PathRecord::elements)
            .ok_or_else(|| Error::unknown("path node", path_node.as_str()))
    }

    /// The closure if one has been built since the last graph change.
    pub fn cached_closure(&self) -> Option<Arc<TransitiveClosure>> {
        self.closure
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    fn set_closure(&mut self, closure: TransitiveClosure) {
        *self.closure.get_mut().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(closure));
    }

    /// Cached transitive closure of the graph store, built on first use.
    pub fn closure(&self, node_guard: usize) -> Result<Arc<TransitiveClosure>> {
        let mut slot = self.closure.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(c) = slot.as_ref() {
            return Ok(c.clone());
        }
        let c = Arc::new(crate::path::build_closure(self, node_guard)?);
        *slot = Some(c.clone());
        Ok(c)
    }
}
