//! Directory layout: `VERSION` plus one TSV file per store. Every TSV file
//! starts with a header line and its rows are sorted lexicographically.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::records::*;
use super::triples::{parse_object, Object};
use super::{NamedNode, Store};
use crate::error::{Error, Result};
use crate::path::TransitiveClosure;
use crate::value::{NodeId, Value};

const VERSION_FILE: &str = "VERSION";
const CLOSURE_FILE: &str = "closure.tsv";
const VERSION_LINE: &str = "fpsparql-store 1";

const ENTITY_HEADER: &str = "subject\tattribute\tvalue";
const GRAPH_HEADER: &str = "subject\tpredicate\tobject\tedge_id";
const FOLDER_HEADER: &str = "kind\tfolder_id\tname\tsubject\tpredicate\tobject";
const PATH_HEADER: &str =
    "kind\tpath_node_id\tname\tpath_index\tseq\tsubject\tpredicate\tobject\tedge_id";

fn write_sorted(dir: &Path, file: &str, header: &str, mut lines: Vec<String>) -> Result<()> {
    lines.sort_unstable();
    let tmp = dir.join(format!(".{file}.tmp"));
    let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
    writeln!(out, "{header}")?;
    for l in &lines {
        writeln!(out, "{l}")?;
    }
    out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::rename(&tmp, dir.join(file))?;
    Ok(())
}

fn opt(id: &Option<NodeId>) -> &str {
    id.as_ref().map_or("", NodeId::as_str)
}

impl Store {
    pub fn persist(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;

        let entity = self
            .attribute_rows()
            .iter()
            .map(|r| format!("{}\t{}\t{}", r.subject, r.attribute, r.value))
            .collect();
        write_sorted(dir, "entity.tsv", ENTITY_HEADER, entity)?;

        let graph = self
            .relationship_rows()
            .iter()
            .map(|r| {
                format!(
                    "{}\t{}\t{}\t{}",
                    r.subject,
                    r.predicate,
                    r.object,
                    opt(&r.edge_id)
                )
            })
            .collect();
        write_sorted(dir, "graph.tsv", GRAPH_HEADER, graph)?;

        let mut folder = Vec::new();
        for f in self.folders() {
            let id = &f.folder_id;
            folder.push(format!("folder\t{id}\t{}\t\t\t", f.name));
            for a in &f.attrs {
                folder.push(format!("attr\t{id}\t\t\t{}\t{}", a.attribute, a.value));
            }
            for m in &f.member_rows {
                folder.push(format!(
                    "member\t{id}\t\t{}\t{}\t{}",
                    m.subject, m.predicate, m.object
                ));
            }
            for c in &f.child_folders {
                folder.push(format!("child\t{id}\t\t{c}\t\t"));
            }
        }
        write_sorted(dir, "folder.tsv", FOLDER_HEADER, folder)?;

        let mut path = Vec::new();
        for p in self.path_nodes() {
            let id = &p.path_node_id;
            path.push(format!("path\t{id}\t{}\t\t\t\t\t\t", p.name));
            for a in &p.attrs {
                path.push(format!(
                    "attr\t{id}\t\t\t\t\t{}\t{}\t",
                    a.attribute, a.value
                ));
            }
            for r in &p.element_rows {
                path.push(format!(
                    "element\t{id}\t\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.path_index,
                    r.seq,
                    r.subject,
                    r.predicate,
                    r.object,
                    opt(&r.edge_id)
                ));
            }
        }
        write_sorted(dir, "path.tsv", PATH_HEADER, path)?;

        let closure_file = dir.join(CLOSURE_FILE);
        match self.cached_closure() {
            Some(c) => c.write_tsv(&closure_file)?,
            None if closure_file.exists() => fs::remove_file(&closure_file)?,
            None => {}
        }

        fs::write(dir.join(VERSION_FILE), format!("{VERSION_LINE}\n"))?;
        Ok(())
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Store> {
        let dir = dir.as_ref();
        let version = match fs::read_to_string(dir.join(VERSION_FILE)) {
            Ok(v) => v,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::Format(format!(
                    "{} is not a store directory",
                    dir.display()
                )))
            }
            Err(e) => return Err(e.into()),
        };
        if version.trim_end() != VERSION_LINE {
            return Err(Error::Format(format!(
                "unsupported store version {:?} (expected {VERSION_LINE:?})",
                version.trim_end()
            )));
        }

        let mut store = Store::new();
        for (line_no, cols) in read_tsv(dir, "entity.tsv", ENTITY_HEADER)? {
            let row = AttributeRow::new(
                node(&cols[0], line_no)?,
                &cols[1],
                value(&cols[2], line_no)?,
            );
            store
                .insert_attribute(row)
                .map_err(|e| at(line_no, "entity.tsv", e))?;
        }
        for (line_no, cols) in read_tsv(dir, "graph.tsv", GRAPH_HEADER)? {
            let row = RelationshipRow {
                subject: node(&cols[0], line_no)?,
                predicate: Arc::from(cols[1].as_str()),
                object: node(&cols[2], line_no)?,
                edge_id: opt_node(&cols[3], line_no)?,
            };
            store
                .insert_relationship(row)
                .map_err(|e| at(line_no, "graph.tsv", e))?;
        }

        let mut folders: BTreeMap<NodeId, FolderRecord> = BTreeMap::new();
        let folder_rows = read_tsv(dir, "folder.tsv", FOLDER_HEADER)?;
        for (line_no, cols) in &folder_rows {
            if cols[0] == "folder" {
                let id = node(&cols[1], *line_no)?;
                folders.insert(
                    id.clone(),
                    FolderRecord {
                        folder_id: id,
                        name: cols[2].clone(),
                        attrs: BTreeSet::new(),
                        member_rows: BTreeSet::new(),
                        child_folders: BTreeSet::new(),
                    },
                );
            }
        }
        for (line_no, cols) in &folder_rows {
            let id = node(&cols[1], *line_no)?;
            let rec = folders.get_mut(&id).ok_or_else(|| {
                Error::Format(format!("folder.tsv:{line_no}: undeclared folder {id}"))
            })?;
            match cols[0].as_str() {
                "folder" => {}
                "attr" => {
                    rec.attrs.insert(AttributeRow::new(
                        id.clone(),
                        &cols[4],
                        value(&cols[5], *line_no)?,
                    ));
                }
                "member" => {
                    rec.member_rows.insert(FolderMemberRow {
                        folder_id: id.clone(),
                        subject: node(&cols[3], *line_no)?,
                        predicate: Arc::from(cols[4].as_str()),
                        object: node(&cols[5], *line_no)?,
                    });
                }
                "child" => {
                    rec.child_folders.insert(node(&cols[3], *line_no)?);
                }
                other => {
                    return Err(Error::Format(format!(
                        "folder.tsv:{line_no}: unknown row kind {other:?}"
                    )))
                }
            }
        }
        for (id, rec) in folders {
            store
                .names
                .insert(rec.name.clone(), NamedNode::Folder(id.clone()));
            store.folders.insert(id, rec);
        }

        let mut paths: BTreeMap<NodeId, PathRecord> = BTreeMap::new();
        let path_rows = read_tsv(dir, "path.tsv", PATH_HEADER)?;
        for (line_no, cols) in &path_rows {
            if cols[0] == "path" {
                let id = node(&cols[1], *line_no)?;
                paths.insert(
                    id.clone(),
                    PathRecord {
                        path_node_id: id,
                        name: cols[2].clone(),
                        attrs: BTreeSet::new(),
                        paths: Vec::new(),
                        element_rows: BTreeSet::new(),
                    },
                );
            }
        }
        for (line_no, cols) in &path_rows {
            let id = node(&cols[1], *line_no)?;
            let rec = paths.get_mut(&id).ok_or_else(|| {
                Error::Format(format!("path.tsv:{line_no}: undeclared path node {id}"))
            })?;
            match cols[0].as_str() {
                "path" => {}
                "attr" => {
                    rec.attrs.insert(AttributeRow::new(
                        id.clone(),
                        &cols[6],
                        value(&cols[7], *line_no)?,
                    ));
                }
                "element" => {
                    let num = |s: &str| {
                        s.parse::<usize>().map_err(|_| {
                            Error::Format(format!("path.tsv:{line_no}: bad number {s:?}"))
                        })
                    };
                    rec.element_rows.insert(PathElementRow {
                        path_node_id: id.clone(),
                        path_index: num(&cols[3])?,
                        seq: num(&cols[4])?,
                        subject: node(&cols[5], *line_no)?,
                        predicate: Arc::from(cols[6].as_str()),
                        object: node(&cols[7], *line_no)?,
                        edge_id: opt_node(&cols[8], *line_no)?,
                    });
                }
                other => {
                    return Err(Error::Format(format!(
                        "path.tsv:{line_no}: unknown row kind {other:?}"
                    )))
                }
            }
        }
        for (id, mut rec) in paths {
            rec.paths = PathRecord::paths_from_rows(&rec.element_rows)
                .map_err(|e| Error::Format(format!("path.tsv: {id}: {e}")))?;
            store
                .names
                .insert(rec.name.clone(), NamedNode::Path(id.clone()));
            store.paths.insert(id, rec);
        }
        let closure_file = dir.join(CLOSURE_FILE);
        if closure_file.exists() {
            store.set_closure(TransitiveClosure::read_tsv(&closure_file)?);
        }
        Ok(store)
    }
}

fn at(line_no: usize, file: &str, e: Error) -> Error {
    Error::Format(format!("{file}:{line_no}: {e}"))
}

fn node(s: &str, line_no: usize) -> Result<NodeId> {
    NodeId::new(s).map_err(|e| Error::Format(format!("line {line_no}: {e}")))
}

fn opt_node(s: &str, line_no: usize) -> Result<Option<NodeId>> {
    if s.is_empty() {
        Ok(None)
    } else {
        node(s, line_no).map(Some)
    }
}

fn value(s: &str, line_no: usize) -> Result<Value> {
    let bad = |e: String| Error::Format(format!("line {line_no}: {e}"));
    match parse_object(s).map_err(bad)? {
        Object::Bare(id) => Value::node(id),
        Object::Quoted(text) => Ok(Value::string(text)),
        Object::Typed(l, d) => Value::typed(l, d),
    }
    .map_err(|e| bad(e.to_string()))
}

/// Reads `(1-based line number, columns)` pairs after checking the header.
fn read_tsv(dir: &Path, file: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(dir.join(file))?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::Format(format!("{file}: missing or wrong header")));
    }
    let width = header.split('\t').count();
    lines
        .enumerate()
        .map(|(i, l)| {
            let cols: Vec<String> = l.split('\t').map(str::to_string).collect();
            if cols.len() != width {
                return Err(Error::Format(format!(
                    "{file}:{}: expected {width} columns, found {}",
                    i + 2,
                    cols.len()
                )));
            }
            Ok((i + 2, cols))
        })
        .collect()
}
