//! One-stop entry point: parse, plan and run any query against a store.

use std::fmt::{self, Write as _};
use std::io::BufRead;
use std::path::Path;

use crate::error::Result;
use crate::eval::{eval_apply, eval_fconstruct, plan_apply, run_select, BindingTable, ExecOptions};
use crate::parser::{parse, FolderBody, Query, SelectQuery};
use crate::path::{compile_query, eval_pconstruct, SearchConfig};
use crate::planner::{plan, ScopeContext};
use crate::store::{LoadReport, PathWord, Store};
use crate::value::NodeId;

#[derive(Clone, Debug, Default)]
pub struct EngineConfig {
    pub search: SearchConfig,
    pub exec: ExecOptions,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Table(BindingTable),
    Folder {
        id: NodeId,
        name: String,
        members: usize,
    },
    PathNode {
        id: NodeId,
        name: String,
        paths: Vec<PathWord>,
        truncated: bool,
    },
}

impl Outcome {
    pub fn table(&self) -> Option<&BindingTable> {
        match self {
            Outcome::Table(t) => Some(t),
            _ => None,
        }
    }
}

/// Tables render as TSV; constructions as a one-line summary, with one
/// line per stored path for path nodes.
impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Table(t) => t.fmt(f),
            Outcome::Folder { name, members, .. } => {
                writeln!(f, "folder {name}: {members} members")
            }
            Outcome::PathNode {
                name,
                paths,
                truncated,
                ..
            } => {
                let note = if *truncated { " (truncated)" } else { "" };
                writeln!(f, "path node {name}: {} paths{note}", paths.len())?;
                for p in paths {
                    writeln!(f, "{}", p.to_line())?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct Engine {
    pub store: Store,
    pub config: EngineConfig,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_store(store: Store) -> Self {
        Engine {
            store,
            config: EngineConfig::default(),
        }
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::with_store(Store::open(dir)?))
    }

    pub fn persist(&self, dir: impl AsRef<Path>) -> Result<()> {
        self.store.persist(dir)
    }

    pub fn load_triples(&mut self, source: impl BufRead) -> Result<LoadReport> {
        self.store.load_triples_with(source, self.config.exec.mode)
    }

    pub fn execute(&mut self, text: &str) -> Result<Outcome> {
        let q = parse(text)?;
        self.execute_query(&q)
    }

    pub fn execute_query(&mut self, query: &Query) -> Result<Outcome> {
        let opts = &self.config.exec;
        Ok(match query {
            Query::Select(q) => Outcome::Table(run_select(&self.store, q, opts)?),
            Query::Apply(q) => Outcome::Table(eval_apply(&self.store, q, opts)?),
            Query::Fconstruct(q) => {
                let id = eval_fconstruct(&mut self.store, q, opts)?;
                let members = self.store.members_of(&id, false)?.len();
                Outcome::Folder {
                    id,
                    name: q.folder_name.clone(),
                    members,
                }
            }
            Query::Pconstruct(q) => {
                let out = eval_pconstruct(&mut self.store, q, &self.config.search, opts)?;
                Outcome::PathNode {
                    id: out.path_node,
                    name: q.path_name.clone(),
                    paths: out.paths,
                    truncated: out.truncated,
                }
            }
        })
    }

    /// Describes how a query would run without running it. Path queries
    /// still evaluate their endpoint constraints to report the set sizes.
    pub fn explain(&self, text: &str) -> Result<String> {
        let q = parse(text)?;
        let mut out = String::new();
        match &q {
            Query::Select(s) => explain_select(&mut out, &self.store, s),
            Query::Apply(a) => {
                let _ = writeln!(out, "Apply {}", a.scope);
                out.push_str(&indent(&plan_apply(&self.store, a)?.explain()));
            }
            Query::Fconstruct(f) => {
                let _ = writeln!(out, "Fconstruct {}", f.folder_name);
                match &f.body {
                    FolderBody::Members {
                        member_var,
                        patterns,
                        filters,
                    } => {
                        let s = SelectQuery {
                            projection: vec![member_var.clone()],
                            patterns: patterns.clone(),
                            filters: filters.clone(),
                        };
                        let mut inner = String::new();
                        explain_select(&mut inner, &self.store, &s);
                        out.push_str(&indent(&inner));
                    }
                    FolderBody::Children(c) => {
                        let _ = writeln!(out, "  Children {}", c.join(", "));
                    }
                }
            }
            Query::Pconstruct(p) => {
                let compiled = compile_query(&self.store, p, &self.config.exec)?;
                let cfg = &self.config.search;
                let _ = writeln!(out, "Pconstruct {}", p.path_name);
                let _ = writeln!(
                    out,
                    "  Starts {} [{} nodes]",
                    p.start_var,
                    compiled.starts.len()
                );
                let _ = writeln!(out, "  Ends {} [{} nodes]", p.end_var, compiled.ends.len());
                let _ = writeln!(
                    out,
                    "  PathSearch {} [{} states, max edges {}, {:?} reachability]",
                    p.regex,
                    compiled.automaton.state_count(),
                    cfg.max_edges,
                    cfg.reachability
                );
            }
        }
        Ok(out)
    }
}

fn explain_select(out: &mut String, store: &Store, q: &SelectQuery) {
    let p = plan(q, &ScopeContext::none(), store);
    for w in &p.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out.push_str(&p.tree.explain());
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}
