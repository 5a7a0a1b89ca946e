//! Embedded graph query engine for SPARQL-style queries extended with
//! folder nodes (stored groups of nodes) and path nodes (stored sets of
//! paths matching a regular path expression).
//!
//! ```
//! use fpsparql::{fixture, Engine};
//!
//! let mut engine = Engine::new();
//! engine.load_triples(fixture::biblio().as_bytes()).unwrap();
//! let out = engine.execute("select ?p where { ?p publishedIn CAiSE . }").unwrap();
//! assert_eq!(out.table().unwrap().texts(), ["paper1", "paper3"]);
//! ```

pub mod engine;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod par;
pub mod parser;
pub mod path;
pub mod planner;
pub mod store;
pub mod value;

pub use engine::{Engine, EngineConfig, Outcome};
pub use error::{Error, Result};
pub use eval::{BindingTable, ExecOptions, ScanStats};
pub use par::ExecMode;
pub use parser::{parse, Query};
pub use path::{ReachabilityStrategy, SearchConfig};
pub use store::{LoadReport, PathWord, Store};
pub use value::{NodeId, Value};
