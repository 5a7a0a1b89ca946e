use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fpsparql::store::NamedNode;
use fpsparql::{fixture, Engine, Error, Outcome, ReachabilityStrategy, Store};

#[derive(Parser, Debug)]
#[command(
    name = "fpsparql",
    version,
    about = "Query graphs with folder and path nodes"
)]
struct Cli {
    /// Store directory; created on first write.
    #[arg(long, global = true, value_name = "DIR")]
    store: Option<PathBuf>,

    /// Print the operator tree instead of running queries.
    #[arg(long, global = true)]
    explain: bool,

    /// Longest path, in edges, that path queries consider.
    #[arg(long, global = true, value_name = "N")]
    max_edges: Option<usize>,

    /// Reachability test that prunes path search: traversal (default) or closure.
    #[arg(long, global = true, value_name = "STRATEGY")]
    reachability: Option<ReachabilityStrategy>,

    /// Keep at most this many paths per path query.
    #[arg(long, global = true, value_name = "N")]
    max_paths: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Tsv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a triple file into the store.
    Load { file: PathBuf },
    /// Run one query given inline or with --file.
    Query {
        text: Option<String>,
        #[arg(long, conflicts_with = "text")]
        file: Option<PathBuf>,
    },
    /// Read queries from standard input; a line holding only `;` ends each one.
    Repl,
    /// Write a folder's members or a path node's paths.
    Export { name: String, file: Option<PathBuf> },
    /// Show how a query would run.
    Explain { text: String },
    /// Generate a synthetic triple file.
    GenFixture {
        kind: FixtureKind,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
        events: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the store.
    Stats,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureKind {
    Biblio,
    Events,
}

enum Failure {
    Usage(String),
    Engine(Error),
    /// Already printed; only the exit code is left to deliver.
    Reported(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Engine(Error::Io(e))
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) => 1,
        Failure::Engine(Error::Parse(_)) => 2,
        Failure::Engine(Error::Io(_) | Error::Format(_)) => 4,
        Failure::Engine(_) => 3,
        Failure::Reported(code) => *code,
    }
}

fn report(f: &Failure) {
    match f {
        Failure::Usage(m) => eprintln!("usage error: {m}"),
        Failure::Engine(e) => eprintln!("error: {e}"),
        Failure::Reported(_) => {}
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(exit_code(&f))
        }
    }
}

fn store_dir(cli: &Cli) -> Result<&Path, Failure> {
    cli.store
        .as_deref()
        .ok_or_else(|| Failure::Usage("--store DIR is required".into()))
}

/// Opens the store at `dir`, or starts an empty one when nothing is there yet.
fn open(dir: &Path) -> Result<Store, Failure> {
    let empty = match fs::read_dir(dir) {
        Ok(mut entries) => entries.next().is_none(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => true,
        Err(e) => return Err(e.into()),
    };
    Ok(if empty {
        Store::new()
    } else {
        Store::open(dir)?
    })
}

fn engine(cli: &Cli) -> Result<Engine, Failure> {
    let mut e = Engine::with_store(open(store_dir(cli)?)?);
    let search = &mut e.config.search;
    if let Some(n) = cli.max_edges {
        search.max_edges = n;
    }
    if let Some(r) = cli.reachability {
        search.reachability = r;
    }
    search.max_paths = cli.max_paths.or(search.max_paths);
    Ok(e)
}

fn mutates(o: &Outcome) -> bool {
    !matches!(o, Outcome::Table(_))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let Format::Tsv = cli.format;
    let out = io::stdout();
    let mut out = out.lock();
    match &cli.command {
        Command::Load { file } => {
            let mut e = engine(&cli)?;
            let report = e.load_triples(BufReader::new(File::open(file)?))?;
            for (line, why) in &report.rejected_lines {
                eprintln!("{}:{line}: {why}", file.display());
            }
            e.persist(store_dir(&cli)?)?;
            writeln!(out, "{report}")?;
        }
        Command::Query { text, file } => {
            let text = match (text, file) {
                (Some(t), None) => t.clone(),
                (None, Some(f)) => fs::read_to_string(f)?,
                _ => return Err(Failure::Usage("give the query text or --file".into())),
            };
            let mut e = engine(&cli)?;
            if cli.explain {
                write!(out, "{}", e.explain(&text)?)?;
            } else {
                let o = e.execute(&text)?;
                if mutates(&o) {
                    e.persist(store_dir(&cli)?)?;
                }
                write!(out, "{o}")?;
            }
        }
        Command::Explain { text } => {
            let e = engine(&cli)?;
            write!(out, "{}", e.explain(text)?)?;
        }
        Command::Repl => repl(&cli, &mut out)?,
        Command::Export { name, file } => {
            let e = engine(&cli)?;
            let lines = export_lines(&e.store, name)?;
            match file {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    for l in &lines {
                        writeln!(w, "{l}")?;
                    }
                    w.flush()?;
                }
                None => {
                    for l in &lines {
                        writeln!(out, "{l}")?;
                    }
                }
            }
        }
        Command::GenFixture {
            kind,
            seed,
            events,
            out: path,
        } => {
            let mut sink: Box<dyn Write> = match path {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(BufWriter::new(io::stdout())),
            };
            match kind {
                FixtureKind::Biblio => sink.write_all(fixture::biblio().as_bytes())?,
                FixtureKind::Events => fixture::write_events(&mut sink, *seed, *events as usize)?,
            }
            sink.flush()?;
        }
        Command::Stats => {
            let e = engine(&cli)?;
            let s = &e.store;
            writeln!(out, "attribute rows\t{}", s.entity_len())?;
            writeln!(out, "relationship rows\t{}", s.graph_len())?;
            writeln!(out, "nodes\t{}", s.nodes().len())?;
            writeln!(out, "folders\t{}", s.folders().count())?;
            writeln!(out, "path nodes\t{}", s.path_nodes().count())?;
            let closure = s
                .cached_closure()
                .map_or("no".to_string(), |c| format!("{} pairs", c.pair_count()));
            writeln!(out, "closure\t{closure}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn export_lines(store: &Store, name: &str) -> Result<Vec<String>, Failure> {
    Ok(match store.lookup_name(name) {
        Some(NamedNode::Folder(id)) => store
            .members_of(id, true)?
            .iter()
            .map(|m| m.to_string())
            .collect(),
        Some(NamedNode::Path(id)) => store
            .path_node(id)
            .map(|p| p.paths.iter().map(|w| w.to_line()).collect())
            .unwrap_or_default(),
        None => {
            return Err(Error::Unknown {
                kind: "folder or path node",
                name: name.to_string(),
            }
            .into())
        }
    })
}

/// Statement errors are reported and the session continues; the exit code
/// reflects the last failure.
fn repl(cli: &Cli, out: &mut impl Write) -> Result<(), Failure> {
    let mut e = engine(cli)?;
    let dir = store_dir(cli)?.to_path_buf();
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut statement = String::new();
    let mut last_failure = None;
    let prompt = |fresh: bool| {
        if interactive {
            eprint!("{}", if fresh { "fpsparql> " } else { "      ... " });
        }
    };
    prompt(true);
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim() != ";" {
            statement.push_str(&line);
            statement.push('\n');
            prompt(false);
            continue;
        }
        let text = std::mem::take(&mut statement);
        if !text.trim().is_empty() {
            let result = if cli.explain {
                e.explain(&text).map(|s| write!(out, "{s}"))
            } else {
                e.execute(&text).map(|o| {
                    if mutates(&o) {
                        if let Err(err) = e.persist(&dir) {
                            return Err(io::Error::other(err.to_string()));
                        }
                    }
                    write!(out, "{o}")
                })
            };
            match result {
                Ok(written) => written?,
                Err(err) => {
                    let f = Failure::Engine(err);
                    report(&f);
                    last_failure = Some(exit_code(&f));
                }
            }
            out.flush()?;
        }
        prompt(true);
    }
    if !statement.trim().is_empty() {
        let f = Failure::Usage(
            "input ended inside a statement; end it with a line holding only ';'".into(),
        );
        report(&f);
        last_failure = Some(exit_code(&f));
    }
    match last_failure {
        Some(code) => Err(Failure::Reported(code)),
        None => Ok(()),
    }
}
