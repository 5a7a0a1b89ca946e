use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const CITATION_PATH: &str = "pconstruct p2p1Path (?s, ?t, (?e ?n)* ?c (?n ?e)*) where {
  ?s @id p2 . ?t @id p1 . ?n @isA entityNode . ?e @isA edge . ?c @isA edge . ?c @label citedBy . }";

fn fpsparql(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpsparql"))
        .arg("--store")
        .arg(store)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn biblio_store(dir: &Path) -> std::path::PathBuf {
    let file = dir.join("biblio.nt");
    let store = dir.join("store");
    let o = fpsparql(
        &store,
        &["gen-fixture", "biblio", "--out", file.to_str().unwrap()],
    );
    assert!(o.status.success());
    let o = fpsparql(&store, &["load", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    store
}

#[test]
fn load_then_query_prints_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let store = biblio_store(dir.path());
    let o = fpsparql(&store, &["query", "select ?p where { ?p @type paper. }"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "p\npaper1\npaper2\npaper3\npaper4\n");
}

#[test]
fn load_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.nt");
    std::fs::write(&file, "a r b .\na @k \"v\" .\nnot a triple\n").unwrap();
    let o = fpsparql(&dir.path().join("s"), &["load", file.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let store = biblio_store(dir.path());
    let parse = fpsparql(&store, &["query", "select ?p where { ?p @type }"]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 1, column 28"));
    let eval = fpsparql(
        &store,
        &[
            "query",
            "(Missing) apply (select ?p where { ?p @type paper. })",
        ],
    );
    assert_eq!(eval.status.code(), Some(3));
    let io = fpsparql(
        &store,
        &["load", dir.path().join("absent.nt").to_str().unwrap()],
    );
    assert_eq!(io.status.code(), Some(4));
    let usage = fpsparql(&store, &["frobnicate"]);
    assert_eq!(usage.status.code(), Some(1));
    let no_store = Command::new(env!("CARGO_BIN_EXE_fpsparql"))
        .arg("stats")
        .output()
        .unwrap();
    assert_eq!(no_store.status.code(), Some(1));
}

#[test]
fn constructions_persist_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let store = biblio_store(dir.path());
    assert!(fpsparql(&store, &["query", CITATION_PATH]).status.success());
    let o = fpsparql(&store, &["export", "p2p1Path"]);
    assert_eq!(
        stdout(&o),
        "paper2 citedBy paper4 citedBy paper3 citedBy paper1\n"
    );

    let q = "fconstruct Nothing select ?p where { ?p @type nothing. }";
    assert!(fpsparql(&store, &["query", q]).status.success());
    let file = dir.path().join("empty.txt");
    let o = fpsparql(&store, &["export", "Nothing", file.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&file).unwrap(), "");

    assert_eq!(fpsparql(&store, &["export", "Nope"]).status.code(), Some(3));
}

#[test]
fn repl_output_matches_batch_output() {
    let dir = tempfile::tempdir().unwrap();
    let store = biblio_store(dir.path());
    let queries = [
        "select ?p ?y where {\n  ?p @year ?y .\n}",
        "fconstruct CAiSEPapers select ?p where { ?p publishedIn CAiSE . }",
        "(CAiSEPapers) apply (select ?p where { ?p @type paper . })",
    ];
    let repl_store = dir.path().join("repl");
    copy_dir(&store, &repl_store);

    let mut batch = String::new();
    for q in queries {
        batch += &stdout(&fpsparql(&store, &["query", q]));
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_fpsparql"))
        .arg("--store")
        .arg(&repl_store)
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        for q in queries {
            writeln!(stdin, "{q}\n;").unwrap();
        }
    }
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o), batch);
}

#[test]
fn explain_does_not_run_the_query() {
    let dir = tempfile::tempdir().unwrap();
    let store = biblio_store(dir.path());
    let q = "fconstruct F select ?p where { ?p @type paper . }";
    let o = fpsparql(&store, &["--explain", "query", q]);
    assert!(stdout(&o).starts_with("Fconstruct F"), "{}", stdout(&o));
    let o = fpsparql(&store, &["stats"]);
    assert!(stdout(&o).contains("folders\t0"), "{}", stdout(&o));
}

#[test]
fn event_fixture_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let gen = |name: &str| {
        let f = dir.path().join(name);
        let o = fpsparql(
            &store,
            &[
                "gen-fixture",
                "events",
                "--seed",
                "42",
                "--events",
                "300",
                "--out",
                f.to_str().unwrap(),
            ],
        );
        assert!(o.status.success());
        std::fs::read(f).unwrap()
    };
    assert_eq!(gen("a.nt"), gen("b.nt"));
    let o = fpsparql(&store, &["gen-fixture", "events", "--events", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), to.join(entry.file_name())).unwrap();
    }
}
