mod common;

use std::collections::BTreeSet;

use common::*;
use fpsparql::eval::{eval_apply, resolve_scope, ExecOptions};
use fpsparql::parser::{parse, ApplyQuery, Query, ScopeExpr};
use fpsparql::{Engine, ExecMode, NodeId, Outcome, Store};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn apply(text: &str) -> ApplyQuery {
    match parse(text).unwrap() {
        Query::Apply(q) => q,
        other => panic!("not an apply: {other:?}"),
    }
}

fn biblio_engine() -> Engine {
    let mut e = Engine::new();
    e.load_triples(fpsparql::fixture::biblio().as_bytes())
        .unwrap();
    for (_, q) in BIBLIO_CORPUS {
        if !q.starts_with('(') {
            e.execute(q).unwrap();
        }
    }
    e
}

fn members(store: &Store, expr: &ScopeExpr) -> BTreeSet<NodeId> {
    resolve_scope(store, expr)
        .unwrap()
        .members
        .into_iter()
        .collect()
}

fn corpus(name: &str) -> &'static str {
    BIBLIO_CORPUS.iter().find(|(n, _)| *n == name).unwrap().1
}

#[test]
fn scoped_author_and_title_queries_match_the_oracle() {
    let e = biblio_engine();
    for (name, want) in [
        ("author1 in caise", vec!["paper1"]),
        ("author1 in caise or sigmod", vec!["paper1", "paper2"]),
        ("sql titles on citation path", vec!["paper3"]),
    ] {
        let q = apply(corpus(name));
        let got = eval_apply(&e.store, &q, &ExecOptions::default()).unwrap();
        let scope = members(&e.store, &q.scope);
        assert_eq!(
            got,
            naive_select(&e.store, &q.inner, Some(&scope)),
            "{name}"
        );
        assert_eq!(got.texts(), want, "{name}");
    }
}

#[test]
fn rdf_chapter_query_returns_the_web_page() {
    let mut e = Engine::new();
    e.load_triples(fpsparql::fixture::rdf_sample().as_bytes())
        .unwrap();
    let out = e.execute(corpus("web page of rdf chapter author")).unwrap();
    assert_eq!(out.table().unwrap().texts(), ["http://example.org/~olaf"]);
}

#[test]
fn folder_of_folders_unions_the_yearly_folders() {
    let e = biblio_engine();
    let all = members(&e.store, &ScopeExpr::Named("SIGMOD".into()));
    let parts = ["SIGMOD08", "SIGMOD09", "SIGMOD10"]
        .iter()
        .fold(BTreeSet::new(), |acc, n| {
            &acc | &members(&e.store, &ScopeExpr::Named(n.to_string()))
        });
    assert_eq!(all, parts);
}

#[test]
fn unknown_scope_is_an_error() {
    let e = biblio_engine();
    let q = apply("(Nope) apply (select ?p where { ?p @type paper . })");
    assert!(matches!(
        eval_apply(&e.store, &q, &ExecOptions::default()),
        Err(fpsparql::Error::Unknown { .. })
    ));
}

#[test]
fn constant_subjects_are_scoped_too() {
    let e = biblio_engine();
    let run = |paper: &str| {
        let q = apply(&format!(
            "(CAiSEPapers) apply (select ?a where {{ {paper} authoredBy ?a . }})"
        ));
        eval_apply(&e.store, &q, &ExecOptions::default())
            .unwrap()
            .texts()
    };
    assert_eq!(run("paper1"), ["author1"]);
    assert!(run("paper2").is_empty());
}

#[test]
fn reconstructing_a_name_is_a_conflict() {
    let mut e = biblio_engine();
    assert!(matches!(
        e.execute(corpus("sigmod folder")),
        Err(fpsparql::Error::Conflict(_))
    ));
}

fn named(n: &str) -> Box<ScopeExpr> {
    Box::new(ScopeExpr::Named(n.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn scoped_queries_match_the_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = load(&random_store_text(&mut rng, 8, 2));
        let nodes: Vec<NodeId> = store.nodes().into_iter().collect();
        for name in ["A", "B"] {
            let picked: Vec<NodeId> = nodes.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            store.create_folder(name, &[], picked).unwrap();
        }
        let inner = random_select_text(&mut rng, nodes.len());
        let scope = ["A", "B", "A union B", "A intersect B", "A minus B"].choose(&mut rng).unwrap();
        let q = apply(&format!("({scope}) apply ({inner})"));
        let members = members(&store, &q.scope);
        let want = naive_select(&store, &q.inner, Some(&members));
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let got = eval_apply(&store, &q, &ExecOptions::with_mode(mode)).unwrap();
            prop_assert_eq!(&got, &want, "({}) apply ({})", scope, inner);
        }
    }

    #[test]
    fn scope_composition_follows_set_algebra(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = load(&random_store_text(&mut rng, 12, 1));
        let nodes: Vec<NodeId> = store.nodes().into_iter().collect();
        let mut sets = Vec::new();
        for name in ["A", "B", "C"] {
            let picked: BTreeSet<NodeId> = nodes.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            store.create_folder(name, &[], picked.clone()).unwrap();
            sets.push(picked);
        }
        let (a, b, c) = (&sets[0], &sets[1], &sets[2]);
        let m = |e: ScopeExpr| members(&store, &e);
        prop_assert_eq!(m(ScopeExpr::Union(named("A"), named("B"))), a | b);
        prop_assert_eq!(m(ScopeExpr::Intersect(named("A"), named("B"))), a & b);
        prop_assert_eq!(m(ScopeExpr::Minus(named("A"), named("B"))), a - b);
        prop_assert_eq!(
            m(ScopeExpr::Union(named("A"), named("B"))),
            m(ScopeExpr::Union(named("B"), named("A")))
        );
        let left = ScopeExpr::Intersect(Box::new(ScopeExpr::Union(named("A"), named("B"))), named("C"));
        prop_assert_eq!(m(left), &(a | b) & c);
    }
}

#[test]
fn event_queries_agree_across_modes() {
    let text = fpsparql::fixture::events(7, 800);
    let run = |mode| {
        let mut e = Engine::new();
        e.config.exec = ExecOptions::with_mode(mode);
        e.load_triples(text.as_bytes()).unwrap();
        EVENTS_CORPUS
            .iter()
            .map(|(_, q)| e.execute(q).unwrap())
            .collect::<Vec<Outcome>>()
    };
    assert_eq!(run(ExecMode::Sequential), run(ExecMode::Parallel));
}
