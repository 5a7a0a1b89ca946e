mod common;

use common::*;
use fpsparql::eval::{eval_select, ExecOptions};
use fpsparql::parser::{parse, Query, SelectQuery};
use fpsparql::planner::{plan_with, JoinOrder, OperatorTree, PlanOptions, ScopeContext};
use fpsparql::ExecMode;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn select(text: &str) -> SelectQuery {
    match parse(text).unwrap() {
        Query::Select(q) => q,
        other => panic!("not a select: {other:?}"),
    }
}

fn variants() -> Vec<PlanOptions> {
    let mut out = vec![PlanOptions::default()];
    out.push(PlanOptions {
        join_order: JoinOrder::AsWritten,
        ..PlanOptions::default()
    });
    out.push(PlanOptions {
        push_filters: false,
        ..PlanOptions::default()
    });
    out.push(PlanOptions {
        eliminate_redundancies: false,
        ..PlanOptions::default()
    });
    out
}

fn filter_depths(tree: &OperatorTree, depth: usize, out: &mut Vec<usize>) {
    match tree {
        OperatorTree::Scan(_) => {}
        OperatorTree::Filter { child, .. } => {
            out.push(depth);
            filter_depths(child, depth + 1, out);
        }
        OperatorTree::Join { left, right, .. } => {
            filter_depths(left, depth + 1, out);
            filter_depths(right, depth + 1, out);
        }
        OperatorTree::Project { child, .. } => filter_depths(child, depth + 1, out),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_plan_variant_matches_nested_loops(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = load(&random_store_text(&mut rng, 8, 2));
        let text = random_select_text(&mut rng, store.nodes().len());
        let q = select(&text);
        let want = naive_select(&store, &q, None);
        for opts in variants() {
            let tree = plan_with(&q, &ScopeContext::none(), &store, &opts).tree;
            for mode in [ExecMode::Sequential, ExecMode::Parallel] {
                let got = eval_select(&store, &tree, &ExecOptions::with_mode(mode)).unwrap();
                prop_assert_eq!(&got, &want, "{}\n{}", text, tree.explain());
            }
        }
    }

    #[test]
    fn plans_keep_every_pattern(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = load(&random_store_text(&mut rng, 8, 2));
        let q = select(&random_select_text(&mut rng, store.nodes().len()));
        let opts = PlanOptions { eliminate_redundancies: false, ..PlanOptions::default() };
        let tree = plan_with(&q, &ScopeContext::none(), &store, &opts).tree;
        prop_assert_eq!(tree.scans().len(), q.patterns.len());
    }
}

#[test]
fn pushed_filters_sit_no_higher_than_unpushed_ones() {
    let store = load(&fpsparql::fixture::biblio());
    let q = select("select ?p where { ?p @title ?t . ?p authoredBy ?a . ?a @name ?n . FILTER regex(?t, \"SQL\") . }");
    let depth = |push_filters| {
        let opts = PlanOptions {
            push_filters,
            ..PlanOptions::default()
        };
        let mut d = Vec::new();
        filter_depths(
            &plan_with(&q, &ScopeContext::none(), &store, &opts).tree,
            0,
            &mut d,
        );
        d
    };
    let (pushed, top) = (depth(true), depth(false));
    assert_eq!(top, [1]);
    assert_eq!(pushed.len(), 1);
    assert!(pushed[0] > top[0]);
}

#[test]
fn disconnected_patterns_still_produce_the_product() {
    let store = load("a @k x .\nb @k x .\nc @m y .\n");
    let q = select("select ?u ?v where { ?u @k x . ?v @m y . }");
    let got = fpsparql::eval::run_select(&store, &q, &ExecOptions::default()).unwrap();
    assert_eq!(got, naive_select(&store, &q, None));
    assert_eq!(got.len(), 2);
}
