mod common;

use std::collections::BTreeSet;

use common::*;
use foonforge_core::foon::{merge_graphs, FoonGraph, UnitKey};
use foonforge_core::pipeline::sanitize_filename;
use foonforge_core::prompt::{schema_block, DishSpec, PromptPlan, Strategy as PromptStrategy};
use proptest::prelude::*;

fn unit_keys(g: &FoonGraph) -> BTreeSet<UnitKey> {
    g.units.iter().map(|u| u.key()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn text_round_trip(graph in valid_graph(10)) {
        check_round_trip(&graph)?;
    }

    #[test]
    fn merge_laws(a in valid_graph(5), b in valid_graph(5)) {
        prop_assert_eq!(merge_graphs(&a, &a), a.canonical());
        prop_assert_eq!(merge_graphs(&a, &FoonGraph::default()), a.canonical());
        prop_assert_eq!(merge_graphs(&FoonGraph::default(), &a), a.canonical());
        let ab = merge_graphs(&a, &b);
        prop_assert_eq!(unit_keys(&ab), unit_keys(&merge_graphs(&b, &a)));
        prop_assert!(ab.len() <= a.len() + b.len());
        prop_assert_eq!(merge_graphs(&ab, &ab), ab.clone());
    }

    #[test]
    fn metric_properties((dish, per_step, wrong_goal, hallucinate) in metric_case()) {
        check_metrics(&dish, &per_step, wrong_goal, hallucinate)?;
    }

    #[test]
    fn sanitized_names_are_stable(name in "\\PC{0,200}") {
        let once = sanitize_filename(&name);
        prop_assert_eq!(sanitize_filename(&once), once.clone());
        prop_assert!(!once.is_empty() && once.len() <= 120);
        prop_assert!(once.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'));
    }

    #[test]
    fn prompts_are_pure_and_grow_with_examples(
        dish_name in "[a-z]{1,8}( [a-z]{1,8})?",
        n in 1usize..4,
    ) {
        let dish = DishSpec::new("test", &dish_name, &["egg", "salt"], &["pan"]).unwrap();
        let examples: Vec<_> = (0..=n).map(|_| common_tree()).collect();
        let fewer = PromptPlan::new(PromptStrategy::ExampleBased).with_examples(examples[..n].to_vec());
        let more = PromptPlan::new(PromptStrategy::ExampleBased).with_examples(examples);
        let a = fewer.render(&dish).unwrap();
        prop_assert_eq!(&a, &fewer.render(&dish).unwrap());
        prop_assert_eq!(a.text.matches(schema_block()).count(), 1);
        prop_assert!(more.render(&dish).unwrap().text.len() > a.text.len());
        for strategy in [PromptStrategy::UserGuided, PromptStrategy::Contextual] {
            let plan = PromptPlan::new(strategy).with_instructions("fry gently");
            let p = plan.render(&dish).unwrap();
            prop_assert_eq!(p.text.matches(schema_block()).count(), 1);
            prop_assert_eq!(&p, &plan.render(&dish).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn retrieval_matches_brute_force((graph, goal, available) in retrieval_case(6)) {
        check_retrieval(&graph, &goal, &available)?;
    }
}

fn common_tree() -> foonforge_core::foon::TaskTree {
    foonforge_core::foon::TaskTree::new(macaroni_graph(), obj("mac and cheese", &[])).unwrap()
}

#[test]
fn mutation_suite_is_fully_flagged() {
    let checked = check_mutation_suite().unwrap();
    assert!(checked >= 20, "only {checked} mutants");
}
