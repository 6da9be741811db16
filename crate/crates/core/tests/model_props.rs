mod common;

use proptest::prelude::*;
use qualnet_core::model::{
    validate_project, ConceptId, ConceptPatch, EdgeId, EdgeOrigin, IndicatorId, IndicatorPatch, Project, Span,
};
use qualnet_core::network::rebuild_concept_edges;
use qualnet_core::pipeline::{apply_merge_records, merge_records_from_pairs};

#[derive(Clone, Debug)]
enum Op {
    AddConcept(u8),
    RenameConcept(u8, u8),
    RemoveConcept(u8),
    Map(u8, Option<u8>, bool),
    EditText(u8, u8),
    EditSpan(u8, u8, u8),
    DeleteIndicator(u8),
    AddEdge(u8, u8),
    DeleteEdge(u8),
    Merge(u8, u8),
    AddReferences(u8, u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        any::<u8>().prop_map(Op::AddConcept),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::RenameConcept(a, b)),
        any::<u8>().prop_map(Op::RemoveConcept),
        (any::<u8>(), prop::option::of(any::<u8>()), any::<bool>()).prop_map(|(a, b, c)| Op::Map(a, b, c)),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::EditText(a, b)),
        (any::<u8>(), any::<u8>(), any::<u8>()).prop_map(|(a, b, c)| Op::EditSpan(a, b, c)),
        any::<u8>().prop_map(Op::DeleteIndicator),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::AddEdge(a, b)),
        any::<u8>().prop_map(Op::DeleteEdge),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::Merge(a, b)),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::AddReferences(a, b)),
    ]
}

fn pick<T: Copy>(v: &[T], i: u8) -> Option<T> {
    (!v.is_empty()).then(|| v[i as usize % v.len()])
}

fn apply(p: &mut Project, op: &Op) -> bool {
    let inds: Vec<IndicatorId> = p.indicators.iter().map(|i| i.indicator_id).collect();
    let concepts: Vec<ConceptId> = p.concepts.iter().map(|c| c.concept_id).collect();
    let edges: Vec<EdgeId> = p.causal_edges.iter().map(|e| e.edge_id).collect();
    let ok = match *op {
        Op::AddConcept(n) => p.add_concept(&format!("c{}", n % 8), "d", "#ffffff", vec![]).is_ok(),
        Op::RenameConcept(c, n) => pick(&concepts, c).is_some_and(|c| {
            p.update_concept(c, &ConceptPatch { name: Some(format!("c{}", n % 8)), ..Default::default() }).is_ok()
        }),
        Op::RemoveConcept(c) => pick(&concepts, c).is_some_and(|c| p.remove_concept(c).is_ok()),
        Op::Map(i, c, manual) => pick(&inds, i).is_some_and(|i| {
            let c = c.and_then(|c| pick(&concepts, c));
            p.assign_concept(i, c, manual).is_ok()
        }),
        Op::EditText(i, w) => pick(&inds, i).is_some_and(|i| {
            let text = common::WORDS[w as usize % common::WORDS.len()].to_string();
            p.edit_indicator(i, &IndicatorPatch { text: Some(text), ..Default::default() }).is_ok()
        }),
        Op::EditSpan(i, a, b) => pick(&inds, i).is_some_and(|i| {
            let span = Span::new(a as usize % 30, b as usize % 30);
            p.edit_indicator(i, &IndicatorPatch { span: Some(span), ..Default::default() }).is_ok()
        }),
        Op::DeleteIndicator(i) => pick(&inds, i).is_some_and(|i| p.delete_indicator(i).is_ok()),
        Op::AddEdge(a, b) => match (pick(&inds, a), pick(&inds, b)) {
            (Some(a), Some(b)) => p.add_edge(a, b, EdgeOrigin::Manual).is_ok(),
            _ => false,
        },
        Op::DeleteEdge(e) => pick(&edges, e).is_some_and(|e| p.delete_edge(e).is_ok()),
        Op::Merge(a, b) => match (pick(&inds, a), pick(&inds, b)) {
            (Some(a), Some(b)) if a != b => {
                let live = |id| p.indicator(id).is_some_and(|i| i.is_live());
                let absorbed: Vec<IndicatorId> = p.merge_records.iter().flat_map(|r| r.absorbed_indicator_ids.clone()).collect();
                if live(a) && live(b) && !absorbed.contains(&a) && !absorbed.contains(&b) {
                    let records = merge_records_from_pairs(&p.merge_records, &[(a, b)]);
                    apply_merge_records(p, records);
                    true
                } else {
                    false
                }
            }
            _ => false,
        },
        Op::AddReferences(c, n) => pick(&concepts, c).is_some_and(|c| {
            let refs = (0..n % 6).map(|k| format!("r{k}")).collect();
            p.update_concept(c, &ConceptPatch { references: Some(refs), ..Default::default() }).is_ok()
        }),
    };
    if ok {
        rebuild_concept_edges(p);
        p.bump_revision();
    }
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operations_preserve_every_invariant(seed in any::<u64>(), ops in prop::collection::vec(op(), 1..40)) {
        let mut p = common::random_project(seed, common::Shape { max_indicators: 20, max_edges: 30, ..Default::default() });
        prop_assert_eq!(validate_project(&p), Vec::<String>::new());
        for op in &ops {
            let rev = p.revision;
            let changed = apply(&mut p, op);
            let violations = validate_project(&p);
            prop_assert!(violations.is_empty(), "{:?} broke {:?}", op, violations);
            prop_assert!(p.revision >= rev);
            prop_assert_eq!(p.revision > rev, changed);
        }
    }
}
