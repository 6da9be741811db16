//! Random project generation shared by the property suites.
#![allow(dead_code)]

use qualnet_core::model::{EdgeOrigin, IndicatorId, Project, SentenceId, Span};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const WORDS: &[&str] = &[
    "worry", "anger", "trust", "rent", "risk", "calm", "fear", "home", "talk", "care", "mood", "loss",
];

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_indicators: usize,
    pub max_edges: usize,
    pub max_concepts: usize,
    pub sentences: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            max_indicators: 50,
            max_edges: 120,
            max_concepts: 4,
            sentences: 4,
        }
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn phrase(rng: &mut StdRng) -> String {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// A valid project with partial concept mappings, some deletions and
/// edges confined to sentences.
pub fn random_project(seed: u64, shape: Shape) -> Project {
    let mut r = rng(seed);
    let mut p = Project::new(format!("rand-{seed}"));
    p.set_overview("Random project for property checks.").unwrap();
    let n_sent = r.random_range(1..=shape.sentences.max(1));
    let sentences: Vec<String> = (0..n_sent)
        .map(|_| (0..r.random_range(4..12)).map(|_| WORDS[r.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ") + ".")
        .collect();
    p.add_unit(&sentences.join(" "), &sentences);

    let n_concepts = r.random_range(0..=shape.max_concepts);
    let concepts: Vec<_> = (0..n_concepts)
        .map(|c| p.add_concept(&format!("concept {c}"), "defined", &format!("#00{c}0ff"), vec![]).unwrap())
        .collect();

    let n_ind = r.random_range(0..=shape.max_indicators);
    let mut by_sentence: Vec<Vec<IndicatorId>> = vec![Vec::new(); n_sent];
    for _ in 0..n_ind {
        let s = r.random_range(0..n_sent);
        let text = phrase(&mut r);
        let sentence_text = &p.sentences[s].text;
        let span = if r.random_bool(0.5) {
            qualnet_core::model::find_case_insensitive(sentence_text, &text)
        } else {
            let len = sentence_text.chars().count();
            let a = r.random_range(0..len - 1);
            let b = r.random_range(a + 1..=len);
            r.random_bool(0.3).then(|| Span::new(a, b))
        };
        let id = p.add_indicator(SentenceId(s as u64), &text, span).unwrap();
        if !concepts.is_empty() && r.random_bool(0.75) {
            let c = concepts[r.random_range(0..concepts.len())];
            p.assign_concept(id, Some(c), r.random_bool(0.3)).unwrap();
        }
        by_sentence[s].push(id);
    }

    let n_edges = r.random_range(0..=shape.max_edges);
    let origins = [EdgeOrigin::Pipeline, EdgeOrigin::Cooccurrence, EdgeOrigin::Cue, EdgeOrigin::Manual];
    for _ in 0..n_edges {
        let s = r.random_range(0..n_sent);
        let ids = &by_sentence[s];
        if ids.len() < 2 {
            continue;
        }
        let a = ids[r.random_range(0..ids.len())];
        let b = ids[r.random_range(0..ids.len())];
        if a != b {
            p.add_edge(a, b, origins[r.random_range(0..4)]).unwrap();
        }
    }

    let live: Vec<IndicatorId> = p.live_indicators().map(|i| i.indicator_id).collect();
    for id in live {
        if r.random_bool(0.05) {
            p.delete_indicator(id).unwrap();
        }
    }
    let active: Vec<_> = p.active_edges().map(|e| e.edge_id).collect();
    for id in active {
        if r.random_bool(0.05) {
            p.delete_edge(id).unwrap();
        }
    }
    qualnet_core::network::rebuild_concept_edges(&mut p);
    for _ in 0..r.random_range(0..5) {
        p.bump_revision();
    }
    p.canonicalize();
    p
}
