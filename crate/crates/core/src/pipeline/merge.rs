//! Indicator merging (entity resolution over indicators).
//!
//! Candidates are each indicator's nearest neighbours by embedding cosine,
//! restricted to the same concept. Each candidate pair is put to the chat
//! provider once; accepted pairs are unioned and every connected component
//! becomes one [`MergeRecord`] whose canonical member is the lowest id.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::choice::ask_label;
use super::{par_try_map, PipelineConfig, PipelineError, PromptTemplate};
use crate::metrics::normalize_text;
use crate::model::{EdgeId, EdgeStatus, IndicatorId, IndicatorStatus, MergeRecord, Project};
use crate::provider::{ChatProvider, EmbeddingProvider, EmbeddingVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeDecision {
    pub first: IndicatorId,
    pub second: IndicatorId,
    pub merge: bool,
    /// False for pairs merged without a provider call (identical text).
    pub asked: bool,
}

/// Indices of the `k` most similar other vectors for each vector, by
/// descending cosine with ties broken by ascending index.
pub fn nearest_neighbors(vectors: &[EmbeddingVector<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..vectors.len())
        .map(|i| {
            let mut scored: Vec<(f64, usize)> = (0..vectors.len())
                .filter(|&j| j != i)
                .map(|j| (vectors[i].cosine(&vectors[j]), j))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

type Pair = (IndicatorId, IndicatorId);

/// Candidate pairs for one merge round: `(ask, auto)` where `auto` pairs
/// have identical normalized text within a concept and merge without asking.
pub fn merge_candidates(
    project: &Project,
    embedder: &dyn EmbeddingProvider,
    k: usize,
) -> Result<(Vec<Pair>, Vec<Pair>), PipelineError> {
    let mut live: Vec<_> = project.live_indicators().collect();
    live.sort_by_key(|i| i.indicator_id);
    if live.len() < 2 {
        return Ok((Vec::new(), Vec::new()));
    }
    let texts: Vec<String> = live.iter().map(|i| i.text.clone()).collect();
    let vectors = embedder.embed(&texts)?;

    let mut auto = BTreeSet::new();
    let mut by_key: BTreeMap<(u64, String), IndicatorId> = BTreeMap::new();
    for ind in &live {
        if let Some(c) = ind.concept_id {
            let key = (c.0, normalize_text(&ind.text));
            match by_key.get(&key) {
                Some(&first) => {
                    auto.insert((first, ind.indicator_id));
                }
                None => {
                    by_key.insert(key, ind.indicator_id);
                }
            }
        }
    }

    let mut ask = BTreeSet::new();
    for (i, neighbours) in nearest_neighbors(&vectors, k).into_iter().enumerate() {
        let a = live[i];
        let Some(concept) = a.concept_id else { continue };
        for j in neighbours {
            let b = live[j];
            if b.concept_id != Some(concept) {
                continue;
            }
            let pair = if a.indicator_id < b.indicator_id {
                (a.indicator_id, b.indicator_id)
            } else {
                (b.indicator_id, a.indicator_id)
            };
            if !auto.contains(&pair) && normalize_text(&a.text) != normalize_text(&b.text) {
                ask.insert(pair);
            }
        }
    }
    Ok((ask.into_iter().collect(), auto.into_iter().collect()))
}

pub fn render_merge(template: &PromptTemplate, project: &Project, a: IndicatorId, b: IndicatorId) -> String {
    let ia = project.indicator(a).expect("candidate exists");
    let ib = project.indicator(b).expect("candidate exists");
    let concept = ia
        .concept_id
        .and_then(|c| project.concept(c))
        .map(|c| c.name.as_str())
        .unwrap_or("");
    let sa = project.sentence(ia.sentence_id).map(|s| s.text.as_str()).unwrap_or("");
    let sb = project.sentence(ib.sentence_id).map(|s| s.text.as_str()).unwrap_or("");
    template.render(&[
        ("concept", concept),
        ("indicator1", &ia.text),
        ("sentence1", sa),
        ("indicator2", &ib.text),
        ("sentence2", sb),
    ])
}

/// Runs one merge round and returns the complete set of merge records
/// (existing records extended by the new decisions) plus every decision.
pub fn merge_indicators(
    project: &Project,
    embedder: &dyn EmbeddingProvider,
    chat: &dyn ChatProvider,
    config: &PipelineConfig,
) -> Result<(Vec<MergeRecord>, Vec<MergeDecision>), PipelineError> {
    let (ask, auto) = merge_candidates(project, embedder, config.nearest_k)?;
    let answers = par_try_map(&ask, config.parallelism, |&(a, b)| {
        let prompt = render_merge(&config.prompts.merging, project, a, b);
        ask_label(chat, prompt, 2, config.temperature, "merge").map(|i| i == 0)
    })?;
    let mut decisions: Vec<MergeDecision> = auto
        .iter()
        .map(|&(first, second)| MergeDecision {
            first,
            second,
            merge: true,
            asked: false,
        })
        .collect();
    decisions.extend(ask.iter().zip(answers).map(|(&(first, second), merge)| MergeDecision {
        first,
        second,
        merge,
        asked: true,
    }));
    decisions.sort_by_key(|d| (d.first, d.second));
    let accepted: Vec<_> = decisions
        .iter()
        .filter(|d| d.merge)
        .map(|d| (d.first, d.second))
        .collect();
    Ok((merge_records_from_pairs(&project.merge_records, &accepted), decisions))
}

struct UnionFind {
    parent: BTreeMap<IndicatorId, IndicatorId>,
}

impl UnionFind {
    fn find(&mut self, x: IndicatorId) -> IndicatorId {
        let p = *self.parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent.insert(x, root);
        root
    }

    fn union(&mut self, a: IndicatorId, b: IndicatorId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller id as root so roots are canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
        }
    }
}

/// Connected components of `existing ∪ pairs`, canonical = lowest id.
pub fn merge_records_from_pairs(
    existing: &[MergeRecord],
    pairs: &[(IndicatorId, IndicatorId)],
) -> Vec<MergeRecord> {
    let mut uf = UnionFind {
        parent: BTreeMap::new(),
    };
    for r in existing {
        for &a in &r.absorbed_indicator_ids {
            uf.union(r.canonical_indicator_id, a);
        }
    }
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    let ids: Vec<IndicatorId> = uf.parent.keys().copied().collect();
    let mut groups: BTreeMap<IndicatorId, Vec<IndicatorId>> = BTreeMap::new();
    for id in ids {
        let root = uf.find(id);
        if root != id {
            groups.entry(root).or_default().push(id);
        }
    }
    groups
        .into_iter()
        .map(|(canonical, mut absorbed)| {
            absorbed.sort();
            MergeRecord {
                canonical_indicator_id: canonical,
                absorbed_indicator_ids: absorbed,
            }
        })
        .collect()
}

/// Where each active pre-merge edge ended up.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRewrite {
    /// Active edge -> surviving edge (itself unless deduplicated).
    pub survivors: BTreeMap<EdgeId, EdgeId>,
    /// Edges whose two endpoints merged into one indicator; now deleted.
    pub collapsed: Vec<EdgeId>,
}

/// Installs `records`: absorbed indicators are retired, incident edges are
/// rewritten to the canonical ids and exact duplicates
/// `(cause, effect, sentence)` are folded into the lowest edge id.
pub fn apply_merge_records(project: &mut Project, records: Vec<MergeRecord>) -> EdgeRewrite {
    let mut target: BTreeMap<IndicatorId, IndicatorId> = BTreeMap::new();
    for r in &records {
        for &a in &r.absorbed_indicator_ids {
            target.insert(a, r.canonical_indicator_id);
        }
    }
    for ind in &mut project.indicators {
        if target.contains_key(&ind.indicator_id) {
            ind.status = IndicatorStatus::Deleted;
        }
    }
    project.merge_records = records;

    let mut rewrite = EdgeRewrite::default();
    let mut first_of: BTreeMap<(IndicatorId, IndicatorId, u64), EdgeId> = BTreeMap::new();
    project.causal_edges.sort_by_key(|e| e.edge_id);
    for e in project.causal_edges.iter_mut().filter(|e| e.is_active()) {
        let cause = *target.get(&e.cause_indicator_id).unwrap_or(&e.cause_indicator_id);
        let effect = *target.get(&e.effect_indicator_id).unwrap_or(&e.effect_indicator_id);
        if cause == effect {
            e.status = EdgeStatus::Deleted;
            rewrite.collapsed.push(e.edge_id);
            continue;
        }
        e.cause_indicator_id = cause;
        e.effect_indicator_id = effect;
        let key = (cause, effect, e.sentence_id.0);
        match first_of.get(&key) {
            Some(&survivor) => {
                e.status = EdgeStatus::Deleted;
                rewrite.survivors.insert(e.edge_id, survivor);
            }
            None => {
                first_of.insert(key, e.edge_id);
                rewrite.survivors.insert(e.edge_id, e.edge_id);
            }
        }
    }
    rewrite
}
