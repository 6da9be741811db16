//! Indicator and concept graphs and the quantities the exploration views
//! display: degrees, shares, top-degree filtering, components and semantic
//! search.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{Concept, ConceptEdge, ConceptId, EdgeId, EdgeOrigin, IndicatorId, Project, SentenceId};
use crate::num::{Percentage, Scalar};
use crate::provider::{EmbeddingProvider, EmbeddingVector, ProviderError};

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("no mapped indicators")]
    NoMappedIndicators,
    #[error("no concept-level edges")]
    NoEdges,
    #[error("unknown node {0}")]
    UnknownNode(IndicatorId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: IndicatorId,
    pub text: String,
    pub concept_id: Option<ConceptId>,
    pub sentence_id: SentenceId,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: EdgeId,
    pub cause: IndicatorId,
    pub effect: IndicatorId,
    pub origin: EdgeOrigin,
}

/// Live indicators and the active edges between them, sorted by id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl IndicatorGraph {
    pub fn node(&self, id: IndicatorId) -> Option<&GraphNode> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    /// The subgraph on `keep`, with degrees recomputed.
    pub fn induced(&self, keep: &BTreeSet<IndicatorId>) -> IndicatorGraph {
        let nodes = self.nodes.iter().filter(|n| keep.contains(&n.id)).cloned().collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep.contains(&e.cause) && keep.contains(&e.effect))
            .cloned()
            .collect();
        with_degrees(nodes, edges)
    }
}

fn with_degrees(mut nodes: Vec<GraphNode>, edges: Vec<GraphEdge>) -> IndicatorGraph {
    let mut degree: BTreeMap<IndicatorId, usize> = BTreeMap::new();
    for e in &edges {
        *degree.entry(e.cause).or_default() += 1;
        *degree.entry(e.effect).or_default() += 1;
    }
    for n in &mut nodes {
        n.degree = degree.get(&n.id).copied().unwrap_or(0);
    }
    IndicatorGraph { nodes, edges }
}

pub fn build_indicator_graph(project: &Project) -> IndicatorGraph {
    let mut nodes: Vec<GraphNode> = project
        .live_indicators()
        .map(|i| GraphNode {
            id: i.indicator_id,
            text: i.text.clone(),
            concept_id: i.concept_id,
            sentence_id: i.sentence_id,
            degree: 0,
        })
        .collect();
    nodes.sort_by_key(|n| n.id);
    let live: BTreeSet<IndicatorId> = nodes.iter().map(|n| n.id).collect();
    let mut edges: Vec<GraphEdge> = project
        .active_edges()
        .filter(|e| live.contains(&e.cause_indicator_id) && live.contains(&e.effect_indicator_id))
        .map(|e| GraphEdge {
            id: e.edge_id,
            cause: e.cause_indicator_id,
            effect: e.effect_indicator_id,
            origin: e.origin,
        })
        .collect();
    edges.sort_by_key(|e| e.id);
    with_degrees(nodes, edges)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub concept_id: ConceptId,
    pub name: String,
    pub color: String,
    pub indicator_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptGraph {
    pub nodes: Vec<ConceptNode>,
    /// Keyed by ordered `(cause concept, effect concept)`; self-loops kept.
    pub edges: Vec<ConceptEdge>,
    pub mapped_indicators: usize,
    /// Indicator edges with both endpoints mapped; equals the weight sum.
    pub total_indicator_edges: usize,
    /// Indicator edges left out because an endpoint is unmapped.
    pub excluded_edges: usize,
}

impl ConceptGraph {
    pub fn node(&self, id: ConceptId) -> Option<&ConceptNode> {
        self.nodes.iter().find(|n| n.concept_id == id)
    }

    pub fn edge(&self, cause: ConceptId, effect: ConceptId) -> Option<&ConceptEdge> {
        self.edges
            .iter()
            .find(|e| e.cause_concept_id == cause && e.effect_concept_id == effect)
    }
}

pub fn consolidate(graph: &IndicatorGraph, concepts: &[Concept]) -> ConceptGraph {
    let known: BTreeSet<ConceptId> = concepts.iter().map(|c| c.concept_id).collect();
    let concept_of: BTreeMap<IndicatorId, ConceptId> = graph
        .nodes
        .iter()
        .filter_map(|n| n.concept_id.filter(|c| known.contains(c)).map(|c| (n.id, c)))
        .collect();
    let mut counts: BTreeMap<ConceptId, usize> = BTreeMap::new();
    for c in concept_of.values() {
        *counts.entry(*c).or_default() += 1;
    }
    let mut grouped: BTreeMap<(ConceptId, ConceptId), Vec<EdgeId>> = BTreeMap::new();
    let mut excluded = 0;
    for e in &graph.edges {
        match (concept_of.get(&e.cause), concept_of.get(&e.effect)) {
            (Some(&a), Some(&b)) => grouped.entry((a, b)).or_default().push(e.id),
            _ => excluded += 1,
        }
    }
    let mut nodes: Vec<ConceptNode> = concepts
        .iter()
        .map(|c| ConceptNode {
            concept_id: c.concept_id,
            name: c.name.clone(),
            color: c.color.clone(),
            indicator_count: counts.get(&c.concept_id).copied().unwrap_or(0),
        })
        .collect();
    nodes.sort_by_key(|n| n.concept_id);
    let edges: Vec<ConceptEdge> = grouped
        .into_iter()
        .map(|((cause, effect), mut ids)| {
            ids.sort();
            ConceptEdge {
                cause_concept_id: cause,
                effect_concept_id: effect,
                weight: ids.len(),
                contributing_edge_ids: ids,
            }
        })
        .collect();
    ConceptGraph {
        nodes,
        total_indicator_edges: edges.iter().map(|e| e.weight).sum(),
        mapped_indicators: concept_of.len(),
        excluded_edges: excluded,
        edges,
    }
}

pub fn concept_graph(project: &Project) -> ConceptGraph {
    consolidate(&build_indicator_graph(project), &project.concepts)
}

/// Recomputes `project.concept_edges` from the indicator level.
pub fn rebuild_concept_edges(project: &mut Project) {
    project.concept_edges = concept_graph(project).edges;
}

/// Share of mapped indicators assigned to `concept`.
pub fn concept_share<T: Scalar>(graph: &ConceptGraph, concept: ConceptId) -> Result<Percentage<T>, NetworkError> {
    let node = graph.node(concept).ok_or(NetworkError::UnknownConcept(concept))?;
    Percentage::of(node.indicator_count, graph.mapped_indicators).ok_or(NetworkError::NoMappedIndicators)
}

/// Share of mapped-endpoint indicator edges carried by `edge`.
pub fn edge_share<T: Scalar>(graph: &ConceptGraph, edge: &ConceptEdge) -> Result<Percentage<T>, NetworkError> {
    Percentage::of(edge.weight, graph.total_indicator_edges).ok_or(NetworkError::NoEdges)
}

/// Number of nodes kept by [`degree_filter`]: `ceil(fraction * n)`.
pub fn retained_count(fraction: f64, n: usize) -> usize {
    // tolerate float noise such as 0.3 * 10 = 3.0000000000000004
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (k as usize).min(n)
}

/// The `ceil(fraction * |nodes|)` highest-degree nodes (ties: lower id) and
/// the subgraph they induce.
pub fn degree_filter(graph: &IndicatorGraph, fraction: f64) -> Result<IndicatorGraph, NetworkError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(NetworkError::InvalidFraction(fraction));
    }
    let mut ranked: Vec<&GraphNode> = graph.nodes.iter().collect();
    ranked.sort_by(|a, b| b.degree.cmp(&a.degree).then(a.id.cmp(&b.id)));
    let keep: BTreeSet<IndicatorId> = ranked
        .into_iter()
        .take(retained_count(fraction, graph.nodes.len()))
        .map(|n| n.id)
        .collect();
    Ok(graph.induced(&keep))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Node(IndicatorId),
    Edge(EdgeId),
}

/// The weakly connected component containing the selection.
pub fn component_of(graph: &IndicatorGraph, selection: Selection) -> Result<IndicatorGraph, NetworkError> {
    let start = match selection {
        Selection::Node(id) => graph.node(id).ok_or(NetworkError::UnknownNode(id))?.id,
        Selection::Edge(id) => {
            graph
                .edges
                .iter()
                .find(|e| e.id == id)
                .ok_or(NetworkError::UnknownEdge(id))?
                .cause
        }
    };
    let mut adj: BTreeMap<IndicatorId, Vec<IndicatorId>> = BTreeMap::new();
    for e in &graph.edges {
        adj.entry(e.cause).or_default().push(e.effect);
        adj.entry(e.effect).or_default().push(e.cause);
    }
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    Ok(graph.induced(&seen))
}

/// Indicator embeddings keyed by text, so edits only re-embed changed text.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingCache {
    vectors: BTreeMap<String, EmbeddingVector<f64>>,
}

impl EmbeddingCache {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&EmbeddingVector<f64>> {
        self.vectors.get(text)
    }

    /// Embeds every text not yet cached, in one provider call.
    pub fn fill<'a>(
        &mut self,
        texts: impl IntoIterator<Item = &'a str>,
        embedder: &dyn EmbeddingProvider,
    ) -> Result<(), ProviderError> {
        let missing: Vec<String> = texts
            .into_iter()
            .filter(|t| !self.vectors.contains_key(*t))
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if missing.is_empty() {
            return Ok(());
        }
        let vectors = embedder.embed(&missing)?;
        self.vectors.extend(missing.into_iter().zip(vectors));
        Ok(())
    }

    /// Drops vectors of texts no longer in use.
    pub fn retain_texts(&mut self, live: &BTreeSet<&str>) {
        self.vectors.retain(|k, _| live.contains(k.as_str()));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchHit<T> {
    pub indicator_id: IndicatorId,
    pub text: String,
    pub similarity: T,
}

/// Top-`k` nodes by cosine similarity to `query`, descending, ties by id.
pub fn semantic_search<T: Scalar>(
    query: &str,
    graph: &IndicatorGraph,
    embedder: &dyn EmbeddingProvider,
    cache: &mut EmbeddingCache,
    k: usize,
) -> Result<Vec<SearchHit<T>>, NetworkError> {
    if k == 0 {
        return Err(NetworkError::InvalidK);
    }
    if graph.nodes.is_empty() {
        return Err(NetworkError::EmptyGraph);
    }
    let q = embedder
        .embed(&[query.to_string()])?
        .pop()
        .ok_or_else(|| ProviderError::Rejected("no query embedding returned".into()))?;
    cache.fill(graph.nodes.iter().map(|n| n.text.as_str()), embedder)?;
    let mut hits: Vec<SearchHit<T>> = graph
        .nodes
        .iter()
        .map(|n| SearchHit {
            indicator_id: n.id,
            text: n.text.clone(),
            similarity: T::from_f64(q.cosine(cache.get(&n.text).expect("filled"))).unwrap_or_else(T::zero),
        })
        .collect();
    hits.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.indicator_id.cmp(&b.indicator_id))
    });
    hits.truncate(k);
    Ok(hits)
}

// ---- wire format ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireConceptNode {
    pub id: ConceptId,
    pub name: String,
    pub color: String,
    pub indicator_count: usize,
    /// Percentage of mapped indicators; absent when none are mapped.
    pub share: Option<Percentage<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireConceptEdge {
    pub cause: ConceptId,
    pub effect: ConceptId,
    pub weight: usize,
    pub contributing_edge_ids: Vec<EdgeId>,
    pub share: Percentage<f64>,
}

/// The JSON document consumed by the web client and written by `export`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkExport {
    pub project_id: String,
    pub revision: u64,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub concept_nodes: Vec<WireConceptNode>,
    pub concept_edges: Vec<WireConceptEdge>,
    pub total_indicator_edges: usize,
    pub excluded_edges: usize,
}

pub fn export_graphs(project: &Project, graph: &IndicatorGraph, concepts: &ConceptGraph) -> NetworkExport {
    NetworkExport {
        project_id: project.project_id.clone(),
        revision: project.revision,
        nodes: graph.nodes.clone(),
        edges: graph.edges.clone(),
        concept_nodes: concepts
            .nodes
            .iter()
            .map(|n| WireConceptNode {
                id: n.concept_id,
                name: n.name.clone(),
                color: n.color.clone(),
                indicator_count: n.indicator_count,
                share: concept_share(concepts, n.concept_id).ok(),
            })
            .collect(),
        concept_edges: concepts
            .edges
            .iter()
            .map(|e| WireConceptEdge {
                cause: e.cause_concept_id,
                effect: e.effect_concept_id,
                weight: e.weight,
                contributing_edge_ids: e.contributing_edge_ids.clone(),
                share: edge_share(concepts, e).expect("an edge exists"),
            })
            .collect(),
        total_indicator_edges: concepts.total_indicator_edges,
        excluded_edges: concepts.excluded_edges,
    }
}

pub fn export_network(project: &Project) -> NetworkExport {
    let graph = build_indicator_graph(project);
    let concepts = consolidate(&graph, &project.concepts);
    export_graphs(project, &graph, &concepts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::HashingEmbedder;

    /// One sentence holding `n` indicators; edges and mapping by index.
    fn project(n: usize, edges: &[(usize, usize)], concepts: &[Option<usize>]) -> (Project, Vec<IndicatorId>) {
        let mut p = Project::new("n");
        p.add_unit("s", &["s".into()]);
        let ids: Vec<IndicatorId> = (0..n)
            .map(|i| p.add_indicator(SentenceId(0), &format!("indicator {i}"), None).unwrap())
            .collect();
        let cids: Vec<ConceptId> = (0..3)
            .map(|c| p.add_concept(&format!("C{c}"), "", "#000000", vec![]).unwrap())
            .collect();
        for (i, c) in concepts.iter().enumerate() {
            if let Some(c) = c {
                p.assign_concept(ids[i], Some(cids[*c]), false).unwrap();
            }
        }
        for &(a, b) in edges {
            p.add_edge(ids[a], ids[b], EdgeOrigin::Manual).unwrap();
        }
        (p, ids)
    }

    #[test]
    fn path_degrees() {
        let (p, _) = project(3, &[(0, 1), (1, 2)], &[]);
        let g = build_indicator_graph(&p);
        assert_eq!(g.nodes.iter().map(|n| n.degree).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(build_indicator_graph(&Project::new("e")), IndicatorGraph::default());
    }

    #[test]
    fn deleting_a_node_drops_incident_edges() {
        let (mut p, ids) = project(3, &[(0, 1), (1, 2)], &[]);
        p.delete_indicator(ids[1]).unwrap();
        let g = build_indicator_graph(&p);
        assert_eq!(g.nodes.len(), 2);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn consolidation_weights() {
        // A = C0, B = C1: a1->b1, a2->b2, b3->a3
        let (p, _) = project(
            6,
            &[(0, 1), (2, 3), (5, 4)],
            &[Some(0), Some(1), Some(0), Some(1), Some(0), Some(1)],
        );
        let cg = concept_graph(&p);
        let ab = cg.edge(ConceptId(0), ConceptId(1)).unwrap();
        let ba = cg.edge(ConceptId(1), ConceptId(0)).unwrap();
        assert_eq!((ab.weight, ba.weight), (2, 1));
        assert_eq!(cg.total_indicator_edges, 3);
    }

    #[test]
    fn self_loops_and_exclusions() {
        let (p, _) = project(3, &[(0, 1), (1, 2)], &[Some(0), Some(0), None]);
        let cg = concept_graph(&p);
        assert_eq!(cg.edges.len(), 1);
        assert_eq!(cg.edges[0].cause_concept_id, cg.edges[0].effect_concept_id);
        assert_eq!(cg.excluded_edges, 1);
    }

    #[test]
    fn shares() {
        let mut cg = ConceptGraph {
            nodes: vec![ConceptNode {
                concept_id: ConceptId(0),
                name: "signaling event".into(),
                color: String::new(),
                indicator_count: 24,
            }],
            mapped_indicators: 96,
            total_indicator_edges: 40,
            ..Default::default()
        };
        assert_eq!(concept_share::<f64>(&cg, ConceptId(0)).unwrap().to_string(), "25.00%");
        let e = |w| ConceptEdge {
            cause_concept_id: ConceptId(0),
            effect_concept_id: ConceptId(0),
            weight: w,
            contributing_edge_ids: vec![],
        };
        assert_eq!(edge_share::<f64>(&cg, &e(13)).unwrap().value(), 32.5);
        assert_eq!(edge_share::<f64>(&cg, &e(6)).unwrap().to_string(), "15.00%");
        cg.mapped_indicators = 0;
        assert!(matches!(concept_share::<f64>(&cg, ConceptId(0)), Err(NetworkError::NoMappedIndicators)));
        cg.total_indicator_edges = 0;
        assert!(matches!(edge_share::<f64>(&cg, &e(0)), Err(NetworkError::NoEdges)));
    }

    #[test]
    fn filter_keeps_top_degree_with_id_ties() {
        // star centred on 0, plus 1-2
        let (p, ids) = project(5, &[(0, 1), (0, 2), (0, 3), (1, 2)], &[]);
        let g = build_indicator_graph(&p);
        let kept: Vec<_> = degree_filter(&g, 0.4).unwrap().nodes.iter().map(|n| n.id).collect();
        // degrees: 0:3, 1:2, 2:2, 3:1, 4:0 -> ceil(2.0) = 2 -> {0, 1}
        assert_eq!(kept, vec![ids[0], ids[1]]);
        assert_eq!(degree_filter(&g, 1.0).unwrap().nodes.len(), 5);
        assert!(degree_filter(&g, 0.0).is_err());
        assert_eq!(retained_count(0.3, 10), 3);
        assert_eq!(retained_count(0.31, 10), 4);
    }

    #[test]
    fn components() {
        let (p, ids) = project(5, &[(0, 1), (2, 1), (3, 4)], &[]);
        let g = build_indicator_graph(&p);
        let c = component_of(&g, Selection::Node(ids[0])).unwrap();
        assert_eq!(c.nodes.len(), 3);
        let e = g.edges.iter().find(|e| e.cause == ids[3]).unwrap().id;
        assert_eq!(component_of(&g, Selection::Edge(e)).unwrap().nodes.len(), 2);
        assert!(matches!(
            component_of(&g, Selection::Node(IndicatorId(99))),
            Err(NetworkError::UnknownNode(_))
        ));
        let (p, ids) = project(1, &[], &[]);
        assert_eq!(component_of(&build_indicator_graph(&p), Selection::Node(ids[0])).unwrap().nodes.len(), 1);
    }

    #[test]
    fn search_exact_text_ranks_first() {
        let (p, ids) = project(4, &[], &[]);
        let g = build_indicator_graph(&p);
        let emb = HashingEmbedder::default();
        let mut cache = EmbeddingCache::default();
        let hits = semantic_search::<f64>("indicator 2", &g, &emb, &mut cache, 10).unwrap();
        assert_eq!(hits.len(), 4);
        assert_eq!(hits[0].indicator_id, ids[2]);
        assert!((hits[0].similarity - 1.0).abs() < 1e-12);
        assert_eq!(cache.len(), 4);
        assert!(matches!(
            semantic_search::<f64>("x", &IndicatorGraph::default(), &emb, &mut cache, 1),
            Err(NetworkError::EmptyGraph)
        ));
    }

    #[test]
    fn export_is_stable() {
        let (p, _) = project(3, &[(0, 1), (1, 2)], &[Some(0), Some(1), Some(1)]);
        let a = serde_json::to_string(&export_network(&p)).unwrap();
        let b = serde_json::to_string(&export_network(&p.clone())).unwrap();
        assert_eq!(a, b);
        let ex = export_network(&p);
        assert_eq!(ex.concept_edges.iter().map(|e| e.weight).sum::<usize>(), 2);
        assert_eq!(ex.concept_edges[0].share.value(), 50.0);
    }
}
