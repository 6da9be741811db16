//! Domain types shared by every stage of the workbench.
//!
//! A [`Project`] owns the corpus (units and sentences), the coding results
//! (indicators, concepts, merge records) and the network (indicator-level
//! causal edges plus their consolidated concept-level counterparts).
//! Deletion is always soft: indicators and edges carry a status flag so that
//! provenance survives edits.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(UnitId, "u");
id_type!(SentenceId, "s");
id_type!(
    /// Indicator ids are allocated in extraction order, so the lowest id of a
    /// group is the earliest extracted member.
    IndicatorId,
    "i"
);
id_type!(ConceptId, "c");
id_type!(EdgeId, "e");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResearchOverview {
    text: String,
}

impl ResearchOverview {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyOverview);
        }
        Ok(Self { text })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub unit_id: UnitId,
    pub raw_text: String,
    pub ordinal: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: SentenceId,
    pub unit_id: UnitId,
    pub ordinal: usize,
    pub text: String,
}

/// Half-open character range `[start, end)` into a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn is_valid_for(&self, text: &str) -> bool {
        self.start < self.end && self.end <= text.chars().count()
    }

    /// The covered substring, or `None` when the span does not fit `text`.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if !self.is_valid_for(text) {
            return None;
        }
        let start = char_to_byte(text, self.start);
        let end = char_to_byte(text, self.end);
        Some(&text[start..end])
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

fn char_to_byte(text: &str, char_idx: usize) -> usize {
    text.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorStatus {
    #[default]
    Auto,
    Edited,
    Deleted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub indicator_id: IndicatorId,
    pub sentence_id: SentenceId,
    pub text: String,
    #[serde(default)]
    pub span: Option<Span>,
    #[serde(default)]
    pub concept_id: Option<ConceptId>,
    pub status: IndicatorStatus,
    #[serde(default)]
    pub memo: Option<String>,
}

impl Indicator {
    pub fn is_live(&self) -> bool {
        self.status != IndicatorStatus::Deleted
    }
}

pub const MAX_CONCEPT_REFERENCES: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub concept_id: ConceptId,
    pub name: String,
    #[serde(default)]
    pub definition: String,
    /// RGB hex string; compared for equality only.
    #[serde(default)]
    pub color: String,
    #[serde(default)]
    pub references: Vec<String>,
}

impl Concept {
    /// Appends a reference example, evicting the oldest once the cap is hit.
    /// Duplicates are ignored.
    pub fn push_reference(&mut self, example: &str) {
        if self.references.iter().any(|r| r == example) {
            return;
        }
        self.references.push(example.to_string());
        while self.references.len() > MAX_CONCEPT_REFERENCES {
            self.references.remove(0);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    Pipeline,
    Cooccurrence,
    Cue,
    Manual,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    #[default]
    Active,
    Deleted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalEdge {
    pub edge_id: EdgeId,
    pub cause_indicator_id: IndicatorId,
    pub effect_indicator_id: IndicatorId,
    pub sentence_id: SentenceId,
    pub origin: EdgeOrigin,
    pub status: EdgeStatus,
}

impl CausalEdge {
    pub fn is_active(&self) -> bool {
        self.status == EdgeStatus::Active
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEdge {
    pub cause_concept_id: ConceptId,
    pub effect_concept_id: ConceptId,
    pub weight: usize,
    pub contributing_edge_ids: Vec<EdgeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub canonical_indicator_id: IndicatorId,
    pub absorbed_indicator_ids: Vec<IndicatorId>,
}

/// Next free id per entity kind. Ids are never reused within a project.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdCounters {
    pub unit: u64,
    pub sentence: u64,
    pub indicator: u64,
    pub concept: u64,
    pub edge: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("research overview is empty")]
    EmptyOverview,
    #[error("unknown indicator {0}")]
    UnknownIndicator(IndicatorId),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("unknown sentence {0}")]
    UnknownSentence(SentenceId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("indicator {0} is deleted")]
    IndicatorDeleted(IndicatorId),
    #[error("indicator text is empty")]
    EmptyIndicatorText,
    #[error("span {start}..{end} does not fit sentence {sentence}")]
    InvalidSpan {
        sentence: SentenceId,
        start: usize,
        end: usize,
    },
    #[error("concept name is empty")]
    EmptyConceptName,
    #[error("concept name {0:?} already exists")]
    DuplicateConceptName(String),
    #[error("concept has {0} references, at most 3 allowed")]
    TooManyReferences(usize),
    #[error("an edge needs two distinct live indicators of the same sentence")]
    InvalidEdgeEndpoints,
}

/// Partial update for an indicator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorPatch {
    /// Replace the text with free-typed content; drops the span unless the
    /// new text occurs in the sentence.
    #[serde(default)]
    pub text: Option<String>,
    /// Replace the text with the sentence substring under this span.
    #[serde(default)]
    pub span: Option<Span>,
    /// `Some(None)` unmaps; `Some(Some(c))` maps to `c`.
    #[serde(default, with = "double_option")]
    pub concept_id: Option<Option<ConceptId>>,
    #[serde(default, with = "double_option")]
    pub memo: Option<Option<String>>,
}

/// Partial update for a concept.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptPatch {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub definition: Option<String>,
    #[serde(default)]
    pub color: Option<String>,
    #[serde(default)]
    pub references: Option<Vec<String>>,
}

mod double_option {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(
        v: &Option<Option<T>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(inner) => inner.serialize(s),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<Option<T>>, D::Error> {
        Option::<T>::deserialize(d).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub project_id: String,
    #[serde(default)]
    pub overview: Option<ResearchOverview>,
    /// Per-project override of the sentence splitter's abbreviation list.
    #[serde(default)]
    pub abbreviations: Option<Vec<String>>,
    #[serde(default)]
    pub units: Vec<SourceUnit>,
    #[serde(default)]
    pub sentences: Vec<Sentence>,
    #[serde(default)]
    pub indicators: Vec<Indicator>,
    #[serde(default)]
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub causal_edges: Vec<CausalEdge>,
    #[serde(default)]
    pub concept_edges: Vec<ConceptEdge>,
    #[serde(default)]
    pub merge_records: Vec<MergeRecord>,
    #[serde(default)]
    pub revision: u64,
    #[serde(default)]
    pub next_ids: IdCounters,
}

impl Project {
    pub fn new(project_id: impl Into<String>) -> Self {
        Self {
            project_id: project_id.into(),
            overview: None,
            abbreviations: None,
            units: Vec::new(),
            sentences: Vec::new(),
            indicators: Vec::new(),
            concepts: Vec::new(),
            causal_edges: Vec::new(),
            concept_edges: Vec::new(),
            merge_records: Vec::new(),
            revision: 0,
            next_ids: IdCounters::default(),
        }
    }

    pub fn bump_revision(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    pub fn set_overview(&mut self, text: impl Into<String>) -> Result<(), ModelError> {
        self.overview = Some(ResearchOverview::new(text)?);
        Ok(())
    }

    pub fn sentence(&self, id: SentenceId) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.sentence_id == id)
    }

    pub fn indicator(&self, id: IndicatorId) -> Option<&Indicator> {
        self.indicators.iter().find(|i| i.indicator_id == id)
    }

    pub fn indicator_mut(&mut self, id: IndicatorId) -> Option<&mut Indicator> {
        self.indicators.iter_mut().find(|i| i.indicator_id == id)
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.concept_id == id)
    }

    pub fn concept_mut(&mut self, id: ConceptId) -> Option<&mut Concept> {
        self.concepts.iter_mut().find(|c| c.concept_id == id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&CausalEdge> {
        self.causal_edges.iter().find(|e| e.edge_id == id)
    }

    pub fn live_indicators(&self) -> impl Iterator<Item = &Indicator> {
        self.indicators.iter().filter(|i| i.is_live())
    }

    pub fn active_edges(&self) -> impl Iterator<Item = &CausalEdge> {
        self.causal_edges.iter().filter(|e| e.is_active())
    }

    /// Live indicators of one sentence in extraction (id) order.
    pub fn sentence_indicators(&self, sentence: SentenceId) -> Vec<&Indicator> {
        let mut out: Vec<&Indicator> = self
            .live_indicators()
            .filter(|i| i.sentence_id == sentence)
            .collect();
        out.sort_by_key(|i| i.indicator_id);
        out
    }

    /// Appends units and their sentences. Unit ordinals continue after the
    /// existing ones.
    pub fn add_unit(&mut self, raw_text: &str, sentences: &[String]) -> UnitId {
        let unit_id = UnitId(self.next_ids.unit);
        self.next_ids.unit += 1;
        let ordinal = self.units.len();
        self.units.push(SourceUnit {
            unit_id,
            raw_text: raw_text.to_string(),
            ordinal,
        });
        for (ordinal, text) in sentences.iter().enumerate() {
            let sentence_id = SentenceId(self.next_ids.sentence);
            self.next_ids.sentence += 1;
            self.sentences.push(Sentence {
                sentence_id,
                unit_id,
                ordinal,
                text: text.clone(),
            });
        }
        unit_id
    }

    /// Creates an `auto` indicator bound to `sentence`.
    pub fn add_indicator(
        &mut self,
        sentence: SentenceId,
        text: &str,
        span: Option<Span>,
    ) -> Result<IndicatorId, ModelError> {
        let s = self
            .sentence(sentence)
            .ok_or(ModelError::UnknownSentence(sentence))?;
        if text.trim().is_empty() {
            return Err(ModelError::EmptyIndicatorText);
        }
        if let Some(sp) = span {
            if !sp.is_valid_for(&s.text) {
                return Err(ModelError::InvalidSpan {
                    sentence,
                    start: sp.start,
                    end: sp.end,
                });
            }
        }
        let id = IndicatorId(self.next_ids.indicator);
        self.next_ids.indicator += 1;
        self.indicators.push(Indicator {
            indicator_id: id,
            sentence_id: sentence,
            text: text.to_string(),
            span,
            concept_id: None,
            status: IndicatorStatus::Auto,
            memo: None,
        });
        Ok(id)
    }

    pub fn add_concept(
        &mut self,
        name: &str,
        definition: &str,
        color: &str,
        references: Vec<String>,
    ) -> Result<ConceptId, ModelError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ModelError::EmptyConceptName);
        }
        if self.concepts.iter().any(|c| c.name == name) {
            return Err(ModelError::DuplicateConceptName(name.to_string()));
        }
        if references.len() > MAX_CONCEPT_REFERENCES {
            return Err(ModelError::TooManyReferences(references.len()));
        }
        let id = ConceptId(self.next_ids.concept);
        self.next_ids.concept += 1;
        self.concepts.push(Concept {
            concept_id: id,
            name: name.to_string(),
            definition: definition.to_string(),
            color: color.to_string(),
            references,
        });
        Ok(id)
    }

    pub fn update_concept(&mut self, id: ConceptId, patch: &ConceptPatch) -> Result<(), ModelError> {
        if let Some(name) = &patch.name {
            let name = name.trim();
            if name.is_empty() {
                return Err(ModelError::EmptyConceptName);
            }
            if self
                .concepts
                .iter()
                .any(|c| c.name == name && c.concept_id != id)
            {
                return Err(ModelError::DuplicateConceptName(name.to_string()));
            }
        }
        if let Some(refs) = &patch.references {
            if refs.len() > MAX_CONCEPT_REFERENCES {
                return Err(ModelError::TooManyReferences(refs.len()));
            }
        }
        let concept = self.concept_mut(id).ok_or(ModelError::UnknownConcept(id))?;
        if let Some(name) = &patch.name {
            concept.name = name.trim().to_string();
        }
        if let Some(d) = &patch.definition {
            concept.definition = d.clone();
        }
        if let Some(c) = &patch.color {
            concept.color = c.clone();
        }
        if let Some(r) = &patch.references {
            concept.references = r.clone();
        }
        Ok(())
    }

    /// Removes a concept and unmaps every indicator that pointed at it.
    pub fn remove_concept(&mut self, id: ConceptId) -> Result<(), ModelError> {
        let before = self.concepts.len();
        self.concepts.retain(|c| c.concept_id != id);
        if self.concepts.len() == before {
            return Err(ModelError::UnknownConcept(id));
        }
        for ind in &mut self.indicators {
            if ind.concept_id == Some(id) {
                ind.concept_id = None;
            }
        }
        self.concept_edges
            .retain(|e| e.cause_concept_id != id && e.effect_concept_id != id);
        Ok(())
    }

    /// Maps (or unmaps) an indicator. A manual mapping also records the
    /// indicator text as a reference example of the concept.
    pub fn assign_concept(
        &mut self,
        indicator: IndicatorId,
        concept: Option<ConceptId>,
        manual: bool,
    ) -> Result<(), ModelError> {
        if let Some(c) = concept {
            if self.concept(c).is_none() {
                return Err(ModelError::UnknownConcept(c));
            }
        }
        let ind = self
            .indicator_mut(indicator)
            .ok_or(ModelError::UnknownIndicator(indicator))?;
        if !ind.is_live() {
            return Err(ModelError::IndicatorDeleted(indicator));
        }
        ind.concept_id = concept;
        let text = ind.text.clone();
        if let (Some(c), true) = (concept, manual) {
            if let Some(concept) = self.concept_mut(c) {
                concept.push_reference(&text);
            }
        }
        Ok(())
    }

    /// Applies an interactive edit to an indicator.
    pub fn edit_indicator(
        &mut self,
        id: IndicatorId,
        patch: &IndicatorPatch,
    ) -> Result<(), ModelError> {
        let ind = self.indicator(id).ok_or(ModelError::UnknownIndicator(id))?;
        if !ind.is_live() {
            return Err(ModelError::IndicatorDeleted(id));
        }
        let sentence = self
            .sentence(ind.sentence_id)
            .ok_or(ModelError::UnknownSentence(ind.sentence_id))?
            .clone();

        let mut new_text = None;
        let mut new_span = ind.span;
        if let Some(span) = patch.span {
            let text = span.slice(&sentence.text).ok_or(ModelError::InvalidSpan {
                sentence: sentence.sentence_id,
                start: span.start,
                end: span.end,
            })?;
            if text.trim().is_empty() {
                return Err(ModelError::EmptyIndicatorText);
            }
            new_text = Some(text.to_string());
            new_span = Some(span);
        } else if let Some(text) = &patch.text {
            if text.trim().is_empty() {
                return Err(ModelError::EmptyIndicatorText);
            }
            new_span = find_case_insensitive(&sentence.text, text);
            new_text = Some(text.clone());
        }
        if let Some(Some(c)) = patch.concept_id {
            if self.concept(c).is_none() {
                return Err(ModelError::UnknownConcept(c));
            }
        }

        let ind = self.indicator_mut(id).expect("checked above");
        if let Some(text) = new_text {
            if text != ind.text || new_span != ind.span {
                ind.text = text;
                ind.span = new_span;
                ind.status = IndicatorStatus::Edited;
            }
        }
        if let Some(memo) = &patch.memo {
            ind.memo = memo.clone();
        }
        if let Some(concept) = patch.concept_id {
            self.assign_concept(id, concept, true)?;
        }
        Ok(())
    }

    /// Soft-deletes an indicator and every edge touching it.
    pub fn delete_indicator(&mut self, id: IndicatorId) -> Result<(), ModelError> {
        let ind = self
            .indicator_mut(id)
            .ok_or(ModelError::UnknownIndicator(id))?;
        ind.status = IndicatorStatus::Deleted;
        for e in &mut self.causal_edges {
            if e.cause_indicator_id == id || e.effect_indicator_id == id {
                e.status = EdgeStatus::Deleted;
            }
        }
        Ok(())
    }

    /// Adds an active edge between two live indicators of one sentence.
    pub fn add_edge(
        &mut self,
        cause: IndicatorId,
        effect: IndicatorId,
        origin: EdgeOrigin,
    ) -> Result<EdgeId, ModelError> {
        let c = self.indicator(cause).ok_or(ModelError::UnknownIndicator(cause))?;
        let e = self
            .indicator(effect)
            .ok_or(ModelError::UnknownIndicator(effect))?;
        if cause == effect || !c.is_live() || !e.is_live() || c.sentence_id != e.sentence_id {
            return Err(ModelError::InvalidEdgeEndpoints);
        }
        let sentence_id = c.sentence_id;
        let id = EdgeId(self.next_ids.edge);
        self.next_ids.edge += 1;
        self.causal_edges.push(CausalEdge {
            edge_id: id,
            cause_indicator_id: cause,
            effect_indicator_id: effect,
            sentence_id,
            origin,
            status: EdgeStatus::Active,
        });
        Ok(id)
    }

    pub fn delete_edge(&mut self, id: EdgeId) -> Result<(), ModelError> {
        let edge = self
            .causal_edges
            .iter_mut()
            .find(|e| e.edge_id == id)
            .ok_or(ModelError::UnknownEdge(id))?;
        edge.status = EdgeStatus::Deleted;
        Ok(())
    }

    /// Sorts every collection by id so that serialization is canonical.
    pub fn canonicalize(&mut self) {
        self.units.sort_by_key(|u| u.ordinal);
        self.sentences.sort_by_key(|s| s.sentence_id);
        self.indicators.sort_by_key(|i| i.indicator_id);
        self.concepts.sort_by_key(|c| c.concept_id);
        self.causal_edges.sort_by_key(|e| e.edge_id);
        for ce in &mut self.concept_edges {
            ce.contributing_edge_ids.sort();
        }
        self.concept_edges
            .sort_by_key(|e| (e.cause_concept_id, e.effect_concept_id));
        for r in &mut self.merge_records {
            r.absorbed_indicator_ids.sort();
        }
        self.merge_records.sort_by_key(|r| r.canonical_indicator_id);
    }
}

/// First case-insensitive occurrence of `needle` in `haystack`, as a
/// character span.
pub fn find_case_insensitive(haystack: &str, needle: &str) -> Option<Span> {
    let hay: Vec<char> = haystack.chars().collect();
    let pat: Vec<char> = needle.chars().collect();
    if pat.is_empty() || pat.len() > hay.len() {
        return None;
    }
    let eq = |a: char, b: char| a == b || a.to_lowercase().eq(b.to_lowercase());
    (0..=hay.len() - pat.len())
        .find(|&start| pat.iter().enumerate().all(|(k, &p)| eq(hay[start + k], p)))
        .map(|start| Span::new(start, start + pat.len()))
}

/// Lists every broken invariant. An empty list means the project is valid.
pub fn validate_project(project: &Project) -> Vec<String> {
    let mut out = Vec::new();

    if let Some(ov) = &project.overview {
        if ov.as_str().trim().is_empty() {
            out.push("research overview is empty".to_string());
        }
    }

    let mut unit_ids = HashSet::new();
    let mut ordinals: Vec<usize> = Vec::new();
    for u in &project.units {
        if !unit_ids.insert(u.unit_id) {
            out.push(format!("unit {}: duplicate id", u.unit_id));
        }
        if u.raw_text.trim().is_empty() {
            out.push(format!("unit {}: empty text", u.unit_id));
        }
        ordinals.push(u.ordinal);
    }
    ordinals.sort_unstable();
    if ordinals.iter().enumerate().any(|(i, &o)| i != o) {
        out.push("unit ordinals are not unique and contiguous from 0".to_string());
    }

    let mut sentences = BTreeMap::new();
    let mut sentence_slots = HashSet::new();
    for s in &project.sentences {
        if sentences.insert(s.sentence_id, s).is_some() {
            out.push(format!("sentence {}: duplicate id", s.sentence_id));
        }
        if s.text.trim().is_empty() {
            out.push(format!("sentence {}: empty text", s.sentence_id));
        }
        if !unit_ids.contains(&s.unit_id) {
            out.push(format!("sentence {}: unknown unit {}", s.sentence_id, s.unit_id));
        }
        if !sentence_slots.insert((s.unit_id, s.ordinal)) {
            out.push(format!(
                "sentence {}: ordinal {} repeated within unit {}",
                s.sentence_id, s.ordinal, s.unit_id
            ));
        }
    }

    let mut concept_ids = HashSet::new();
    let mut concept_names = HashSet::new();
    for c in &project.concepts {
        if !concept_ids.insert(c.concept_id) {
            out.push(format!("concept {}: duplicate id", c.concept_id));
        }
        if c.name.trim().is_empty() {
            out.push(format!("concept {}: empty name", c.concept_id));
        } else if !concept_names.insert(c.name.as_str()) {
            out.push(format!("concept {}: duplicate name {:?}", c.concept_id, c.name));
        }
        if c.references.len() > MAX_CONCEPT_REFERENCES {
            out.push(format!(
                "concept {}: {} references exceed the cap of {}",
                c.concept_id,
                c.references.len(),
                MAX_CONCEPT_REFERENCES
            ));
        }
    }

    let mut indicators = BTreeMap::new();
    for i in &project.indicators {
        if indicators.insert(i.indicator_id, i).is_some() {
            out.push(format!("indicator {}: duplicate id", i.indicator_id));
        }
        if i.is_live() && i.text.trim().is_empty() {
            out.push(format!("indicator {}: empty text", i.indicator_id));
        }
        match sentences.get(&i.sentence_id) {
            None => out.push(format!(
                "indicator {}: unknown sentence {}",
                i.indicator_id, i.sentence_id
            )),
            Some(s) => {
                if let Some(span) = i.span {
                    if !span.is_valid_for(&s.text) {
                        out.push(format!(
                            "indicator {}: span {}..{} outside sentence {}",
                            i.indicator_id, span.start, span.end, s.sentence_id
                        ));
                    }
                }
            }
        }
        if let Some(c) = i.concept_id {
            if !concept_ids.contains(&c) {
                out.push(format!("indicator {}: unknown concept {}", i.indicator_id, c));
            }
        }
    }

    // indicator -> every indicator it stands for (itself plus absorbed ones)
    let mut represented: BTreeMap<IndicatorId, Vec<IndicatorId>> = BTreeMap::new();
    let mut seen_in_records = HashSet::new();
    for r in &project.merge_records {
        if r.absorbed_indicator_ids.is_empty() {
            out.push(format!(
                "merge record {}: no absorbed indicators",
                r.canonical_indicator_id
            ));
        }
        if r.absorbed_indicator_ids.contains(&r.canonical_indicator_id) {
            out.push(format!(
                "merge record {}: canonical indicator also absorbed",
                r.canonical_indicator_id
            ));
        }
        for id in std::iter::once(&r.canonical_indicator_id).chain(&r.absorbed_indicator_ids) {
            if !indicators.contains_key(id) {
                out.push(format!(
                    "merge record {}: unknown indicator {}",
                    r.canonical_indicator_id, id
                ));
            }
            if !seen_in_records.insert(*id) {
                out.push(format!("indicator {id} appears in more than one merge role"));
            }
        }
        let group: Vec<IndicatorId> = std::iter::once(r.canonical_indicator_id)
            .chain(r.absorbed_indicator_ids.iter().copied())
            .collect();
        for id in &group {
            represented.entry(*id).or_default().extend(group.iter().copied());
        }
    }

    let mut edge_ids = HashSet::new();
    for e in &project.causal_edges {
        if !edge_ids.insert(e.edge_id) {
            out.push(format!("edge {}: duplicate id", e.edge_id));
        }
        if e.cause_indicator_id == e.effect_indicator_id {
            out.push(format!("edge {}: cause equals effect", e.edge_id));
        }
        if !sentences.contains_key(&e.sentence_id) {
            out.push(format!("edge {}: unknown sentence {}", e.edge_id, e.sentence_id));
        }
        for (role, id) in [("cause", e.cause_indicator_id), ("effect", e.effect_indicator_id)] {
            match indicators.get(&id) {
                None => out.push(format!("edge {}: unknown {role} indicator {id}", e.edge_id)),
                Some(ind) => {
                    if e.is_active() && !ind.is_live() {
                        out.push(format!(
                            "edge {}: {role} indicator {id} is deleted",
                            e.edge_id
                        ));
                    }
                    let mut sources = vec![ind.sentence_id];
                    if let Some(absorbed) = represented.get(&id) {
                        sources.extend(
                            absorbed
                                .iter()
                                .filter_map(|a| indicators.get(a).map(|i| i.sentence_id)),
                        );
                    }
                    if !sources.contains(&e.sentence_id) {
                        out.push(format!(
                            "edge {}: {role} indicator {id} does not come from sentence {}",
                            e.edge_id, e.sentence_id
                        ));
                    }
                }
            }
        }
    }

    let mut contributing = HashSet::new();
    let mut concept_pairs = BTreeSet::new();
    for ce in &project.concept_edges {
        let key = format!("{}->{}", ce.cause_concept_id, ce.effect_concept_id);
        if !concept_pairs.insert((ce.cause_concept_id, ce.effect_concept_id)) {
            out.push(format!("concept edge {key}: duplicate pair"));
        }
        if ce.weight == 0 || ce.weight != ce.contributing_edge_ids.len() {
            out.push(format!(
                "concept edge {key}: weight {} does not match {} contributing edges",
                ce.weight,
                ce.contributing_edge_ids.len()
            ));
        }
        for c in [ce.cause_concept_id, ce.effect_concept_id] {
            if !concept_ids.contains(&c) {
                out.push(format!("concept edge {key}: unknown concept {c}"));
            }
        }
        for id in &ce.contributing_edge_ids {
            if !edge_ids.contains(id) {
                out.push(format!("concept edge {key}: unknown contributing edge {id}"));
            }
            if !contributing.insert(*id) {
                out.push(format!("edge {id} contributes to more than one concept edge"));
            }
        }
    }

    out
}
