//! Deterministic reference extractors: co-occurrence ordering and causal cue
//! heuristics, plus their evaluation on SemEval-2010 Task 8 records.

use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::{semeval_gold_edges, SemEvalRecord};
use crate::model::{EdgeOrigin, Indicator, IndicatorId, ModelError, Project, Sentence};
use crate::num::{ratio, Scalar};

pub const DEFAULT_CUE_RULES: &str = include_str!("../config/cue_rules.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueKind {
    Literal,
    /// A template with `[cause]` and `[effect]` slots around a literal.
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueDirection {
    /// Earlier text causes later text.
    Forward,
    /// Later text causes earlier text.
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueRule {
    pub cue: String,
    pub kind: CueKind,
    pub direction: CueDirection,
}

#[derive(Debug, thiserror::Error)]
pub enum CueRuleError {
    #[error("cue rule file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cue rule {index} is empty")]
    EmptyCue { index: usize },
    #[error("pattern rule {cue:?} needs [cause] and [effect] slots around a literal")]
    BadPattern { cue: String },
}

/// A compiled, ordered rule table. The first matching rule wins.
#[derive(Clone, Debug)]
pub struct CueRules {
    rules: Vec<(CueRule, Regex)>,
}

impl CueRules {
    pub fn new(rules: Vec<CueRule>) -> Result<Self, CueRuleError> {
        let compiled = rules
            .into_iter()
            .enumerate()
            .map(|(index, rule)| {
                let literal = match rule.kind {
                    CueKind::Literal => rule.cue.trim().to_string(),
                    CueKind::Pattern => pattern_literal(&rule.cue)
                        .ok_or_else(|| CueRuleError::BadPattern { cue: rule.cue.clone() })?,
                };
                if literal.is_empty() {
                    return Err(CueRuleError::EmptyCue { index });
                }
                let words: Vec<String> = literal.split_whitespace().map(regex::escape).collect();
                let re = Regex::new(&format!(r"(?i)\b{}\b", words.join(r"\s+"))).expect("escaped cue is a valid regex");
                Ok((rule, re))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { rules: compiled })
    }

    pub fn from_json(text: &str) -> Result<Self, CueRuleError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn rules(&self) -> impl Iterator<Item = &CueRule> {
        self.rules.iter().map(|(r, _)| r)
    }

    /// First rule whose cue occurs in `text` as whole words.
    pub fn find(&self, text: &str) -> Option<&CueRule> {
        self.rules.iter().find(|(_, re)| re.is_match(text)).map(|(r, _)| r)
    }
}

impl Default for CueRules {
    fn default() -> Self {
        Self::from_json(DEFAULT_CUE_RULES).expect("shipped cue table is valid")
    }
}

/// The literal between the slots of `[x] literal [y]`.
fn pattern_literal(cue: &str) -> Option<String> {
    let t = cue.trim();
    let (first, rest) = if let Some(r) = t.strip_prefix("[cause]") {
        ("cause", r)
    } else {
        ("effect", t.strip_prefix("[effect]")?)
    };
    let last = if first == "cause" { "[effect]" } else { "[cause]" };
    let middle = rest.strip_suffix(last)?.trim();
    (!middle.is_empty() && !middle.contains('[')).then(|| middle.to_string())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CooccurrenceMode {
    /// One edge per adjacent pair.
    #[default]
    Consecutive,
    /// An edge from every indicator to every later one.
    AllOrdered,
}

impl std::str::FromStr for CooccurrenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consecutive" => Ok(Self::Consecutive),
            "all_ordered" | "all-ordered" => Ok(Self::AllOrdered),
            other => Err(format!("unknown co-occurrence mode {other:?}")),
        }
    }
}

/// Text order: by span start, then extraction order. Span-less indicators
/// follow the located ones in extraction order.
pub fn text_order<'a>(indicators: &[&'a Indicator]) -> Vec<&'a Indicator> {
    let mut v = indicators.to_vec();
    v.sort_by_key(|i| (i.span.map_or(usize::MAX, |s| s.start), i.indicator_id));
    v
}

/// Directed `(cause, effect)` pairs, earlier text as cause.
pub fn cooccurrence_edges(ordered: &[IndicatorId], mode: CooccurrenceMode) -> Vec<(IndicatorId, IndicatorId)> {
    match mode {
        CooccurrenceMode::Consecutive => ordered.windows(2).map(|w| (w[0], w[1])).collect(),
        CooccurrenceMode::AllOrdered => crate::pipeline::generate_pairs(ordered),
    }
}

/// Directed `(cause, effect)` pairs for adjacent located indicators whose
/// in-between text contains a cue.
pub fn cue_edges(
    sentence: &Sentence,
    indicators: &[&Indicator],
    rules: &CueRules,
) -> Vec<(IndicatorId, IndicatorId)> {
    let located: Vec<&Indicator> = text_order(indicators)
        .into_iter()
        .filter(|i| i.span.is_some_and(|s| s.is_valid_for(&sentence.text)))
        .collect();
    let chars: Vec<char> = sentence.text.chars().collect();
    let mut out = Vec::new();
    for w in located.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (sa, sb) = (a.span.expect("located"), b.span.expect("located"));
        if sb.start <= sa.end {
            continue;
        }
        let between: String = chars[sa.end..sb.start].iter().collect();
        if let Some(rule) = rules.find(&between) {
            out.push(match rule.direction {
                CueDirection::Forward => (a.indicator_id, b.indicator_id),
                CueDirection::Backward => (b.indicator_id, a.indicator_id),
            });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub enum Baseline {
    Cooccurrence(CooccurrenceMode),
    Cue(CueRules),
}

impl Baseline {
    pub fn origin(&self) -> EdgeOrigin {
        match self {
            Baseline::Cooccurrence(_) => EdgeOrigin::Cooccurrence,
            Baseline::Cue(_) => EdgeOrigin::Cue,
        }
    }

    /// Predicted `(cause, effect)` pairs for one sentence.
    pub fn sentence_edges(&self, sentence: &Sentence, indicators: &[&Indicator]) -> Vec<(IndicatorId, IndicatorId)> {
        match self {
            Baseline::Cooccurrence(mode) => {
                let ids: Vec<IndicatorId> = text_order(indicators).iter().map(|i| i.indicator_id).collect();
                cooccurrence_edges(&ids, *mode)
            }
            Baseline::Cue(rules) => cue_edges(sentence, indicators, rules),
        }
    }
}

/// Adds the baseline's edges to every sentence of `project`. Pairs already
/// present with the same origin are skipped. Returns the number of new edges.
pub fn apply_baseline(project: &mut Project, baseline: &Baseline) -> Result<usize, ModelError> {
    let origin = baseline.origin();
    let existing: BTreeSet<(IndicatorId, IndicatorId)> = project
        .active_edges()
        .filter(|e| e.origin == origin)
        .map(|e| (e.cause_indicator_id, e.effect_indicator_id))
        .collect();
    let mut todo = Vec::new();
    for s in &project.sentences {
        let inds = project.sentence_indicators(s.sentence_id);
        todo.extend(
            baseline
                .sentence_edges(s, &inds)
                .into_iter()
                .filter(|p| !existing.contains(p)),
        );
    }
    for &(c, e) in &todo {
        project.add_edge(c, e, origin)?;
    }
    crate::network::rebuild_concept_edges(project);
    project.bump_revision();
    Ok(todo.len())
}

/// Baseline scores on SemEval records, entities as indicators.
///
/// Precision counts a prediction correct only when it links the gold pair in
/// the gold direction; recall counts the gold pair as found in either
/// direction; direction accuracy is taken over found pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemEvalReport<T> {
    pub records: usize,
    pub gold_edges: usize,
    pub predicted_edges: usize,
    /// Gold pairs linked in either direction.
    pub matched_pairs: usize,
    /// Predictions equal to a gold edge, direction included.
    pub direction_correct: usize,
    pub precision: Option<T>,
    pub recall: Option<T>,
    pub direction_accuracy: Option<T>,
}

/// Records whose relation is a Cause-Effect label.
pub fn causal_subset(records: &[SemEvalRecord]) -> Vec<SemEvalRecord> {
    records.iter().filter(|r| r.is_causal()).cloned().collect()
}

pub fn evaluate_semeval<T: Scalar>(records: &[SemEvalRecord], baseline: &Baseline) -> SemEvalReport<T> {
    let (project, index) = crate::ingest::semeval_project(records);
    let gold = semeval_gold_edges(records);
    let mut predicted = 0;
    let mut matched = 0;
    let mut correct = 0;
    let mut gi = gold.iter().peekable();
    for (r, (record_id, sid)) in records.iter().zip(&index) {
        let sentence = project.sentence(*sid).expect("record sentence");
        let inds = project.sentence_indicators(*sid);
        let span_of = |id: IndicatorId| project.indicator(id).and_then(|i| i.span);
        let edges = baseline.sentence_edges(sentence, &inds);
        predicted += edges.len();
        let g = match gi.peek() {
            Some(g) if g.record_id == *record_id => gi.next(),
            _ => None,
        };
        let Some(g) = g else { continue };
        debug_assert_eq!(r.record_id, g.record_id);
        let mut found = false;
        for &(c, e) in &edges {
            let (cs, es) = (span_of(c), span_of(e));
            if cs == Some(g.cause) && es == Some(g.effect) {
                correct += 1;
                found = true;
            } else if cs == Some(g.effect) && es == Some(g.cause) {
                found = true;
            }
        }
        matched += usize::from(found);
    }
    SemEvalReport {
        records: records.len(),
        gold_edges: gold.len(),
        predicted_edges: predicted,
        matched_pairs: matched,
        direction_correct: correct,
        precision: ratio(correct, predicted),
        recall: ratio(matched, gold.len()),
        direction_accuracy: ratio(correct, matched),
    }
}
