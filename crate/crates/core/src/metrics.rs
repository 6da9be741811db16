//! Evaluation against gold annotations and inter-annotator agreement.
//!
//! Items are matched one-to-one under a [`MatchPolicy`]; precision, recall
//! and directionality accuracy are then read off the matching. Edges are
//! matched on their unordered endpoint pair and direction is scored
//! separately.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Project, SentenceId};
use crate::num::{format_rate, ratio, Scalar};
use crate::provider::{EmbeddingProvider, ProviderError};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("adjudication table has no entry for ({predicted:?}, {gold:?})")]
    MissingAdjudication { predicted: String, gold: String },
    #[error("no matched pairs to score direction on")]
    NoMatchedPairs,
    #[error("both sets are empty")]
    DegenerateInput,
    #[error("expected agreement is 1; kappa is undefined")]
    DegenerateMarginals,
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label sequences are empty")]
    EmptyLabels,
    #[error("embedding match policy needs an embedding provider")]
    NoEmbedder,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Lowercase, collapse whitespace, strip surrounding punctuation.
pub fn normalize_text(text: &str) -> String {
    let lowered = text.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace() || matches!(c, '“' | '”' | '‘' | '’'))
        .to_string()
}

/// Human match judgments keyed by normalized `(predicted, gold)` text.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Adjudication>", into = "Vec<Adjudication>")]
pub struct AdjudicationTable {
    entries: BTreeMap<(String, String), bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjudication {
    pub predicted: String,
    pub gold: String,
    #[serde(rename = "match")]
    pub matched: bool,
}

impl From<Vec<Adjudication>> for AdjudicationTable {
    fn from(list: Vec<Adjudication>) -> Self {
        let mut t = Self::default();
        for a in list {
            t.insert(&a.predicted, &a.gold, a.matched);
        }
        t
    }
}

impl From<AdjudicationTable> for Vec<Adjudication> {
    fn from(t: AdjudicationTable) -> Self {
        t.entries
            .into_iter()
            .map(|((predicted, gold), matched)| Adjudication {
                predicted,
                gold,
                matched,
            })
            .collect()
    }
}

impl AdjudicationTable {
    pub fn insert(&mut self, predicted: &str, gold: &str, matched: bool) {
        self.entries
            .insert((normalize_text(predicted), normalize_text(gold)), matched);
    }

    pub fn get(&self, predicted: &str, gold: &str) -> Option<bool> {
        self.entries
            .get(&(normalize_text(predicted), normalize_text(gold)))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// When a predicted and a gold item denote the same content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MatchPolicy<T> {
    /// Equal after [`normalize_text`].
    ExactNormalized,
    /// Embedding cosine at or above `threshold`.
    EmbeddingThreshold { threshold: T },
    /// Normalized-equal texts match; every other pair must be in the table.
    AdjudicationFile { table: AdjudicationTable },
}

impl<T: Scalar> MatchPolicy<T> {
    pub const DEFAULT_THRESHOLD: f64 = 0.90;

    pub fn embedding_default() -> Self {
        MatchPolicy::EmbeddingThreshold {
            threshold: T::from_f64(Self::DEFAULT_THRESHOLD).expect("threshold fits"),
        }
    }
}

#[allow(clippy::derivable_impls)]
impl<T> Default for MatchPolicy<T> {
    fn default() -> Self {
        MatchPolicy::ExactNormalized
    }
}

/// One matched `(predicted, gold)` pair, by index into the input lists.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchPair<T> {
    pub predicted: usize,
    pub gold: usize,
    pub score: T,
    /// For edges: the endpoints matched without swapping.
    pub same_direction: bool,
}

/// Pairwise similarity under a policy: `Some(score)` when the pair is
/// accepted.
struct Scorer<'a, T> {
    policy: &'a MatchPolicy<T>,
    vectors: BTreeMap<String, crate::provider::EmbeddingVector<f64>>,
}

impl<'a, T: Scalar> Scorer<'a, T> {
    fn new(
        policy: &'a MatchPolicy<T>,
        texts: impl IntoIterator<Item = &'a str>,
        embedder: Option<&dyn EmbeddingProvider>,
    ) -> Result<Self, MetricsError> {
        let mut vectors = BTreeMap::new();
        if let MatchPolicy::EmbeddingThreshold { .. } = policy {
            let embedder = embedder.ok_or(MetricsError::NoEmbedder)?;
            let unique: Vec<String> = texts
                .into_iter()
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if !unique.is_empty() {
                let embedded = embedder.embed(&unique)?;
                vectors = unique.into_iter().zip(embedded).collect();
            }
        }
        Ok(Self { policy, vectors })
    }

    fn score(&self, predicted: &str, gold: &str) -> Result<Option<T>, MetricsError> {
        let equal = normalize_text(predicted) == normalize_text(gold);
        match self.policy {
            MatchPolicy::ExactNormalized => Ok(equal.then(T::one)),
            MatchPolicy::AdjudicationFile { table } => {
                if equal {
                    return Ok(Some(T::one()));
                }
                match table.get(predicted, gold) {
                    Some(m) => Ok(m.then(T::one)),
                    None => Err(MetricsError::MissingAdjudication {
                        predicted: predicted.to_string(),
                        gold: gold.to_string(),
                    }),
                }
            }
            MatchPolicy::EmbeddingThreshold { threshold } => {
                let sim = match (self.vectors.get(predicted), self.vectors.get(gold)) {
                    (Some(a), Some(b)) => T::from_f64(a.cosine(b)).unwrap_or_else(T::zero),
                    _ => {
                        if equal {
                            T::one()
                        } else {
                            T::zero()
                        }
                    }
                };
                Ok((sim >= *threshold).then_some(sim))
            }
        }
    }
}

/// Greedy one-to-one matching: highest score first, ties by
/// `(predicted index, gold index)`.
fn greedy<T: Scalar>(mut candidates: Vec<MatchPair<T>>) -> Vec<MatchPair<T>> {
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.predicted.cmp(&b.predicted))
            .then(a.gold.cmp(&b.gold))
    });
    let mut used_p = BTreeSet::new();
    let mut used_g = BTreeSet::new();
    let mut out = Vec::new();
    for c in candidates {
        if used_p.contains(&c.predicted) || used_g.contains(&c.gold) {
            continue;
        }
        used_p.insert(c.predicted);
        used_g.insert(c.gold);
        out.push(c);
    }
    out.sort_by_key(|m| (m.predicted, m.gold));
    out
}

/// One-to-one matching of text items.
pub fn match_sets<T: Scalar>(
    predicted: &[String],
    gold: &[String],
    policy: &MatchPolicy<T>,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<Vec<MatchPair<T>>, MetricsError> {
    if predicted.is_empty() || gold.is_empty() {
        return Ok(Vec::new());
    }
    let scorer = Scorer::new(
        policy,
        predicted.iter().chain(gold).map(String::as_str),
        embedder,
    )?;
    let mut candidates = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            if let Some(score) = scorer.score(p, g)? {
                candidates.push(MatchPair {
                    predicted: i,
                    gold: j,
                    score,
                    same_direction: true,
                });
            }
        }
    }
    Ok(greedy(candidates))
}

/// A directed edge between two text endpoints.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TextEdge {
    pub cause: String,
    pub effect: String,
}

impl TextEdge {
    pub fn new(cause: impl Into<String>, effect: impl Into<String>) -> Self {
        Self {
            cause: cause.into(),
            effect: effect.into(),
        }
    }

    pub fn label(&self) -> String {
        format!("{} -> {}", self.cause, self.effect)
    }
}

/// One-to-one matching of edges on their unordered endpoint pair. A pair is
/// accepted when both endpoints match, either straight or swapped; its
/// score is the weaker endpoint score and the straight reading is preferred.
pub fn match_edges<T: Scalar>(
    predicted: &[TextEdge],
    gold: &[TextEdge],
    policy: &MatchPolicy<T>,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<Vec<MatchPair<T>>, MetricsError> {
    if predicted.is_empty() || gold.is_empty() {
        return Ok(Vec::new());
    }
    let scorer = Scorer::new(
        policy,
        predicted
            .iter()
            .chain(gold)
            .flat_map(|e| [e.cause.as_str(), e.effect.as_str()]),
        embedder,
    )?;
    let both = |a: Option<T>, b: Option<T>| match (a, b) {
        (Some(x), Some(y)) => Some(if x < y { x } else { y }),
        _ => None,
    };
    let mut candidates = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            let straight = both(scorer.score(&p.cause, &g.cause)?, scorer.score(&p.effect, &g.effect)?);
            let swapped = both(scorer.score(&p.cause, &g.effect)?, scorer.score(&p.effect, &g.cause)?);
            let pick = match (straight, swapped) {
                (Some(s), Some(w)) if w > s => Some((w, false)),
                (Some(s), _) => Some((s, true)),
                (None, Some(w)) => Some((w, false)),
                (None, None) => None,
            };
            if let Some((score, same_direction)) = pick {
                candidates.push(MatchPair {
                    predicted: i,
                    gold: j,
                    score,
                    same_direction,
                });
            }
        }
    }
    Ok(greedy(candidates))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry<T> {
    pub predicted: String,
    pub gold: Option<String>,
    pub score: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction_correct: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    /// Zero and `precision_defined = false` when nothing was predicted.
    pub precision: T,
    pub precision_defined: bool,
    /// Zero and `recall_defined = false` when the gold set is empty.
    pub recall: T,
    pub recall_defined: bool,
    pub direction_correct: usize,
    pub direction_total: usize,
    pub direction_accuracy: Option<T>,
    /// Every predicted item with its gold partner, if any.
    pub ledger: Vec<LedgerEntry<T>>,
    /// Gold items left unmatched.
    pub missed: Vec<String>,
}

/// Precision and recall of a matching produced by [`match_sets`] or
/// [`match_edges`]. Direction fields stay empty; see
/// [`EvalReport::with_direction`].
pub fn precision_recall<T: Scalar>(
    matching: &[MatchPair<T>],
    predicted: &[String],
    gold: &[String],
) -> EvalReport<T> {
    let tp = matching.len();
    let by_pred: BTreeMap<usize, &MatchPair<T>> = matching.iter().map(|m| (m.predicted, m)).collect();
    let matched_gold: BTreeSet<usize> = matching.iter().map(|m| m.gold).collect();
    let ledger = predicted
        .iter()
        .enumerate()
        .map(|(i, p)| LedgerEntry {
            predicted: p.clone(),
            gold: by_pred.get(&i).map(|m| gold[m.gold].clone()),
            score: by_pred.get(&i).map(|m| m.score),
            direction_correct: None,
        })
        .collect();
    let missed = gold
        .iter()
        .enumerate()
        .filter(|(j, _)| !matched_gold.contains(j))
        .map(|(_, g)| g.clone())
        .collect();
    let precision = ratio::<T>(tp, predicted.len());
    let recall = ratio::<T>(tp, gold.len());
    EvalReport {
        true_positive: tp,
        false_positive: predicted.len() - tp,
        false_negative: gold.len() - tp,
        precision: precision.unwrap_or_else(T::zero),
        precision_defined: precision.is_some(),
        recall: recall.unwrap_or_else(T::zero),
        recall_defined: recall.is_some(),
        direction_correct: 0,
        direction_total: 0,
        direction_accuracy: None,
        ledger,
        missed,
    }
}

/// Among matched edges, the fraction whose direction agrees with gold.
pub fn direction_accuracy<T: Scalar>(matching: &[MatchPair<T>]) -> Result<T, MetricsError> {
    let correct = matching.iter().filter(|m| m.same_direction).count();
    ratio(correct, matching.len()).ok_or(MetricsError::NoMatchedPairs)
}

impl<T: Scalar> EvalReport<T> {
    /// Fills the direction fields from an edge matching.
    pub fn with_direction(mut self, matching: &[MatchPair<T>]) -> Self {
        self.direction_total = matching.len();
        self.direction_correct = matching.iter().filter(|m| m.same_direction).count();
        self.direction_accuracy = direction_accuracy(matching).ok();
        for m in matching {
            self.ledger[m.predicted].direction_correct = Some(m.same_direction);
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMeasure {
    Psa,
    Kappa,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsaCounts {
    /// Items both annotators marked.
    pub a: usize,
    /// Items only the first annotator marked.
    pub b: usize,
    /// Items only the second annotator marked.
    pub c: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub categories: Vec<String>,
    /// `table[i][j]`: items rater A put in category i and rater B in j.
    pub table: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport<T> {
    pub measure: AgreementMeasure,
    pub value: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psa: Option<PsaCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contingency: Option<Contingency>,
}

/// `2a / (2a + b + c)`.
pub fn psa_value<T: Scalar>(counts: &PsaCounts) -> Result<T, MetricsError> {
    ratio(2 * counts.a, 2 * counts.a + counts.b + counts.c).ok_or(MetricsError::DegenerateInput)
}

/// Positive specific agreement between two annotators' item sets.
pub fn psa<T: Scalar>(
    set_a: &[String],
    set_b: &[String],
    policy: &MatchPolicy<T>,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<AgreementReport<T>, MetricsError> {
    if set_a.is_empty() && set_b.is_empty() {
        return Err(MetricsError::DegenerateInput);
    }
    let a = match_sets(set_a, set_b, policy, embedder)?.len();
    let counts = PsaCounts {
        a,
        b: set_a.len() - a,
        c: set_b.len() - a,
    };
    Ok(AgreementReport {
        measure: AgreementMeasure::Psa,
        value: psa_value(&counts)?,
        psa: Some(counts),
        contingency: None,
    })
}

/// Cohen's kappa for two parallel labelings.
///
/// Computed from integer counts as
/// `(N·agree − Σ rₖ·cₖ) / (N² − Σ rₖ·cₖ)`, which equals
/// `(p_o − p_e) / (1 − p_e)` without intermediate rounding.
pub fn kappa<T: Scalar, L: Ord + Clone + ToString>(
    labels_a: &[L],
    labels_b: &[L],
) -> Result<AgreementReport<T>, MetricsError> {
    if labels_a.len() != labels_b.len() {
        return Err(MetricsError::LengthMismatch(labels_a.len(), labels_b.len()));
    }
    if labels_a.is_empty() {
        return Err(MetricsError::EmptyLabels);
    }
    let categories: Vec<L> = labels_a
        .iter()
        .chain(labels_b)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&L, usize> = categories.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let k = categories.len();
    let mut table = vec![vec![0usize; k]; k];
    for (x, y) in labels_a.iter().zip(labels_b) {
        table[index[x]][index[y]] += 1;
    }
    let n = labels_a.len() as i128;
    let agree: i128 = (0..k).map(|i| table[i][i] as i128).sum();
    let chance: i128 = (0..k)
        .map(|i| {
            let row: i128 = table[i].iter().map(|&v| v as i128).sum();
            let col: i128 = table.iter().map(|r| r[i] as i128).sum();
            row * col
        })
        .sum();
    let den = n * n - chance;
    if den == 0 {
        return Err(MetricsError::DegenerateMarginals);
    }
    Ok(AgreementReport {
        measure: AgreementMeasure::Kappa,
        value: T::of_i128(n * agree - chance) / T::of_i128(den),
        psa: None,
        contingency: Some(Contingency {
            categories: categories.iter().map(ToString::to_string).collect(),
            table,
        }),
    })
}

// ---- gold annotation files and project evaluation ----

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFile {
    pub sentences: Vec<GoldSentence>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSentence {
    pub sentence_id: SentenceId,
    #[serde(default)]
    pub gold_indicators: Vec<String>,
    #[serde(default)]
    pub gold_edges: Vec<TextEdge>,
    #[serde(default)]
    pub gold_concepts: Vec<GoldConcept>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldConcept {
    pub indicator_text: String,
    pub concept_name: String,
}

impl GoldFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Concept assignment quality over indicators present in both the system
/// output and the gold concept list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptEvalReport<T> {
    /// Matched indicators with a gold concept.
    pub total: usize,
    pub correct: usize,
    pub accuracy: Option<T>,
    /// Macro average over gold concept names of per-concept precision.
    pub macro_precision: Option<T>,
    /// Macro average over gold concept names of per-concept recall.
    pub macro_recall: Option<T>,
    pub per_concept: Vec<ConceptScore<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore<T> {
    pub concept_name: String,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub precision: Option<T>,
    pub recall: Option<T>,
}

/// Scores `(predicted concept, gold concept)` pairs, compared after
/// normalization. A missing prediction counts against recall only.
pub fn concept_eval<T: Scalar>(pairs: &[(Option<String>, String)]) -> ConceptEvalReport<T> {
    let norm: Vec<(Option<String>, String)> = pairs
        .iter()
        .map(|(p, g)| (p.as_deref().map(normalize_text), normalize_text(g)))
        .collect();
    let correct = norm.iter().filter(|(p, g)| p.as_ref() == Some(g)).count();
    let names: BTreeSet<&String> = norm.iter().map(|(_, g)| g).collect();
    let per_concept: Vec<ConceptScore<T>> = names
        .into_iter()
        .map(|name| {
            let tp = norm.iter().filter(|(p, g)| g == name && p.as_ref() == Some(name)).count();
            let fp = norm.iter().filter(|(p, g)| g != name && p.as_ref() == Some(name)).count();
            let fn_ = norm.iter().filter(|(p, g)| g == name && p.as_ref() != Some(name)).count();
            ConceptScore {
                concept_name: name.clone(),
                true_positive: tp,
                false_positive: fp,
                false_negative: fn_,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
            }
        })
        .collect();
    let mean = |xs: Vec<T>| {
        let n = xs.len();
        (n > 0).then(|| xs.into_iter().fold(T::zero(), |a, b| a + b) / T::of_usize(n))
    };
    ConceptEvalReport {
        total: norm.len(),
        correct,
        accuracy: ratio(correct, norm.len()),
        macro_precision: mean(per_concept.iter().filter_map(|c| c.precision).collect()),
        macro_recall: mean(per_concept.iter().filter_map(|c| c.recall).collect()),
        per_concept,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectEvalReport<T> {
    pub indicators: EvalReport<T>,
    pub edges: EvalReport<T>,
    pub concepts: Option<ConceptEvalReport<T>>,
    /// Gold sentence ids absent from the project.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_sentences: Vec<SentenceId>,
}

/// Evaluates a project's live indicators and active edges against `gold`,
/// matching within each gold sentence and pooling the counts.
pub fn evaluate_project<T: Scalar>(
    project: &Project,
    gold: &GoldFile,
    policy: &MatchPolicy<T>,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<ProjectEvalReport<T>, MetricsError> {
    let mut ind = Pooled::default();
    let mut edg = Pooled::default();
    let mut concept_pairs = Vec::new();
    let mut has_concepts = false;
    let mut unknown = Vec::new();

    for gs in &gold.sentences {
        if project.sentence(gs.sentence_id).is_none() {
            unknown.push(gs.sentence_id);
        }
        let inds = project.sentence_indicators(gs.sentence_id);
        let pred_texts: Vec<String> = inds.iter().map(|i| i.text.clone()).collect();
        let m = match_sets(&pred_texts, &gs.gold_indicators, policy, embedder)?;

        has_concepts |= !gs.gold_concepts.is_empty();
        if !gs.gold_concepts.is_empty() {
            let gold_texts: Vec<String> = gs.gold_concepts.iter().map(|g| g.indicator_text.clone()).collect();
            for cm in match_sets(&pred_texts, &gold_texts, policy, embedder)? {
                let predicted = inds[cm.predicted]
                    .concept_id
                    .and_then(|c| project.concept(c))
                    .map(|c| c.name.clone());
                concept_pairs.push((predicted, gs.gold_concepts[cm.gold].concept_name.clone()));
            }
        }
        ind.extend(&m, pred_texts, gs.gold_indicators.clone());

        let pred_edges: Vec<TextEdge> = project
            .active_edges()
            .filter(|e| e.sentence_id == gs.sentence_id)
            .filter_map(|e| {
                Some(TextEdge::new(
                    project.indicator(e.cause_indicator_id)?.text.clone(),
                    project.indicator(e.effect_indicator_id)?.text.clone(),
                ))
            })
            .collect();
        let m = match_edges(&pred_edges, &gs.gold_edges, policy, embedder)?;
        edg.extend(
            &m,
            pred_edges.iter().map(TextEdge::label).collect(),
            gs.gold_edges.iter().map(TextEdge::label).collect(),
        );
    }

    Ok(ProjectEvalReport {
        indicators: precision_recall(&ind.matching, &ind.predicted, &ind.gold),
        edges: precision_recall(&edg.matching, &edg.predicted, &edg.gold).with_direction(&edg.matching),
        concepts: has_concepts.then(|| concept_eval(&concept_pairs)),
        unknown_sentences: unknown,
    })
}

struct Pooled<T> {
    matching: Vec<MatchPair<T>>,
    predicted: Vec<String>,
    gold: Vec<String>,
}

impl<T> Default for Pooled<T> {
    fn default() -> Self {
        Self {
            matching: Vec::new(),
            predicted: Vec::new(),
            gold: Vec::new(),
        }
    }
}

impl<T: Copy> Pooled<T> {
    fn extend(&mut self, matching: &[MatchPair<T>], predicted: Vec<String>, gold: Vec<String>) {
        let (po, go) = (self.predicted.len(), self.gold.len());
        self.matching.extend(matching.iter().map(|m| MatchPair {
            predicted: m.predicted + po,
            gold: m.gold + go,
            ..*m
        }));
        self.predicted.extend(predicted);
        self.gold.extend(gold);
    }
}

/// A labelled row for [`format_table`].
pub struct TableRow<'a, T> {
    pub method: &'a str,
    pub report: &'a EvalReport<T>,
}

fn cell<T: Scalar>(v: Option<T>) -> String {
    v.map(format_rate).unwrap_or_else(|| "-".into())
}

/// Aligned plain-text table with `Method  Prec  Rec  DirAcc` columns.
pub fn format_table<T: Scalar>(rows: &[TableRow<'_, T>]) -> String {
    let header = ["Method", "Prec", "Rec", "DirAcc", "TP", "FP", "FN"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            let e = r.report;
            [
                r.method.to_string(),
                cell(e.precision_defined.then_some(e.precision)),
                cell(e.recall_defined.then_some(e.recall)),
                cell(e.direction_accuracy),
                e.true_positive.to_string(),
                e.false_positive.to_string(),
                e.false_negative.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &header.map(String::from));
    for row in &body {
        line(&mut out, row);
    }
    out
}
