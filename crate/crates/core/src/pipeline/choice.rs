//! Multiple-choice prompts: concept mapping and pairwise causal classification.

use serde::{Deserialize, Serialize};

use super::label::{letter, letter_list, parse_label};
use super::{PipelineError, PromptTemplate};
use crate::model::{Concept, ConceptId, Indicator, IndicatorId, Sentence};
use crate::provider::{ChatProvider, ChatRequest};

/// Sends `prompt`, parses a letter in `0..n_options`, re-asks once on failure.
pub(crate) fn ask_label(
    provider: &dyn ChatProvider,
    prompt: String,
    n_options: usize,
    temperature: f64,
    stage: &'static str,
) -> Result<usize, PipelineError> {
    let mut req = ChatRequest::new(prompt);
    req.temperature = temperature;
    let first = provider.complete(&req)?;
    if let Some(i) = parse_label(&first, n_options) {
        return Ok(i);
    }
    req.prompt = reask_prompt(&req.prompt, n_options);
    let second = provider.complete(&req)?;
    parse_label(&second, n_options).ok_or(PipelineError::InvalidLabel {
        stage,
        response: second,
    })
}

pub fn reask_prompt(prompt: &str, n_options: usize) -> String {
    format!(
        "{prompt}\nYour previous answer could not be parsed. Please output your choice as a single letter:\nlabel: [{}]\n",
        letter_list(n_options)
    )
}

// ---- concept mapping ----

fn options_block(concepts: &[&Concept]) -> (String, String) {
    let options = concepts
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {}", letter(i), c.name))
        .collect::<Vec<_>>()
        .join("\n");
    let details = concepts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut s = format!("  {}. {}: {}", letter(i), c.name, c.definition);
            if !c.references.is_empty() {
                s.push_str(&format!("\n  References: {}", c.references.join(", ")));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    (options, details)
}

pub fn render_mapping(
    template: &PromptTemplate,
    indicator: &Indicator,
    sentence: &Sentence,
    concepts: &[&Concept],
) -> String {
    let (options, details) = options_block(concepts);
    template.render(&[
        ("options", &options),
        ("letters", &letter_list(concepts.len())),
        ("indicator", &indicator.text),
        ("sentence", &sentence.text),
        ("concepts", &details),
    ])
}

/// Picks one of `concepts` (lettered a, b, c, ... in the given order).
pub fn map_concept(
    template: &PromptTemplate,
    indicator: &Indicator,
    sentence: &Sentence,
    concepts: &[&Concept],
    provider: &dyn ChatProvider,
    temperature: f64,
) -> Result<ConceptId, PipelineError> {
    if concepts.is_empty() {
        return Err(PipelineError::NoConcepts);
    }
    if concepts.len() > 26 {
        return Err(PipelineError::TooManyConcepts(concepts.len()));
    }
    let prompt = render_mapping(template, indicator, sentence, concepts);
    let idx = ask_label(provider, prompt, concepts.len(), temperature, "map")?;
    Ok(concepts[idx].concept_id)
}

// ---- pairwise causal classification ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalVerdict {
    FirstCausesSecond,
    SecondCausesFirst,
    NotRelated,
}

impl CausalVerdict {
    /// Directed (cause, effect) for a verdict on `(first, second)`.
    pub fn edge(self, first: IndicatorId, second: IndicatorId) -> Option<(IndicatorId, IndicatorId)> {
        match self {
            CausalVerdict::FirstCausesSecond => Some((first, second)),
            CausalVerdict::SecondCausesFirst => Some((second, first)),
            CausalVerdict::NotRelated => None,
        }
    }
}

/// `text (Concept)` when mapped, plain text otherwise.
pub fn indicator_with_concept(indicator: &Indicator, concept: Option<&Concept>) -> String {
    match concept {
        Some(c) => format!("{} ({})", indicator.text, c.name),
        None => indicator.text.clone(),
    }
}

pub fn render_causal(
    template: &PromptTemplate,
    sentence: &Sentence,
    first: &str,
    second: &str,
) -> String {
    template.render(&[
        ("sentence", &sentence.text),
        ("indicator1", first),
        ("indicator2", second),
    ])
}

/// Three-way classification of an indicator pair within its sentence.
/// `first`/`second` are the rendered indicator labels (see
/// [`indicator_with_concept`]).
pub fn classify_pair(
    template: &PromptTemplate,
    sentence: &Sentence,
    first: &str,
    second: &str,
    provider: &dyn ChatProvider,
    temperature: f64,
) -> Result<CausalVerdict, PipelineError> {
    let prompt = render_causal(template, sentence, first, second);
    Ok(match ask_label(provider, prompt, 3, temperature, "classify")? {
        0 => CausalVerdict::FirstCausesSecond,
        1 => CausalVerdict::SecondCausesFirst,
        _ => CausalVerdict::NotRelated,
    })
}

/// All unordered pairs of `items`, each once, ordered by
/// (first position, second position).
pub fn generate_pairs<T: Copy>(items: &[T]) -> Vec<(T, T)> {
    let n = items.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for (i, &a) in items.iter().enumerate() {
        for &b in &items[i + 1..] {
            out.push((a, b));
        }
    }
    out
}
