use serde_json::Value;

use super::{PipelineError, PromptTemplate};
use crate::model::{find_case_insensitive, ResearchOverview, Sentence, Span};
use crate::provider::{ChatProvider, ChatRequest};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedIndicator {
    pub text: String,
    pub span: Option<Span>,
}

pub fn render_extraction(
    template: &PromptTemplate,
    overview: &ResearchOverview,
    sentence: &Sentence,
) -> String {
    template.render(&[("overview", overview.as_str()), ("sentence", &sentence.text)])
}

/// Asks the provider for the indicators of one sentence.
///
/// Each indicator gets the span of its first case-insensitive occurrence in
/// the sentence, or no span when the provider paraphrased.
pub fn extract_indicators(
    template: &PromptTemplate,
    overview: &ResearchOverview,
    sentence: &Sentence,
    provider: &dyn ChatProvider,
    temperature: f64,
) -> Result<Vec<ExtractedIndicator>, PipelineError> {
    if sentence.text.trim().is_empty() {
        return Err(PipelineError::EmptySentence(sentence.sentence_id));
    }
    let mut req = ChatRequest::new(render_extraction(template, overview, sentence));
    req.temperature = temperature;
    let response = provider.complete(&req)?;
    let texts = parse_indicator_list(&response).ok_or_else(|| PipelineError::MalformedProviderOutput {
        stage: "extract",
        response: response.clone(),
    })?;
    Ok(texts
        .into_iter()
        .map(|text| ExtractedIndicator {
            span: find_case_insensitive(&sentence.text, &text),
            text,
        })
        .collect())
}

/// Locates a JSON object with an `indicators` array of strings anywhere in
/// `response`. If none parses, one bracket-repair pass closes unterminated
/// strings, arrays and objects and tries again.
pub fn parse_indicator_list(response: &str) -> Option<Vec<String>> {
    scan_for_list(response).or_else(|| {
        let start = response.find('{')?;
        scan_for_list(&repair_brackets(&response[start..]))
    })
}

fn scan_for_list(text: &str) -> Option<Vec<String>> {
    for (pos, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        if let Some(Ok(value)) = stream.next() {
            if let Some(list) = indicator_strings(&value) {
                return Some(list);
            }
        }
    }
    None
}

fn indicator_strings(value: &Value) -> Option<Vec<String>> {
    let arr = value.as_object()?.get("indicators")?.as_array()?;
    arr.iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect::<Option<Vec<_>>>()
        .map(|list| {
            list.into_iter()
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
}

fn repair_brackets(text: &str) -> String {
    let mut stack = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        out.push(c);
        if in_string {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => stack.push('}'),
            '[' => stack.push(']'),
            '}' | ']' => {
                if stack.last() == Some(&c) {
                    stack.pop();
                }
                if stack.is_empty() {
                    return out;
                }
            }
            _ => {}
        }
    }
    if in_string {
        out.push('"');
    }
    let trimmed = out.trim_end().trim_end_matches(',').to_string();
    let mut out = trimmed;
    while let Some(c) = stack.pop() {
        out.push(c);
    }
    out
}
