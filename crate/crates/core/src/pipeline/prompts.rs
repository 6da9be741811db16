use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    IndicatorExtraction,
    ConceptMapping,
    CausalExtraction,
    IndicatorMerging,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::IndicatorExtraction,
        TemplateId::ConceptMapping,
        TemplateId::CausalExtraction,
        TemplateId::IndicatorMerging,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateId::IndicatorExtraction => "indicator_extraction.txt",
            TemplateId::ConceptMapping => "concept_mapping.txt",
            TemplateId::CausalExtraction => "causal_extraction.txt",
            TemplateId::IndicatorMerging => "indicator_merging.txt",
        }
    }

    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::IndicatorExtraction => &["overview", "sentence"],
            TemplateId::ConceptMapping => &["options", "letters", "indicator", "sentence", "concepts"],
            TemplateId::CausalExtraction => &["sentence", "indicator1", "indicator2"],
            TemplateId::IndicatorMerging => {
                &["concept", "indicator1", "sentence1", "indicator2", "sentence2"]
            }
        }
    }

    fn default_body(self) -> &'static str {
        match self {
            TemplateId::IndicatorExtraction => include_str!("../../prompts/indicator_extraction.txt"),
            TemplateId::ConceptMapping => include_str!("../../prompts/concept_mapping.txt"),
            TemplateId::CausalExtraction => include_str!("../../prompts/causal_extraction.txt"),
            TemplateId::IndicatorMerging => include_str!("../../prompts/indicator_merging.txt"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template {id:?} lacks placeholder {{{{{name}}}}}")]
    MissingPlaceholder { id: TemplateId, name: &'static str },
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A prompt body with `{{name}}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub template_id: TemplateId,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(template_id: TemplateId, body: impl Into<String>) -> Result<Self, TemplateError> {
        let body = body.into();
        for name in template_id.placeholders() {
            if !body.contains(&format!("{{{{{name}}}}}")) {
                return Err(TemplateError::MissingPlaceholder {
                    id: template_id,
                    name,
                });
            }
        }
        Ok(Self { template_id, body })
    }

    pub fn default_for(template_id: TemplateId) -> Self {
        Self::new(template_id, template_id.default_body()).expect("shipped templates are complete")
    }

    /// Substitutes every placeholder. Values are inserted verbatim.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut rest = self.body.as_str();
        while let Some(open) = rest.find("{{") {
            let Some(close) = rest[open..].find("}}") else {
                break;
            };
            let name = &rest[open + 2..open + close];
            match values.iter().find(|(k, _)| *k == name) {
                Some((_, v)) => {
                    out.push_str(&rest[..open]);
                    out.push_str(v);
                }
                None => out.push_str(&rest[..open + close + 2]),
            }
            rest = &rest[open + close + 2..];
        }
        out.push_str(rest);
        out
    }
}

/// The four templates used by a pipeline run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptSet {
    pub extraction: PromptTemplate,
    pub mapping: PromptTemplate,
    pub causal: PromptTemplate,
    pub merging: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            extraction: PromptTemplate::default_for(TemplateId::IndicatorExtraction),
            mapping: PromptTemplate::default_for(TemplateId::ConceptMapping),
            causal: PromptTemplate::default_for(TemplateId::CausalExtraction),
            merging: PromptTemplate::default_for(TemplateId::IndicatorMerging),
        }
    }
}

impl PromptSet {
    /// Defaults overridden by any `<template_id>.txt` present in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::default();
        for id in TemplateId::ALL {
            let path = dir.join(id.file_name());
            if !path.exists() {
                continue;
            }
            let body = std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })?;
            *set.get_mut(id) = PromptTemplate::new(id, body)?;
        }
        Ok(set)
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        match id {
            TemplateId::IndicatorExtraction => &self.extraction,
            TemplateId::ConceptMapping => &self.mapping,
            TemplateId::CausalExtraction => &self.causal,
            TemplateId::IndicatorMerging => &self.merging,
        }
    }

    fn get_mut(&mut self, id: TemplateId) -> &mut PromptTemplate {
        match id {
            TemplateId::IndicatorExtraction => &mut self.extraction,
            TemplateId::ConceptMapping => &mut self.mapping,
            TemplateId::CausalExtraction => &mut self.causal,
            TemplateId::IndicatorMerging => &mut self.merging,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_instruction_text() {
        let set = PromptSet::default();
        assert!(set
            .extraction
            .body
            .contains("Extract meaningful indicators from the provided sentence"));
        assert!(set
            .mapping
            .body
            .contains("assign the most appropriate concept to a given indicator"));
        assert!(set
            .causal
            .body
            .contains("Pay careful attention to the direction of causation"));
        assert!(set
            .merging
            .body
            .contains("interchangeable in their respective contexts"));
    }

    #[test]
    fn render_substitutes_and_keeps_unknown() {
        let t = PromptTemplate::new(TemplateId::CausalExtraction, "{{sentence}}|{{indicator1}}|{{indicator2}}|{{other}}").unwrap();
        assert_eq!(
            t.render(&[("sentence", "S"), ("indicator1", "A {{x}}"), ("indicator2", "B")]),
            "S|A {{x}}|B|{{other}}"
        );
    }

    #[test]
    fn missing_placeholder_rejected() {
        let err = PromptTemplate::new(TemplateId::IndicatorExtraction, "only {{sentence}}").unwrap_err();
        assert!(matches!(err, TemplateError::MissingPlaceholder { name: "overview", .. }));
    }

    #[test]
    fn load_dir_overrides_one_template() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("causal_extraction.txt"),
            "S={{sentence}} 1={{indicator1}} 2={{indicator2}}",
        )
        .unwrap();
        let set = PromptSet::load_dir(dir.path()).unwrap();
        assert!(set.causal.body.starts_with("S="));
        assert_eq!(set.extraction, PromptSet::default().extraction);
    }
}
