//! Corpus and SemEval-2010 Task 8 ingestion.

use serde::{Deserialize, Serialize};

use crate::model::{Project, SentenceId, SourceUnit, Span, UnitId};

/// Abbreviations that do not end a sentence, one per line.
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../config/abbreviations.txt");

pub fn default_abbreviations() -> Vec<String> {
    parse_abbreviations(DEFAULT_ABBREVIATIONS)
}

pub fn parse_abbreviations(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("corpus contains no non-blank line")]
    EmptyCorpus,
    #[error("malformed SemEval record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

/// One unit per non-blank line, in file order.
pub fn split_units(corpus_text: &str) -> Result<Vec<SourceUnit>, IngestError> {
    let units: Vec<SourceUnit> = corpus_text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(ordinal, line)| SourceUnit {
            unit_id: UnitId(ordinal as u64),
            raw_text: line.to_string(),
            ordinal,
        })
        .collect();
    if units.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    Ok(units)
}

const TERMINATORS: [char; 3] = ['.', '!', '?'];
const CLOSERS: [char; 6] = ['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

/// Splits a unit's text into trimmed sentences.
///
/// A run of `.`, `!` or `?` (plus any closing quotes or brackets) ends a
/// sentence when it is followed by whitespace or the end of the text, unless
/// the word it closes is one of `abbreviations` (compared case-insensitively).
pub fn split_sentences(text: &str, abbreviations: &[String]) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && TERMINATORS.contains(&chars[j + 1].1) {
            j += 1;
        }
        while j + 1 < chars.len() && CLOSERS.contains(&chars[j + 1].1) {
            j += 1;
        }
        let at_boundary = j + 1 == chars.len() || chars[j + 1].1.is_whitespace();
        let end_byte = chars
            .get(j + 1)
            .map(|&(b, _)| b)
            .unwrap_or(text.len());
        if at_boundary && !(c == '.' && ends_with_abbreviation(&text[start..end_byte], abbreviations))
        {
            push_trimmed(&mut out, &text[start..end_byte]);
            start = end_byte;
        }
        i = j + 1;
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn ends_with_abbreviation(segment: &str, abbreviations: &[String]) -> bool {
    let last = segment
        .split_whitespace()
        .last()
        .unwrap_or("")
        .trim_start_matches(['(', '"', '\'', '[', '\u{201c}']);
    abbreviations.iter().any(|a| a.eq_ignore_ascii_case(last))
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

/// Splits `corpus_text` into units and sentences and appends them to the
/// project. Returns the new unit ids.
pub fn ingest_corpus(
    project: &mut Project,
    corpus_text: &str,
    abbreviations: &[String],
) -> Result<Vec<UnitId>, IngestError> {
    let units = split_units(corpus_text)?;
    Ok(units
        .iter()
        .map(|u| {
            let sentences = split_sentences(&u.raw_text, abbreviations);
            project.add_unit(&u.raw_text, &sentences)
        })
        .collect())
}

/// Abbreviations in effect for a project.
pub fn project_abbreviations(project: &Project) -> Vec<String> {
    project
        .abbreviations
        .clone()
        .unwrap_or_else(default_abbreviations)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalDirection {
    E1CausesE2,
    E2CausesE1,
    NonCausal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemEvalRecord {
    pub record_id: u64,
    pub sentence_text: String,
    pub e1_span: Span,
    pub e2_span: Span,
    pub relation_label: String,
    pub causal_direction: CausalDirection,
}

impl SemEvalRecord {
    pub fn e1_text(&self) -> &str {
        self.e1_span.slice(&self.sentence_text).unwrap_or("")
    }

    pub fn e2_text(&self) -> &str {
        self.e2_span.slice(&self.sentence_text).unwrap_or("")
    }

    pub fn is_causal(&self) -> bool {
        self.causal_direction != CausalDirection::NonCausal
    }
}

/// Parses the official SemEval-2010 Task 8 layout:
///
/// ```text
/// 8001\t"The <e1>gaps</e1> in the rings are caused by <e2>resonance</e2>."
/// Cause-Effect(e2,e1)
/// Comment:
/// ```
pub fn parse_semeval(file_text: &str) -> Result<Vec<SemEvalRecord>, IngestError> {
    let mut records = Vec::new();
    let mut lines = file_text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_start_matches('\u{feff}').trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    while let Some((line_no, line)) = lines.next() {
        if line.starts_with("Comment") {
            continue;
        }
        let malformed = |reason: &str| IngestError::MalformedRecord {
            line: line_no,
            reason: reason.to_string(),
        };
        let (id_part, rest) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected `<id>\\t\"<sentence>\"`"))?;
        let record_id: u64 = id_part
            .trim()
            .parse()
            .map_err(|_| malformed("record id is not an integer"))?;
        let quoted = rest.trim();
        let tagged = quoted
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| malformed("sentence is not enclosed in double quotes"))?;
        let (sentence_text, e1_span, e2_span) =
            strip_entity_tags(tagged).map_err(|reason| malformed(&reason))?;

        let (label_line, label) = lines.next().ok_or_else(|| malformed("missing relation line"))?;
        let label = label.trim();
        let causal_direction = parse_relation(label).ok_or(IngestError::MalformedRecord {
            line: label_line,
            reason: format!("unparseable relation {label:?}"),
        })?;
        records.push(SemEvalRecord {
            record_id,
            sentence_text,
            e1_span,
            e2_span,
            relation_label: label.to_string(),
            causal_direction,
        });
    }
    Ok(records)
}

fn parse_relation(label: &str) -> Option<CausalDirection> {
    if label == "Other" {
        return Some(CausalDirection::NonCausal);
    }
    let open = label.find('(')?;
    let name = &label[..open];
    let args = label[open..].strip_prefix('(')?.strip_suffix(')')?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic() || c == '-') {
        return None;
    }
    let direction = match args {
        "e1,e2" => CausalDirection::E1CausesE2,
        "e2,e1" => CausalDirection::E2CausesE1,
        _ => return None,
    };
    Some(if name == "Cause-Effect" {
        direction
    } else {
        CausalDirection::NonCausal
    })
}

/// Removes `<e1>..</e1>` and `<e2>..</e2>` and returns character spans into
/// the stripped text.
fn strip_entity_tags(tagged: &str) -> Result<(String, Span, Span), String> {
    let mut out = String::with_capacity(tagged.len());
    let mut out_chars = 0usize;
    let mut open: [Option<usize>; 2] = [None, None];
    let mut spans: [Option<Span>; 2] = [None, None];
    let mut rest = tagged;
    while !rest.is_empty() {
        let tag = ["<e1>", "</e1>", "<e2>", "</e2>"]
            .iter()
            .find(|t| rest.starts_with(**t));
        match tag {
            Some(&t) => {
                let k = if t.contains('1') { 0 } else { 1 };
                let closing = t.starts_with("</");
                match (closing, open[k], spans[k]) {
                    (_, _, Some(_)) => return Err(format!("repeated {t}")),
                    (false, None, None) => open[k] = Some(out_chars),
                    (false, Some(_), None) => return Err(format!("nested {t}")),
                    (true, Some(start), None) => {
                        if start == out_chars {
                            return Err(format!("empty entity before {t}"));
                        }
                        spans[k] = Some(Span::new(start, out_chars));
                        open[k] = None;
                    }
                    (true, None, None) => return Err(format!("{t} without opening tag")),
                }
                rest = &rest[t.len()..];
            }
            None => {
                let c = rest.chars().next().expect("non-empty");
                out.push(c);
                out_chars += 1;
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    match (spans, open) {
        ([Some(e1), Some(e2)], _) => {
            if e1.overlaps(&e2) {
                return Err("entity spans overlap".into());
            }
            Ok((out, e1, e2))
        }
        (_, [Some(_), _]) => Err("missing </e1>".into()),
        (_, [_, Some(_)]) => Err("missing </e2>".into()),
        ([None, _], _) => Err("missing <e1>".into()),
        ([_, None], _) => Err("missing <e2>".into()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldSpanEdge {
    pub record_id: u64,
    pub cause: Span,
    pub effect: Span,
}

/// One directed gold pair per causal record.
pub fn semeval_gold_edges(records: &[SemEvalRecord]) -> Vec<GoldSpanEdge> {
    records
        .iter()
        .filter_map(|r| {
            let (cause, effect) = match r.causal_direction {
                CausalDirection::E1CausesE2 => (r.e1_span, r.e2_span),
                CausalDirection::E2CausesE1 => (r.e2_span, r.e1_span),
                CausalDirection::NonCausal => return None,
            };
            Some(GoldSpanEdge {
                record_id: r.record_id,
                cause,
                effect,
            })
        })
        .collect()
}

/// Builds a project where every record is one unit/sentence and its two
/// entities are indicators (e1 first), so baselines and evaluation can run
/// over SemEval data unchanged.
pub fn semeval_project(records: &[SemEvalRecord]) -> (Project, Vec<(u64, SentenceId)>) {
    let mut project = Project::new("semeval");
    let mut index = Vec::with_capacity(records.len());
    for r in records {
        project.add_unit(&r.sentence_text, std::slice::from_ref(&r.sentence_text));
        let sid = SentenceId(project.next_ids.sentence - 1);
        project
            .add_indicator(sid, r.e1_text(), Some(r.e1_span))
            .expect("parsed spans are valid");
        project
            .add_indicator(sid, r.e2_text(), Some(r.e2_span))
            .expect("parsed spans are valid");
        index.push((r.record_id, sid));
    }
    (project, index)
}
