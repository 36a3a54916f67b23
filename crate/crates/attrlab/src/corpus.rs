//! Corpus JSONL: one example per line.
//!
//! ```text
//! {"id":"e1","tokens":["a","b"],"segment_ids":null,"label":"pos","highlight":[1,0],
//!  "annotator_counts":null,"phrase_annotations":[[0,1,0.9]],"sentence_highlights":null}
//! ```

use std::collections::HashSet;
use std::path::Path;

use attrlab_core::{LabeledExample, PhraseAnnotation, SentenceHighlights, TokenSequence};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::fsutil::{read_to_string, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusRecord {
    id: String,
    tokens: Vec<String>,
    segment_ids: Option<Vec<u8>>,
    label: String,
    highlight: Option<Vec<u8>>,
    annotator_counts: Option<Vec<u32>>,
    phrase_annotations: Option<Vec<(usize, usize, f64)>>,
    sentence_highlights: Option<SentenceHighlights>,
}

impl CorpusRecord {
    fn from_example(ex: &LabeledExample) -> Self {
        CorpusRecord {
            id: ex.id.clone(),
            tokens: ex.sequence.tokens().to_vec(),
            segment_ids: ex.sequence.segment_ids().map(<[u8]>::to_vec),
            label: ex.gold_label.clone(),
            highlight: ex.highlight.clone(),
            annotator_counts: ex.annotator_counts.clone(),
            phrase_annotations: ex
                .phrase_annotations
                .as_ref()
                .map(|ps| ps.iter().map(|p| (p.start, p.end, p.score)).collect()),
            sentence_highlights: ex.sentence_highlights.clone(),
        }
    }

    fn into_example(self) -> attrlab_core::Result<LabeledExample> {
        let sequence = TokenSequence::with_segments(self.tokens, self.segment_ids)?;
        let ex = LabeledExample {
            id: self.id,
            sequence,
            gold_label: self.label,
            highlight: self.highlight,
            annotator_counts: self.annotator_counts,
            phrase_annotations: self
                .phrase_annotations
                .map(|ps| ps.into_iter().map(|(start, end, score)| PhraseAnnotation { start, end, score }).collect()),
            sentence_highlights: self.sentence_highlights,
        };
        ex.validate()?;
        Ok(ex)
    }
}

/// Serializes one example as a single JSON line (no trailing newline).
pub fn example_to_line(ex: &LabeledExample) -> Result<String> {
    Ok(serde_json::to_string(&CorpusRecord::from_example(ex))?)
}

/// Parses corpus text. Blank lines are skipped; line numbers in errors are
/// 1-based.
pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<LabeledExample>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| AppError::Parse { path: path.to_path_buf(), line: line_no, message };
        let record: CorpusRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let ex = record.into_example().map_err(|e| parse_err(e.to_string()))?;
        if !seen.insert(ex.id.clone()) {
            return Err(AppError::DuplicateId { path: path.to_path_buf(), id: ex.id, line: line_no });
        }
        out.push(ex);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<LabeledExample>> {
    parse_corpus(&read_to_string(path)?, path)
}

pub fn corpus_to_string(examples: &[LabeledExample]) -> Result<String> {
    let mut seen = HashSet::new();
    let mut out = String::new();
    for (i, ex) in examples.iter().enumerate() {
        if !seen.insert(ex.id.as_str()) {
            return Err(AppError::DuplicateId { path: "<memory>".into(), id: ex.id.clone(), line: i + 1 });
        }
        out.push_str(&example_to_line(ex)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_corpus(examples: &[LabeledExample], path: &Path) -> Result<()> {
    write_atomic(path, corpus_to_string(examples)?.as_bytes())
}
