//! Attribution dumps: JSON lines of
//! `{"id","method","target_label","space","scores","flags":{"no_candidates":[..]}}`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use attrlab_core::{AttributionMap, LabeledExample, ScoreSpace};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::fsutil::{read_to_string, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpFlags {
    #[serde(default)]
    pub no_candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRecord {
    pub id: String,
    pub method: String,
    pub target_label: String,
    pub space: ScoreSpace,
    pub scores: Vec<f64>,
    pub flags: DumpFlags,
}

impl DumpRecord {
    pub fn new(id: &str, map: &AttributionMap) -> Self {
        DumpRecord {
            id: id.to_string(),
            method: map.method.clone(),
            target_label: map.target_label.clone(),
            space: map.space,
            scores: map.scores.clone(),
            flags: DumpFlags { no_candidates: map.no_candidates.clone() },
        }
    }

    pub fn to_map(&self) -> AttributionMap {
        AttributionMap {
            scores: self.scores.clone(),
            method: self.method.clone(),
            target_label: self.target_label.clone(),
            space: self.space,
            no_candidates: self.flags.no_candidates.clone(),
        }
    }
}

pub fn dump_to_string(records: &[DumpRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        if r.scores.iter().any(|s| !s.is_finite()) {
            return Err(AppError::config(format!("non-finite score in map for {:?}", r.id)));
        }
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dump(path: &Path, records: &[DumpRecord]) -> Result<()> {
    write_atomic(path, dump_to_string(records)?.as_bytes())
}

pub fn read_dump(path: &Path) -> Result<Vec<DumpRecord>> {
    let text = read_to_string(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DumpRecord = serde_json::from_str(line).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(AppError::DuplicateId { path: path.to_path_buf(), id: record.id, line: i + 1 });
        }
        out.push(record);
    }
    Ok(out)
}

/// Pairs every dump record with its corpus example, in dump order. Examples
/// without a map (failed during attribution) are skipped; a map for an
/// unknown id or with the wrong length is an error.
pub fn align<'a>(
    corpus: &'a [LabeledExample],
    records: &[DumpRecord],
) -> Result<(Vec<&'a LabeledExample>, Vec<AttributionMap>)> {
    let by_id: HashMap<&str, &LabeledExample> = corpus.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut examples = Vec::with_capacity(records.len());
    let mut maps = Vec::with_capacity(records.len());
    for r in records {
        let ex = by_id
            .get(r.id.as_str())
            .ok_or_else(|| AppError::config(format!("dump id {:?} is not in the corpus", r.id)))?;
        let map = r.to_map();
        map.validate(ex.len()).map_err(|e| AppError::config(format!("map for {:?}: {e}", r.id)))?;
        examples.push(*ex);
        maps.push(map);
    }
    Ok((examples, maps))
}
