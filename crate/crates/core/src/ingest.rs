//! File ingestion and label harmonization.
//!
//! Annotations arrive as JSONL (one `{item_id, rater_id, label}` object
//! per line, no extra keys) or CSV with the exact header
//! `item_id,rater_id,label`. Harmonization applies, in order: whole-item
//! removal on forbidden labels, label mapping, and an exact
//! raters-per-item filter.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotationMatrix, LabelSpace, RaterGroup};

/// One independent judgement of one item by one rater.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub rater_id: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    Jsonl,
    Csv,
}

impl AnnotationFormat {
    /// Picks a format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::Csv,
            _ => Self::Jsonl,
        }
    }
}

pub fn read_annotations(path: &Path, format: AnnotationFormat) -> Result<Vec<AnnotationRecord>> {
    let records = match format {
        AnnotationFormat::Jsonl => read_annotations_jsonl(path)?,
        AnnotationFormat::Csv => read_annotations_csv(path)?,
    };
    let mut seen: HashSet<(&str, &str)> = HashSet::with_capacity(records.len());
    for r in &records {
        if !seen.insert((&r.item_id, &r.rater_id)) {
            return Err(Error::DuplicateCell {
                item: r.item_id.clone(),
                rater: r.rater_id.clone(),
            });
        }
    }
    Ok(records)
}

fn read_annotations_jsonl(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let file = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in file.lines().enumerate() {
        let line = line?;
        let lineno = idx as u64 + 1;
        let record: AnnotationRecord =
            serde_json::from_str(&line).map_err(|e| malformed(path, lineno, e.to_string()))?;
        validate_record(&record).map_err(|msg| malformed(path, lineno, msg))?;
        records.push(record);
    }
    Ok(records)
}

fn read_annotations_csv(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| malformed(path, 1, e.to_string()))?;
    let headers = reader.headers()?.clone();
    let expected = ["item_id", "rater_id", "label"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(malformed(
            path,
            1,
            format!("header must be exactly {}", expected.join(",")),
        ));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let lineno = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 3 {
            return Err(malformed(
                path,
                lineno,
                format!("expected 3 fields, found {}", row.len()),
            ));
        }
        let record = AnnotationRecord {
            item_id: row[0].to_string(),
            rater_id: row[1].to_string(),
            label: row[2].to_string(),
        };
        validate_record(&record).map_err(|msg| malformed(path, lineno, msg))?;
        records.push(record);
    }
    Ok(records)
}

fn validate_record(r: &AnnotationRecord) -> std::result::Result<(), String> {
    if r.item_id.is_empty() {
        return Err("empty item_id".into());
    }
    if r.rater_id.is_empty() {
        return Err("empty rater_id".into());
    }
    if r.label.is_empty() {
        return Err("empty label".into());
    }
    Ok(())
}

fn malformed(path: &Path, line: u64, msg: String) -> Error {
    Error::Malformed {
        path: path.display().to_string(),
        line,
        msg,
    }
}

/// Label clean-up rules applied before any metric sees the data.
///
/// An item is removed outright when any of its judgements carries a label
/// in `drop_labels`; that removal wins even if the label also has a
/// mapping entry. Surviving labels pass through `mapping` (identity for
/// labels already in the target space). `require_rater_count`, when set,
/// then removes items whose judgement count differs from it.
#[derive(Debug, Clone, Default)]
pub struct HarmonizationRule {
    pub mapping: HashMap<String, String>,
    pub drop_labels: HashSet<String>,
    pub require_rater_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarmonizationReport {
    pub input_items: usize,
    pub output_items: usize,
    pub dropped_by_label: usize,
    pub dropped_by_count: usize,
    pub input_records: usize,
    pub output_records: usize,
}

pub fn harmonize(
    records: &[AnnotationRecord],
    rule: &HarmonizationRule,
    space: &LabelSpace,
) -> Result<(AnnotationMatrix, HarmonizationReport)> {
    for target in rule.mapping.values() {
        if space.index_of(target).is_none() {
            return Err(Error::InvalidInput(format!(
                "mapping target {target:?} is not in the label space"
            )));
        }
    }

    let mut item_order: Vec<&str> = Vec::new();
    let mut seen_items: HashSet<&str> = HashSet::new();
    for r in records {
        if seen_items.insert(&r.item_id) {
            item_order.push(&r.item_id);
        }
    }
    let input_items = item_order.len();

    let mut dropped_label: HashSet<&str> = HashSet::new();
    for r in records {
        if rule.drop_labels.contains(&r.label) {
            dropped_label.insert(&r.item_id);
        }
    }

    // Map the labels of surviving items; judgements on dropped items are
    // never validated (the drop wins over everything).
    let mut mapped: Vec<(&str, &str, &str)> = Vec::new();
    let mut per_item_count: HashMap<&str, usize> = HashMap::new();
    for r in records {
        if dropped_label.contains(r.item_id.as_str()) {
            continue;
        }
        let label = match rule.mapping.get(&r.label) {
            Some(target) => target.as_str(),
            None => {
                if space.index_of(&r.label).is_some() {
                    r.label.as_str()
                } else {
                    return Err(Error::UnknownLabel {
                        label: r.label.clone(),
                        item: r.item_id.clone(),
                    });
                }
            }
        };
        mapped.push((r.item_id.as_str(), r.rater_id.as_str(), label));
        *per_item_count.entry(&r.item_id).or_insert(0) += 1;
    }

    let mut dropped_count: HashSet<&str> = HashSet::new();
    if let Some(required) = rule.require_rater_count {
        for (&item, &count) in &per_item_count {
            if count != required {
                dropped_count.insert(item);
            }
        }
    }

    let surviving: Vec<(&str, &str, &str)> = mapped
        .into_iter()
        .filter(|(item, _, _)| !dropped_count.contains(item))
        .collect();
    let output_records = surviving.len();
    let matrix = AnnotationMatrix::from_judgements(surviving, space.clone())?;

    let report = HarmonizationReport {
        input_items,
        output_items: matrix.n_items(),
        dropped_by_label: dropped_label.len(),
        dropped_by_count: dropped_count.len(),
        input_records: records.len(),
        output_records,
    };
    Ok((matrix, report))
}

/// Optional per-item metadata: source text and annotated target groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemInfo {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub targets: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct ItemLine {
    item_id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    targets: Option<Vec<String>>,
}

/// Reads a JSONL items file keyed by `item_id`. Unknown extra keys are
/// tolerated; duplicate IDs are not.
pub fn read_items(path: &Path) -> Result<IndexMap<String, ItemInfo>> {
    let file = BufReader::new(File::open(path)?);
    let mut items = IndexMap::new();
    for (idx, line) in file.lines().enumerate() {
        let line = line?;
        let lineno = idx as u64 + 1;
        let parsed: ItemLine =
            serde_json::from_str(&line).map_err(|e| malformed(path, lineno, e.to_string()))?;
        if parsed.item_id.is_empty() {
            return Err(malformed(path, lineno, "empty item_id".into()));
        }
        let info = ItemInfo {
            text: parsed.text,
            targets: parsed.targets,
        };
        if items.insert(parsed.item_id.clone(), info).is_some() {
            return Err(Error::DuplicateItem(parsed.item_id));
        }
    }
    Ok(items)
}

/// Reads a groups file: one JSON object mapping group name to an array of
/// rater IDs, in file order.
pub fn read_groups(path: &Path) -> Result<Vec<RaterGroup>> {
    let mut raw = String::new();
    File::open(path)?.read_to_string(&mut raw)?;
    let parsed: IndexMap<String, Vec<String>> = serde_json::from_str(&raw)?;
    parsed
        .into_iter()
        .map(|(name, members)| RaterGroup::new(name, members))
        .collect()
}
