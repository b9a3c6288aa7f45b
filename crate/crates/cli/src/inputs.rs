//! Input loading shared by the analysis commands: label space and
//! harmonization rule construction, file ingestion, and resolution of
//! label-source specs like "majority:humans" or "rater:H2".

use std::collections::{HashMap, HashSet};

use anyhow::{bail, Context, Result};
use ratereval::aggregation::{consensus_subset, majority_vote, Coverage};
use ratereval::ingest::{
    harmonize, read_annotations, read_groups, read_items, AnnotationFormat, HarmonizationReport,
    HarmonizationRule, ItemInfo,
};
use ratereval::model::{AnnotationMatrix, LabelSpace, LabelVector, RaterGroup};

use crate::{DataArgs, FormatChoice};

pub struct LoadedData {
    pub matrix: AnnotationMatrix,
    pub groups: Vec<RaterGroup>,
    pub harmonization: HarmonizationReport,
    pub items: Option<indexmap::IndexMap<String, ItemInfo>>,
}

pub fn parse_space(categories: &str, positive: Option<&str>) -> Result<LabelSpace> {
    let cats: Vec<&str> = categories
        .split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .collect();
    if cats.is_empty() {
        bail!("--categories must name at least one label");
    }
    let positive = match positive {
        Some(p) => {
            if !cats.contains(&p) {
                bail!("--positive {p:?} is not one of the categories");
            }
            Some(p)
        }
        None => cats.contains(&"hate").then_some("hate"),
    };
    Ok(LabelSpace::new(cats, positive)?)
}

pub fn parse_rule(data: &DataArgs) -> Result<HarmonizationRule> {
    let mut mapping = HashMap::new();
    for entry in &data.map {
        let Some((src, dst)) = entry.split_once('=') else {
            bail!("--map expects SRC=DST, got {entry:?}");
        };
        if src.is_empty() || dst.is_empty() {
            bail!("--map expects non-empty SRC=DST, got {entry:?}");
        }
        if mapping.insert(src.to_string(), dst.to_string()).is_some() {
            bail!("--map names source label {src:?} twice");
        }
    }
    let drop_labels: HashSet<String> = data.drop_label.iter().cloned().collect();
    Ok(HarmonizationRule {
        mapping,
        drop_labels,
        require_rater_count: data.require_raters,
    })
}

pub fn load(data: &DataArgs) -> Result<LoadedData> {
    let space = parse_space(&data.categories, data.positive.as_deref())?;
    let format = match data.annotations_format {
        Some(FormatChoice::Jsonl) => AnnotationFormat::Jsonl,
        Some(FormatChoice::Csv) => AnnotationFormat::Csv,
        None => AnnotationFormat::from_path(&data.annotations),
    };
    let records = read_annotations(&data.annotations, format)
        .with_context(|| format!("reading {}", data.annotations.display()))?;
    let rule = parse_rule(data)?;
    let (matrix, harmonization) = harmonize(&records, &rule, &space)?;

    let groups =
        read_groups(&data.groups).with_context(|| format!("reading {}", data.groups.display()))?;

    let items = match &data.items {
        Some(path) => Some(read_items(path).with_context(|| format!("reading {}", path.display()))?),
        None => None,
    };

    Ok(LoadedData {
        matrix,
        groups,
        harmonization,
        items,
    })
}

pub fn find_group<'a>(groups: &'a [RaterGroup], name: &str) -> Result<&'a RaterGroup> {
    groups
        .iter()
        .find(|g| g.name() == name)
        .with_context(|| format!("group {name:?} is not defined in the groups file"))
}

/// A label-source spec: the majority or consensus pseudo-rater of a group,
/// or a single rater's own column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    Majority(String),
    Consensus(String),
    Rater(String),
}

impl SourceSpec {
    pub fn parse(raw: &str) -> Result<Self> {
        let Some((kind, name)) = raw.split_once(':') else {
            bail!("source spec {raw:?} must look like majority:GROUP, consensus:GROUP, or rater:ID");
        };
        if name.is_empty() {
            bail!("source spec {raw:?} names nothing after the colon");
        }
        match kind {
            "majority" => Ok(SourceSpec::Majority(name.to_string())),
            "consensus" => Ok(SourceSpec::Consensus(name.to_string())),
            "rater" => Ok(SourceSpec::Rater(name.to_string())),
            other => bail!("unknown source kind {other:?} in {raw:?}"),
        }
    }

    /// Canonical display form, used as the row label in reports.
    pub fn label(&self) -> String {
        match self {
            SourceSpec::Majority(g) => format!("majority:{g}"),
            SourceSpec::Consensus(g) => format!("consensus:{g}"),
            SourceSpec::Rater(r) => format!("rater:{r}"),
        }
    }

    pub fn resolve(&self, matrix: &AnnotationMatrix, groups: &[RaterGroup]) -> Result<LabelVector> {
        match self {
            SourceSpec::Majority(name) => {
                let group = find_group(groups, name)?;
                let agg = majority_vote(matrix, group, Coverage::Complete)?;
                let (labels, _ties) = agg.majority_labels();
                Ok(labels)
            }
            SourceSpec::Consensus(name) => {
                let group = find_group(groups, name)?;
                let agg = majority_vote(matrix, group, Coverage::Complete)?;
                Ok(consensus_subset(&agg))
            }
            SourceSpec::Rater(id) => Ok(matrix.column(id)?),
        }
    }
}

/// Restricts both vectors to their common items, in `h` order.
pub fn align(h: &LabelVector, l: &LabelVector) -> Result<(LabelVector, LabelVector)> {
    let l_pos = l.position_map();
    let mut ids = Vec::new();
    let mut h_labels = Vec::new();
    let mut l_labels = Vec::new();
    for (i, id) in h.item_ids().iter().enumerate() {
        if let Some(&j) = l_pos.get(id.as_str()) {
            ids.push(id.clone());
            h_labels.push(h.labels()[i]);
            l_labels.push(l.labels()[j]);
        }
    }
    if ids.is_empty() {
        bail!("the two label sources share no items");
    }
    let h_out = LabelVector::new(ids.clone(), h_labels, h.space().clone())?;
    let l_out = LabelVector::new(ids, l_labels, l.space().clone())?;
    Ok((h_out, l_out))
}
