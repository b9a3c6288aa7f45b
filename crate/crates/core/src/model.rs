//! The annotation data model: label spaces, the items x raters judgement
//! matrix, rater groups, and per-item label vectors.
//!
//! All types are immutable after construction. Item and rater order is
//! whatever order they first appeared in, never re-sorted; every consumer
//! relies on that for deterministic output.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};

/// An ordered nominal category set, optionally with a designated positive
/// category (used by F1 and confusion statistics).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelSpace {
    categories: Vec<String>,
    positive: Option<usize>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(categories: Vec<S>, positive: Option<&str>) -> Result<Self> {
        let categories: Vec<String> = categories.into_iter().map(Into::into).collect();
        if categories.len() < 2 {
            return Err(Error::InvalidSpace("need at least 2 categories".into()));
        }
        let mut seen = HashSet::new();
        for c in &categories {
            if c.is_empty() {
                return Err(Error::InvalidSpace("empty category name".into()));
            }
            if !seen.insert(c.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate category {c:?}")));
            }
        }
        let positive = match positive {
            None => None,
            Some(name) => Some(
                categories
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| {
                        Error::InvalidSpace(format!("positive category {name:?} not in set"))
                    })?,
            ),
        };
        Ok(Self {
            categories,
            positive,
        })
    }

    /// The canonical binary space: {hate, no-hate}, positive = hate.
    pub fn binary_hate() -> Self {
        Self::new(vec!["hate", "no-hate"], Some("hate")).expect("static space is valid")
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        false // |categories| >= 2 by construction
    }

    pub fn is_binary(&self) -> bool {
        self.categories.len() == 2
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.categories[index]
    }

    pub fn positive(&self) -> Option<usize> {
        self.positive
    }

    pub fn positive_name(&self) -> Option<&str> {
        self.positive.map(|i| self.categories[i].as_str())
    }
}

/// Items x raters nominal judgements with missing cells, over one
/// `LabelSpace`. Cells are stored densely, row-major by item.
#[derive(Debug, Clone)]
pub struct AnnotationMatrix {
    items: Vec<String>,
    raters: Vec<String>,
    cells: Vec<Option<usize>>,
    space: LabelSpace,
    item_pos: HashMap<String, usize>,
    rater_pos: HashMap<String, usize>,
}

impl AnnotationMatrix {
    /// Builds a matrix from (item_id, rater_id, label) triples. Items and
    /// raters are listed in first-appearance order. Labels must belong to
    /// `space`; a repeated (item, rater) pair is an error.
    pub fn from_judgements<I, S1, S2, S3>(judgements: I, space: LabelSpace) -> Result<Self>
    where
        I: IntoIterator<Item = (S1, S2, S3)>,
        S1: AsRef<str>,
        S2: AsRef<str>,
        S3: AsRef<str>,
    {
        let mut items: Vec<String> = Vec::new();
        let mut raters: Vec<String> = Vec::new();
        let mut item_pos: HashMap<String, usize> = HashMap::new();
        let mut rater_pos: HashMap<String, usize> = HashMap::new();
        let mut triples: Vec<(usize, usize, usize)> = Vec::new();

        for (item, rater, label) in judgements {
            let (item, rater, label) = (item.as_ref(), rater.as_ref(), label.as_ref());
            let li = space.index_of(label).ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
                item: item.to_string(),
            })?;
            let ii = *item_pos.entry(item.to_string()).or_insert_with(|| {
                items.push(item.to_string());
                items.len() - 1
            });
            let ri = *rater_pos.entry(rater.to_string()).or_insert_with(|| {
                raters.push(rater.to_string());
                raters.len() - 1
            });
            triples.push((ii, ri, li));
        }

        let mut cells = vec![None; items.len() * raters.len()];
        let width = raters.len();
        for (ii, ri, li) in triples {
            let cell = &mut cells[ii * width + ri];
            if cell.is_some() {
                return Err(Error::DuplicateCell {
                    item: items[ii].clone(),
                    rater: raters[ri].clone(),
                });
            }
            *cell = Some(li);
        }

        Ok(Self {
            items,
            raters,
            cells,
            space,
            item_pos,
            rater_pos,
        })
    }

    /// Builds a matrix from an explicit grid, `rows[item][rater]`. Meant
    /// for fixtures and synthetic data. Every row and every column must
    /// contain at least one judgement.
    pub fn from_grid<S1, S2>(
        item_ids: Vec<S1>,
        rater_ids: Vec<S2>,
        rows: Vec<Vec<Option<usize>>>,
        space: LabelSpace,
    ) -> Result<Self>
    where
        S1: Into<String>,
        S2: Into<String>,
    {
        let items: Vec<String> = item_ids.into_iter().map(Into::into).collect();
        let raters: Vec<String> = rater_ids.into_iter().map(Into::into).collect();
        if rows.len() != items.len() {
            return Err(Error::InvalidInput("row count != item count".into()));
        }
        let width = raters.len();
        let mut cells = Vec::with_capacity(items.len() * width);
        for (row, item) in rows.iter().zip(&items) {
            if row.len() != width {
                return Err(Error::InvalidInput(format!(
                    "row for item {item:?} has {} cells, expected {width}",
                    row.len()
                )));
            }
            if row.iter().all(|c| c.is_none()) {
                return Err(Error::InvalidInput(format!(
                    "item {item:?} has no judgements"
                )));
            }
            for &cell in row {
                if let Some(li) = cell {
                    if li >= space.len() {
                        return Err(Error::InvalidInput(format!(
                            "category index {li} out of range on item {item:?}"
                        )));
                    }
                }
                cells.push(cell);
            }
        }
        for (ri, rater) in raters.iter().enumerate() {
            if (0..items.len()).all(|ii| cells[ii * width + ri].is_none()) {
                return Err(Error::InvalidInput(format!(
                    "rater {rater:?} has no judgements"
                )));
            }
        }

        let item_pos = index_map(&items).map_err(Error::DuplicateItem)?;
        let rater_pos = index_map(&raters)
            .map_err(|r| Error::InvalidInput(format!("duplicate rater id {r:?}")))?;
        Ok(Self {
            items,
            raters,
            cells,
            space,
            item_pos,
            rater_pos,
        })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_raters(&self) -> usize {
        self.raters.len()
    }

    pub fn get(&self, item: usize, rater: usize) -> Option<usize> {
        self.cells[item * self.raters.len() + rater]
    }

    pub fn item_position(&self, item_id: &str) -> Option<usize> {
        self.item_pos.get(item_id).copied()
    }

    pub fn rater_position(&self, rater_id: &str) -> Option<usize> {
        self.rater_pos.get(rater_id).copied()
    }

    /// Number of judgements present for an item.
    pub fn judgement_count(&self, item: usize) -> usize {
        let w = self.raters.len();
        self.cells[item * w..(item + 1) * w]
            .iter()
            .filter(|c| c.is_some())
            .count()
    }

    /// All (item_id, rater_id, label_name) triples in row-major order.
    pub fn judgements(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        let w = self.raters.len();
        self.cells.iter().enumerate().filter_map(move |(k, cell)| {
            cell.map(|li| {
                (
                    self.items[k / w].as_str(),
                    self.raters[k % w].as_str(),
                    self.space.name(li),
                )
            })
        })
    }

    /// Keeps exactly the items satisfying the predicate. The rater list is
    /// unchanged even if a rater loses all judgements; a zero-item result
    /// is legal and downstream operations decide what to do with it.
    pub fn restrict<F: Fn(&str) -> bool>(&self, predicate: F) -> Self {
        let w = self.raters.len();
        let mut items = Vec::new();
        let mut cells = Vec::new();
        for (ii, id) in self.items.iter().enumerate() {
            if predicate(id) {
                items.push(id.clone());
                cells.extend_from_slice(&self.cells[ii * w..(ii + 1) * w]);
            }
        }
        let item_pos = items
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Self {
            items,
            raters: self.raters.clone(),
            cells,
            space: self.space.clone(),
            item_pos,
            rater_pos: self.rater_pos.clone(),
        }
    }

    /// One rater's judgements as a vector over the items they labeled,
    /// in matrix item order.
    pub fn column(&self, rater_id: &str) -> Result<LabelVector> {
        let ri = self
            .rater_position(rater_id)
            .ok_or_else(|| Error::UnknownRater(rater_id.to_string()))?;
        let mut item_ids = Vec::new();
        let mut labels = Vec::new();
        for (ii, id) in self.items.iter().enumerate() {
            if let Some(li) = self.get(ii, ri) {
                item_ids.push(id.clone());
                labels.push(li);
            }
        }
        LabelVector::new(item_ids, labels, self.space.clone())
    }
}

fn index_map(ids: &[String]) -> std::result::Result<HashMap<String, usize>, String> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(id.clone());
        }
    }
    Ok(map)
}

/// A named, ordered set of rater IDs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaterGroup {
    name: String,
    members: Vec<String>,
}

impl RaterGroup {
    pub fn new<S1: Into<String>, S2: Into<String>>(name: S1, members: Vec<S2>) -> Result<Self> {
        let name = name.into();
        let members: Vec<String> = members.into_iter().map(Into::into).collect();
        if members.is_empty() {
            return Err(Error::InvalidGroup {
                name,
                msg: "no members".into(),
            });
        }
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(m.as_str()) {
                return Err(Error::InvalidGroup {
                    name,
                    msg: format!("duplicate member {m:?}"),
                });
            }
        }
        Ok(Self { name, members })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // members non-empty by construction
    }

    /// Every member must be a rater of the matrix.
    pub fn validate_against(&self, matrix: &AnnotationMatrix) -> Result<()> {
        for m in &self.members {
            if matrix.rater_position(m).is_none() {
                return Err(Error::UnknownRater(m.clone()));
            }
        }
        Ok(())
    }

    pub fn is_disjoint_from(&self, other: &RaterGroup) -> bool {
        let mine: HashSet<&str> = self.members.iter().map(String::as_str).collect();
        other.members.iter().all(|m| !mine.contains(m.as_str()))
    }
}

/// Labels for an ordered list of items, e.g. one rater's column, a
/// majority vote, or a degraded synthetic prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    item_ids: Vec<String>,
    labels: Vec<usize>,
    space: LabelSpace,
}

impl LabelVector {
    pub fn new(item_ids: Vec<String>, labels: Vec<usize>, space: LabelSpace) -> Result<Self> {
        if item_ids.len() != labels.len() {
            return Err(Error::InvalidInput(
                "item/label lengths differ in label vector".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= space.len()) {
            return Err(Error::InvalidInput(format!(
                "category index {bad} out of range in label vector"
            )));
        }
        Ok(Self {
            item_ids,
            labels,
            space,
        })
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.item_ids
            .iter()
            .map(String::as_str)
            .zip(self.labels.iter().copied())
    }

    pub fn position_map(&self) -> HashMap<&str, usize> {
        self.item_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// Label pairs on the items both vectors cover, in `self` item order.
    pub fn common_labels(&self, other: &LabelVector) -> Vec<(usize, usize)> {
        let theirs = other.position_map();
        self.iter()
            .filter_map(|(id, l)| theirs.get(id).map(|&j| (l, other.labels[j])))
            .collect()
    }
}
