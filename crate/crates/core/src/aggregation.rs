//! Group-level pseudo-raters: majority votes, unanimity flags, consensus
//! subsets, and leave-one-out references.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{AnnotationMatrix, LabelSpace, LabelVector, RaterGroup};

/// Outcome of a per-item vote. Ties are data, not errors; downstream
/// consumers exclude them and report how many they excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Majority {
    Label(usize),
    Tie,
}

/// Which items enter the vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Only items judged by every group member.
    Complete,
    /// Every item with at least one judgement from the group.
    Partial,
}

/// Per-item majority label and unanimity flag for one group.
#[derive(Debug, Clone)]
pub struct AggregateLabels {
    item_ids: Vec<String>,
    majority: Vec<Majority>,
    unanimous: Vec<bool>,
    source_group: String,
    space: LabelSpace,
}

impl AggregateLabels {
    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn majority(&self) -> &[Majority] {
        &self.majority
    }

    pub fn unanimous(&self) -> &[bool] {
        &self.unanimous
    }

    pub fn source_group(&self) -> &str {
        &self.source_group
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    /// The majority labels as a vector, dropping tied items. Returns the
    /// vector and the number of ties dropped.
    pub fn majority_labels(&self) -> (LabelVector, usize) {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut ties = 0;
        for (i, m) in self.majority.iter().enumerate() {
            match m {
                Majority::Label(l) => {
                    ids.push(self.item_ids[i].clone());
                    labels.push(*l);
                }
                Majority::Tie => ties += 1,
            }
        }
        let v = LabelVector::new(ids, labels, self.space.clone())
            .expect("majority labels are valid by construction");
        (v, ties)
    }
}

/// Per-item majority over a group's judgements. `Coverage::Complete`
/// restricts to items every member judged; `Partial` admits any item the
/// group touched. Unanimity means all present judgements are equal.
pub fn majority_vote(
    matrix: &AnnotationMatrix,
    group: &RaterGroup,
    coverage: Coverage,
) -> Result<AggregateLabels> {
    group.validate_against(matrix)?;
    let member_cols: Vec<usize> = group
        .members()
        .iter()
        .map(|m| matrix.rater_position(m).expect("validated above"))
        .collect();

    let mut item_ids = Vec::new();
    let mut majority = Vec::new();
    let mut unanimous = Vec::new();
    let mut counts = vec![0usize; matrix.space().len()];

    for (ii, id) in matrix.items().iter().enumerate() {
        counts.fill(0);
        let mut present = 0usize;
        for &ri in &member_cols {
            if let Some(li) = matrix.get(ii, ri) {
                counts[li] += 1;
                present += 1;
            }
        }
        let include = match coverage {
            Coverage::Complete => present == member_cols.len(),
            Coverage::Partial => present >= 1,
        };
        if !include {
            continue;
        }

        let top = *counts.iter().max().expect("space is non-empty");
        let winners = counts.iter().filter(|&&c| c == top).count();
        item_ids.push(id.clone());
        if winners == 1 {
            let label = counts.iter().position(|&c| c == top).expect("one winner");
            majority.push(Majority::Label(label));
            unanimous.push(top == present);
        } else {
            majority.push(Majority::Tie);
            unanimous.push(false);
        }
    }

    Ok(AggregateLabels {
        item_ids,
        majority,
        unanimous,
        source_group: group.name().to_string(),
        space: matrix.space().clone(),
    })
}

/// The unanimous items only, carrying the label everyone gave.
pub fn consensus_subset(agg: &AggregateLabels) -> LabelVector {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (i, &u) in agg.unanimous.iter().enumerate() {
        if u {
            match agg.majority[i] {
                Majority::Label(l) => {
                    ids.push(agg.item_ids[i].clone());
                    labels.push(l);
                }
                Majority::Tie => unreachable!("unanimous items cannot tie"),
            }
        }
    }
    LabelVector::new(ids, labels, agg.space.clone()).expect("consensus labels are valid")
}

/// Reference labels for scoring one rater against the rest of their
/// group: items where every remaining member judged and all agree. Items
/// the remainder disagrees on are dropped, so the reference is always a
/// well-defined nominal vector.
pub fn leave_one_out_reference(
    matrix: &AnnotationMatrix,
    group: &RaterGroup,
    held_out_rater: &str,
) -> Result<LabelVector> {
    if group.len() < 2 {
        return Err(Error::LeaveOneOutTooSmall);
    }
    group.validate_against(matrix)?;
    if !group.members().iter().any(|m| m == held_out_rater) {
        return Err(Error::UnknownRater(held_out_rater.to_string()));
    }

    let rest_cols: Vec<usize> = group
        .members()
        .iter()
        .filter(|m| m.as_str() != held_out_rater)
        .map(|m| matrix.rater_position(m).expect("validated above"))
        .collect();

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    'items: for (ii, id) in matrix.items().iter().enumerate() {
        let mut agreed: Option<usize> = None;
        for &ri in &rest_cols {
            match matrix.get(ii, ri) {
                None => continue 'items,
                Some(li) => match agreed {
                    None => agreed = Some(li),
                    Some(prev) if prev == li => {}
                    Some(_) => continue 'items,
                },
            }
        }
        ids.push(id.clone());
        labels.push(agreed.expect("rest_cols is non-empty"));
    }
    LabelVector::new(ids, labels, matrix.space().clone())
}

/// `targets` maps item_id to its annotated target groups; builds the
/// lookup used by error analysis from ingest's items map.
pub fn targets_by_item(
    items: &indexmap::IndexMap<String, crate::ingest::ItemInfo>,
) -> HashMap<String, Vec<String>> {
    items
        .iter()
        .filter_map(|(id, info)| {
            info.targets
                .as_ref()
                .map(|t| (id.clone(), t.clone()))
        })
        .collect()
}
