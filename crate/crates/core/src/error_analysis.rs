//! Confusion statistics and per-target miss/false-positive rates for a
//! prediction source scored against gold labels.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_pos: usize,
    #[serde(rename = "fp")]
    pub false_pos: usize,
    #[serde(rename = "fn")]
    pub false_neg: usize,
    #[serde(rename = "tn")]
    pub true_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// Same convention as the ranking module's scorer: 0.0 when nothing
    /// was hit but positives exist; undefined with no positives at all.
    pub fn f1(&self) -> Result<f64> {
        let denom = 2 * self.true_pos + self.false_pos + self.false_neg;
        if denom == 0 {
            return Err(Error::F1Undefined);
        }
        Ok(2.0 * self.true_pos as f64 / denom as f64)
    }
}

/// Standard 2x2 counts with the space's designated positive class.
pub fn confusion_counts(gold: &LabelVector, pred: &LabelVector) -> Result<ConfusionCounts> {
    if gold.space().categories() != pred.space().categories() {
        return Err(Error::SpaceMismatch);
    }
    if gold.item_ids() != pred.item_ids() {
        return Err(Error::ItemSetMismatch);
    }
    let positive = gold.space().positive().ok_or(Error::NoPositiveClass)?;

    let mut counts = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
    };
    for (g, p) in gold.labels().iter().zip(pred.labels()) {
        match (*g == positive, *p == positive) {
            (true, true) => counts.true_pos += 1,
            (false, true) => counts.false_pos += 1,
            (true, false) => counts.false_neg += 1,
            (false, false) => counts.true_neg += 1,
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetMissRow {
    pub target: String,
    pub n_gold_hate: usize,
    pub n_missed: usize,
    pub missed_pct: f64,
}

/// Share of gold-positive items the prediction labels negative, per
/// target group. Items listing several targets count toward each one.
/// Targets never appearing on a gold-positive item are omitted. Rows are
/// sorted by miss rate descending, then target name.
pub fn per_target_miss_rates(
    gold: &LabelVector,
    pred: &LabelVector,
    targets: &HashMap<String, Vec<String>>,
) -> Result<Vec<TargetMissRow>> {
    let per_target = tally(gold, pred, targets, true)?;
    Ok(per_target
        .into_iter()
        .map(|(target, (denom, hits))| TargetMissRow {
            target,
            n_gold_hate: denom,
            n_missed: hits,
            missed_pct: 100.0 * hits as f64 / denom as f64,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetFalsePositiveRow {
    pub target: String,
    pub n_gold_nohate: usize,
    pub n_false_pos: usize,
    pub false_pos_pct: f64,
}

/// The symmetric view: share of gold-negative items predicted positive,
/// per target group.
pub fn per_target_false_positive_rates(
    gold: &LabelVector,
    pred: &LabelVector,
    targets: &HashMap<String, Vec<String>>,
) -> Result<Vec<TargetFalsePositiveRow>> {
    let per_target = tally(gold, pred, targets, false)?;
    Ok(per_target
        .into_iter()
        .map(|(target, (denom, hits))| TargetFalsePositiveRow {
            target,
            n_gold_nohate: denom,
            n_false_pos: hits,
            false_pos_pct: 100.0 * hits as f64 / denom as f64,
        })
        .collect())
}

/// Counts (denominator, errors) per target over items whose gold label
/// matches `gold_is_positive`; an error is a prediction on the other side
/// of the gold label. Returned sorted by error rate descending, then name.
fn tally(
    gold: &LabelVector,
    pred: &LabelVector,
    targets: &HashMap<String, Vec<String>>,
    gold_is_positive: bool,
) -> Result<Vec<(String, (usize, usize))>> {
    if gold.space().categories() != pred.space().categories() {
        return Err(Error::SpaceMismatch);
    }
    if gold.item_ids() != pred.item_ids() {
        return Err(Error::ItemSetMismatch);
    }
    let positive = gold.space().positive().ok_or(Error::NoPositiveClass)?;

    let mut by_target: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, (g, p)) in gold.labels().iter().zip(pred.labels()).enumerate() {
        if (*g == positive) != gold_is_positive {
            continue;
        }
        let Some(item_targets) = targets.get(&gold.item_ids()[i]) else {
            continue;
        };
        let wrong = (*p == positive) != gold_is_positive;
        for t in item_targets {
            let entry = by_target.entry(t).or_insert((0, 0));
            entry.0 += 1;
            if wrong {
                entry.1 += 1;
            }
        }
    }

    let mut rows: Vec<(String, (usize, usize))> = by_target
        .into_iter()
        .map(|(t, v)| (t.to_string(), v))
        .collect();
    rows.sort_by(|a, b| {
        let rate_a = a.1 .1 as f64 / a.1 .0 as f64;
        let rate_b = b.1 .1 as f64 / b.1 .0 as f64;
        rate_b
            .partial_cmp(&rate_a)
            .expect("rates are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(rows)
}
