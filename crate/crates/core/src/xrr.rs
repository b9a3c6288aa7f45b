//! Cross-replication reliability: chance-corrected agreement between two
//! disjoint rater groups, and its normalization by each group's own
//! within-group reliability.

use serde::Serialize;

use crate::agreement::mean_pairwise_kappa;
use crate::error::{Error, Result};
use crate::model::{AnnotationMatrix, RaterGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossKappa {
    pub value: f64,
    pub n_items: usize,
    pub n_excluded: usize,
}

/// Cross-group kappa. Observed agreement averages, per item with at least
/// one judgement from each side, the fraction of agreeing cross pairs
/// (one judgement per group, all combinations); every included item
/// weighs equally. Chance pairs the two groups' pooled label proportions
/// over the included judgements.
pub fn cross_kappa(
    matrix: &AnnotationMatrix,
    group_a: &RaterGroup,
    group_b: &RaterGroup,
) -> Result<CrossKappa> {
    group_a.validate_against(matrix)?;
    group_b.validate_against(matrix)?;
    if !group_a.is_disjoint_from(group_b) {
        return Err(Error::GroupsNotDisjoint {
            a: group_a.name().to_string(),
            b: group_b.name().to_string(),
        });
    }

    let cols_a: Vec<usize> = group_a
        .members()
        .iter()
        .map(|r| matrix.rater_position(r).expect("validated above"))
        .collect();
    let cols_b: Vec<usize> = group_b
        .members()
        .iter()
        .map(|r| matrix.rater_position(r).expect("validated above"))
        .collect();

    let k = matrix.space().len();
    let mut pool_a = vec![0usize; k];
    let mut pool_b = vec![0usize; k];
    let mut total_a = 0usize;
    let mut total_b = 0usize;
    let mut p_o_sum = 0.0;
    let mut included = 0usize;
    let mut labels_a: Vec<usize> = Vec::with_capacity(cols_a.len());
    let mut labels_b: Vec<usize> = Vec::with_capacity(cols_b.len());

    for ii in 0..matrix.n_items() {
        labels_a.clear();
        labels_b.clear();
        labels_a.extend(cols_a.iter().filter_map(|&ri| matrix.get(ii, ri)));
        labels_b.extend(cols_b.iter().filter_map(|&ri| matrix.get(ii, ri)));
        if labels_a.is_empty() || labels_b.is_empty() {
            continue;
        }
        included += 1;
        let mut agree = 0usize;
        for &la in &labels_a {
            for &lb in &labels_b {
                if la == lb {
                    agree += 1;
                }
            }
        }
        p_o_sum += agree as f64 / (labels_a.len() * labels_b.len()) as f64;
        for &la in &labels_a {
            pool_a[la] += 1;
        }
        for &lb in &labels_b {
            pool_b[lb] += 1;
        }
        total_a += labels_a.len();
        total_b += labels_b.len();
    }

    if included == 0 {
        return Err(Error::NoCommonItems);
    }
    if (0..k).any(|c| pool_a[c] == total_a && pool_b[c] == total_b) {
        return Err(Error::DegenerateMarginals);
    }

    let p_o = p_o_sum / included as f64;
    let mut p_e = 0.0;
    for c in 0..k {
        p_e += (pool_a[c] as f64 / total_a as f64) * (pool_b[c] as f64 / total_b as f64);
    }
    Ok(CrossKappa {
        value: (p_o - p_e) / (1.0 - p_e),
        n_items: included,
        n_excluded: matrix.n_items() - included,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct XrrResult {
    pub group_a: String,
    pub group_b: String,
    pub kappa_x: f64,
    pub kappa_within_a: f64,
    pub kappa_within_b: f64,
    pub normalized_kappa_x: f64,
    pub n_items: usize,
    /// Normalization can push the value outside [-1, 1] when the
    /// within-group reliabilities are noisy; it is reported unclipped
    /// with this flag raised.
    pub out_of_range: bool,
}

/// Cross-group kappa divided by the geometric mean of each group's mean
/// pairwise within-group kappa. Both groups need at least two members and
/// strictly positive within-group reliability.
pub fn normalized_cross_kappa(
    matrix: &AnnotationMatrix,
    group_a: &RaterGroup,
    group_b: &RaterGroup,
) -> Result<XrrResult> {
    let cross = cross_kappa(matrix, group_a, group_b)?;
    for g in [group_a, group_b] {
        if g.len() < 2 {
            return Err(Error::WithinReliabilityUndefined(g.name().to_string()));
        }
    }
    let within_a = mean_pairwise_kappa(matrix, group_a)?.value;
    let within_b = mean_pairwise_kappa(matrix, group_b)?.value;
    for (g, within) in [(group_a, within_a), (group_b, within_b)] {
        if within <= 0.0 {
            return Err(Error::NormalizationUndefined {
                group: g.name().to_string(),
                value: within,
            });
        }
    }

    let normalized = cross.value / (within_a * within_b).sqrt();
    Ok(XrrResult {
        group_a: group_a.name().to_string(),
        group_b: group_b.name().to_string(),
        kappa_x: cross.value,
        kappa_within_a: within_a,
        kappa_within_b: within_b,
        normalized_kappa_x: normalized,
        n_items: cross.n_items,
        out_of_range: !(-1.0..=1.0).contains(&normalized),
    })
}
