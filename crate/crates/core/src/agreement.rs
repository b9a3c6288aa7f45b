//! Chance-corrected agreement metrics and the full comparison report:
//! pairwise Cohen, leave-one-out, cross-group, group-level, Fleiss,
//! Krippendorff alpha, and the cross-group reliability block.

use serde::Serialize;

use crate::aggregation::{consensus_subset, majority_vote, Coverage};
use crate::error::{Error, Result};
use crate::model::{AnnotationMatrix, LabelVector, RaterGroup};
use crate::util::parallel_map;
use crate::xrr::{normalized_cross_kappa, XrrResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonKind {
    Pair,
    LeaveOneOut,
    CrossGroup,
    GroupLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaScore {
    pub value: f64,
    pub n_items: usize,
    pub comparison: ComparisonKind,
}

/// Cohen's kappa over the items both vectors cover. Chance agreement uses
/// each vector's own label marginals on that common subset.
///
/// Both-constant-and-identical columns make p_e exactly 1; that case is
/// detected on the integer counts and refused rather than returned as 0/0.
pub fn cohen_kappa(a: &LabelVector, b: &LabelVector) -> Result<KappaScore> {
    if a.space().categories() != b.space().categories() {
        return Err(Error::SpaceMismatch);
    }
    let pairs = a.common_labels(b);
    let n = pairs.len();
    if n == 0 {
        return Err(Error::NoCommonItems);
    }

    let k = a.space().len();
    let mut count_a = vec![0usize; k];
    let mut count_b = vec![0usize; k];
    let mut agree = 0usize;
    for &(la, lb) in &pairs {
        count_a[la] += 1;
        count_b[lb] += 1;
        if la == lb {
            agree += 1;
        }
    }
    if (0..k).any(|c| count_a[c] == n && count_b[c] == n) {
        return Err(Error::DegenerateMarginals);
    }

    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let mut p_e = 0.0;
    for c in 0..k {
        p_e += (count_a[c] as f64 / nf) * (count_b[c] as f64 / nf);
    }
    Ok(KappaScore {
        value: (p_o - p_e) / (1.0 - p_e),
        n_items: n,
        comparison: ComparisonKind::Pair,
    })
}

/// Cohen's kappa with the comparison layout recorded (leave-one-out,
/// cross-group, group-level).
pub fn kappa_vs_reference(
    column: &LabelVector,
    reference: &LabelVector,
    comparison: ComparisonKind,
) -> Result<KappaScore> {
    let score = cohen_kappa(column, reference)?;
    Ok(KappaScore {
        comparison,
        ..score
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairNote {
    pub rater_a: String,
    pub rater_b: String,
    pub reason: String,
}

/// Full symmetric pairwise kappa matrix. Pairs that cannot be scored
/// (degenerate marginals, no common items) stay `None` and are listed in
/// `notes` with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseKappa {
    pub raters: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub n_items: Vec<Vec<usize>>,
    pub notes: Vec<PairNote>,
}

pub fn pairwise_matrix(
    matrix: &AnnotationMatrix,
    rater_ids: &[String],
    width: usize,
) -> Result<PairwiseKappa> {
    if rater_ids.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 raters".into()));
    }
    let columns: Vec<LabelVector> = rater_ids
        .iter()
        .map(|r| matrix.column(r))
        .collect::<Result<_>>()?;

    let n = rater_ids.len();
    let index_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let scores = parallel_map(&index_pairs, width, |&(i, j)| {
        cohen_kappa(&columns[i], &columns[j])
    });

    let mut values = vec![vec![None; n]; n];
    let mut n_items = vec![vec![0usize; n]; n];
    let mut notes = Vec::new();
    for (&(i, j), score) in index_pairs.iter().zip(scores) {
        match score {
            Ok(s) => {
                values[i][j] = Some(s.value);
                values[j][i] = Some(s.value);
                n_items[i][j] = s.n_items;
                n_items[j][i] = s.n_items;
            }
            Err(e) => notes.push(PairNote {
                rater_a: rater_ids[i].clone(),
                rater_b: rater_ids[j].clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(PairwiseKappa {
        raters: rater_ids.to_vec(),
        values,
        n_items,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanPairwiseKappa {
    pub value: f64,
    pub n_pairs: usize,
    pub n_degenerate: usize,
}

/// Unweighted mean of Cohen's kappa over all member pairs; unscorable
/// pairs are skipped and counted.
pub fn mean_pairwise_kappa(
    matrix: &AnnotationMatrix,
    group: &RaterGroup,
) -> Result<MeanPairwiseKappa> {
    group.validate_against(matrix)?;
    if group.len() < 2 {
        return Err(Error::GroupTooSmall(group.name().to_string()));
    }
    let columns: Vec<LabelVector> = group
        .members()
        .iter()
        .map(|m| matrix.column(m))
        .collect::<Result<_>>()?;

    let mut sum = 0.0;
    let mut n_pairs = 0usize;
    let mut n_degenerate = 0usize;
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            match cohen_kappa(&columns[i], &columns[j]) {
                Ok(s) => {
                    sum += s.value;
                    n_pairs += 1;
                }
                Err(_) => n_degenerate += 1,
            }
        }
    }
    if n_pairs == 0 {
        return Err(Error::AllPairsDegenerate);
    }
    Ok(MeanPairwiseKappa {
        value: sum / n_pairs as f64,
        n_pairs,
        n_degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FleissKappa {
    pub value: f64,
    pub n_items_used: usize,
    pub n_excluded: usize,
    pub n_raters: usize,
}

/// Fleiss's kappa over the items judged by every group member. Per-item
/// agreement uses the pair-count identity sum_c n_ic(n_ic-1) / (m(m-1));
/// chance uses the pooled label proportions.
pub fn fleiss_kappa(matrix: &AnnotationMatrix, group: &RaterGroup) -> Result<FleissKappa> {
    group.validate_against(matrix)?;
    let m = group.len();
    if m < 2 {
        return Err(Error::GroupTooSmall(group.name().to_string()));
    }
    let member_cols: Vec<usize> = group
        .members()
        .iter()
        .map(|r| matrix.rater_position(r).expect("validated above"))
        .collect();

    let k = matrix.space().len();
    let mut pooled = vec![0usize; k];
    let mut p_sum = 0.0;
    let mut used = 0usize;
    let mut counts = vec![0usize; k];
    let pair_denom = (m * (m - 1)) as f64;

    for ii in 0..matrix.n_items() {
        counts.fill(0);
        let mut present = 0usize;
        for &ri in &member_cols {
            if let Some(li) = matrix.get(ii, ri) {
                counts[li] += 1;
                present += 1;
            }
        }
        if present != m {
            continue;
        }
        used += 1;
        let agreeing: usize = counts.iter().map(|&c| c * (c.saturating_sub(1))).sum();
        p_sum += agreeing as f64 / pair_denom;
        for c in 0..k {
            pooled[c] += counts[c];
        }
    }

    if used == 0 {
        return Err(Error::NoUsableItems);
    }
    let total = used * m;
    if pooled.iter().any(|&c| c == total) {
        return Err(Error::DegenerateMarginals);
    }

    let p_bar = p_sum / used as f64;
    let mut p_e = 0.0;
    for c in 0..k {
        let p = pooled[c] as f64 / total as f64;
        p_e += p * p;
    }
    Ok(FleissKappa {
        value: (p_bar - p_e) / (1.0 - p_e),
        n_items_used: used,
        n_excluded: matrix.n_items() - used,
        n_raters: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaScore {
    pub value: f64,
    pub n_items_used: usize,
    pub n_excluded: usize,
}

/// Krippendorff's alpha at the nominal level, over the group's judgements.
/// Missing cells are fine; items contributing fewer than two judgements
/// carry no coincidences and are excluded (and counted).
pub fn krippendorff_alpha(matrix: &AnnotationMatrix, group: &RaterGroup) -> Result<AlphaScore> {
    group.validate_against(matrix)?;
    let member_cols: Vec<usize> = group
        .members()
        .iter()
        .map(|r| matrix.rater_position(r).expect("validated above"))
        .collect();

    let k = matrix.space().len();
    // coincidence[c][l] accumulated from per-item counts: each item with
    // m_u judgements contributes n_c(n_l - [c==l]) / (m_u - 1).
    let mut coincidence = vec![vec![0.0f64; k]; k];
    let mut counts = vec![0usize; k];
    let mut used = 0usize;

    for ii in 0..matrix.n_items() {
        counts.fill(0);
        let mut m_u = 0usize;
        for &ri in &member_cols {
            if let Some(li) = matrix.get(ii, ri) {
                counts[li] += 1;
                m_u += 1;
            }
        }
        if m_u < 2 {
            continue;
        }
        used += 1;
        let w = 1.0 / (m_u - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for l in 0..k {
                if counts[l] == 0 {
                    continue;
                }
                let pairs = if c == l {
                    counts[c] * (counts[c] - 1)
                } else {
                    counts[c] * counts[l]
                };
                coincidence[c][l] += pairs as f64 * w;
            }
        }
    }

    if used == 0 {
        return Err(Error::NoUsableItems);
    }
    let totals: Vec<f64> = (0..k).map(|c| coincidence[c].iter().sum()).collect();
    let n: f64 = totals.iter().sum();
    let categories_present = totals.iter().filter(|&&t| t > 0.0).count();
    if categories_present < 2 {
        return Err(Error::NoVariation);
    }

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for l in 0..k {
            if c != l {
                observed += coincidence[c][l];
                expected += totals[c] * totals[l];
            }
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    Ok(AlphaScore {
        value: 1.0 - d_o / d_e,
        n_items_used: used,
        n_excluded: matrix.n_items() - used,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LooEntry {
    pub rater: String,
    pub kappa: Option<f64>,
    pub n_items: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub members: Vec<String>,
    pub fleiss: Option<FleissKappa>,
    pub fleiss_note: Option<String>,
    pub krippendorff: Option<AlphaScore>,
    pub krippendorff_note: Option<String>,
    pub mean_pairwise: Option<MeanPairwiseKappa>,
    pub mean_pairwise_note: Option<String>,
    pub loo: Vec<LooEntry>,
    pub loo_note: Option<String>,
    pub majority_ties: usize,
    pub consensus_items: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossGroupEntry {
    pub source: String,
    pub reference: String,
    pub kappa: Option<f64>,
    pub n_items: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupLevelEntry {
    pub group_a: String,
    pub group_b: String,
    pub majority_kappa: Option<f64>,
    pub majority_n_items: usize,
    pub majority_note: Option<String>,
    pub consensus_kappa: Option<f64>,
    pub consensus_n_items: usize,
    pub consensus_note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct XrrEntry {
    pub group_a: String,
    pub group_b: String,
    pub result: Option<XrrResult>,
    pub note: Option<String>,
}

/// Everything the `agree` command reports.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub pairwise: PairwiseKappa,
    pub groups: Vec<GroupSummary>,
    pub cross_group: Vec<CrossGroupEntry>,
    pub group_level: Vec<GroupLevelEntry>,
    pub xrr: Vec<XrrEntry>,
}

/// Runs the full comparison suite. Individual unscorable comparisons
/// become notes, never failures; structural problems (unknown raters,
/// overlapping groups) are errors. `width` bounds the worker threads used
/// for the pairwise block; the report bytes are identical for any width.
pub fn build_agreement_report(
    matrix: &AnnotationMatrix,
    groups: &[RaterGroup],
    width: usize,
) -> Result<AgreementReport> {
    for g in groups {
        g.validate_against(matrix)?;
    }
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            if !groups[i].is_disjoint_from(&groups[j]) {
                return Err(Error::GroupsNotDisjoint {
                    a: groups[i].name().to_string(),
                    b: groups[j].name().to_string(),
                });
            }
        }
    }

    let pairwise = pairwise_matrix(matrix, matrix.raters(), width)?;

    // Per-group pseudo-raters, reused by the cross-group and group-level
    // sections below.
    let mut majorities: Vec<LabelVector> = Vec::with_capacity(groups.len());
    let mut consensuses: Vec<LabelVector> = Vec::with_capacity(groups.len());
    let mut summaries: Vec<GroupSummary> = Vec::with_capacity(groups.len());

    for g in groups {
        let agg = majority_vote(matrix, g, Coverage::Complete)?;
        let (majority, ties) = agg.majority_labels();
        let consensus = consensus_subset(&agg);

        let (fleiss, fleiss_note) = split(fleiss_kappa(matrix, g));
        let (krippendorff, krippendorff_note) = split(krippendorff_alpha(matrix, g));
        let (mean_pairwise, mean_pairwise_note) = split(mean_pairwise_kappa(matrix, g));

        let mut loo = Vec::new();
        let mut loo_note = None;
        if g.len() < 2 {
            loo_note = Some(Error::LeaveOneOutTooSmall.to_string());
        } else {
            for member in g.members() {
                let entry = leave_one_out_entry(matrix, g, member);
                loo.push(entry);
            }
        }

        summaries.push(GroupSummary {
            group: g.name().to_string(),
            members: g.members().to_vec(),
            fleiss,
            fleiss_note,
            krippendorff,
            krippendorff_note,
            mean_pairwise,
            mean_pairwise_note,
            loo,
            loo_note,
            majority_ties: ties,
            consensus_items: consensus.len(),
        });
        majorities.push(majority);
        consensuses.push(consensus);
    }

    let mut cross_group = Vec::new();
    for (ai, a) in groups.iter().enumerate() {
        for (bi, b) in groups.iter().enumerate() {
            if ai == bi {
                continue;
            }
            let reference_name = format!("{} majority", b.name());
            for member in a.members() {
                let column = matrix.column(member)?;
                let scored =
                    kappa_vs_reference(&column, &majorities[bi], ComparisonKind::CrossGroup);
                let (kappa, n_items, note) = flatten(scored);
                cross_group.push(CrossGroupEntry {
                    source: member.clone(),
                    reference: reference_name.clone(),
                    kappa,
                    n_items,
                    note,
                });
            }
        }
    }

    let mut group_level = Vec::new();
    let mut xrr = Vec::new();
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let maj = kappa_vs_reference(&majorities[i], &majorities[j], ComparisonKind::GroupLevel);
            let (majority_kappa, majority_n_items, majority_note) = flatten(maj);
            let cons =
                kappa_vs_reference(&consensuses[i], &consensuses[j], ComparisonKind::GroupLevel);
            let (consensus_kappa, consensus_n_items, consensus_note) = flatten(cons);
            group_level.push(GroupLevelEntry {
                group_a: groups[i].name().to_string(),
                group_b: groups[j].name().to_string(),
                majority_kappa,
                majority_n_items,
                majority_note,
                consensus_kappa,
                consensus_n_items,
                consensus_note,
            });

            let (result, note) = split(normalized_cross_kappa(matrix, &groups[i], &groups[j]));
            xrr.push(XrrEntry {
                group_a: groups[i].name().to_string(),
                group_b: groups[j].name().to_string(),
                result,
                note,
            });
        }
    }

    Ok(AgreementReport {
        pairwise,
        groups: summaries,
        cross_group,
        group_level,
        xrr,
    })
}

fn leave_one_out_entry(matrix: &AnnotationMatrix, group: &RaterGroup, member: &str) -> LooEntry {
    let scored = crate::aggregation::leave_one_out_reference(matrix, group, member)
        .and_then(|reference| {
            let column = matrix.column(member)?;
            kappa_vs_reference(&column, &reference, ComparisonKind::LeaveOneOut)
        });
    let (kappa, n_items, note) = flatten(scored);
    LooEntry {
        rater: member.to_string(),
        kappa,
        n_items,
        note,
    }
}

fn split<T>(result: Result<T>) -> (Option<T>, Option<String>) {
    match result {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn flatten(result: Result<KappaScore>) -> (Option<f64>, usize, Option<String>) {
    match result {
        Ok(s) => (Some(s.value), s.n_items, None),
        Err(e) => (None, 0, Some(e.to_string())),
    }
}
