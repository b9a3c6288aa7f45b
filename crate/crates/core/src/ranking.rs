//! Rank-preservation analysis under controlled degradation.
//!
//! Synthetic classifiers are produced by flipping an exact share of the
//! gold labels. Each one is scored with binary F1 against the gold labels
//! and against an alternative label set; Kendall's tau between the two
//! induced rankings says whether the alternative set would rank the same
//! classifiers the same way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LabelVector;
use crate::util::parallel_map;

/// Degradation levels (percent of labels flipped), trials per level, and
/// the master seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationSchedule {
    levels: Vec<f64>,
    trials_per_level: usize,
    seed: u64,
}

impl DegradationSchedule {
    pub fn new(levels: Vec<f64>, trials_per_level: usize, seed: u64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSchedule("no levels".into()));
        }
        for w in levels.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidSchedule(
                    "levels must be strictly increasing".into(),
                ));
            }
        }
        for &p in &levels {
            if !(0.0..=100.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "level {p} outside [0, 100]"
                )));
            }
        }
        if trials_per_level == 0 {
            return Err(Error::InvalidSchedule("trials_per_level must be >= 1".into()));
        }
        Ok(Self {
            levels,
            trials_per_level,
            seed,
        })
    }

    /// Levels {0, 5, ..., 50} with 10 trials per level.
    pub fn default_with_seed(seed: u64) -> Self {
        Self::new((0..=10).map(|i| (i * 5) as f64).collect(), 10, seed)
            .expect("static schedule is valid")
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn trials_per_level(&self) -> usize {
        self.trials_per_level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The seed for one (level, trial) cell, derived from the master seed by
/// two splitmix64 steps over the level's bit pattern and the trial index.
/// Each cell is independent of the schedule shape, so extending the level
/// list or adding trials never perturbs existing cells.
pub fn trial_seed(master_seed: u64, p: f64, trial: u64) -> u64 {
    splitmix64(splitmix64(master_seed ^ p.to_bits()) ^ trial)
}

/// Inverts the labels of exactly round(p/100 * N) items, chosen uniformly
/// without replacement by the seeded generator (round = half away from
/// zero, so the Hamming distance from gold is always that exact count).
pub fn flip_labels(gold: &LabelVector, p: f64, seed: u64) -> Result<LabelVector> {
    if !gold.space().is_binary() {
        return Err(Error::NonBinarySpace);
    }
    if !(0.0..=100.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidSchedule(format!("level {p} outside [0, 100]")));
    }
    let n = gold.len();
    let flips = (p * n as f64 / 100.0).round() as usize;

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..flips {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }

    let mut labels = gold.labels().to_vec();
    for &i in &indices[..flips] {
        labels[i] = 1 - labels[i];
    }
    LabelVector::new(gold.item_ids().to_vec(), labels, gold.space().clone())
}

/// Binary F1 of the designated positive class: 2TP / (2TP + FP + FN),
/// with the convention that TP = 0 scores 0.0 when any positive exists
/// on either side; no positives anywhere is undefined.
pub fn f1_binary(gold: &LabelVector, pred: &LabelVector) -> Result<f64> {
    if gold.space().categories() != pred.space().categories() {
        return Err(Error::SpaceMismatch);
    }
    if gold.item_ids() != pred.item_ids() {
        return Err(Error::ItemSetMismatch);
    }
    let positive = gold.space().positive().ok_or(Error::NoPositiveClass)?;

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (g, p) in gold.labels().iter().zip(pred.labels()) {
        match (*g == positive, *p == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Err(Error::F1Undefined);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// Kendall's tau-b over paired score lists: (C - D) normalized by the
/// tie-corrected pair counts. Errors when either side is entirely tied.
pub fn kendall_tau(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::InvalidInput("score lists must be paired".into()));
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(Error::TauUndefined);
    }
    if scores_a.iter().chain(scores_b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("scores must not be NaN".into()));
    }

    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_a = 0i64;
    let mut ties_b = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = scores_a[i] - scores_a[j];
            let db = scores_b[i] - scores_b[j];
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            let s = da.signum() * db.signum();
            if da != 0.0 && db != 0.0 {
                if s > 0.0 {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }

    let n0 = (n * (n - 1) / 2) as i64;
    if ties_a == n0 || ties_b == n0 {
        return Err(Error::TauUndefined);
    }
    let denom = ((n0 - ties_a) as f64 * (n0 - ties_b) as f64).sqrt();
    Ok((concordant - discordant) as f64 / denom)
}

/// One synthetic classifier's scores under both label sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegradationPoint {
    pub p: f64,
    pub trial: usize,
    pub f1_h: f64,
    pub f1_l: f64,
}

/// Per-level trial means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSummary {
    pub p: f64,
    pub mean_f1_h: f64,
    pub mean_f1_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingCorrelation {
    pub tau: f64,
    /// Signed mean of the per-level F1 gaps, one term per level (trials
    /// are averaged within their level first).
    pub mean_f1_diff: f64,
    pub mean_abs_f1_diff: f64,
    pub points: Vec<DegradationPoint>,
    pub levels: Vec<LevelSummary>,
    /// Levels ordered by descending mean F1 under the gold labels.
    pub rank_h: Vec<f64>,
    /// Levels ordered by descending mean F1 under the alternative labels.
    pub rank_l: Vec<f64>,
}

/// Runs the full degradation schedule. For every (level, trial) cell a
/// synthetic classifier D_p = flip(h, p) is scored against both h and l;
/// tau compares the per-level mean score lists. Deterministic for fixed
/// inputs: cells are seeded individually and reduced in schedule order,
/// so any `width` produces identical results.
pub fn ranking_correlation(
    h: &LabelVector,
    l: &LabelVector,
    schedule: &DegradationSchedule,
    width: usize,
) -> Result<RankingCorrelation> {
    if h.item_ids() != l.item_ids() {
        return Err(Error::ItemSetMismatch);
    }

    let cells: Vec<(f64, usize)> = schedule
        .levels
        .iter()
        .flat_map(|&p| (0..schedule.trials_per_level).map(move |t| (p, t)))
        .collect();
    let scored = parallel_map(&cells, width, |&(p, trial)| -> Result<DegradationPoint> {
        let seed = trial_seed(schedule.seed, p, trial as u64);
        let degraded = flip_labels(h, p, seed)?;
        let f1_h = f1_binary(h, &degraded)?;
        let f1_l = f1_binary(l, &degraded)?;
        Ok(DegradationPoint { p, trial, f1_h, f1_l })
    });
    let mut points = Vec::with_capacity(cells.len());
    for result in scored {
        points.push(result?);
    }

    let trials = schedule.trials_per_level as f64;
    let mut levels = Vec::with_capacity(schedule.levels.len());
    for (li, &p) in schedule.levels.iter().enumerate() {
        let chunk = &points[li * schedule.trials_per_level..(li + 1) * schedule.trials_per_level];
        let mut sum_h = 0.0;
        let mut sum_l = 0.0;
        for point in chunk {
            sum_h += point.f1_h;
            sum_l += point.f1_l;
        }
        levels.push(LevelSummary {
            p,
            mean_f1_h: sum_h / trials,
            mean_f1_l: sum_l / trials,
        });
    }

    let means_h: Vec<f64> = levels.iter().map(|s| s.mean_f1_h).collect();
    let means_l: Vec<f64> = levels.iter().map(|s| s.mean_f1_l).collect();
    let tau = kendall_tau(&means_h, &means_l)?;

    let mut diff_sum = 0.0;
    let mut abs_sum = 0.0;
    for s in &levels {
        let d = s.mean_f1_h - s.mean_f1_l;
        diff_sum += d;
        abs_sum += d.abs();
    }
    let n_levels = levels.len() as f64;

    Ok(RankingCorrelation {
        tau,
        mean_f1_diff: diff_sum / n_levels,
        mean_abs_f1_diff: abs_sum / n_levels,
        points,
        levels,
        rank_h: rank_by_score(&schedule.levels, &means_h),
        rank_l: rank_by_score(&schedule.levels, &means_l),
    })
}

/// Levels sorted by score descending; equal scores keep level order.
fn rank_by_score(levels: &[f64], scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).expect("scores are not NaN"));
    order.into_iter().map(|i| levels[i]).collect()
}
