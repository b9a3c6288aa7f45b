//! Brute-force reference implementations of every agreement and rank
//! statistic shipped by `ratereval`, computed strictly from definitions:
//! explicit pair enumeration, explicit coincidence matrices, explicit
//! concordant/discordant counting.
//!
//! These are deliberately naive (O(n^2) or worse) and exist only so the
//! optimized paths in the main crate can be swept against an independent
//! route. They are test support, not public API of the toolkit.

/// Cohen's kappa over two aligned label columns.
///
/// Chance agreement uses each column's own marginals. Returns `None` for
/// empty input or when both columns are constant with the same label
/// (the degenerate 0/0 case the main path refuses as well).
pub fn cohen_kappa(a: &[usize], b: &[usize]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "columns must be aligned");
    let n = a.len();
    if n == 0 {
        return None;
    }
    let k = max_label(a.iter().chain(b.iter()))? + 1;

    let mut agree = 0usize;
    for i in 0..n {
        if a[i] == b[i] {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n as f64;

    let mut count_a = vec![0usize; k];
    let mut count_b = vec![0usize; k];
    for i in 0..n {
        count_a[a[i]] += 1;
        count_b[b[i]] += 1;
    }
    if (0..k).any(|c| count_a[c] == n && count_b[c] == n) {
        return None;
    }
    let mut p_e = 0.0;
    for c in 0..k {
        p_e += (count_a[c] as f64 / n as f64) * (count_b[c] as f64 / n as f64);
    }
    Some((p_o - p_e) / (1.0 - p_e))
}

/// Scott-style pooled-marginal agreement for exactly two aligned columns.
/// Observed agreement as in Cohen, chance from the pooled label
/// distribution of both columns together.
pub fn scott_pi(a: &[usize], b: &[usize]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "columns must be aligned");
    let n = a.len();
    if n == 0 {
        return None;
    }
    let k = max_label(a.iter().chain(b.iter()))? + 1;

    let mut agree = 0usize;
    let mut pooled = vec![0usize; k];
    for i in 0..n {
        if a[i] == b[i] {
            agree += 1;
        }
        pooled[a[i]] += 1;
        pooled[b[i]] += 1;
    }
    if pooled.iter().any(|&c| c == 2 * n) {
        return None;
    }
    let p_o = agree as f64 / n as f64;
    let mut p_e = 0.0;
    for c in 0..k {
        let p = pooled[c] as f64 / (2 * n) as f64;
        p_e += p * p;
    }
    Some((p_o - p_e) / (1.0 - p_e))
}

/// Fleiss's kappa over a complete items x raters grid (every row the same
/// length, >= 2 raters). Per-item agreement is counted by enumerating all
/// ordered rater pairs, not via the count identity.
pub fn fleiss_kappa(rows: &[Vec<usize>]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let m = rows[0].len();
    assert!(m >= 2, "need >= 2 raters per item");
    assert!(rows.iter().all(|r| r.len() == m), "grid must be complete");
    let k = max_label(rows.iter().flatten())? + 1;

    let mut p_bar = 0.0;
    for row in rows {
        let mut agreeing_pairs = 0usize;
        for i in 0..m {
            for j in 0..m {
                if i != j && row[i] == row[j] {
                    agreeing_pairs += 1;
                }
            }
        }
        p_bar += agreeing_pairs as f64 / (m * (m - 1)) as f64;
    }
    p_bar /= rows.len() as f64;

    let mut pooled = vec![0usize; k];
    for row in rows {
        for &v in row {
            pooled[v] += 1;
        }
    }
    let total = rows.len() * m;
    if pooled.iter().any(|&c| c == total) {
        return None;
    }
    let mut p_e = 0.0;
    for c in 0..k {
        let p = pooled[c] as f64 / total as f64;
        p_e += p * p;
    }
    Some((p_bar - p_e) / (1.0 - p_e))
}

/// Krippendorff's alpha (nominal) over an items x raters grid with missing
/// cells. Builds the coincidence matrix by walking every ordered pair of
/// judgements within each item, each weighted 1/(m_u - 1).
pub fn krippendorff_alpha(rows: &[Vec<Option<usize>>]) -> Option<f64> {
    let k = max_label(rows.iter().flatten().filter_map(|c| c.as_ref()))? + 1;

    let mut coincidence = vec![vec![0.0f64; k]; k];
    for row in rows {
        let values: Vec<usize> = row.iter().filter_map(|c| *c).collect();
        let m_u = values.len();
        if m_u < 2 {
            continue;
        }
        let w = 1.0 / (m_u - 1) as f64;
        for i in 0..m_u {
            for j in 0..m_u {
                if i != j {
                    coincidence[values[i]][values[j]] += w;
                }
            }
        }
    }

    let totals: Vec<f64> = (0..k).map(|c| coincidence[c].iter().sum()).collect();
    let n: f64 = totals.iter().sum();
    if n < 2.0 {
        return None;
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
    if d_e == 0.0 {
        return None;
    }
    Some(1.0 - d_o / d_e)
}

/// Cross-group kappa between two rater pools over the same items.
///
/// `rows_a[i]` / `rows_b[i]` hold the (possibly missing) judgements each
/// group's members gave item `i`. Every cross pair (one judgement per
/// side) is enumerated literally; each item with at least one judgement
/// per side weighs equally. Chance uses the pooled label proportions of
/// each group over the included judgements.
pub fn cross_kappa(rows_a: &[Vec<Option<usize>>], rows_b: &[Vec<Option<usize>>]) -> Option<f64> {
    assert_eq!(rows_a.len(), rows_b.len(), "item counts must match");
    let k = max_label(
        rows_a
            .iter()
            .chain(rows_b.iter())
            .flatten()
            .filter_map(|c| c.as_ref()),
    )? + 1;

    let mut p_o_sum = 0.0;
    let mut included = 0usize;
    let mut pool_a = vec![0usize; k];
    let mut pool_b = vec![0usize; k];
    let mut total_a = 0usize;
    let mut total_b = 0usize;

    for (row_a, row_b) in rows_a.iter().zip(rows_b.iter()) {
        let va: Vec<usize> = row_a.iter().filter_map(|c| *c).collect();
        let vb: Vec<usize> = row_b.iter().filter_map(|c| *c).collect();
        if va.is_empty() || vb.is_empty() {
            continue;
        }
        included += 1;
        let mut agree = 0usize;
        for &x in &va {
            for &y in &vb {
                if x == y {
                    agree += 1;
                }
            }
        }
        p_o_sum += agree as f64 / (va.len() * vb.len()) as f64;
        for &x in &va {
            pool_a[x] += 1;
        }
        for &y in &vb {
            pool_b[y] += 1;
        }
        total_a += va.len();
        total_b += vb.len();
    }

    if included == 0 {
        return None;
    }
    if (0..k).any(|c| pool_a[c] == total_a && pool_b[c] == total_b) {
        return None;
    }
    let p_o = p_o_sum / included as f64;
    let mut p_e = 0.0;
    for c in 0..k {
        p_e += (pool_a[c] as f64 / total_a as f64) * (pool_b[c] as f64 / total_b as f64);
    }
    Some((p_o - p_e) / (1.0 - p_e))
}

/// Kendall's tau-b over paired score lists, from the raw definition:
/// classify every pair by the sign product, count ties per side with the
/// t(t-1)/2 group formula. Returns `None` when either side is fully tied.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "score lists must be paired");
    let n = a.len();
    if n < 2 {
        return None;
    }

    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da != 0.0 && db != 0.0 {
                if (da > 0.0) == (db > 0.0) {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }

    let n0 = (n * (n - 1) / 2) as f64;
    let ties_a = tie_pair_count(a);
    let ties_b = tie_pair_count(b);
    if ties_a == n0 || ties_b == n0 {
        return None;
    }
    Some((concordant - discordant) as f64 / ((n0 - ties_a) * (n0 - ties_b)).sqrt())
}

fn tie_pair_count(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("scores must not be NaN"));
    let mut pairs = 0.0;
    let mut run = 1usize;
    for i in 1..sorted.len() {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            pairs += (run * (run - 1) / 2) as f64;
            run = 1;
        }
    }
    pairs += (run * (run - 1) / 2) as f64;
    pairs
}

fn max_label<'a, I: Iterator<Item = &'a usize>>(values: I) -> Option<usize> {
    values.copied().max()
}

/// The 3 items x 3 raters grid with rows (A,A,A), (A,A,B), (B,B,B).
/// By hand: coincidence o_AA=4, o_BB=3, cross=2, so alpha = 0.6 exactly,
/// and Fleiss P-bar = 7/9, P_e = 41/81, so kappa = 22/40 = 0.55.
pub fn two_label_fixture() -> Vec<Vec<usize>> {
    vec![vec![0, 0, 0], vec![0, 0, 1], vec![1, 1, 1]]
}

/// `two_label_fixture` with every cell present, as an incomplete grid.
pub fn two_label_fixture_optional() -> Vec<Vec<Option<usize>>> {
    two_label_fixture()
        .into_iter()
        .map(|row| row.into_iter().map(Some).collect())
        .collect()
}
