//! Per-problem averaged RMSE and Kendall rank correlation.
//!
//! Both metrics score each problem separately and average the per-problem
//! scores, so problems with longer plans do not dominate and predictions
//! from different problems are never compared.

use super::LearnError;

/// Predictions and labels for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScores {
    pub predicted: Vec<f64>,
    pub actual: Vec<f64>,
}

pub fn group_rmse(g: &GroupScores) -> f64 {
    let m = g.actual.len() as f64;
    let sq: f64 = g
        .predicted
        .iter()
        .zip(&g.actual)
        .map(|(f, y)| (f - y) * (f - y))
        .sum();
    (sq / m).sqrt()
}

pub fn grouped_rmse(groups: &[GroupScores]) -> Result<f64, LearnError> {
    if groups.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let mut total = 0.0;
    for (i, g) in groups.iter().enumerate() {
        if g.actual.is_empty() {
            return Err(LearnError::EmptyGroup(i));
        }
        total += group_rmse(g);
    }
    Ok(total / groups.len() as f64)
}

/// Kendall τ for one problem with distinct labels.
///
/// Pairs with tied predictions score 0. Runs in O(m log m): order by label,
/// count strict inversions of the predictions with a merge sort, count
/// prediction ties separately, and use `concordant - discordant =
/// pairs - ties - 2·inversions`.
pub fn group_tau(g: &GroupScores) -> Result<f64, LearnError> {
    let m = g.actual.len();
    if m < 2 {
        return Err(LearnError::DegenerateGroup(m));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| g.actual[a].total_cmp(&g.actual[b]));
    let mut seq: Vec<f64> = order.iter().map(|&i| g.predicted[i]).collect();

    let mut sorted = seq.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties: u64 = 0;
    let mut run: u64 = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties += run * (run - 1) / 2;

    let mut buf = vec![0.0; m];
    let inversions = count_inversions(&mut seq, &mut buf);
    let pairs = (m * (m - 1) / 2) as u64;
    let score = pairs as i64 - ties as i64 - 2 * inversions as i64;
    Ok(score as f64 / pairs as f64)
}

/// Strict inversions (i < j, a[i] > a[j]); sorts `a` as a side effect.
fn count_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[j] < a[i] {
            inv += (mid - i) as u64;
            buf[k] = a[j];
            j += 1;
        } else {
            buf[k] = a[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + (mid - i)].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + (n - j)].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    inv
}

pub fn grouped_tau(groups: &[GroupScores]) -> Result<f64, LearnError> {
    if groups.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let mut total = 0.0;
    for g in groups {
        total += group_tau(g)?;
    }
    Ok(total / groups.len() as f64)
}
