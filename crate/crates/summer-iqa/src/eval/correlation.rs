//! Correlation, error, and consistency metrics between objective and
//! subjective score vectors.

use crate::error::{IqaError, Result};

/// The five validation numbers reported per metric per dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricBundle {
    pub plcc: f64,
    pub srcc: f64,
    pub krcc: f64,
    pub rmse: f64,
    pub outlier_ratio: f64,
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(IqaError::Parameter(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(IqaError::Parameter(format!(
            "need at least 2 points, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Pearson linear correlation coefficient.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(IqaError::CorrelationUndefined(
            "zero variance input".into(),
        ));
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank-order correlation: Pearson over average ranks.
pub fn srcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    plcc(&average_ranks(x), &average_ranks(y))
}

// Merge sort that counts inversions; the discordant-pair count for Kendall.
fn count_inversions(values: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = values.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut swaps = count_inversions(left, scratch) + count_inversions(right, scratch);
    let mut i = 0;
    let mut j = 0;
    let mut k = 0;
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            swaps += (left.len() - i) as u64;
            scratch[k] = right[j];
            j += 1;
        } else {
            scratch[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        scratch[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        scratch[k] = right[j];
        j += 1;
        k += 1;
    }
    values.copy_from_slice(&scratch[..n]);
    swaps
}

fn tie_pair_count(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let run = (j - i + 1) as u64;
        total += run * (run - 1) / 2;
        i = j + 1;
    }
    total
}

/// Kendall rank correlation, tau-b (tie-corrected), via the merge-sort
/// inversion count so large vectors stay O(n log n).
pub fn krcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Sort by x, ties broken by y.
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let x_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut y_by_x: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    // Joint ties (x and y both equal).
    let mut joint_ties = 0u64;
    {
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && x_sorted[j + 1] == x_sorted[i] && y_by_x[j + 1] == y_by_x[i] {
                j += 1;
            }
            let run = (j - i + 1) as u64;
            joint_ties += run * (run - 1) / 2;
            i = j + 1;
        }
    }
    let ties_x = tie_pair_count(&x_sorted);

    let mut scratch = vec![0.0; n];
    let discordant = count_inversions(&mut y_by_x, &mut scratch);
    // y_by_x is now fully sorted; count y ties on it.
    let ties_y = tie_pair_count(&y_by_x);

    let total = (n as u64 * (n as u64 - 1) / 2) as f64;
    let denom_x = total - ties_x as f64;
    let denom_y = total - ties_y as f64;
    if denom_x == 0.0 || denom_y == 0.0 {
        return Err(IqaError::CorrelationUndefined(
            "zero variance input".into(),
        ));
    }
    let concordant_minus_discordant =
        total - ties_x as f64 - ties_y as f64 + joint_ties as f64 - 2.0 * discordant as f64;
    Ok(concordant_minus_discordant / (denom_x * denom_y).sqrt())
}

/// Root mean squared error.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let sum_sq: f64 = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sum_sq / x.len() as f64).sqrt())
}

/// Fraction of predictions falling outside two standard deviations of the
/// subjective score. Uses per-item MOS standard deviations when available,
/// otherwise the population standard deviation of the residuals.
pub fn outlier_ratio(pred: &[f64], mos: &[f64], mos_std: Option<&[f64]>) -> Result<f64> {
    check_lengths(pred, mos)?;
    if let Some(stds) = mos_std {
        if stds.len() != pred.len() {
            return Err(IqaError::Parameter(format!(
                "mos_std length {} does not match {}",
                stds.len(),
                pred.len()
            )));
        }
        let outliers = pred
            .iter()
            .zip(mos)
            .zip(stds)
            .filter(|((&p, &m), &s)| (p - m).abs() > 2.0 * s)
            .count();
        return Ok(outliers as f64 / pred.len() as f64);
    }
    let n = pred.len() as f64;
    let residuals: Vec<f64> = pred.iter().zip(mos).map(|(&p, &m)| p - m).collect();
    let mean = residuals.iter().sum::<f64>() / n;
    let std = (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    let outliers = residuals.iter().filter(|r| r.abs() > 2.0 * std).count();
    Ok(outliers as f64 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_perfect_scores() {
        let x = [1.0, 2.0, 3.5, 7.0, 9.0];
        assert!((plcc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((srcc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((krcc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rmse(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn reversed_gives_minus_one_rank_correlation() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert!((srcc(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!((krcc(&x, &y).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_undefined_not_zero() {
        let x = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(
            plcc(&x, &y).unwrap_err(),
            IqaError::CorrelationUndefined(_)
        ));
        assert!(matches!(
            srcc(&x, &y).unwrap_err(),
            IqaError::CorrelationUndefined(_)
        ));
        assert!(matches!(
            krcc(&x, &y).unwrap_err(),
            IqaError::CorrelationUndefined(_)
        ));
    }

    #[test]
    fn average_ranks_share_tied_positions() {
        let ranks = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn krcc_matches_textbook_tie_case() {
        // x has one tie pair, y none: tau-b = (C - D)/sqrt((6-1)*6).
        let x = [1.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        // Pairs: (0,1) tied in x; all others concordant => C=5, D=0.
        let expected = 5.0 / (5.0f64 * 6.0).sqrt();
        assert!((krcc(&x, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn outlier_ratio_counts_two_sigma_excursions() {
        let pred = [1.0, 2.0, 3.0, 14.0];
        let mos = [1.0, 2.0, 3.0, 4.0];
        let stds = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(outlier_ratio(&pred, &mos, Some(&stds)).unwrap(), 0.25);
        assert_eq!(outlier_ratio(&mos, &mos, Some(&stds)).unwrap(), 0.0);
    }

    #[test]
    fn outlier_ratio_gaussian_tail_mass() {
        // Seeded Gaussian residuals with unit per-item sigma: expect the
        // two-sided 2-sigma tail mass, about 0.0455.
        let mut src = crate::distortion::GaussianSource::new(42);
        let n = 1000;
        let mos: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let pred: Vec<f64> = mos.iter().map(|&m| m + src.next_gaussian()).collect();
        let stds = vec![1.0; n];
        let ratio = outlier_ratio(&pred, &mos, Some(&stds)).unwrap();
        assert!((ratio - 0.046).abs() < 0.02, "{ratio}");
    }
}
