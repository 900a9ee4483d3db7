//! Pairwise classification analysis: can a metric tell statistically
//! different pairs from similar ones, and order the different ones?

use crate::error::{IqaError, Result};
use crate::eval::correlation::average_ranks;

/// One scored image with its subjective statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredRecord {
    pub objective: f64,
    pub mos: f64,
    pub mos_std: Option<f64>,
    pub vote_count: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationResult {
    /// ROC area of |delta objective| as a detector of significantly
    /// different pairs; None when every pair lands in one class.
    pub auc_different_similar: Option<f64>,
    /// ROC area for ordering the different pairs; None without them.
    pub auc_better_worse: Option<f64>,
    /// Fraction of different pairs whose objective ordering matches the
    /// subjective ordering.
    pub c0: Option<f64>,
    pub different_pairs: usize,
    pub similar_pairs: usize,
    /// Records dropped for missing MOS standard deviation or vote count.
    pub excluded_records: usize,
}

/// Mann-Whitney AUC with average ranks, so ties contribute one half.
pub fn mann_whitney_auc(positives: &[f64], negatives: &[f64]) -> Option<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut all = Vec::with_capacity(positives.len() + negatives.len());
    all.extend_from_slice(positives);
    all.extend_from_slice(negatives);
    let ranks = average_ranks(&all);
    let rank_sum: f64 = ranks[..positives.len()].iter().sum();
    let n_pos = positives.len() as f64;
    let n_neg = negatives.len() as f64;
    Some((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

// Two-sample z-test on MOS at 95%: se from per-item stds and vote counts.
fn significantly_different(a: &ScoredRecord, b: &ScoredRecord) -> bool {
    let (std_a, votes_a) = (a.mos_std.unwrap(), a.vote_count.unwrap() as f64);
    let (std_b, votes_b) = (b.mos_std.unwrap(), b.vote_count.unwrap() as f64);
    let se = (std_a * std_a / votes_a + std_b * std_b / votes_b).sqrt();
    if se == 0.0 {
        return a.mos != b.mos;
    }
    ((a.mos - b.mos) / se).abs() > 1.96
}

/// Runs the Different-vs-Similar and Better-vs-Worse analyses.
///
/// `higher_better_objective` and `higher_better_subjective` orient the two
/// scales so the analysis is polarity-neutral (PSNR-like and DMOS-like
/// conventions both work).
pub fn classification_analysis(
    records: &[ScoredRecord],
    higher_better_objective: bool,
    higher_better_subjective: bool,
) -> Result<ClassificationResult> {
    let usable: Vec<ScoredRecord> = records
        .iter()
        .filter(|r| r.mos_std.is_some() && r.vote_count.is_some())
        .copied()
        .collect();
    let excluded_records = records.len() - usable.len();
    if usable.len() < 2 {
        return Err(IqaError::Parameter(format!(
            "need at least 2 records with mos_std and vote_count, got {}",
            usable.len()
        )));
    }

    let obj_sign = if higher_better_objective { 1.0 } else { -1.0 };
    let mos_sign = if higher_better_subjective { 1.0 } else { -1.0 };

    let mut different_gaps = Vec::new(); // |delta objective| per different pair
    let mut similar_gaps = Vec::new();
    let mut oriented_deltas = Vec::new(); // objective delta, better-first
    for i in 0..usable.len() {
        for j in i + 1..usable.len() {
            let delta_obj = obj_sign * (usable[i].objective - usable[j].objective);
            if significantly_different(&usable[i], &usable[j]) {
                different_gaps.push(delta_obj.abs());
                let delta_mos = mos_sign * (usable[i].mos - usable[j].mos);
                oriented_deltas.push(if delta_mos > 0.0 { delta_obj } else { -delta_obj });
            } else {
                similar_gaps.push(delta_obj.abs());
            }
        }
    }

    let auc_different_similar = mann_whitney_auc(&different_gaps, &similar_gaps);
    let (auc_better_worse, c0) = if oriented_deltas.is_empty() {
        (None, None)
    } else {
        let mirrored: Vec<f64> = oriented_deltas.iter().map(|&d| -d).collect();
        let auc = mann_whitney_auc(&oriented_deltas, &mirrored);
        let correct = oriented_deltas.iter().filter(|&&d| d > 0.0).count();
        (auc, Some(correct as f64 / oriented_deltas.len() as f64))
    };

    Ok(ClassificationResult {
        auc_different_similar,
        auc_better_worse,
        c0,
        different_pairs: different_gaps.len(),
        similar_pairs: similar_gaps.len(),
        excluded_records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(objective: f64, mos: f64, std: f64, votes: u32) -> ScoredRecord {
        ScoredRecord {
            objective,
            mos,
            mos_std: Some(std),
            vote_count: Some(votes),
        }
    }

    #[test]
    fn auc_known_small_case() {
        // positives {0.35, 0.8}, negatives {0.1, 0.4}: of 4 cross pairs,
        // 3 rank positive higher => 0.75.
        let auc = mann_whitney_auc(&[0.35, 0.8], &[0.1, 0.4]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_ties_count_half() {
        let auc = mann_whitney_auc(&[1.0], &[1.0]).unwrap();
        assert!((auc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_empty_class_is_none() {
        assert!(mann_whitney_auc(&[], &[1.0]).is_none());
        assert!(mann_whitney_auc(&[1.0], &[]).is_none());
    }

    #[test]
    fn perfect_metric_classifies_perfectly() {
        // Objective equals MOS. se for a pair is sqrt(2*4/8) = 1, so
        // adjacent records (delta 1) stay similar and distant ones differ.
        let records: Vec<ScoredRecord> =
            (0..12).map(|i| record(i as f64, i as f64, 2.0, 8)).collect();
        let result = classification_analysis(&records, true, true).unwrap();
        assert!(result.different_pairs > 0 && result.similar_pairs > 0);
        assert_eq!(result.auc_better_worse, Some(1.0));
        assert_eq!(result.c0, Some(1.0));
        assert_eq!(result.auc_different_similar, Some(1.0));
        assert_eq!(result.excluded_records, 0);
    }

    #[test]
    fn inverted_polarity_still_perfect_when_declared() {
        let records: Vec<ScoredRecord> = (0..12)
            .map(|i| record(-(i as f64), i as f64, 0.4, 25))
            .collect();
        let result = classification_analysis(&records, false, true).unwrap();
        assert_eq!(result.auc_better_worse, Some(1.0));
        assert_eq!(result.c0, Some(1.0));
    }

    #[test]
    fn records_without_stats_are_excluded_and_counted() {
        let mut records: Vec<ScoredRecord> =
            (0..8).map(|i| record(i as f64, i as f64, 0.4, 25)).collect();
        records.push(ScoredRecord {
            objective: 3.0,
            mos: 3.0,
            mos_std: None,
            vote_count: Some(10),
        });
        let result = classification_analysis(&records, true, true).unwrap();
        assert_eq!(result.excluded_records, 1);
    }

    #[test]
    fn all_excluded_is_an_error() {
        let records = vec![ScoredRecord {
            objective: 1.0,
            mos: 1.0,
            mos_std: None,
            vote_count: None,
        }];
        assert!(classification_analysis(&records, true, true).is_err());
    }
}
