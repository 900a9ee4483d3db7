//! Distances between normalized histograms of score distributions.

use crate::error::{IqaError, Result};

/// Floor applied to bins inside KL/JS so empty bins stay finite.
const BIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HistogramMetric {
    /// Earth Mover's Distance, 1-D cumulative form normalized by bins-1.
    Emd,
    /// Kullback-Leibler divergence KL(h1 || h2), natural log.
    Kl,
    /// Jensen-Shannon divergence, natural log (bounded by ln 2).
    Js,
    /// Histogram intersection distance, 1 - sum(min(h1, h2)).
    Hi,
    /// Euclidean distance between bin vectors.
    L2,
}

impl HistogramMetric {
    pub const ALL: [HistogramMetric; 5] = [
        HistogramMetric::Emd,
        HistogramMetric::Kl,
        HistogramMetric::Js,
        HistogramMetric::Hi,
        HistogramMetric::L2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HistogramMetric::Emd => "emd",
            HistogramMetric::Kl => "kl",
            HistogramMetric::Js => "js",
            HistogramMetric::Hi => "hi",
            HistogramMetric::L2 => "l2",
        }
    }
}

fn check_histograms(h1: &[f64], h2: &[f64]) -> Result<()> {
    if h1.len() != h2.len() {
        return Err(IqaError::Parameter(format!(
            "bin count mismatch: {} vs {}",
            h1.len(),
            h2.len()
        )));
    }
    if h1.len() < 2 {
        return Err(IqaError::Parameter("need at least 2 bins".into()));
    }
    for (name, h) in [("first", h1), ("second", h2)] {
        let sum: f64 = h.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(IqaError::Parameter(format!(
                "{name} histogram mass {sum} is not 1"
            )));
        }
        if h.iter().any(|&v| v < 0.0) {
            return Err(IqaError::Parameter(format!(
                "{name} histogram has a negative bin"
            )));
        }
    }
    Ok(())
}

fn kl_divergence(h1: &[f64], h2: &[f64]) -> f64 {
    h1.iter()
        .zip(h2)
        .map(|(&p, &q)| {
            let p = p.max(BIN_FLOOR);
            let q = q.max(BIN_FLOOR);
            p * (p / q).ln()
        })
        .sum()
}

/// Distance between two normalized histograms with matching bin counts.
pub fn histogram_distance(h1: &[f64], h2: &[f64], metric: HistogramMetric) -> Result<f64> {
    check_histograms(h1, h2)?;
    let value = match metric {
        HistogramMetric::Emd => {
            let mut cdf_gap = 0.0;
            let mut c1 = 0.0;
            let mut c2 = 0.0;
            for (&a, &b) in h1.iter().zip(h2) {
                c1 += a;
                c2 += b;
                cdf_gap += (c1 - c2).abs();
            }
            cdf_gap / (h1.len() - 1) as f64
        }
        HistogramMetric::Kl => kl_divergence(h1, h2),
        HistogramMetric::Js => {
            let mid: Vec<f64> = h1.iter().zip(h2).map(|(&a, &b)| 0.5 * (a + b)).collect();
            0.5 * (kl_divergence(h1, &mid) + kl_divergence(h2, &mid))
        }
        HistogramMetric::Hi => 1.0 - h1.iter().zip(h2).map(|(&a, &b)| a.min(b)).sum::<f64>(),
        HistogramMetric::L2 => h1
            .iter()
            .zip(h2)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    };
    Ok(value)
}

/// Normalized 10-bin histogram of a score vector: scores are min-max
/// normalized to [0,1] first, then binned uniformly. A constant vector puts
/// all mass in the first bin.
pub fn score_histogram(scores: &[f64], bins: usize) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(IqaError::Parameter("empty score vector".into()));
    }
    if bins < 2 {
        return Err(IqaError::Parameter("need at least 2 bins".into()));
    }
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut hist = vec![0.0; bins];
    let span = max - min;
    for &s in scores {
        let unit = if span > 0.0 { (s - min) / span } else { 0.0 };
        let bin = ((unit * bins as f64) as usize).min(bins - 1);
        hist[bin] += 1.0;
    }
    let n = scores.len() as f64;
    for h in &mut hist {
        *h /= n;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(bins: usize, at: usize) -> Vec<f64> {
        let mut h = vec![0.0; bins];
        h[at] = 1.0;
        h
    }

    #[test]
    fn identical_histograms_have_zero_distance() {
        let h = vec![0.1, 0.2, 0.3, 0.4];
        for metric in HistogramMetric::ALL {
            assert!(
                histogram_distance(&h, &h, metric).unwrap().abs() < 1e-12,
                "{metric:?}"
            );
        }
    }

    #[test]
    fn disjoint_one_hot_closed_forms() {
        let h1 = one_hot(10, 0);
        let h2 = one_hot(10, 9);
        assert!((histogram_distance(&h1, &h2, HistogramMetric::Emd).unwrap() - 1.0).abs() < 1e-12);
        assert!((histogram_distance(&h1, &h2, HistogramMetric::Hi).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (histogram_distance(&h1, &h2, HistogramMetric::L2).unwrap() - 2f64.sqrt()).abs()
                < 1e-12
        );
        assert!(
            (histogram_distance(&h1, &h2, HistogramMetric::Js).unwrap() - 2f64.ln()).abs() < 1e-9
        );
    }

    #[test]
    fn bin_mismatch_and_unnormalized_are_rejected() {
        let h1 = one_hot(10, 0);
        let h2 = one_hot(8, 0);
        assert!(histogram_distance(&h1, &h2, HistogramMetric::Emd).is_err());
        let bad = vec![0.5, 0.6];
        assert!(histogram_distance(&bad, &bad, HistogramMetric::Emd).is_err());
    }

    #[test]
    fn kl_zero_iff_equal() {
        let h1 = vec![0.25, 0.25, 0.5];
        let h2 = vec![0.2, 0.3, 0.5];
        assert!(histogram_distance(&h1, &h1, HistogramMetric::Kl).unwrap() < 1e-9);
        assert!(histogram_distance(&h1, &h2, HistogramMetric::Kl).unwrap() > 1e-4);
    }

    #[test]
    fn score_histogram_normalizes_and_sums_to_one() {
        let scores = [3.0, 4.0, 5.0, 6.0, 7.0];
        let hist = score_histogram(&scores, 10).unwrap();
        assert!((hist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(hist[0], 0.2); // min lands in bin 0
        assert_eq!(hist[9], 0.2); // max lands in the last bin
    }

    #[test]
    fn score_histogram_constant_vector() {
        let hist = score_histogram(&[2.5; 7], 10).unwrap();
        assert_eq!(hist[0], 1.0);
        assert!(hist[1..].iter().all(|&v| v == 0.0));
    }
}
