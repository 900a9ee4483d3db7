//! Fisher-z significance test between two correlation coefficients.

use crate::error::{IqaError, Result};

/// Two-tailed 95% critical values of Student's t, df = 1..=27. Beyond
/// df = 27 (sample size 30) the normal approximation 1.96 is used.
const T_CRITICAL_95: [f64; 27] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052,
];

const CLAMP_LIMIT: f64 = 0.999999;

/// Verdict on method 2 relative to method 1: -1 inferior, 0 statistically
/// equivalent, +1 superior. `clamped` flags inputs at |r| >= 1 that were
/// pulled inside the open interval before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignificanceVerdict {
    pub value: i8,
    pub clamped: bool,
}

fn clamp_correlation(r: f64) -> (f64, bool) {
    if r >= 1.0 {
        (CLAMP_LIMIT, true)
    } else if r <= -1.0 {
        (-CLAMP_LIMIT, true)
    } else {
        (r, false)
    }
}

/// Two-tailed 95% critical value for the smaller sample size.
fn critical_value(n1: usize, n2: usize) -> f64 {
    let n = n1.min(n2);
    if n > 30 {
        1.96
    } else {
        T_CRITICAL_95[n - 4]
    }
}

/// Compares correlations r1 (method 1) and r2 (method 2) measured on n1 and
/// n2 samples. Statistic: (atanh(r1) - atanh(r2)) / sqrt(1/(n1-3) + 1/(n2-3)).
pub fn fisher_z_significance(r1: f64, n1: usize, r2: f64, n2: usize) -> Result<SignificanceVerdict> {
    if n1 < 4 || n2 < 4 {
        return Err(IqaError::Parameter(format!(
            "need at least 4 samples per side, got {n1} and {n2}"
        )));
    }
    let (r1, clamped1) = clamp_correlation(r1);
    let (r2, clamped2) = clamp_correlation(r2);
    let z1 = r1.atanh();
    let z2 = r2.atanh();
    let standard_error = (1.0 / (n1 - 3) as f64 + 1.0 / (n2 - 3) as f64).sqrt();
    let statistic = (z1 - z2) / standard_error;
    let value = if statistic.abs() < critical_value(n1, n2) {
        0
    } else if z2 > z1 {
        1
    } else {
        -1
    };
    Ok(SignificanceVerdict {
        value,
        clamped: clamped1 || clamped2,
    })
}
