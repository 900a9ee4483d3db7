//! Validation machinery: regression, correlation and consistency metrics,
//! significance tests, histogram distances, and classification analysis.

pub mod classification;
pub mod correlation;
pub mod histogram;
pub mod regression;
pub mod significance;

pub use classification::{classification_analysis, ClassificationResult, ScoredRecord};
pub use correlation::{krcc, outlier_ratio, plcc, rmse, srcc, MetricBundle};
pub use histogram::{histogram_distance, score_histogram, HistogramMetric};
pub use regression::{fit_regression, fit_regression_with_form, LogisticForm, RegressionModel};
pub use significance::{fisher_z_significance, SignificanceVerdict};
