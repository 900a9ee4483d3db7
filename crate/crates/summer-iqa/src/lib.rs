//! Full-reference image quality assessment through spectral analysis of
//! multi-scale, multi-channel error representations, plus the surrounding
//! benchmarking machinery: synthetic distortion ladders, nonlinear score
//! regression, correlation/consistency/significance statistics, histogram
//! distances, and pairwise classification analysis.

pub mod distortion;
pub mod error;
pub mod eval;
pub mod metric;
pub mod raster;
pub mod spectral;

pub use error::{IqaError, Result};
pub use metric::{summer_score, MetricId, QualityScore};
pub use raster::{load_image, Plane, RasterImage};
