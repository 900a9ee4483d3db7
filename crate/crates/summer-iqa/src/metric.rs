//! Quality scores: the multi-scale multi-channel spectral metric, its
//! single-scale grayscale baseline, and PSNR.
//!
//! The headline score pools mean log-magnitudes of error spectra over the
//! three RGB channels at scales 1..=4 of a block-mean pyramid, weights the
//! pooled score by log spectral magnitude ratios at the two smallest scales,
//! and maps the weighted score into (0, 5] with 5 meaning identical.

use crate::error::{IqaError, Result};
use crate::raster::{to_grayscale, Plane, RasterImage};
use crate::spectral::{dft2, log_magnitude_mean, SpectralSummary, EPSILON};

/// Scales whose log-magnitude means enter the pooled score.
pub const SCORE_SCALES: [usize; 4] = [1, 2, 3, 4];
/// The two smallest scales, where frequency weights are computed.
pub const WEIGHT_SCALES: [usize; 2] = [3, 4];
/// Perfect-match score; also the score ceiling.
pub const MAX_SCORE: f64 = 5.0;
/// PSNR reported for identical images instead of infinity.
pub const PSNR_CAP_DB: f64 = 100.0;
/// Smallest accepted image side, so scale 4 keeps at least one sample.
pub const MIN_DIMENSION: usize = 16;

/// Planes downsampled by powers of two; `levels[i]` has scale index `i`.
#[derive(Debug, Clone)]
pub struct ScalePyramid {
    levels: Vec<Plane>,
}

impl ScalePyramid {
    /// Builds levels 0..=max_scale, each produced from the previous by
    /// 2x2 block-mean downsampling.
    pub fn build(base: Plane, max_scale: usize) -> Self {
        let mut levels = Vec::with_capacity(max_scale + 1);
        levels.push(base);
        for _ in 0..max_scale {
            let next = downsample2(levels.last().expect("nonempty"));
            levels.push(next);
        }
        ScalePyramid { levels }
    }

    pub fn level(&self, scale: usize) -> &Plane {
        &self.levels[scale]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }
}

/// Signed per-pixel difference `ref - cmp`.
pub fn error_map(ref_plane: &Plane, cmp_plane: &Plane) -> Result<Plane> {
    if !ref_plane.same_shape(cmp_plane) {
        return Err(IqaError::ShapeMismatch {
            width_a: ref_plane.width(),
            height_a: ref_plane.height(),
            width_b: cmp_plane.width(),
            height_b: cmp_plane.height(),
        });
    }
    let samples = ref_plane
        .samples()
        .iter()
        .zip(cmp_plane.samples())
        .map(|(&a, &b)| a - b)
        .collect();
    Ok(Plane::new(ref_plane.width(), ref_plane.height(), samples))
}

/// Non-overlapping 2x2 block mean; a trailing odd row/column averages over
/// the 2x1 / 1x2 / 1x1 block actually present. Output is ⌈H/2⌉ x ⌈W/2⌉.
pub fn downsample2(plane: &Plane) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let out_w = w.div_ceil(2);
    let out_h = h.div_ceil(2);
    Plane::from_fn(out_w, out_h, |row, col| {
        let r0 = row * 2;
        let c0 = col * 2;
        let r1 = (r0 + 2).min(h);
        let c1 = (c0 + 2).min(w);
        let mut sum = 0.0;
        for r in r0..r1 {
            for c in c0..c1 {
                sum += plane.get(r, c);
            }
        }
        sum / ((r1 - r0) * (c1 - c0)) as f64
    })
}

fn check_pair(reference: &RasterImage, compared: &RasterImage) -> Result<()> {
    if !reference.same_shape(compared) {
        return Err(reference.shape_error(compared));
    }
    if reference.width() < MIN_DIMENSION || reference.height() < MIN_DIMENSION {
        return Err(IqaError::Parameter(format!(
            "image {}x{} is below the {}x{} minimum",
            reference.width(),
            reference.height(),
            MIN_DIMENSION,
            MIN_DIMENSION
        )));
    }
    Ok(())
}

fn fill_log_mag_means(
    reference: &RasterImage,
    compared: &RasterImage,
    summary: &mut SpectralSummary,
) -> Result<()> {
    for channel in 0..3 {
        let error = error_map(reference.plane(channel), compared.plane(channel))?;
        let pyramid = ScalePyramid::build(error.map(f64::abs), *SCORE_SCALES.last().unwrap());
        for (idx, &scale) in SCORE_SCALES.iter().enumerate() {
            summary.log_mag_mean[channel][idx] = log_magnitude_mean(pyramid.level(scale));
        }
    }
    Ok(())
}

fn fill_weight_components(
    reference: &RasterImage,
    compared: &RasterImage,
    summary: &mut SpectralSummary,
) -> Result<()> {
    for channel in 0..3 {
        let ref_pyramid = ScalePyramid::build(
            reference.plane(channel).clone(),
            *WEIGHT_SCALES.last().unwrap(),
        );
        let cmp_pyramid = ScalePyramid::build(
            compared.plane(channel).clone(),
            *WEIGHT_SCALES.last().unwrap(),
        );
        for (idx, &scale) in WEIGHT_SCALES.iter().enumerate() {
            let ref_spectrum = dft2(ref_pyramid.level(scale));
            let cmp_spectrum = dft2(cmp_pyramid.level(scale));
            let ref_mean = ref_spectrum.values().iter().map(|z| z.norm()).sum::<f64>()
                / ref_spectrum.values().len() as f64;
            let cmp_mean = cmp_spectrum.values().iter().map(|z| z.norm()).sum::<f64>()
                / cmp_spectrum.values().len() as f64;
            // Ratio of pooled magnitudes, not the pooled per-bin ratio: the
            // per-bin form rides each bin's interference term and wanders
            // non-monotonically through 1 as distortion grows. Two zero
            // spectra count as a unit ratio so identical planes stay at
            // weight zero.
            let ratio = if ref_mean == 0.0 && cmp_mean == 0.0 {
                1.0
            } else {
                ref_mean / cmp_mean.max(EPSILON)
            };
            summary.weight_component[channel][idx] = ratio.max(EPSILON).ln();
        }
    }
    Ok(())
}

fn pooled_score(summary: &SpectralSummary) -> f64 {
    summary
        .log_mag_mean
        .iter()
        .map(|per_scale| per_scale.iter().sum::<f64>())
        .sum::<f64>()
        / 3.0
}

fn pooled_weight(summary: &SpectralSummary) -> f64 {
    summary
        .weight_component
        .iter()
        .flatten()
        .map(|w| w.abs())
        .product()
}

/// The spectral analysis-based score S: mean over channels, sum over scales
/// 1..=4 of the log-magnitude means of the absolute error pyramid.
pub fn spectral_score(reference: &RasterImage, compared: &RasterImage) -> Result<f64> {
    check_pair(reference, compared)?;
    let mut summary = SpectralSummary::default();
    fill_log_mag_means(reference, compared, &mut summary)?;
    Ok(pooled_score(&summary))
}

/// The frequency-based weight w: per channel and per scale in {3,4}, the log
/// of the ratio of mean spectral magnitudes of the downsampled reference and
/// compared planes; the six components multiply (in absolute value) into a
/// single weight.
pub fn frequency_weight(reference: &RasterImage, compared: &RasterImage) -> Result<f64> {
    check_pair(reference, compared)?;
    let mut summary = SpectralSummary::default();
    fill_weight_components(reference, compared, &mut summary)?;
    Ok(pooled_weight(&summary))
}

/// Final quality score plus its diagnostic breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityScore {
    pub value: f64,
    pub summary: SpectralSummary,
}

/// Full metric: value = 5 / (1 + |w*S|)^(1/3). Identical images give w = 0
/// and therefore exactly 5.
pub fn summer_score(reference: &RasterImage, compared: &RasterImage) -> Result<QualityScore> {
    check_pair(reference, compared)?;
    let mut summary = SpectralSummary::default();
    fill_log_mag_means(reference, compared, &mut summary)?;
    fill_weight_components(reference, compared, &mut summary)?;
    let weighted = pooled_weight(&summary) * pooled_score(&summary);
    let value = MAX_SCORE / (1.0 + weighted.abs()).cbrt();
    Ok(QualityScore { value, summary })
}

/// Single-scale grayscale baseline: mean log-magnitude of the absolute
/// grayscale error spectrum at native resolution. Higher means worse.
pub fn baseline_spectral_score(reference: &RasterImage, compared: &RasterImage) -> Result<f64> {
    if !reference.same_shape(compared) {
        return Err(reference.shape_error(compared));
    }
    let error = error_map(&to_grayscale(reference), &to_grayscale(compared))?;
    Ok(log_magnitude_mean(&error.map(f64::abs)))
}

/// PSNR in dB over all three channels with peak 1.0; identical images report
/// the 100 dB cap.
pub fn psnr(reference: &RasterImage, compared: &RasterImage) -> Result<f64> {
    if !reference.same_shape(compared) {
        return Err(reference.shape_error(compared));
    }
    let mut sum_sq = 0.0;
    for channel in 0..3 {
        for (&a, &b) in reference
            .plane(channel)
            .samples()
            .iter()
            .zip(compared.plane(channel).samples())
        {
            let d = a - b;
            sum_sq += d * d;
        }
    }
    let mse = sum_sq / (3 * reference.width() * reference.height()) as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Metric selector shared by the benchmark harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricId {
    Summer,
    Baseline,
    Psnr,
}

impl MetricId {
    pub const ALL: [MetricId; 3] = [MetricId::Summer, MetricId::Baseline, MetricId::Psnr];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Summer => "summer",
            MetricId::Baseline => "baseline",
            MetricId::Psnr => "psnr",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "summer" => Ok(MetricId::Summer),
            "baseline" => Ok(MetricId::Baseline),
            "psnr" => Ok(MetricId::Psnr),
            other => Err(IqaError::Parameter(format!(
                "unknown metric '{other}' (expected summer, baseline, or psnr)"
            ))),
        }
    }

    /// Whether larger raw values mean better quality. The baseline is a
    /// distortion score, so it is lower-better.
    pub fn higher_is_better(self) -> bool {
        match self {
            MetricId::Summer | MetricId::Psnr => true,
            MetricId::Baseline => false,
        }
    }

    pub fn score(self, reference: &RasterImage, compared: &RasterImage) -> Result<f64> {
        match self {
            MetricId::Summer => Ok(summer_score(reference, compared)?.value),
            MetricId::Baseline => baseline_spectral_score(reference, compared),
            MetricId::Psnr => psnr(reference, compared),
        }
    }
}
