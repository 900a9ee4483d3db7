//! Full benchmark runs: score every record with every requested metric,
//! regress, and assemble correlation, histogram, classification, and
//! significance results.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::cache::{content_hash, ScoreCache};
use crate::dataset::manifest::{Category, SubjectiveRecord};
use crate::error::{IqaError, Result};
use crate::eval::classification::{classification_analysis, ClassificationResult, ScoredRecord};
use crate::eval::correlation::{krcc, outlier_ratio, plcc, rmse, srcc, MetricBundle};
use crate::eval::histogram::{histogram_distance, score_histogram, HistogramMetric};
use crate::eval::regression::{fit_regression_with_form, LogisticForm, RegressionModel};
use crate::eval::significance::fisher_z_significance;
use crate::metric::MetricId;
use crate::raster::{load_image, RasterImage};

/// Minimum usable records for any benchmark (the regression needs 6 points).
pub const MIN_RECORDS: usize = 6;

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub metrics: Vec<MetricId>,
    /// Worker threads for the scoring pass; None uses the default pool.
    pub threads: Option<usize>,
    /// When false (the default) runtime fields are reported as zero so
    /// repeated runs produce byte-identical reports.
    pub measure_timing: bool,
    /// Sidecar score-cache path.
    pub cache_path: Option<PathBuf>,
    pub logistic_form: LogisticForm,
    /// Whether larger subjective scores mean better quality (true for MOS,
    /// false for DMOS-style scales).
    pub subjective_higher_better: bool,
    pub histogram_bins: usize,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            metrics: vec![MetricId::Summer],
            threads: None,
            measure_timing: false,
            cache_path: None,
            logistic_form: LogisticForm::Standard,
            subjective_higher_better: true,
            histogram_bins: 10,
        }
    }
}

/// Per-category validation numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBundle {
    pub category: Category,
    pub record_count: usize,
    pub bundle: MetricBundle,
}

/// Everything evaluated for one metric on one dataset.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub metric: MetricId,
    pub overall: MetricBundle,
    pub per_category: Vec<CategoryBundle>,
    pub regression: RegressionModel,
    pub histogram_distances: Vec<(HistogramMetric, f64)>,
    pub classification: Option<ClassificationResult>,
    pub mean_runtime_seconds: f64,
}

/// Benchmark output for one dataset.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub dataset_name: String,
    pub record_count: usize,
    pub skipped: Vec<String>,
    pub metrics: Vec<MetricReport>,
    /// `significance_plcc[i][j]`: verdict on metric j measured against
    /// metric i (-1 inferior, 0 equivalent, +1 superior), from PLCC.
    pub significance_plcc: Vec<Vec<i8>>,
    pub significance_srcc: Vec<Vec<i8>>,
}

struct ScoredPair {
    index: usize,
    scores: Vec<f64>,     // one per requested metric
    seconds: Vec<f64>,    // scoring time per metric (0 when not measured)
}

fn score_records(
    records: &[SubjectiveRecord],
    options: &BenchmarkOptions,
    cache: Option<&ScoreCache>,
) -> (Vec<ScoredPair>, Vec<String>) {
    // References repeat across records; decode each path once.
    let reference_cache: Mutex<HashMap<PathBuf, std::sync::Arc<(RasterImage, String)>>> =
        Mutex::new(HashMap::new());

    let load_reference = |path: &PathBuf| -> Result<std::sync::Arc<(RasterImage, String)>> {
        if let Some(found) = reference_cache.lock().unwrap().get(path) {
            return Ok(found.clone());
        }
        let img = load_image(path)?;
        let hash = content_hash(&img);
        let arc = std::sync::Arc::new((img, hash));
        reference_cache
            .lock()
            .unwrap()
            .entry(path.clone())
            .or_insert_with(|| arc.clone());
        Ok(arc)
    };

    let results: Vec<std::result::Result<ScoredPair, String>> = records
        .par_iter()
        .enumerate()
        .map(|(index, record)| {
            let reference = load_reference(&record.reference_path)
                .map_err(|e| format!("record {index}: {e}"))?;
            let distorted = load_image(&record.distorted_path)
                .map_err(|e| format!("record {index}: {e}"))?;
            let dist_hash = content_hash(&distorted);
            let mut scores = Vec::with_capacity(options.metrics.len());
            let mut seconds = Vec::with_capacity(options.metrics.len());
            for &metric in &options.metrics {
                if let Some(hit) =
                    cache.and_then(|c| c.get(metric, &reference.1, &dist_hash))
                {
                    scores.push(hit);
                    seconds.push(0.0);
                    continue;
                }
                let started = options.measure_timing.then(Instant::now);
                let score = metric
                    .score(&reference.0, &distorted)
                    .map_err(|e| format!("record {index}: {e}"))?;
                seconds.push(started.map(|t| t.elapsed().as_secs_f64()).unwrap_or(0.0));
                if let Some(c) = cache {
                    c.insert(metric, &reference.1, &dist_hash, score);
                }
                scores.push(score);
            }
            Ok(ScoredPair {
                index,
                scores,
                seconds,
            })
        })
        .collect();

    let mut scored = Vec::new();
    let mut skipped = Vec::new();
    for result in results {
        match result {
            Ok(pair) => scored.push(pair),
            Err(reason) => skipped.push(reason),
        }
    }
    (scored, skipped)
}

fn bundle_for(
    oriented: &[f64],
    predictions: &[f64],
    mos: &[f64],
    stds: Option<&[f64]>,
) -> Result<MetricBundle> {
    Ok(MetricBundle {
        plcc: plcc(predictions, mos)?,
        srcc: srcc(oriented, mos)?,
        krcc: krcc(oriented, mos)?,
        rmse: rmse(predictions, mos)?,
        outlier_ratio: outlier_ratio(predictions, mos, stds)?,
    })
}

fn evaluate_metric(
    metric: MetricId,
    raw_scores: &[f64],
    usable: &[&SubjectiveRecord],
    options: &BenchmarkOptions,
    mean_runtime_seconds: f64,
) -> Result<MetricReport> {
    let oriented: Vec<f64> = if metric.higher_is_better() {
        raw_scores.to_vec()
    } else {
        raw_scores.iter().map(|&s| -s).collect()
    };
    let mos: Vec<f64> = usable.iter().map(|r| r.mos).collect();
    let stds: Option<Vec<f64>> = usable
        .iter()
        .map(|r| r.mos_std)
        .collect::<Option<Vec<f64>>>();

    let regression = fit_regression_with_form(&oriented, &mos, options.logistic_form)?;
    let predictions = regression.apply_many(&oriented);

    let overall = bundle_for(&oriented, &predictions, &mos, stds.as_deref())?;

    let present: std::collections::BTreeSet<Category> =
        usable.iter().filter_map(|r| r.category).collect();
    let mut per_category = Vec::new();
    for category in present {
        let idx: Vec<usize> = usable
            .iter()
            .enumerate()
            .filter(|(_, r)| r.category == Some(category))
            .map(|(i, _)| i)
            .collect();
        if idx.len() < MIN_RECORDS {
            continue;
        }
        let sub_oriented: Vec<f64> = idx.iter().map(|&i| oriented[i]).collect();
        let sub_pred: Vec<f64> = idx.iter().map(|&i| predictions[i]).collect();
        let sub_mos: Vec<f64> = idx.iter().map(|&i| mos[i]).collect();
        let sub_stds: Option<Vec<f64>> = stds
            .as_ref()
            .map(|s| idx.iter().map(|&i| s[i]).collect());
        per_category.push(CategoryBundle {
            category,
            record_count: idx.len(),
            bundle: bundle_for(&sub_oriented, &sub_pred, &sub_mos, sub_stds.as_deref())?,
        });
    }

    let pred_hist = score_histogram(&predictions, options.histogram_bins)?;
    let mos_hist = score_histogram(&mos, options.histogram_bins)?;
    let histogram_distances = HistogramMetric::ALL
        .into_iter()
        .map(|m| histogram_distance(&pred_hist, &mos_hist, m).map(|d| (m, d)))
        .collect::<Result<Vec<_>>>()?;

    let class_records: Vec<ScoredRecord> = usable
        .iter()
        .zip(&oriented)
        .map(|(r, &objective)| ScoredRecord {
            objective,
            mos: r.mos,
            mos_std: r.mos_std,
            vote_count: r.vote_count,
        })
        .collect();
    let classification = classification_analysis(
        &class_records,
        true, // already oriented
        options.subjective_higher_better,
    )
    .ok();

    Ok(MetricReport {
        metric,
        overall,
        per_category,
        regression,
        histogram_distances,
        classification,
        mean_runtime_seconds,
    })
}

fn significance_matrix(correlations: &[f64], n: usize) -> Vec<Vec<i8>> {
    let count = correlations.len();
    let mut matrix = vec![vec![0i8; count]; count];
    for i in 0..count {
        for j in 0..count {
            if i == j {
                continue;
            }
            matrix[i][j] = fisher_z_significance(correlations[i], n, correlations[j], n)
                .map(|v| v.value)
                .unwrap_or(0);
        }
    }
    matrix
}

/// Scores all records with each requested metric and assembles the report.
pub fn run_benchmark(
    dataset_name: &str,
    records: &[SubjectiveRecord],
    options: &BenchmarkOptions,
) -> Result<BenchmarkReport> {
    if options.metrics.is_empty() {
        return Err(IqaError::Parameter("no metrics requested".into()));
    }
    if records.len() < MIN_RECORDS {
        return Err(IqaError::Benchmark(format!(
            "need at least {MIN_RECORDS} records, got {}",
            records.len()
        )));
    }

    let cache = match &options.cache_path {
        Some(path) => Some(ScoreCache::open(path)?),
        None => None,
    };

    let (scored, skipped) = match options.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| IqaError::Benchmark(format!("thread pool: {e}")))?;
            pool.install(|| score_records(records, options, cache.as_ref()))
        }
        None => score_records(records, options, cache.as_ref()),
    };
    if let Some(cache) = &cache {
        cache.persist()?;
    }

    if scored.len() < MIN_RECORDS {
        return Err(IqaError::Benchmark(format!(
            "only {} of {} records usable (need {MIN_RECORDS}); first issue: {}",
            scored.len(),
            records.len(),
            skipped.first().cloned().unwrap_or_default()
        )));
    }

    let usable: Vec<&SubjectiveRecord> = scored.iter().map(|p| &records[p.index]).collect();
    let mut metric_reports = Vec::with_capacity(options.metrics.len());
    for (metric_idx, &metric) in options.metrics.iter().enumerate() {
        let raw: Vec<f64> = scored.iter().map(|p| p.scores[metric_idx]).collect();
        let mean_runtime = if options.measure_timing {
            scored.iter().map(|p| p.seconds[metric_idx]).sum::<f64>() / scored.len() as f64
        } else {
            0.0
        };
        metric_reports.push(evaluate_metric(metric, &raw, &usable, options, mean_runtime)?);
    }

    let n = scored.len();
    let plccs: Vec<f64> = metric_reports.iter().map(|m| m.overall.plcc).collect();
    let srccs: Vec<f64> = metric_reports.iter().map(|m| m.overall.srcc).collect();

    Ok(BenchmarkReport {
        dataset_name: dataset_name.to_string(),
        record_count: n,
        skipped,
        metrics: metric_reports,
        significance_plcc: significance_matrix(&plccs, n),
        significance_srcc: significance_matrix(&srccs, n),
    })
}
