//! Flight-log ingestion and extraction of vertical error models.
//!
//! Logs use a flat CSV schema with header
//! `t_s,segment_id,baro_alt_m,rtk_hae_m,epv_m`. The RTK height is taken as
//! truth; the barometric residual is `baro_alt_m − rtk_hae_m`.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk::ErrorModel;
use crate::stats;

pub use crate::stats::{descriptive_stats, DescriptiveStats};

pub const DEFAULT_WINDOW: usize = 10;
pub const MIN_RECORDS: usize = 30;
const MAX_DEBIAS_PASSES: usize = 8;
/// Histogram bins per residual sigma.
pub const BINS_PER_SIGMA: f64 = 10.0;
/// Histogram half-width in residual sigmas.
pub const HISTOGRAM_HALF_WIDTH_SIGMAS: f64 = 6.0;

const COLUMNS: [&str; 5] = ["t_s", "segment_id", "baro_alt_m", "rtk_hae_m", "epv_m"];

#[derive(Debug, Error)]
pub enum LogError {
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("malformed row {index}: {reason}")]
    MalformedRow { index: usize, reason: String },
    #[error("segment {segment_id:?} has fewer records than the bias window")]
    SegmentTooShort { segment_id: String },
    #[error("need at least {needed} records, got {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("invalid bias window {0}")]
    InvalidWindow(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightLogRecord {
    pub t_s: f64,
    pub segment_id: String,
    pub baro_alt_m: f64,
    pub rtk_hae_m: f64,
    pub epv_m: f64,
}

impl FlightLogRecord {
    pub fn residual(&self) -> f64 {
        self.baro_alt_m - self.rtk_hae_m
    }
}

/// Parses a log. Row indices in errors count data rows from 0.
pub fn parse_log_csv<R: Read>(source: R) -> Result<Vec<FlightLogRecord>, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut pos = [0usize; 5];
    for (slot, name) in pos.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LogError::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    let mut last_t: HashMap<String, f64> = HashMap::new();
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| LogError::MalformedRow {
            index,
            reason: e.to_string(),
        })?;
        let field = |i: usize| row.get(pos[i]).unwrap_or("");
        let number = |i: usize| -> Result<f64, LogError> {
            let text = field(i);
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(LogError::MalformedRow {
                    index,
                    reason: format!("{} = {text:?} is not a finite number", COLUMNS[i]),
                }),
            }
        };
        let record = FlightLogRecord {
            t_s: number(0)?,
            segment_id: field(1).to_string(),
            baro_alt_m: number(2)?,
            rtk_hae_m: number(3)?,
            epv_m: number(4)?,
        };
        if record.epv_m < 0.0 {
            return Err(LogError::MalformedRow {
                index,
                reason: format!("negative epv_m {}", record.epv_m),
            });
        }
        if let Some(&prev) = last_t.get(&record.segment_id) {
            if record.t_s < prev {
                return Err(LogError::MalformedRow {
                    index,
                    reason: format!("t_s goes backwards in segment {:?}", record.segment_id),
                });
            }
        }
        last_t.insert(record.segment_id.clone(), record.t_s);
        out.push(record);
    }
    Ok(out)
}

pub fn write_log_csv<W: Write>(records: &[FlightLogRecord], sink: W) -> Result<(), LogError> {
    let mut writer = csv::Writer::from_writer(sink);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Segment ids in order of first appearance, with the indices of their
/// records.
fn segments(records: &[FlightLogRecord]) -> Vec<(&str, Vec<usize>)> {
    let mut order: Vec<(&str, Vec<usize>)> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let s = *slot.entry(r.segment_id.as_str()).or_insert_with(|| {
            order.push((r.segment_id.as_str(), Vec::new()));
            order.len() - 1
        });
        order[s].1.push(i);
    }
    order
}

/// Removes each segment's initial bias: the mean residual over its first
/// `window_n` records is subtracted from all of its barometric altitudes.
///
/// A bias below the rounding noise of the window is left alone, and the
/// subtraction is repeated until that holds, so a second pass returns its
/// input unchanged.
pub fn debias_segments(
    records: &[FlightLogRecord],
    window_n: usize,
) -> Result<Vec<FlightLogRecord>, LogError> {
    if window_n == 0 {
        return Err(LogError::InvalidWindow(window_n));
    }
    let mut out = records.to_vec();
    for (id, idx) in segments(records) {
        if idx.len() < window_n {
            return Err(LogError::SegmentTooShort {
                segment_id: id.to_string(),
            });
        }
        let window = &idx[..window_n];
        // Subtracting a large bias leaves rounding residue of its own size,
        // so repeat until what remains is below the noise floor.
        for _ in 0..MAX_DEBIAS_PASSES {
            let bias = window.iter().map(|&i| out[i].residual()).sum::<f64>() / window_n as f64;
            let scale = window
                .iter()
                .map(|&i| out[i].baro_alt_m.abs().max(out[i].rtk_hae_m.abs()))
                .fold(0.0, f64::max);
            if bias.abs() <= 16.0 * f64::EPSILON * scale {
                break;
            }
            for &i in &idx {
                out[i].baro_alt_m -= bias;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorExtraction {
    pub sigma_baro_m: f64,
    /// Sample standard deviation of the EPV series.
    pub sigma_hae_m: f64,
    pub n_segments: usize,
    pub n_records: usize,
    pub residual_histogram: ErrorModel,
}

/// Error models from debiased records.
pub fn extract_error_models(records: &[FlightLogRecord]) -> Result<ErrorExtraction, LogError> {
    if records.len() < MIN_RECORDS {
        return Err(LogError::InsufficientData {
            needed: MIN_RECORDS,
            found: records.len(),
        });
    }
    let residuals: Vec<f64> = records.iter().map(FlightLogRecord::residual).collect();
    let epv: Vec<f64> = records.iter().map(|r| r.epv_m).collect();
    let sigma_baro = stats::sample_sd(&residuals).expect("non-empty");
    let sigma_hae = stats::sample_sd(&epv).expect("non-empty");
    let center = stats::mean(&residuals).expect("non-empty");
    Ok(ErrorExtraction {
        sigma_baro_m: sigma_baro,
        sigma_hae_m: sigma_hae,
        n_segments: segments(records).len(),
        n_records: records.len(),
        residual_histogram: residual_histogram(&residuals, center, sigma_baro),
    })
}

/// Histogram over `center ± 6σ` with bin width `σ/10`, normalised over the
/// samples that fall inside. Without spread it is a single bin of width 1 m
/// and density 1 around `center`.
pub fn residual_histogram(residuals: &[f64], center: f64, sigma: f64) -> ErrorModel {
    let spike = || ErrorModel::Empirical {
        bin_edges_m: vec![center - 0.5, center + 0.5],
        densities: vec![1.0],
    };
    let width = sigma / BINS_PER_SIGMA;
    if !(width > center.abs() * 1e-12 && width > 0.0) {
        return spike();
    }
    let nbins = (2.0 * HISTOGRAM_HALF_WIDTH_SIGMAS * BINS_PER_SIGMA) as usize;
    let lo = center - HISTOGRAM_HALF_WIDTH_SIGMAS * sigma;
    let edges: Vec<f64> = (0..=nbins).map(|i| lo + i as f64 * width).collect();
    let hi = edges[nbins];
    let mut counts = vec![0usize; nbins];
    for &r in residuals {
        if r < lo || r > hi {
            continue;
        }
        let i = (((r - lo) / width) as usize).min(nbins - 1);
        counts[i] += 1;
    }
    let inside: usize = counts.iter().sum();
    if inside == 0 {
        return spike();
    }
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (inside as f64 * (w[1] - w[0])))
        .collect();
    ErrorModel::Empirical {
        bin_edges_m: edges,
        densities,
    }
}

/// `(bin_center, density)` rows of an empirical model.
pub fn histogram_rows(model: &ErrorModel) -> Vec<(f64, f64)> {
    match model {
        ErrorModel::Empirical {
            bin_edges_m,
            densities,
        } => bin_edges_m
            .windows(2)
            .zip(densities)
            .map(|(w, &d)| (0.5 * (w[0] + w[1]), d))
            .collect(),
        ErrorModel::Gaussian { .. } => Vec::new(),
    }
}
