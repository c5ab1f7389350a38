//! HAE-based airspace zoning.
//!
//! The pipeline takes an HAE terrain raster and produces zones:
//!
//! 1. cluster the HAE values with 1-D K-means (K from the elbow rule unless
//!    given),
//! 2. round each simple cluster's maximum to tens to get zone thresholds,
//! 3. split clusters into simple regions and one complex region by cumulative
//!    area,
//! 4. give simple zones a median baseline (rounded to fives) and cut the
//!    complex region into fixed-interval bands whose upper bound is the
//!    baseline,
//! 5. add the Class-W ceiling (baseline + 120 m) and region statistics.

mod document;
mod kmeans;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heights::HeightReference;
use crate::stats::{self, StatsError};
use crate::terrain::TerrainRaster;

pub use document::{
    decode_rle, encode_rle, publish_zones, DocumentMeta, PublishedZone, ZoneDocument,
};
pub use kmeans::{
    distinct_count, elbow_from_curve, elbow_k, kmeans_1d, nearest_centroid, wcss_curve,
    ClusterModel, XorShift64Star, MAX_ITERATIONS, RESTARTS,
};
pub use trace::{ring_area, trace_mask, Ring};

/// Height of Class-W airspace above the zone baseline.
pub const CLASS_W_OFFSET_M: f64 = 120.0;
/// Height of Class-G airspace above the zone baseline (reported only).
pub const CLASS_G_OFFSET_M: f64 = 300.0;
/// MSL altitude limit attached to Class G in the source regulation; recorded
/// in document metadata, never enforced.
pub const CLASS_G_MSL_LIMIT_M: f64 = 6000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZoningError {
    #[error("no values to cluster")]
    EmptyInput,
    #[error("k = {k} is not within 1..={distinct} (distinct values)")]
    KTooLarge { k: usize, distinct: usize },
    #[error("non-finite value {0}")]
    NonFiniteValue(f64),
    #[error("no K-means restart kept all {k} clusters populated")]
    EmptyCluster { k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("zoning needs an HAE raster, got {0}")]
    NotHae(String),
    #[error("malformed zone document: {0}")]
    MalformedDocument(String),
}

impl From<StatsError> for ZoningError {
    fn from(_: StatsError) -> Self {
        ZoningError::EmptyInput
    }
}

/// Nearest multiple of 10, halves rounded up.
pub fn round_to_tens(x: f64) -> f64 {
    round_to_multiple(x, 10.0)
}

/// Nearest multiple of 5, halves rounded up.
pub fn round_to_fives(x: f64) -> f64 {
    round_to_multiple(x, 5.0)
}

fn round_to_multiple(x: f64, step: f64) -> f64 {
    (x / step + 0.5).floor() * step
}

/// Cluster indices (0-based, ascending centroid order) of simple regions and
/// of the clusters merged into the complex region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSplit {
    pub simple: Vec<usize>,
    pub complex: Vec<usize>,
}

/// Takes clusters in ascending order until their cumulative area fraction
/// reaches `threshold` (at least one cluster); the rest form the complex
/// region.
pub fn classify_fractions(fractions: &[f64], threshold: f64) -> RegionSplit {
    let mut simple = Vec::new();
    let mut cumulative = 0.0;
    for (i, f) in fractions.iter().enumerate() {
        simple.push(i);
        cumulative += f;
        if cumulative >= threshold {
            break;
        }
    }
    let complex = (simple.len()..fractions.len()).collect();
    RegionSplit { simple, complex }
}

pub fn classify_regions(model: &ClusterModel, area_fraction_threshold: f64) -> RegionSplit {
    classify_fractions(&model.fractions(), area_fraction_threshold)
}

/// Median of the region rounded to the nearest 5 m.
pub fn baseline_simple(values: &[f64]) -> Result<f64, ZoningError> {
    Ok(round_to_fives(stats::median(values)?))
}

pub fn class_w_ceiling(baseline_m: f64) -> f64 {
    baseline_m + CLASS_W_OFFSET_M
}

pub fn class_g_ceiling(baseline_m: f64) -> f64 {
    baseline_m + CLASS_G_OFFSET_M
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn baseline(&self) -> f64 {
        self.upper
    }
}

/// Band layout covering a set of values at a fixed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLayout {
    interval: f64,
    first: i64,
    last: i64,
}

impl BandLayout {
    pub fn new(min: f64, max: f64, interval: f64) -> Result<Self, ZoningError> {
        if !(interval > 0.0) || !interval.is_finite() {
            return Err(ZoningError::InvalidConfig(format!(
                "band interval must be positive, got {interval}"
            )));
        }
        let first = (min / interval).floor() as i64;
        let last = ((max / interval).ceil() as i64).max(first + 1) - 1;
        Ok(Self {
            interval,
            first,
            last,
        })
    }

    /// Band index of a value; the topmost band includes its upper bound.
    pub fn index_of(&self, v: f64) -> usize {
        let k = ((v / self.interval).floor() as i64).clamp(self.first, self.last);
        (k - self.first) as usize
    }

    pub fn band(&self, index: usize) -> Band {
        let k = self.first + index as i64;
        Band {
            lower: k as f64 * self.interval,
            upper: (k + 1) as f64 * self.interval,
        }
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Non-empty fixed-interval bands over `values`, ascending.
pub fn complex_bands(values: &[f64], interval: f64) -> Result<Vec<Band>, ZoningError> {
    let (min, max) = min_max(values).ok_or(ZoningError::EmptyInput)?;
    let layout = BandLayout::new(min, max, interval)?;
    let mut used = vec![false; layout.len()];
    for &v in values {
        used[layout.index_of(v)] = true;
    }
    Ok(used
        .iter()
        .enumerate()
        .filter(|(_, u)| **u)
        .map(|(i, _)| layout.band(i))
        .collect())
}

fn min_max(values: &[f64]) -> Option<(f64, f64)> {
    values.iter().fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub pixel_count: usize,
    pub mean_m: f64,
    pub std_m: f64,
    pub q1_m: f64,
    pub median_m: f64,
    pub q3_m: f64,
    pub min_m: f64,
    pub max_m: f64,
    pub skew: f64,
    pub kurtosis: f64,
}

pub fn region_stats(values: &[f64]) -> Result<RegionStats, ZoningError> {
    let sorted = stats::sorted_copy(values);
    if sorted.is_empty() {
        return Err(ZoningError::EmptyInput);
    }
    let (skew, kurtosis) = stats::skew_kurtosis(values)?;
    Ok(RegionStats {
        pixel_count: values.len(),
        mean_m: stats::mean(values)?,
        std_m: stats::sample_sd(values)?,
        q1_m: stats::quantile_sorted(&sorted, 0.25)?,
        median_m: stats::quantile_sorted(&sorted, 0.5)?,
        q3_m: stats::quantile_sorted(&sorted, 0.75)?,
        min_m: sorted[0],
        max_m: sorted[sorted.len() - 1],
        skew,
        kurtosis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZoneCategory {
    Simple,
    ComplexBand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    pub category: ZoneCategory,
    /// One flag per raster pixel, row-major.
    pub mask: Vec<bool>,
    pub band: Option<Band>,
    pub baseline_hae_m: f64,
    pub class_w_ceiling_hae_m: f64,
    pub stats: RegionStats,
}

impl Zone {
    pub fn class_g_ceiling_hae_m(&self) -> f64 {
        class_g_ceiling(self.baseline_hae_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoningConfig {
    /// Cluster count; chosen by the elbow rule when absent.
    pub k: Option<usize>,
    pub k_max: usize,
    pub seed: u64,
    pub area_fraction_threshold: f64,
    pub interval: f64,
}

impl Default for ZoningConfig {
    fn default() -> Self {
        Self {
            k: None,
            k_max: 8,
            seed: 42,
            area_fraction_threshold: 0.85,
            interval: 100.0,
        }
    }
}

/// Everything the pipeline decided on the way to its zones.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoningOutcome {
    pub k: usize,
    pub wcss_curve: Option<Vec<f64>>,
    pub model: ClusterModel,
    pub split: RegionSplit,
    /// Upper HAE threshold of each simple zone, after rounding to tens.
    pub thresholds_m: Vec<f64>,
    pub zones: Vec<Zone>,
}

pub fn run_zoning_pipeline(
    raster_hae: &TerrainRaster,
    config: &ZoningConfig,
) -> Result<Vec<Zone>, ZoningError> {
    run_zoning(raster_hae, config).map(|o| o.zones)
}

pub fn run_zoning(
    raster_hae: &TerrainRaster,
    config: &ZoningConfig,
) -> Result<ZoningOutcome, ZoningError> {
    if raster_hae.vertical_ref() != &HeightReference::Hae {
        return Err(ZoningError::NotHae(format!(
            "{:?}",
            raster_hae.vertical_ref()
        )));
    }
    if !(config.area_fraction_threshold > 0.0 && config.area_fraction_threshold <= 1.0) {
        return Err(ZoningError::InvalidConfig(format!(
            "area fraction threshold {} outside (0, 1]",
            config.area_fraction_threshold
        )));
    }
    let (pixels, values): (Vec<usize>, Vec<f64>) = raster_hae.valid_pixels().unzip();
    if values.is_empty() {
        return Err(ZoningError::EmptyInput);
    }

    let (k, curve) = match config.k {
        Some(k) => (k, None),
        None => {
            if config.k_max < 3 {
                return Err(ZoningError::InvalidConfig(format!(
                    "k_max must be at least 3, got {}",
                    config.k_max
                )));
            }
            let curve = wcss_curve(&values, config.k_max, config.seed)?;
            (elbow_from_curve(&curve), Some(curve))
        }
    };
    let model = kmeans_1d(&values, k, config.seed)?;
    let split = classify_regions(&model, config.area_fraction_threshold);

    let mut cluster_max = vec![f64::NEG_INFINITY; k];
    for (&v, &l) in values.iter().zip(&model.labels) {
        cluster_max[l] = cluster_max[l].max(v);
    }
    let thresholds_m: Vec<f64> = split
        .simple
        .iter()
        .map(|&c| round_to_tens(cluster_max[c]))
        .collect();

    // Zone slot per pixel: simple zone i covers (t[i-1], t[i]]; the last
    // simple zone is open above when there is no complex region.
    let n_simple = split.simple.len();
    let open_top = split.complex.is_empty();
    let slot = |v: f64| -> Option<usize> {
        let i = thresholds_m.partition_point(|&t| t < v);
        if i < n_simple {
            Some(i)
        } else if open_top {
            Some(n_simple - 1)
        } else {
            None
        }
    };

    let npix = raster_hae.values().len();
    let mut zones = Vec::new();
    let mut simple_members: Vec<Vec<usize>> = vec![Vec::new(); n_simple];
    let mut complex_members: Vec<usize> = Vec::new();
    for (idx, &v) in values.iter().enumerate() {
        match slot(v) {
            Some(i) => simple_members[i].push(idx),
            None => complex_members.push(idx),
        }
    }

    let make_zone = |id: String,
                     category: ZoneCategory,
                     band: Option<Band>,
                     baseline: f64,
                     members: &[usize]|
     -> Result<Zone, ZoningError> {
        let member_values: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        let mut mask = vec![false; npix];
        for &i in members {
            mask[pixels[i]] = true;
        }
        Ok(Zone {
            id,
            category,
            mask,
            band,
            baseline_hae_m: baseline,
            class_w_ceiling_hae_m: class_w_ceiling(baseline),
            stats: region_stats(&member_values)?,
        })
    };

    for (i, members) in simple_members.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let member_values: Vec<f64> = members.iter().map(|&m| values[m]).collect();
        let baseline = baseline_simple(&member_values)?;
        zones.push(make_zone(
            format!("simple-{}", i + 1),
            ZoneCategory::Simple,
            None,
            baseline,
            members,
        )?);
    }

    if !complex_members.is_empty() {
        let complex_values: Vec<f64> = complex_members.iter().map(|&m| values[m]).collect();
        let (min, max) = min_max(&complex_values).ok_or(ZoningError::EmptyInput)?;
        let layout = BandLayout::new(min, max, config.interval)?;
        let mut per_band: Vec<Vec<usize>> = vec![Vec::new(); layout.len()];
        for (&m, &v) in complex_members.iter().zip(&complex_values) {
            per_band[layout.index_of(v)].push(m);
        }
        for (b, members) in per_band.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let band = layout.band(b);
            zones.push(make_zone(
                format!("complex-{}-{}", band.lower, band.upper),
                ZoneCategory::ComplexBand,
                Some(band),
                band.baseline(),
                members,
            )?);
        }
    }

    Ok(ZoningOutcome {
        k,
        wcss_curve: curve,
        model,
        split,
        thresholds_m,
        zones,
    })
}
