//! The published zone document (JSON).
//!
//! Masks are stored twice: as run-length pairs `[start, length]` over the
//! row-major pixel index, which reload exactly, and as boundary polygons in
//! `[lat, lon]` for display. Meters are written with 2 decimals and degrees
//! with 6.

use serde::{Deserialize, Serialize};

use super::trace::trace_mask;
use super::{
    Band, RegionStats, Zone, ZoneCategory, ZoningConfig, ZoningError, CLASS_G_MSL_LIMIT_M,
    CLASS_G_OFFSET_M, CLASS_W_OFFSET_M,
};
use crate::grid::GridGeometry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub geometry: GridGeometry,
    pub seed: u64,
    pub config: ZoningConfig,
    pub toolkit_version: String,
    /// Chosen cluster count.
    pub k: usize,
    /// Upper HAE bound of each simple zone.
    pub thresholds_m: Vec<f64>,
    #[serde(rename = "classW_offset_m")]
    pub class_w_offset_m: f64,
    #[serde(rename = "classG_offset_m")]
    pub class_g_offset_m: f64,
    /// Recorded from the source regulation; not applied to any zone.
    #[serde(rename = "classG_msl_limit_m")]
    pub class_g_msl_limit_m: f64,
}

impl DocumentMeta {
    pub fn new(
        geometry: GridGeometry,
        config: &ZoningConfig,
        k: usize,
        thresholds_m: &[f64],
    ) -> Self {
        Self {
            geometry,
            seed: config.seed,
            config: config.clone(),
            toolkit_version: crate::TOOLKIT_VERSION.to_string(),
            k,
            thresholds_m: thresholds_m.to_vec(),
            class_w_offset_m: CLASS_W_OFFSET_M,
            class_g_offset_m: CLASS_G_OFFSET_M,
            class_g_msl_limit_m: CLASS_G_MSL_LIMIT_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedZone {
    pub id: String,
    pub category: ZoneCategory,
    pub baseline_hae_m: f64,
    #[serde(rename = "classW_ceiling_hae_m")]
    pub class_w_ceiling_hae_m: f64,
    #[serde(rename = "classG_ceiling_hae_m")]
    pub class_g_ceiling_hae_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    pub stats: RegionStats,
    pub mask_rle: Vec<[usize; 2]>,
    pub polygons: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDocument {
    pub meta: DocumentMeta,
    pub zones: Vec<PublishedZone>,
}

impl ZoneDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("zone document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ZoningError> {
        serde_json::from_str(text).map_err(|e| ZoningError::MalformedDocument(e.to_string()))
    }

    /// Decoded mask of every zone, in document order.
    pub fn masks(&self) -> Result<Vec<Vec<bool>>, ZoningError> {
        let n = self.meta.geometry.len();
        self.zones
            .iter()
            .map(|z| decode_rle(&z.mask_rle, n))
            .collect()
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    let r = (x * s).round() / s;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn meters(x: f64) -> f64 {
    round_to(x, 2)
}

fn degrees(x: f64) -> f64 {
    round_to(x, 6)
}

/// Runs of `true` as `[start, length]`.
pub fn encode_rle(mask: &[bool]) -> Vec<[usize; 2]> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let start = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            runs.push([start, i - start]);
        } else {
            i += 1;
        }
    }
    runs
}

pub fn decode_rle(runs: &[[usize; 2]], len: usize) -> Result<Vec<bool>, ZoningError> {
    let mut mask = vec![false; len];
    let mut last_end = 0;
    for &[start, length] in runs {
        let end = start
            .checked_add(length)
            .filter(|&e| e <= len && length > 0 && start >= last_end)
            .ok_or_else(|| {
                ZoningError::MalformedDocument(format!("run [{start}, {length}] is invalid"))
            })?;
        mask[start..end].iter_mut().for_each(|m| *m = true);
        last_end = end;
    }
    Ok(mask)
}

fn round_stats(s: &RegionStats) -> RegionStats {
    RegionStats {
        pixel_count: s.pixel_count,
        mean_m: meters(s.mean_m),
        std_m: meters(s.std_m),
        q1_m: meters(s.q1_m),
        median_m: meters(s.median_m),
        q3_m: meters(s.q3_m),
        min_m: meters(s.min_m),
        max_m: meters(s.max_m),
        skew: round_to(s.skew, 4),
        kurtosis: round_to(s.kurtosis, 4),
    }
}

pub fn publish_zones(zones: &[Zone], meta: DocumentMeta) -> ZoneDocument {
    let g = meta.geometry;
    let published = zones
        .iter()
        .map(|z| {
            let polygons = trace_mask(&z.mask, g.nrows, g.ncols)
                .into_iter()
                .map(|ring| {
                    ring.into_iter()
                        .map(|(r, c)| {
                            let (lat, lon) = g.cell_corner(r, c);
                            [degrees(lat), degrees(lon)]
                        })
                        .collect()
                })
                .collect();
            PublishedZone {
                id: z.id.clone(),
                category: z.category,
                baseline_hae_m: meters(z.baseline_hae_m),
                class_w_ceiling_hae_m: meters(z.class_w_ceiling_hae_m),
                class_g_ceiling_hae_m: meters(z.class_g_ceiling_hae_m()),
                band: z.band.map(|b| Band {
                    lower: meters(b.lower),
                    upper: meters(b.upper),
                }),
                stats: round_stats(&z.stats),
                mask_rle: encode_rle(&z.mask),
                polygons,
            }
        })
        .collect();
    ZoneDocument {
        meta,
        zones: published,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> DocumentMeta {
        let g = GridGeometry::new(22.0, 113.0, -0.5, 0.5, 2, 3).unwrap();
        DocumentMeta::new(g, &ZoningConfig::default(), 1, &[60.0])
    }

    #[test]
    fn empty_zone_list_keeps_meta() {
        let doc = publish_zones(&[], meta());
        assert!(doc.zones.is_empty());
        let back = ZoneDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.meta.class_g_msl_limit_m, 6000.0);
    }

    #[test]
    fn rle_examples() {
        let m = [true, true, false, true, false, false, true];
        assert_eq!(encode_rle(&m), vec![[0, 2], [3, 1], [6, 1]]);
        assert_eq!(decode_rle(&encode_rle(&m), m.len()).unwrap(), m);
        assert!(decode_rle(&[[5, 4]], 7).is_err());
        assert!(decode_rle(&[[3, 1], [0, 1]], 7).is_err());
        assert!(decode_rle(&[[3, 0]], 7).is_err());
    }

    #[test]
    fn rounding_rules() {
        assert_eq!(meters(25.314159), 25.31);
        assert_eq!(degrees(113.12345678), 113.123457);
        assert_eq!(meters(-0.001), 0.0);
    }
}
