//! Deterministic fixtures: a four-mode terrain raster shaped like a dense
//! coastal city, a small airport geoid/DEM pair, and simulated flight logs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geoid::GeoidGrid;
use crate::grid::GridGeometry;
use crate::heights::{CalibrationPoint, HeightReference, SurfaceKind};
use crate::logstats::FlightLogRecord;
use crate::terrain::TerrainRaster;

pub const CITY_NODATA: f64 = -9999.0;

/// Pixel counts of the four height modes on a 512×512 raster.
pub const CITY_MODE_COUNTS: [usize; 4] = [160_642, 71_303, 22_466, 7_733];

/// One height mode: a share `core_share` of its pixels spread uniformly over
/// `[lo, mid]`, the rest over `[mid, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightMode {
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
    pub core_share: f64,
}

impl HeightMode {
    pub fn quantile(&self, u: f64) -> f64 {
        if u < self.core_share {
            self.lo + (self.mid - self.lo) * u / self.core_share
        } else {
            self.mid + (self.hi - self.mid) * (u - self.core_share) / (1.0 - self.core_share)
        }
    }
}

/// Low plain with median 25.79 m, built-up band with median 87.85 m, hills,
/// and a mountain mode.
pub const CITY_MODES: [HeightMode; 4] = [
    HeightMode {
        lo: 16.0,
        mid: 32.643,
        hi: 58.0,
        core_share: 0.85,
    },
    HeightMode {
        lo: 82.0,
        mid: 91.945,
        hi: 176.0,
        core_share: 0.85,
    },
    HeightMode {
        lo: 270.0,
        mid: 295.0,
        hi: 320.0,
        core_share: 0.5,
    },
    HeightMode {
        lo: 760.0,
        mid: 820.0,
        hi: 880.0,
        core_share: 0.5,
    },
];

/// HAE digital surface model on a 512×512 grid whose value histogram is
/// fixed by [`CITY_MODES`] and [`CITY_MODE_COUNTS`].
///
/// Heights are assigned in ascending order along a smooth field that rises
/// from the south-west corner, so every mode forms connected patches.
pub fn city_raster() -> TerrainRaster {
    city_raster_sized(512, 512, &CITY_MODE_COUNTS)
}

/// Same construction with arbitrary size; `counts` must sum to
/// `nrows · ncols`.
pub fn city_raster_sized(nrows: usize, ncols: usize, counts: &[usize; 4]) -> TerrainRaster {
    assert_eq!(
        counts.iter().sum::<usize>(),
        nrows * ncols,
        "mode counts must fill the grid"
    );
    let mut heights = Vec::with_capacity(nrows * ncols);
    for (mode, &n) in CITY_MODES.iter().zip(counts) {
        heights.extend((0..n).map(|j| mode.quantile((j as f64 + 0.5) / n as f64)));
    }
    let field = |r: usize, c: usize| {
        let (y, x) = ((nrows - 1 - r) as f64, c as f64);
        x + y + 12.0 * (y / 23.0).sin() * (x / 31.0).cos()
    };
    let mut order: Vec<usize> = (0..nrows * ncols).collect();
    order.sort_by(|&a, &b| {
        field(a / ncols, a % ncols)
            .total_cmp(&field(b / ncols, b % ncols))
            .then(a.cmp(&b))
    });
    let mut values = vec![0.0; nrows * ncols];
    for (&pixel, h) in order.iter().zip(heights) {
        values[pixel] = h;
    }
    let geometry = GridGeometry::new(22.80, 113.90, -0.00025, 0.00025, nrows, ncols)
        .expect("fixture geometry");
    TerrainRaster::new(
        SurfaceKind::Dsm,
        HeightReference::Hae,
        geometry,
        CITY_NODATA,
        values,
    )
    .expect("fixture raster")
}

pub const HKIA_LAT: f64 = 22.308;
pub const HKIA_LON: f64 = 113.918;
pub const HKIA_UNDULATION_M: f64 = -3.1;
pub const HKIA_ELEVATION_MSL_M: f64 = 4.0;
pub const HKIA_PRESSURE_HPA: f64 = 1005.4;
pub const HKIA_MEAN_TEMP_C: f64 = 24.3;
pub const HKIA_AIRCRAFT_PRESSURE_HPA: f64 = 998.0;

/// 5×5 geoid grid at 0.05° spacing centred on the airport cell.
pub fn hkia_geoid() -> GeoidGrid {
    let step = 0.05;
    let g = GridGeometry::new(
        HKIA_LAT - 2.0 * step,
        HKIA_LON - 2.0 * step,
        step,
        step,
        5,
        5,
    )
    .expect("fixture geometry");
    let values = (0..25)
        .map(|i| {
            let (r, c) = ((i / 5) as f64 - 2.0, (i % 5) as f64 - 2.0);
            HKIA_UNDULATION_M + 0.04 * r - 0.03 * c
        })
        .collect();
    GeoidGrid::new("HKIA-FIXTURE", g, values).expect("fixture geoid")
}

/// 5×5 MSL terrain grid at 0.01° spacing centred on the airport cell.
pub fn hkia_dem() -> TerrainRaster {
    let step = 0.01;
    let g = GridGeometry::new(
        HKIA_LAT - 2.0 * step,
        HKIA_LON - 2.0 * step,
        step,
        step,
        5,
        5,
    )
    .expect("fixture geometry");
    let values = (0..25)
        .map(|i| {
            let (r, c) = ((i / 5) as f64 - 2.0, (i % 5) as f64 - 2.0);
            HKIA_ELEVATION_MSL_M + 1.5 * (r * r + c * c)
        })
        .collect();
    TerrainRaster::new(
        SurfaceKind::Dtm,
        HeightReference::msl("EGM96"),
        g,
        -9999.0,
        values,
    )
    .expect("fixture DEM")
}

/// Calibration at the airport cell, its HAE taken from the fixture DEM and
/// geoid.
pub fn hkia_calibration() -> CalibrationPoint {
    CalibrationPoint::from_surface(
        HKIA_LAT,
        HKIA_LON,
        HKIA_PRESSURE_HPA,
        HKIA_MEAN_TEMP_C,
        &hkia_dem(),
        Some(&hkia_geoid()),
    )
    .expect("fixture calibration")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogSpec {
    pub segments: usize,
    pub records_per_segment: usize,
    /// Standard deviation of the barometric residual noise.
    pub sigma_baro_m: f64,
    /// Per-segment constant bias drawn uniformly from `±max_bias_m`.
    pub max_bias_m: f64,
    pub epv_mean_m: f64,
    pub epv_jitter_m: f64,
    pub seed: u64,
}

impl Default for LogSpec {
    fn default() -> Self {
        Self {
            segments: 10,
            records_per_segment: 1000,
            sigma_baro_m: 4.0,
            max_bias_m: 20.0,
            epv_mean_m: 0.5,
            epv_jitter_m: 0.05,
            seed: 42,
        }
    }
}

/// Simulated logs: each segment climbs and cruises along an RTK track, the
/// barometric altitude carries a segment bias plus Gaussian noise.
pub fn flight_logs(spec: &LogSpec) -> Vec<FlightLogRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma_baro_m).expect("finite sigma");
    let jitter = Normal::new(0.0, spec.epv_jitter_m).expect("finite jitter");
    let mut out = Vec::with_capacity(spec.segments * spec.records_per_segment);
    for s in 0..spec.segments {
        let id = format!("seg-{s:03}");
        let bias = if spec.max_bias_m > 0.0 {
            rng.gen_range(-spec.max_bias_m..=spec.max_bias_m)
        } else {
            0.0
        };
        let ground = 20.0 + 5.0 * s as f64;
        for i in 0..spec.records_per_segment {
            let t = i as f64 * 0.2;
            let rtk = ground + (t * 2.0).min(120.0) + 3.0 * (t / 15.0).sin();
            let epv: f64 = spec.epv_mean_m + jitter.sample(&mut rng);
            out.push(FlightLogRecord {
                t_s: t,
                segment_id: id.clone(),
                baro_alt_m: rtk + bias + noise.sample(&mut rng),
                rtk_hae_m: rtk,
                epv_m: epv.max(0.0),
            });
        }
    }
    out
}
