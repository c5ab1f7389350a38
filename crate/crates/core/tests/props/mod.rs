//! Randomised invariant checks, 1000 cases each.
//!
//! Each check is a plain function so the same definitions run as individual
//! tests here and as one timed batch in the CLI crate's acceptance target.

#![allow(dead_code)]

use haekit_core::capacity::{erlang_b, max_offered_load};
use haekit_core::geoid::GeoidGrid;
use haekit_core::grid::GridGeometry;
use haekit_core::heights::{
    self, hae_to_msl, hypsometric_thickness, msl_to_hae, qnh_offset_to_hae, CalibrationPoint,
    ConversionContext, Height, HeightReference, QCode, SurfaceKind,
};
use haekit_core::logstats::{self, FlightLogRecord};
use haekit_core::risk::{self, normal_cdf, normal_quantile, overlap_density, ErrorModel};
use haekit_core::terrain::TerrainRaster;
use haekit_core::zoning::{
    self, decode_rle, encode_rle, kmeans_1d, ring_area, trace_mask, ZoneCategory, ZoningConfig,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 1000;

fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn check<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

pub type Property = fn() -> Result<(), String>;

/// Every property with a short name.
pub fn all() -> Vec<(&'static str, Property)> {
    vec![
        ("geoid: exact at cell centers", geoid_exact_at_centers),
        (
            "geoid: value within surrounding cells",
            geoid_within_neighbours,
        ),
        ("geoid: global longitude wrap", geoid_global_wrap),
        (
            "terrain: HAE round trip and geometry",
            terrain_hae_round_trip,
        ),
        ("heights: hub round trip", heights_hub_round_trip),
        ("heights: MSL/HAE inverse", heights_msl_hae_inverse),
        (
            "heights: thickness antisymmetry",
            heights_thickness_antisymmetric,
        ),
        ("heights: QNH offset translation", heights_qnh_translation),
        ("zoning: k-means structure", zoning_kmeans_structure),
        (
            "zoning: pipeline partition and ceilings",
            zoning_pipeline_invariants,
        ),
        ("zoning: mask encoding and tracing", zoning_mask_encoding),
        ("risk: swap symmetry", risk_swap_symmetry),
        ("risk: Gaussian overlap unimodal", risk_gaussian_unimodal),
        ("risk: VSM scales linearly", risk_vsm_linear),
        ("risk: quantile round trip", risk_quantile_round_trip),
        (
            "capacity: recursion equals direct sum",
            capacity_recursion_direct,
        ),
        ("capacity: monotone and bounded", capacity_monotone_bounded),
        ("capacity: offered-load bracket", capacity_bracket),
        (
            "logstats: sigma translation invariance",
            logstats_translation,
        ),
        (
            "logstats: debias preserves truth, idempotent",
            logstats_debias,
        ),
        ("logstats: histogram normalised", logstats_histogram_mass),
    ]
}

fn geometry() -> impl Strategy<Value = GridGeometry> {
    (
        -60.0..60.0f64,
        -180.0..180.0f64,
        0.05..2.0f64,
        prop::bool::ANY,
        0.05..2.0f64,
        2usize..8,
        2usize..8,
    )
        .prop_map(|(lat0, lon0, dlat, north_up, dlon, nrows, ncols)| {
            let dlat = if north_up { -dlat } else { dlat };
            GridGeometry::new(lat0, lon0, dlat, dlon, nrows, ncols).unwrap()
        })
}

fn geoid_grid() -> impl Strategy<Value = GeoidGrid> {
    geometry().prop_flat_map(|g| {
        prop::collection::vec(-100.0..100.0f64, g.len())
            .prop_map(move |v| GeoidGrid::new("TEST", g, v).unwrap())
    })
}

pub fn geoid_exact_at_centers() -> Result<(), String> {
    check(
        geoid_grid().prop_flat_map(|grid| {
            let g = *grid.geometry();
            (Just(grid), 0..g.nrows, 0..g.ncols)
        }),
        |(grid, r, c)| {
            let (lat, lon) = grid.geometry().cell_center(r, c);
            prop_assert_eq!(grid.undulation(lat, lon).unwrap(), grid.value_at(r, c));
            Ok(())
        },
    )
}

pub fn geoid_within_neighbours() -> Result<(), String> {
    check(
        (geoid_grid(), 0.0..1.0f64, 0.0..1.0f64),
        |(grid, fr, fc)| {
            let g = *grid.geometry();
            let r = fr * (g.nrows - 1) as f64;
            let c = fc * (g.ncols - 1) as f64;
            let lat = g.lat0 + r * g.dlat;
            let lon = g.lon0 + c * g.dlon;
            let v = grid.undulation(lat, lon).unwrap();
            let r0 = (r.floor() as usize).min(g.nrows - 2);
            let c0 = (c.floor() as usize).min(g.ncols - 2);
            let corners = [
                grid.value_at(r0, c0),
                grid.value_at(r0, c0 + 1),
                grid.value_at(r0 + 1, c0),
                grid.value_at(r0 + 1, c0 + 1),
            ];
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(
                v >= lo - 1e-12 && v <= hi + 1e-12,
                "{v} outside [{lo}, {hi}]"
            );
            Ok(())
        },
    )
}

pub fn geoid_global_wrap() -> Result<(), String> {
    let grid = (3usize..10, 4usize..37, -180.0..0.0f64).prop_flat_map(|(nrows, ncols, lon0)| {
        let dlat = -170.0 / (nrows - 1) as f64;
        let g = GridGeometry::new(85.0, lon0, dlat, 360.0 / ncols as f64, nrows, ncols).unwrap();
        prop::collection::vec(-100.0..100.0f64, g.len())
            .prop_map(move |v| GeoidGrid::new("GLOBAL", g, v).unwrap())
    });
    check(
        (grid, -85.0..85.0f64, -180.0..180.0f64),
        |(grid, lat, lon)| {
            let a = grid.undulation(lat, lon).unwrap();
            let b = grid.undulation(lat, lon + 360.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            Ok(())
        },
    )
}

pub fn terrain_hae_round_trip() -> Result<(), String> {
    let case = geometry().prop_flat_map(|g| {
        (
            prop::collection::vec(prop::option::weighted(0.9, -400.0..8800.0f64), g.len()),
            prop::collection::vec(-100.0..100.0f64, g.len()),
        )
            .prop_map(move |(h, n)| {
                let values = h.into_iter().map(|v| v.unwrap_or(-9999.0)).collect();
                let raster = TerrainRaster::new(
                    SurfaceKind::Dtm,
                    HeightReference::msl("EGM96"),
                    g,
                    -9999.0,
                    values,
                )
                .unwrap();
                (raster, GeoidGrid::new("TEST", g, n).unwrap())
            })
    });
    check(case, |(raster, geoid)| {
        let hae = raster.raster_to_hae(&geoid).unwrap();
        prop_assert_eq!(hae.geometry(), raster.geometry());
        prop_assert_eq!(hae.vertical_ref(), &HeightReference::Hae);
        let back = hae.raster_to_msl(&geoid, "EGM96").unwrap();
        prop_assert_eq!(back.geometry(), raster.geometry());
        for (a, b) in raster.values().iter().zip(back.values()) {
            if raster.is_nodata(*a) {
                prop_assert_eq!(*b, -9999.0);
            } else {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
        Ok(())
    })
}

/// Geoid, MSL terrain and calibration over the unit square at the origin.
fn conversion_setup() -> impl Strategy<Value = (GeoidGrid, TerrainRaster, CalibrationPoint)> {
    let g = GridGeometry::new(0.0, 0.0, 0.5, 0.5, 3, 3).unwrap();
    (
        prop::collection::vec(-50.0..50.0f64, 9),
        prop::collection::vec(0.0..500.0f64, 9),
        950.0..1050.0f64,
        -20.0..40.0f64,
    )
        .prop_map(move |(n, h, p, t)| {
            let geoid = GeoidGrid::new("TEST", g, n).unwrap();
            let dem = TerrainRaster::new(
                SurfaceKind::Dtm,
                HeightReference::msl("TEST"),
                g,
                -9999.0,
                h,
            )
            .unwrap();
            let calib = CalibrationPoint::from_surface(0.5, 0.5, p, t, &dem, Some(&geoid)).unwrap();
            (geoid, dem, calib)
        })
}

fn reference() -> impl Strategy<Value = HeightReference> {
    prop_oneof![
        Just(HeightReference::Hae),
        Just(HeightReference::msl("TEST")),
        Just(HeightReference::Agl {
            surface: SurfaceKind::Dtm
        }),
        (980.0..1040.0f64).prop_map(|p| HeightReference::Baro {
            code: QCode::Qnh,
            ref_pressure_hpa: p
        }),
        (950.0..1050.0f64).prop_map(|p| HeightReference::Baro {
            code: QCode::Qfe,
            ref_pressure_hpa: p
        }),
        Just(HeightReference::qne()),
    ]
}

pub fn heights_hub_round_trip() -> Result<(), String> {
    check(
        (
            conversion_setup(),
            reference(),
            reference(),
            -100.0..3000.0f64,
            0.0..1.0f64,
            0.0..1.0f64,
        ),
        |((geoid, dem, calib), a, b, x, lat, lon)| {
            let ctx = ConversionContext::default()
                .with_geoid(&geoid)
                .with_terrain(&dem)
                .with_calibration(&calib);
            let h = Height::new(x, a.clone()).unwrap();
            let there = heights::convert(&h, &b, &ctx, lat, lon).unwrap();
            let back = heights::convert(&there, &a, &ctx, lat, lon).unwrap();
            prop_assert_eq!(&back.reference, &a);
            prop_assert!(
                (back.value_m - x).abs() <= 1e-9,
                "{} -> {}",
                x,
                back.value_m
            );
            Ok(())
        },
    )
}

pub fn heights_msl_hae_inverse() -> Result<(), String> {
    check((-500.0..9000.0f64, -110.0..110.0f64), |(h, n)| {
        let back = hae_to_msl(msl_to_hae(h, n), n);
        let ulp = f64::EPSILON * h.abs().max(n.abs()).max(f64::MIN_POSITIVE);
        prop_assert!((back - h).abs() <= 3.0 * ulp, "{h} -> {back}");
        Ok(())
    })
}

pub fn heights_thickness_antisymmetric() -> Result<(), String> {
    check(
        (300.5..1099.5f64, 300.5..1099.5f64, -80.0..50.0f64),
        |(p_ref, p, t)| {
            let a = hypsometric_thickness(p_ref, p, t).unwrap();
            let b = hypsometric_thickness(p, p_ref, t).unwrap();
            prop_assert_eq!(a, -b);
            Ok(())
        },
    )
}

pub fn heights_qnh_translation() -> Result<(), String> {
    check(
        (
            -500.0..5000.0f64,
            -500.0..5000.0f64,
            -100.0..5000.0f64,
            -1000.0..1000.0f64,
        ),
        |(air, cal, hae, d)| {
            let a = qnh_offset_to_hae(air, cal, hae);
            let b = qnh_offset_to_hae(air + d, cal + d, hae);
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            Ok(())
        },
    )
}

pub fn zoning_kmeans_structure() -> Result<(), String> {
    let case = prop::collection::vec(prop::sample::select(vec![0.0, 1.0, 2.5, 10.0, 40.0]), 1..6)
        .prop_flat_map(|centers| {
            let values = prop::collection::vec(
                (prop::sample::select(centers), -1.0..1.0f64).prop_map(|(c, e)| c * 10.0 + e),
                1..60,
            );
            (values, 1usize..5, any::<u64>())
        });
    check(case, |(values, k, seed)| {
        let distinct = zoning::distinct_count(&haekit_core::stats::sorted_copy(&values));
        let k = k.min(distinct);
        let m = kmeans_1d(&values, k, seed).unwrap();
        prop_assert_eq!(&m, &kmeans_1d(&values, k, seed).unwrap());
        prop_assert!(m.centroids.windows(2).all(|w| w[0] < w[1]));
        for (&v, &l) in values.iter().zip(&m.labels) {
            prop_assert_eq!(zoning::nearest_centroid(v, &m.centroids), l);
        }
        let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(m.labels.clone()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
        Ok(())
    })
}

fn small_raster() -> impl Strategy<Value = TerrainRaster> {
    (2usize..9, 2usize..9).prop_flat_map(|(nrows, ncols)| {
        let g = GridGeometry::new(22.5, 114.0, -0.001, 0.001, nrows, ncols).unwrap();
        let modes = prop::sample::select(vec![20.0, 85.0, 150.0, 290.0, 310.0, 800.0]);
        prop::collection::vec(
            prop::option::weighted(0.9, (modes, 0.0..25.0f64).prop_map(|(m, e)| m + e)),
            g.len(),
        )
        .prop_filter("at least one valid pixel", |v| {
            v.iter().any(Option::is_some)
        })
        .prop_map(move |v| {
            let values = v.into_iter().map(|x| x.unwrap_or(-9999.0)).collect();
            TerrainRaster::new(SurfaceKind::Dsm, HeightReference::Hae, g, -9999.0, values).unwrap()
        })
    })
}

pub fn zoning_pipeline_invariants() -> Result<(), String> {
    check(
        (
            small_raster(),
            any::<u64>(),
            prop::sample::select(vec![50.0, 100.0]),
        ),
        |(raster, seed, interval)| {
            let config = ZoningConfig {
                k_max: 4,
                seed,
                interval,
                ..ZoningConfig::default()
            };
            let outcome = zoning::run_zoning(&raster, &config).unwrap();
            let again = zoning::run_zoning(&raster, &config).unwrap();
            prop_assert_eq!(&outcome.zones, &again.zones);
            let values = raster.values();
            let mut cover = vec![0u32; values.len()];
            for z in &outcome.zones {
                prop_assert_eq!(z.class_w_ceiling_hae_m - z.baseline_hae_m, 120.0);
                for (i, &m) in z.mask.iter().enumerate() {
                    if m {
                        cover[i] += 1;
                    }
                }
            }
            for (i, &v) in values.iter().enumerate() {
                let expected = u32::from(!raster.is_nodata(v));
                prop_assert_eq!(cover[i], expected, "pixel {}", i);
            }
            let bands: Vec<_> = outcome
                .zones
                .iter()
                .filter(|z| z.category == ZoneCategory::ComplexBand)
                .collect();
            for (bi, z) in bands.iter().enumerate() {
                let band = z.band.unwrap();
                prop_assert_eq!(z.baseline_hae_m, band.upper);
                let top = bi + 1 == bands.len();
                for (i, &m) in z.mask.iter().enumerate() {
                    if m {
                        let v = values[i];
                        prop_assert!(band.lower <= v);
                        prop_assert!(v < band.upper || (top && v == band.upper));
                    }
                }
            }
            Ok(())
        },
    )
}

pub fn zoning_mask_encoding() -> Result<(), String> {
    let case = (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
        (
            Just(r),
            Just(c),
            prop::collection::vec(any::<bool>(), r * c),
        )
    });
    check(case, |(nrows, ncols, mask)| {
        prop_assert_eq!(&decode_rle(&encode_rle(&mask), mask.len()).unwrap(), &mask);
        let rings = trace_mask(&mask, nrows, ncols);
        let area: f64 = rings.iter().map(ring_area).sum();
        prop_assert_eq!(area, mask.iter().filter(|m| **m).count() as f64);
        for ring in &rings {
            prop_assert!(ring.len() >= 5);
            prop_assert_eq!(ring.first(), ring.last());
        }
        Ok(())
    })
}

fn empirical_model() -> impl Strategy<Value = ErrorModel> {
    (
        -3.0..3.0f64,
        0.2..1.0f64,
        prop::collection::vec(0.01..1.0f64, 2..12),
    )
        .prop_map(|(start, width, weights)| {
            let total: f64 = weights.iter().sum::<f64>() * width;
            let edges = (0..=weights.len())
                .map(|i| start + i as f64 * width)
                .collect();
            let densities = weights.iter().map(|w| w / total).collect();
            ErrorModel::empirical(edges, densities).unwrap()
        })
}

fn gaussian_model() -> impl Strategy<Value = ErrorModel> {
    (-2.0..2.0f64, 0.3..3.0f64).prop_map(|(m, s)| ErrorModel::gaussian(m, s).unwrap())
}

pub fn risk_swap_symmetry() -> Result<(), String> {
    let gaussians = (gaussian_model(), gaussian_model(), -10.0..10.0f64);
    check(gaussians, |(a, b, s)| {
        let x = overlap_density(&a, &b, s).unwrap();
        let y = overlap_density(&b, &a, -s).unwrap();
        prop_assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300), "{x} vs {y}");
        Ok(())
    })?;
    let mixed = (
        empirical_model(),
        prop_oneof![empirical_model(), gaussian_model()],
        -6.0..6.0f64,
    );
    check(mixed, |(a, b, s)| {
        let x = overlap_density(&a, &b, s).unwrap();
        let y = overlap_density(&b, &a, -s).unwrap();
        prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        Ok(())
    })
}

pub fn risk_gaussian_unimodal() -> Result<(), String> {
    check(
        (0.1..10.0f64, 0.0..30.0f64, 0.001..5.0f64),
        |(sigma, s, ds)| {
            let e = ErrorModel::gaussian(0.0, sigma).unwrap();
            let at0 = overlap_density(&e, &e, 0.0).unwrap();
            let a = overlap_density(&e, &e, s).unwrap();
            let b = overlap_density(&e, &e, s + ds).unwrap();
            let neg = overlap_density(&e, &e, -s).unwrap();
            prop_assert!(at0 >= a);
            prop_assert_eq!(a, neg);
            prop_assert!(b < a || (a == 0.0 && b == 0.0), "{a} then {b}");
            Ok(())
        },
    )
}

pub fn risk_vsm_linear() -> Result<(), String> {
    check(
        (0.01..20.0f64, 0.01..20.0f64, 1e-12..0.49f64, 0.01..100.0f64),
        |(s1, s2, tls, c)| {
            let base = risk::required_vsm(s1, s2, tls).unwrap();
            let scaled = risk::required_vsm(c * s1, c * s2, tls).unwrap();
            prop_assert!(
                (scaled - c * base).abs() <= 1e-12 * scaled,
                "{scaled} vs {}",
                c * base
            );
            Ok(())
        },
    )
}

pub fn risk_quantile_round_trip() -> Result<(), String> {
    check(-6.0..6.0f64, |z| {
        let back = normal_quantile(normal_cdf(z)).unwrap();
        prop_assert!((back - z).abs() <= 1e-8, "{z} -> {back}");
        Ok(())
    })
}

/// Erlang-B summed term by term.
pub fn erlang_b_direct(a: f64, n: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n {
        term *= a / k as f64;
        sum += term;
    }
    term / sum
}

pub fn capacity_recursion_direct() -> Result<(), String> {
    check((0.0..=50.0f64, 0u64..=20), |(a, n)| {
        let r = erlang_b(a, n).unwrap();
        let d = erlang_b_direct(a, n);
        prop_assert!(
            (r - d).abs() <= 1e-12 * d.max(f64::MIN_POSITIVE),
            "{r} vs {d}"
        );
        Ok(())
    })
}

pub fn capacity_monotone_bounded() -> Result<(), String> {
    check((0.01..500.0f64, 0.01..10.0f64, 1u64..400), |(a, da, n)| {
        let e = erlang_b(a, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let more_load = erlang_b(a + da, n).unwrap();
        let more_levels = erlang_b(a, n + 1).unwrap();
        // Strict wherever the values are representable; underflow and
        // saturation flatten the curve.
        prop_assert!(more_load >= e && more_levels <= e);
        if e > 1e-290 && e < 1.0 - 1e-12 {
            prop_assert!(
                more_load > e && more_levels < e,
                "{} {} {}",
                e,
                more_load,
                more_levels
            );
        }
        Ok(())
    })
}

pub fn capacity_bracket() -> Result<(), String> {
    check((1u64..600, 0.001..0.5f64), |(n, qos)| {
        let a = max_offered_load(n, qos).unwrap();
        prop_assert!(erlang_b(a, n).unwrap() <= qos);
        prop_assert!(erlang_b(a + 1e-6, n).unwrap() > qos);
        prop_assert!(erlang_b(a * (1.0 + 1e-6), n).unwrap() > qos);
        prop_assert!(max_offered_load(n + 1, qos).unwrap() > a);
        Ok(())
    })
}

fn log_records() -> impl Strategy<Value = Vec<FlightLogRecord>> {
    prop::collection::vec(
        (
            prop::collection::vec((0.0..500.0f64, -30.0..30.0f64, 0.0..2.0f64), 15..25),
            -50.0..50.0f64,
        ),
        2..4,
    )
    .prop_map(|segments| {
        let mut out = Vec::new();
        for (s, (rows, bias)) in segments.into_iter().enumerate() {
            for (i, (rtk, noise, epv)) in rows.into_iter().enumerate() {
                out.push(FlightLogRecord {
                    t_s: i as f64,
                    segment_id: format!("s{s}"),
                    baro_alt_m: rtk + bias + noise,
                    rtk_hae_m: rtk,
                    epv_m: epv,
                });
            }
        }
        out
    })
}

pub fn logstats_translation() -> Result<(), String> {
    check((log_records(), -1000.0..1000.0f64), |(records, c)| {
        let a = logstats::extract_error_models(&records).unwrap();
        let shifted: Vec<_> = records
            .iter()
            .map(|r| FlightLogRecord {
                baro_alt_m: r.baro_alt_m + c,
                rtk_hae_m: r.rtk_hae_m + c,
                ..r.clone()
            })
            .collect();
        let b = logstats::extract_error_models(&shifted).unwrap();
        prop_assert!((a.sigma_baro_m - b.sigma_baro_m).abs() <= 1e-9);
        prop_assert_eq!(a.sigma_hae_m, b.sigma_hae_m);
        Ok(())
    })
}

pub fn logstats_debias() -> Result<(), String> {
    check((log_records(), 1usize..=10), |(records, window)| {
        let once = logstats::debias_segments(&records, window).unwrap();
        for (a, b) in records.iter().zip(&once) {
            prop_assert_eq!(a.rtk_hae_m, b.rtk_hae_m);
            prop_assert_eq!(a.epv_m, b.epv_m);
            prop_assert_eq!(&a.segment_id, &b.segment_id);
            prop_assert_eq!(a.t_s, b.t_s);
        }
        let twice = logstats::debias_segments(&once, window).unwrap();
        prop_assert_eq!(&once, &twice);
        Ok(())
    })
}

pub fn logstats_histogram_mass() -> Result<(), String> {
    check(log_records(), |records| {
        let e = logstats::extract_error_models(&logstats::debias_segments(&records, 10).unwrap())
            .unwrap();
        let ErrorModel::Empirical {
            bin_edges_m,
            densities,
        } = &e.residual_histogram
        else {
            return Err(TestCaseError::fail("histogram must be empirical"));
        };
        let mass: f64 = bin_edges_m
            .windows(2)
            .zip(densities)
            .map(|(w, d)| d * (w[1] - w[0]))
            .sum();
        prop_assert!((mass - 1.0).abs() <= 1e-6, "mass {mass}");
        Ok(())
    })
}
