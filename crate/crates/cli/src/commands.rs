use std::io::Write;

use haekit_core::capacity::{self, CapacityAnalysis};
use haekit_core::heights::{
    self, ContextMember, ConversionContext, HeightError, STANDARD_PRESSURE_HPA,
};
use haekit_core::logstats::{self, ErrorExtraction};
use haekit_core::risk::{self, SeparationAnalysis};
use haekit_core::zoning::{self, DocumentMeta, ZoningConfig};
use haekit_core::{ErrorModel, Height, HeightReference, QCode, SurfaceKind, TerrainRaster};
use serde::Serialize;

use crate::inputs::{self, CliError};
use crate::{
    CapacityArgs, Cli, CodeArg, Command, ConvertArgs, DemInfoArgs, GeoidInfoArgs, LogsArgs,
    OutputFormat, RefKind, RiskArgs, SurfaceArg, ZoneArgs,
};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Convert(a) => convert(cli, a),
        Command::Zone(a) => zone(cli, a),
        Command::Risk(a) => risk_cmd(cli, a),
        Command::Capacity(a) => capacity_cmd(cli, a),
        Command::Logs(a) => logs(cli, a),
        Command::GeoidInfo(a) => geoid_info(cli, a),
        Command::DemInfo(a) => dem_info(cli, a),
    }
}

fn info(cli: &Cli, message: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("{}", message.as_ref());
    }
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn code(c: CodeArg) -> QCode {
    match c {
        CodeArg::Qnh => QCode::Qnh,
        CodeArg::Qfe => QCode::Qfe,
        CodeArg::Qne => QCode::Qne,
    }
}

fn reference_label(r: &HeightReference) -> String {
    serde_json::to_string(r).expect("serializable reference")
}

fn convert(cli: &Cli, a: &ConvertArgs) -> Result<(), CliError> {
    let geoid = a.geoid.as_deref().map(inputs::load_geoid).transpose()?;
    let terrain = inputs::load_dem(&a.terrain)?;
    let calib = a
        .calib
        .as_deref()
        .map(|p| inputs::load_calibration(p, terrain.as_ref(), geoid.as_ref()))
        .transpose()?;
    if let Some(c) = &calib {
        info(cli, format!("calibration point HAE {:.3} m", c.hae_m));
    }

    let mut ctx = ConversionContext::default();
    if let Some(g) = &geoid {
        ctx = ctx.with_geoid(g);
    }
    if let Some(t) = &terrain {
        ctx = ctx.with_terrain(t);
    }
    if let Some(c) = &calib {
        ctx = ctx.with_calibration(c);
    }

    let needs_position = a.from != RefKind::Hae || a.to != RefKind::Hae;
    let (lat, lon) = match (a.lat, a.lon) {
        (Some(lat), Some(lon)) => (lat, lon),
        _ if !needs_position => (0.0, 0.0),
        _ => match &calib {
            Some(c) => (c.lat, c.lon),
            None => {
                return Err(CliError::Domain(
                    "--lat and --lon are required for this conversion".into(),
                ))
            }
        },
    };

    let baro_ref = |c: CodeArg, given: Option<f64>| -> Result<HeightReference, CliError> {
        let ref_pressure_hpa = match (c, given) {
            (_, Some(p)) => p,
            (CodeArg::Qne, None) => STANDARD_PRESSURE_HPA,
            (_, None) => calib.as_ref().map(|p| p.pressure_hpa).ok_or_else(|| {
                CliError::domain(HeightError::UnsupportedPath(
                    "barometric height needs --calib or --ref-pressure".into(),
                ))
            })?,
        };
        Ok(HeightReference::Baro {
            code: code(c),
            ref_pressure_hpa,
        })
    };
    let surface = match a.terrain.surface {
        SurfaceArg::Dtm => SurfaceKind::Dtm,
        SurfaceArg::Dsm => SurfaceKind::Dsm,
    };
    let simple_ref = |k: RefKind| match k {
        RefKind::Hae => HeightReference::Hae,
        RefKind::Msl => HeightReference::msl(a.datum.clone()),
        RefKind::Agl => HeightReference::Agl { surface },
        RefKind::Baro => unreachable!("handled separately"),
    };

    let source = match (a.from, a.value, a.pressure) {
        (_, Some(_), Some(_)) => {
            return Err(CliError::Domain(
                "give either --value or --pressure, not both".into(),
            ))
        }
        (RefKind::Baro, None, Some(p)) => {
            let r = baro_ref(a.code, a.ref_pressure)?;
            let HeightReference::Baro {
                ref_pressure_hpa, ..
            } = r
            else {
                unreachable!()
            };
            let calib = calib.as_ref().ok_or_else(|| {
                CliError::domain(HeightError::UnsupportedPath(
                    "barometric source needs a calibration point (--calib)".into(),
                ))
            })?;
            Height::baro_from_pressure(p, code(a.code), ref_pressure_hpa, calib.mean_temp_c)?
        }
        (_, None, Some(_)) => {
            return Err(CliError::Domain(
                "--pressure applies only to --from baro".into(),
            ))
        }
        (RefKind::Baro, Some(v), None) => Height::new(v, baro_ref(a.code, a.ref_pressure)?)?,
        (k, Some(v), None) => Height::new(v, simple_ref(k))?,
        (_, None, None) => return Err(CliError::Domain("--value is required".into())),
    };
    let target = match a.to {
        RefKind::Baro => baro_ref(a.to_code.unwrap_or(a.code), a.to_ref_pressure)?,
        k => simple_ref(k),
    };

    let result = heights::convert(&source, &target, &ctx, lat, lon).map_err(|e| match e {
        HeightError::MissingContext { which } => CliError::Domain(format!(
            "missing context: {which} (provide {})",
            match which {
                ContextMember::Geoid => "--geoid",
                ContextMember::Terrain(_) => "--dem",
                ContextMember::Calibration => "--calib",
            }
        )),
        other => CliError::domain(other),
    })?;
    match cli.output {
        OutputFormat::Json => print_stdout(&json(&result)),
        OutputFormat::Csv => print_stdout(&csv_text(
            &["value_m", "reference"],
            [vec![
                result.value_m.to_string(),
                reference_label(&result.reference),
            ]],
        )),
    }
}

fn hae_raster(
    terrain: TerrainRaster,
    geoid: Option<&haekit_core::GeoidGrid>,
) -> Result<TerrainRaster, CliError> {
    match terrain.vertical_ref() {
        HeightReference::Hae => Ok(terrain),
        _ => {
            let geoid = geoid.ok_or_else(|| {
                CliError::Domain(
                    "missing context: geoid (an MSL DEM needs --geoid to reach HAE)".into(),
                )
            })?;
            terrain.raster_to_hae(geoid).map_err(CliError::domain)
        }
    }
}

fn zone(cli: &Cli, a: &ZoneArgs) -> Result<(), CliError> {
    let terrain = inputs::load_dem(&a.terrain)?
        .ok_or_else(|| CliError::Domain("--dem is required".into()))?;
    let geoid = a.geoid.as_deref().map(inputs::load_geoid).transpose()?;
    let raster = hae_raster(terrain, geoid.as_ref())?;
    let config = ZoningConfig {
        k: a.k,
        k_max: a.k_max,
        seed: cli.seed,
        area_fraction_threshold: a.area_threshold,
        interval: a.interval,
    };
    let outcome = zoning::run_zoning(&raster, &config).map_err(CliError::domain)?;
    info(
        cli,
        format!(
            "k = {}, {} simple and {} complex regions, {} zones",
            outcome.k,
            outcome.split.simple.len(),
            outcome.split.complex.len(),
            outcome.zones.len()
        ),
    );
    let meta = DocumentMeta::new(
        *raster.geometry(),
        &config,
        outcome.k,
        &outcome.thresholds_m,
    );
    let doc = zoning::publish_zones(&outcome.zones, meta);
    let text = match cli.output {
        OutputFormat::Json => {
            let mut s = doc.to_json();
            s.push('\n');
            s
        }
        OutputFormat::Csv => csv_text(
            &[
                "id",
                "category",
                "pixel_count",
                "baseline_hae_m",
                "classW_ceiling_hae_m",
                "classG_ceiling_hae_m",
                "median_m",
            ],
            doc.zones.iter().map(|z| {
                vec![
                    z.id.clone(),
                    serde_json::to_value(z.category)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    z.stats.pixel_count.to_string(),
                    z.baseline_hae_m.to_string(),
                    z.class_w_ceiling_hae_m.to_string(),
                    z.class_g_ceiling_hae_m.to_string(),
                    z.stats.median_m.to_string(),
                ]
            }),
        ),
    };
    match &a.out {
        Some(path) => {
            inputs::write_file(path, text.as_bytes())?;
            info(cli, format!("wrote {}", path.display()));
            Ok(())
        }
        None => print_stdout(&text),
    }
}

fn risk_cmd(cli: &Cli, a: &RiskArgs) -> Result<(), CliError> {
    let analysis = SeparationAnalysis::new(a.sigma1, a.sigma2, a.tls, a.ceiling, a.vsm_override)
        .map_err(CliError::domain)?;
    if let Some(path) = &a.sweep {
        let e1 = ErrorModel::gaussian(0.0, a.sigma1).map_err(CliError::domain)?;
        let e2 = ErrorModel::gaussian(0.0, a.sigma2).map_err(CliError::domain)?;
        let s_max = a.sweep_max.unwrap_or(2.0 * analysis.effective_vsm_m());
        let samples =
            risk::separation_sweep(&e1, &e2, s_max, a.sweep_points).map_err(CliError::domain)?;
        let text = csv_text(
            &["s_m", "overlap_density", "tail_probability"],
            samples.iter().map(|s| {
                vec![
                    s.s_m.to_string(),
                    s.overlap_density.to_string(),
                    s.tail_probability.to_string(),
                ]
            }),
        );
        inputs::write_file(path, text.as_bytes())?;
        info(cli, format!("wrote {}", path.display()));
    }
    match cli.output {
        OutputFormat::Json => print_stdout(&json(&analysis)),
        OutputFormat::Csv => print_stdout(&csv_text(
            &[
                "sigma1_m",
                "sigma2_m",
                "tls",
                "lambda",
                "vsm_m",
                "vsm_override_m",
                "ceiling_m",
                "flight_levels",
            ],
            [vec![
                analysis.sigma1_m.to_string(),
                analysis.sigma2_m.to_string(),
                analysis.tls.to_string(),
                analysis.lambda.to_string(),
                analysis.vsm_m.to_string(),
                analysis
                    .vsm_override_m
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                analysis.ceiling_m.to_string(),
                analysis.flight_levels.to_string(),
            ]],
        )),
    }
}

#[derive(Serialize)]
struct Comparison {
    levels: u64,
    max_offered_erlangs: f64,
    max_throughput_per_hr: f64,
    /// Throughput of the compared stack over that of the primary one.
    throughput_ratio: f64,
}

#[derive(Serialize)]
struct CapacityReport {
    #[serde(flatten)]
    analysis: CapacityAnalysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

fn capacity_cmd(cli: &Cli, a: &CapacityArgs) -> Result<(), CliError> {
    let analysis =
        CapacityAnalysis::new(a.levels, a.qos, a.holding_hr).map_err(CliError::domain)?;
    let comparison = a
        .compare
        .map(|n| -> Result<Comparison, CliError> {
            let other = CapacityAnalysis::new(n, a.qos, a.holding_hr).map_err(CliError::domain)?;
            Ok(Comparison {
                levels: n,
                max_offered_erlangs: other.max_offered_erlangs,
                max_throughput_per_hr: other.max_throughput_per_hr,
                throughput_ratio: other.max_throughput_per_hr / analysis.max_throughput_per_hr,
            })
        })
        .transpose()?;
    if let Some(c) = &comparison {
        info(
            cli,
            format!(
                "throughput ratio {} vs {} levels: {:.3}",
                c.levels, a.levels, c.throughput_ratio
            ),
        );
    }
    if let Some(path) = &a.sweep {
        let max = a
            .sweep_max
            .unwrap_or(2.0 * analysis.max_throughput_per_hr.max(1.0));
        let samples = capacity::demand_sweep(a.levels, a.holding_hr, max, a.sweep_points)
            .map_err(CliError::domain)?;
        let text = csv_text(
            &["demand_per_hr", "offered_erlangs", "blocking_probability"],
            samples.iter().map(|s| {
                vec![
                    s.demand_per_hr.to_string(),
                    s.offered_erlangs.to_string(),
                    s.blocking_probability.to_string(),
                ]
            }),
        );
        inputs::write_file(path, text.as_bytes())?;
        info(cli, format!("wrote {}", path.display()));
    }
    let report = CapacityReport {
        analysis,
        comparison,
    };
    match cli.output {
        OutputFormat::Json => print_stdout(&json(&report)),
        OutputFormat::Csv => {
            let mut rows = vec![vec![
                report.analysis.levels.to_string(),
                report.analysis.qos.to_string(),
                report.analysis.max_offered_erlangs.to_string(),
                report.analysis.holding_time_hr.to_string(),
                report.analysis.max_throughput_per_hr.to_string(),
            ]];
            if let Some(c) = &report.comparison {
                rows.push(vec![
                    c.levels.to_string(),
                    report.analysis.qos.to_string(),
                    c.max_offered_erlangs.to_string(),
                    report.analysis.holding_time_hr.to_string(),
                    c.max_throughput_per_hr.to_string(),
                ]);
            }
            print_stdout(&csv_text(
                &[
                    "levels",
                    "qos",
                    "max_offered_erlangs",
                    "holding_time_hr",
                    "max_throughput_per_hr",
                ],
                rows,
            ))
        }
    }
}

#[derive(Serialize)]
struct LogsMeta {
    window_n: usize,
    sigma_hae_definition: &'static str,
}

#[derive(Serialize)]
struct LogsReport {
    #[serde(flatten)]
    extraction: ErrorExtraction,
    meta: LogsMeta,
}

fn logs(cli: &Cli, a: &LogsArgs) -> Result<(), CliError> {
    let bytes = inputs::read_file(&a.input)?;
    let records = logstats::parse_log_csv(bytes.as_slice()).map_err(|e| match e {
        logstats::LogError::Io(io) => CliError::Io(format!("{}: {io}", a.input.display())),
        other => CliError::Domain(format!("{}: {other}", a.input.display())),
    })?;
    let debiased = logstats::debias_segments(&records, a.window).map_err(CliError::domain)?;
    let extraction = logstats::extract_error_models(&debiased).map_err(CliError::domain)?;
    info(
        cli,
        format!(
            "{} records in {} segments",
            extraction.n_records, extraction.n_segments
        ),
    );
    let rows = logstats::histogram_rows(&extraction.residual_histogram);
    if let Some(path) = &a.histogram {
        let text = csv_text(
            &["bin_center", "density"],
            rows.iter().map(|(c, d)| vec![c.to_string(), d.to_string()]),
        );
        inputs::write_file(path, text.as_bytes())?;
        info(cli, format!("wrote {}", path.display()));
    }
    match cli.output {
        OutputFormat::Json => print_stdout(&json(&LogsReport {
            extraction,
            meta: LogsMeta {
                window_n: a.window,
                sigma_hae_definition: "sample standard deviation of epv_m",
            },
        })),
        OutputFormat::Csv => print_stdout(&csv_text(
            &[
                "sigma_baro_m",
                "sigma_hae_m",
                "n_segments",
                "n_records",
                "window_n",
            ],
            [vec![
                extraction.sigma_baro_m.to_string(),
                extraction.sigma_hae_m.to_string(),
                extraction.n_segments.to_string(),
                extraction.n_records.to_string(),
                a.window.to_string(),
            ]],
        )),
    }
}

#[derive(Serialize)]
struct GeoidInfo {
    name: String,
    geometry: haekit_core::GridGeometry,
    global: bool,
    min_m: f64,
    max_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    undulation_m: Option<f64>,
}

fn geoid_info(cli: &Cli, a: &GeoidInfoArgs) -> Result<(), CliError> {
    let grid = inputs::load_geoid(&a.geoid)?;
    let undulation_m = match (a.lat, a.lon) {
        (Some(lat), Some(lon)) => Some(grid.undulation(lat, lon).map_err(CliError::domain)?),
        _ => None,
    };
    let (min_m, max_m) = grid
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let report = GeoidInfo {
        name: grid.name().to_string(),
        geometry: *grid.geometry(),
        global: grid.geometry().is_global(),
        min_m,
        max_m,
        undulation_m,
    };
    match cli.output {
        OutputFormat::Json => print_stdout(&json(&report)),
        OutputFormat::Csv => {
            let g = report.geometry;
            print_stdout(&csv_text(
                &[
                    "name",
                    "lat0",
                    "lon0",
                    "dlat",
                    "dlon",
                    "nrows",
                    "ncols",
                    "min_m",
                    "max_m",
                    "undulation_m",
                ],
                [vec![
                    report.name.clone(),
                    g.lat0.to_string(),
                    g.lon0.to_string(),
                    g.dlat.to_string(),
                    g.dlon.to_string(),
                    g.nrows.to_string(),
                    g.ncols.to_string(),
                    min_m.to_string(),
                    max_m.to_string(),
                    undulation_m.map(|v| v.to_string()).unwrap_or_default(),
                ]],
            ))
        }
    }
}

#[derive(Serialize)]
struct DemInfo {
    surface_kind: SurfaceKind,
    vertical_ref: HeightReference,
    geometry: haekit_core::GridGeometry,
    nodata: f64,
    valid_pixels: usize,
    nodata_pixels: usize,
    min_m: Option<f64>,
    max_m: Option<f64>,
}

fn dem_info(cli: &Cli, a: &DemInfoArgs) -> Result<(), CliError> {
    let raster = inputs::load_dem(&a.terrain)?
        .ok_or_else(|| CliError::Domain("--dem is required".into()))?;
    let valid = raster.valid_pixels().count();
    let range = raster.min_max();
    let report = DemInfo {
        surface_kind: raster.surface_kind(),
        vertical_ref: raster.vertical_ref().clone(),
        geometry: *raster.geometry(),
        nodata: raster.nodata(),
        valid_pixels: valid,
        nodata_pixels: raster.values().len() - valid,
        min_m: range.map(|r| r.0),
        max_m: range.map(|r| r.1),
    };
    match cli.output {
        OutputFormat::Json => print_stdout(&json(&report)),
        OutputFormat::Csv => {
            let g = report.geometry;
            print_stdout(&csv_text(
                &[
                    "surface_kind",
                    "vertical_ref",
                    "lat0",
                    "lon0",
                    "dlat",
                    "dlon",
                    "nrows",
                    "ncols",
                    "valid_pixels",
                    "nodata_pixels",
                    "min_m",
                    "max_m",
                ],
                [vec![
                    report.surface_kind.to_string(),
                    reference_label(&report.vertical_ref),
                    g.lat0.to_string(),
                    g.lon0.to_string(),
                    g.dlat.to_string(),
                    g.dlon.to_string(),
                    g.nrows.to_string(),
                    g.ncols.to_string(),
                    report.valid_pixels.to_string(),
                    report.nodata_pixels.to_string(),
                    report.min_m.map(|v| v.to_string()).unwrap_or_default(),
                    report.max_m.map(|v| v.to_string()).unwrap_or_default(),
                ]],
            ))
        }
    }
}
