mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "haekit",
    version,
    about = "HAE-based height conversion, airspace zoning, separation and capacity analysis"
)]
pub struct Cli {
    /// Format of the document written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,

    /// Seed for randomised steps (k-means initialisation).
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Suppress informational messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefKind {
    Hae,
    Msl,
    Agl,
    Baro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceArg {
    Dtm,
    Dsm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodeArg {
    Qnh,
    Qfe,
    Qne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerticalRefArg {
    Msl,
    Hae,
}

/// Where a terrain raster comes from and how to read ESRI ASCII headers,
/// which carry neither surface kind nor vertical reference.
#[derive(Args, Debug, Clone)]
pub struct DemArgs {
    /// Terrain raster: ESRI ASCII grid or UGGD binary.
    #[arg(long)]
    pub dem: Option<PathBuf>,
    /// Vertical reference of an ESRI ASCII DEM.
    #[arg(long, value_enum, default_value_t = VerticalRefArg::Msl)]
    pub dem_ref: VerticalRefArg,
    /// Geoid model name recorded for an MSL ESRI ASCII DEM.
    #[arg(long, default_value = "EGM96")]
    pub dem_datum: String,
    /// Surface kind of an ESRI ASCII DEM.
    #[arg(long, value_enum, default_value_t = SurfaceArg::Dtm)]
    pub surface: SurfaceArg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a height between reference systems, always through HAE.
    Convert(ConvertArgs),
    /// Cluster a terrain raster into zones and publish the zone document.
    Zone(ZoneArgs),
    /// Vertical separation minimum and flight levels from error sigmas.
    Risk(RiskArgs),
    /// Erlang-B capacity of a stack of flight levels.
    Capacity(CapacityArgs),
    /// Extract barometric and HAE error models from a flight-log CSV.
    Logs(LogsArgs),
    /// Summarise a geoid grid, optionally sampling one position.
    GeoidInfo(GeoidInfoArgs),
    /// Summarise a terrain raster.
    DemInfo(DemInfoArgs),
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub from: RefKind,
    #[arg(long, value_enum)]
    pub to: RefKind,
    /// Height value in the source reference, meters.
    #[arg(long, allow_negative_numbers = true)]
    pub value: Option<f64>,
    /// Static pressure for a barometric source, hPa (instead of --value).
    #[arg(long)]
    pub pressure: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lon: Option<f64>,
    /// Geoid grid (UGG text or binary).
    #[arg(long)]
    pub geoid: Option<PathBuf>,
    #[command(flatten)]
    pub terrain: DemArgs,
    /// Calibration point JSON: {lat, lon, hae_m, pressure_hPa, mean_temp_C};
    /// `hae_m` may be omitted when --dem (and --geoid for MSL terrain) is given.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Geoid model name for an MSL source or target.
    #[arg(long, default_value = "EGM96")]
    pub datum: String,
    /// Altimeter setting of a barometric source.
    #[arg(long, value_enum, default_value_t = CodeArg::Qfe)]
    pub code: CodeArg,
    /// Reference pressure of a barometric source, hPa. Defaults to 1013.25
    /// for QNE and to the calibration pressure otherwise.
    #[arg(long)]
    pub ref_pressure: Option<f64>,
    /// Altimeter setting of a barometric target.
    #[arg(long, value_enum)]
    pub to_code: Option<CodeArg>,
    /// Reference pressure of a barometric target, hPa.
    #[arg(long)]
    pub to_ref_pressure: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ZoneArgs {
    #[command(flatten)]
    pub terrain: DemArgs,
    /// Geoid grid used to lift an MSL DEM to HAE.
    #[arg(long)]
    pub geoid: Option<PathBuf>,
    /// Fixed cluster count instead of the elbow rule.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    /// Complex-region band interval, meters.
    #[arg(long, default_value_t = 100.0)]
    pub interval: f64,
    /// Cumulative area share that counts as simple terrain.
    #[arg(long, default_value_t = 0.85)]
    pub area_threshold: f64,
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RiskArgs {
    #[arg(long)]
    pub sigma1: f64,
    #[arg(long)]
    pub sigma2: f64,
    /// Target level of safety.
    #[arg(long, default_value_t = 1e-7)]
    pub tls: f64,
    /// Airspace ceiling, meters.
    #[arg(long, default_value_t = 1000.0)]
    pub ceiling: f64,
    /// Count flight levels with this VSM instead of the computed one.
    #[arg(long)]
    pub vsm_override: Option<f64>,
    /// Write (S, overlap density, tail probability) samples to this CSV.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Largest separation in the sweep, meters; defaults to twice the VSM.
    #[arg(long)]
    pub sweep_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub sweep_points: usize,
}

#[derive(Args, Debug)]
pub struct CapacityArgs {
    /// Number of flight levels (servers).
    #[arg(long)]
    pub levels: u64,
    /// Maximum acceptable blocking probability.
    #[arg(long, default_value_t = 0.05)]
    pub qos: f64,
    /// Mean time one flight occupies a level, hours.
    #[arg(long, default_value_t = haekit_core::capacity::DEFAULT_HOLDING_TIME_HR)]
    pub holding_hr: f64,
    /// Second level count; the throughput ratio against it is reported.
    #[arg(long)]
    pub compare: Option<u64>,
    /// Write (demand, blocking probability) samples to this CSV.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Largest demand in the sweep, flights/hour; defaults to twice capacity.
    #[arg(long)]
    pub sweep_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub sweep_points: usize,
}

#[derive(Args, Debug)]
pub struct LogsArgs {
    /// Flight-log CSV with columns t_s,segment_id,baro_alt_m,rtk_hae_m,epv_m.
    #[arg(long)]
    pub input: PathBuf,
    /// Records per segment averaged for the initial bias.
    #[arg(long, default_value_t = haekit_core::logstats::DEFAULT_WINDOW)]
    pub window: usize,
    /// Write the residual histogram (bin_center, density) to this CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GeoidInfoArgs {
    #[arg(long)]
    pub geoid: PathBuf,
    #[arg(long, allow_negative_numbers = true, requires = "lon")]
    pub lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "lat")]
    pub lon: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DemInfoArgs {
    #[command(flatten)]
    pub terrain: DemArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("haekit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
