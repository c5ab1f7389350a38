use std::fmt;
use std::fs;
use std::path::Path;

use haekit_core::geoid::{load_geoid_grid, GeoidError};
use haekit_core::heights::HeightError;
use haekit_core::terrain::{load_terrain_bytes, TerrainError};
use haekit_core::{
    CalibrationPoint, GeoidFormat, GeoidGrid, HeightReference, SurfaceKind, TerrainRaster,
};
use serde::Deserialize;

use crate::{DemArgs, SurfaceArg, VerticalRefArg};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or a domain error; exit status 2.
    Domain(String),
    /// A file could not be read or written; exit status 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn domain(e: impl fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) => f.write_str(m),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<HeightError> for CliError {
    fn from(e: HeightError) -> Self {
        CliError::domain(e)
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_geoid(path: &Path) -> Result<GeoidGrid, CliError> {
    let bytes = read_file(path)?;
    let format = GeoidFormat::detect(&bytes)
        .ok_or_else(|| CliError::Domain(format!("{}: not a UGG geoid grid", path.display())))?;
    load_geoid_grid(bytes.as_slice(), format).map_err(|e| match e {
        GeoidError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    })
}

pub fn load_dem(args: &DemArgs) -> Result<Option<TerrainRaster>, CliError> {
    let Some(path) = &args.dem else {
        return Ok(None);
    };
    let bytes = read_file(path)?;
    let surface = match args.surface {
        SurfaceArg::Dtm => SurfaceKind::Dtm,
        SurfaceArg::Dsm => SurfaceKind::Dsm,
    };
    let vref = match args.dem_ref {
        VerticalRefArg::Hae => HeightReference::Hae,
        VerticalRefArg::Msl => HeightReference::msl(args.dem_datum.clone()),
    };
    load_terrain_bytes(&bytes, surface, vref)
        .map(Some)
        .map_err(|e| match e {
            TerrainError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
            other => CliError::Domain(format!("{}: {other}", path.display())),
        })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    lat: f64,
    lon: f64,
    #[serde(default)]
    hae_m: Option<f64>,
    #[serde(rename = "pressure_hPa")]
    pressure_hpa: f64,
    #[serde(rename = "mean_temp_C")]
    mean_temp_c: f64,
}

/// Reads a calibration file. A missing `hae_m` is taken from the terrain
/// surface at the calibration position.
pub fn load_calibration(
    path: &Path,
    terrain: Option<&TerrainRaster>,
    geoid: Option<&GeoidGrid>,
) -> Result<CalibrationPoint, CliError> {
    let bytes = read_file(path)?;
    let file: CalibrationFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let point = match file.hae_m {
        Some(hae) => {
            CalibrationPoint::new(file.lat, file.lon, hae, file.pressure_hpa, file.mean_temp_c)?
        }
        None => {
            let terrain = terrain.ok_or_else(|| {
                CliError::Domain(format!(
                    "{}: hae_m is absent and no --dem was given to derive it",
                    path.display()
                ))
            })?;
            CalibrationPoint::from_surface(
                file.lat,
                file.lon,
                file.pressure_hpa,
                file.mean_temp_c,
                terrain,
                geoid,
            )?
        }
    };
    Ok(point)
}
