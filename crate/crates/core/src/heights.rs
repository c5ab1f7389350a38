//! Height systems and the conversion engine.
//!
//! Every reference converts to and from HAE, and [`convert`] always goes
//! source → HAE → target, even where a direct shortcut exists.
//!
//! Barometric heights are altimeter readings in meters relative to their
//! reference pressure, computed with the hypsometric relation at the
//! calibration point's layer-mean temperature. A calibration point ties such a
//! reading to HAE: the reading the altimeter would show at the calibration
//! point is subtracted and the point's HAE added.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoid::{GeoidError, GeoidGrid};
use crate::terrain::{TerrainError, TerrainRaster};

/// Specific gas constant of dry air, J/(kg·K).
pub const R_DRY_AIR: f64 = 287.05287;
/// Standard gravity, m/s².
pub const G0: f64 = 9.80665;
pub const CELSIUS_TO_KELVIN: f64 = 273.15;
/// Standard pressure used by the QNE setting, hPa.
pub const STANDARD_PRESSURE_HPA: f64 = 1013.25;
/// Rule-of-thumb altitude change per hPa near sea level.
pub const METERS_PER_HPA: f64 = 8.3;

const MAX_ABS_HEIGHT_M: f64 = 100_000.0;

#[derive(Debug, Error)]
pub enum HeightError {
    #[error("pressure must be positive, got {0} hPa")]
    NonPositivePressure(f64),
    #[error("layer-mean temperature {0} °C is below absolute zero")]
    InvalidTemperature(f64),
    #[error("missing context: {which}")]
    MissingContext { which: ContextMember },
    #[error("unsupported conversion: {0}")]
    UnsupportedPath(String),
    #[error("out of extent: {0}")]
    OutOfExtent(String),
    #[error("invalid height reference: {0}")]
    InvalidReference(String),
    #[error("invalid height: {0}")]
    InvalidHeight(String),
    #[error("invalid calibration point: {0}")]
    InvalidCalibration(String),
    #[error(transparent)]
    Terrain(TerrainError),
    #[error(transparent)]
    Geoid(GeoidError),
}

impl From<GeoidError> for HeightError {
    fn from(e: GeoidError) -> Self {
        match e {
            GeoidError::OutOfExtent { lat, lon } => {
                HeightError::OutOfExtent(format!("({lat}, {lon}) outside geoid grid"))
            }
            other => HeightError::Geoid(other),
        }
    }
}

impl From<TerrainError> for HeightError {
    fn from(e: TerrainError) -> Self {
        match e {
            TerrainError::OutOfExtent { lat, lon } => {
                HeightError::OutOfExtent(format!("({lat}, {lon}) outside terrain raster"))
            }
            other => HeightError::Terrain(other),
        }
    }
}

/// Which member of a [`ConversionContext`] a conversion needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMember {
    Geoid,
    Terrain(SurfaceKind),
    Calibration,
}

impl std::fmt::Display for ContextMember {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ContextMember::Geoid => write!(f, "geoid grid"),
            ContextMember::Terrain(kind) => write!(f, "terrain raster ({kind})"),
            ContextMember::Calibration => write!(f, "calibration point"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SurfaceKind {
    Dtm,
    Dsm,
}

impl std::fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SurfaceKind::Dtm => "DTM",
            SurfaceKind::Dsm => "DSM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QCode {
    Qnh,
    Qfe,
    Qne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HeightReference {
    Hae,
    Msl {
        datum: String,
    },
    Agl {
        surface: SurfaceKind,
    },
    Baro {
        code: QCode,
        #[serde(rename = "ref_pressure_hPa")]
        ref_pressure_hpa: f64,
    },
}

impl HeightReference {
    pub fn msl(datum: impl Into<String>) -> Self {
        HeightReference::Msl {
            datum: datum.into(),
        }
    }

    pub fn qne() -> Self {
        HeightReference::Baro {
            code: QCode::Qne,
            ref_pressure_hpa: STANDARD_PRESSURE_HPA,
        }
    }

    pub fn validate(&self) -> Result<(), HeightError> {
        match self {
            HeightReference::Msl { datum } if datum.trim().is_empty() => Err(
                HeightError::InvalidReference("MSL datum label is empty".into()),
            ),
            HeightReference::Baro {
                code,
                ref_pressure_hpa,
            } => {
                if *code == QCode::Qne && *ref_pressure_hpa != STANDARD_PRESSURE_HPA {
                    return Err(HeightError::InvalidReference(format!(
                        "QNE requires {STANDARD_PRESSURE_HPA} hPa, got {ref_pressure_hpa}"
                    )));
                }
                if !(*ref_pressure_hpa > 0.0) || !ref_pressure_hpa.is_finite() {
                    return Err(HeightError::NonPositivePressure(*ref_pressure_hpa));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Height {
    pub value_m: f64,
    pub reference: HeightReference,
}

impl Height {
    pub fn new(value_m: f64, reference: HeightReference) -> Result<Self, HeightError> {
        if !value_m.is_finite() || value_m.abs() >= MAX_ABS_HEIGHT_M {
            return Err(HeightError::InvalidHeight(format!(
                "{value_m} m is not a plausible height"
            )));
        }
        reference.validate()?;
        Ok(Self { value_m, reference })
    }

    pub fn hae(value_m: f64) -> Self {
        Self {
            value_m,
            reference: HeightReference::Hae,
        }
    }

    /// A barometric reading derived from a measured static pressure: the
    /// hypsometric thickness between the reference pressure and `pressure_hpa`
    /// at the given layer-mean temperature.
    pub fn baro_from_pressure(
        pressure_hpa: f64,
        code: QCode,
        ref_pressure_hpa: f64,
        mean_temp_c: f64,
    ) -> Result<Self, HeightError> {
        let reading = hypsometric_thickness(ref_pressure_hpa, pressure_hpa, mean_temp_c)?;
        Height::new(
            reading,
            HeightReference::Baro {
                code,
                ref_pressure_hpa,
            },
        )
    }
}

/// A surveyed point with known HAE and locally observed pressure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub lat: f64,
    pub lon: f64,
    pub hae_m: f64,
    #[serde(rename = "pressure_hPa")]
    pub pressure_hpa: f64,
    #[serde(rename = "mean_temp_C")]
    pub mean_temp_c: f64,
}

impl CalibrationPoint {
    pub fn new(
        lat: f64,
        lon: f64,
        hae_m: f64,
        pressure_hpa: f64,
        mean_temp_c: f64,
    ) -> Result<Self, HeightError> {
        let p = Self {
            lat,
            lon,
            hae_m,
            pressure_hpa,
            mean_temp_c,
        };
        p.validate()?;
        Ok(p)
    }

    /// Calibration point whose HAE is the terrain height at `(lat, lon)`
    /// lifted to the ellipsoid with the geoid when the terrain is MSL-based.
    pub fn from_surface(
        lat: f64,
        lon: f64,
        pressure_hpa: f64,
        mean_temp_c: f64,
        terrain: &TerrainRaster,
        geoid: Option<&GeoidGrid>,
    ) -> Result<Self, HeightError> {
        let hae = surface_hae(terrain, geoid, lat, lon)?;
        Self::new(lat, lon, hae, pressure_hpa, mean_temp_c)
    }

    pub fn validate(&self) -> Result<(), HeightError> {
        let bad = |m: String| Err(HeightError::InvalidCalibration(m));
        if !(self.pressure_hpa > 300.0 && self.pressure_hpa < 1100.0) {
            return bad(format!(
                "pressure {} hPa outside (300, 1100)",
                self.pressure_hpa
            ));
        }
        if !(self.mean_temp_c > -90.0 && self.mean_temp_c < 60.0) {
            return bad(format!(
                "mean temperature {} °C outside (-90, 60)",
                self.mean_temp_c
            ));
        }
        if !self.hae_m.is_finite() || !self.lat.is_finite() || !self.lon.is_finite() {
            return bad("coordinates and height must be finite".into());
        }
        Ok(())
    }

    /// The reading an altimeter referenced to `ref_pressure_hpa` shows at
    /// this point.
    pub fn reading_at(&self, ref_pressure_hpa: f64) -> Result<f64, HeightError> {
        hypsometric_thickness(ref_pressure_hpa, self.pressure_hpa, self.mean_temp_c)
    }
}

/// Models and calibration available to a conversion.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConversionContext<'a> {
    pub geoid: Option<&'a GeoidGrid>,
    pub terrain: Option<&'a TerrainRaster>,
    pub calibration: Option<&'a CalibrationPoint>,
}

impl<'a> ConversionContext<'a> {
    pub fn with_geoid(mut self, geoid: &'a GeoidGrid) -> Self {
        self.geoid = Some(geoid);
        self
    }

    pub fn with_terrain(mut self, terrain: &'a TerrainRaster) -> Self {
        self.terrain = Some(terrain);
        self
    }

    pub fn with_calibration(mut self, calibration: &'a CalibrationPoint) -> Self {
        self.calibration = Some(calibration);
        self
    }

    fn geoid(&self) -> Result<&'a GeoidGrid, HeightError> {
        self.geoid.ok_or(HeightError::MissingContext {
            which: ContextMember::Geoid,
        })
    }

    fn terrain(&self, surface: SurfaceKind) -> Result<&'a TerrainRaster, HeightError> {
        match self.terrain {
            Some(t) if t.surface_kind() == surface => Ok(t),
            _ => Err(HeightError::MissingContext {
                which: ContextMember::Terrain(surface),
            }),
        }
    }

    fn calibration(&self, leg: &str) -> Result<&'a CalibrationPoint, HeightError> {
        self.calibration.ok_or_else(|| {
            HeightError::UnsupportedPath(format!(
                "barometric {leg} needs a calibration point; no atmosphere-model fallback"
            ))
        })
    }
}

pub fn msl_to_hae(msl_m: f64, undulation_m: f64) -> f64 {
    msl_m + undulation_m
}

pub fn hae_to_msl(hae_m: f64, undulation_m: f64) -> f64 {
    hae_m - undulation_m
}

pub fn agl_to_hae(agl_m: f64, ground_hae_m: f64) -> f64 {
    agl_m + ground_hae_m
}

pub fn hae_to_agl(hae_m: f64, ground_hae_m: f64) -> f64 {
    hae_m - ground_hae_m
}

/// Thickness of the layer between `p_ref_hpa` and `p_hpa`, in meters, for a
/// dry atmosphere at the given layer-mean temperature. Positive when `p_hpa`
/// is the lower pressure (higher level).
pub fn hypsometric_thickness(
    p_ref_hpa: f64,
    p_hpa: f64,
    mean_temp_c: f64,
) -> Result<f64, HeightError> {
    for p in [p_ref_hpa, p_hpa] {
        if !(p > 0.0) || !p.is_finite() {
            return Err(HeightError::NonPositivePressure(p));
        }
    }
    let t_k = mean_temp_c + CELSIUS_TO_KELVIN;
    if !(t_k > 0.0) || !t_k.is_finite() {
        return Err(HeightError::InvalidTemperature(mean_temp_c));
    }
    // ln(a) - ln(b) keeps the result exactly antisymmetric in its arguments.
    Ok(R_DRY_AIR * t_k / G0 * (p_ref_hpa.ln() - p_hpa.ln()))
}

pub fn baro_to_hae_calibrated(
    aircraft_pressure_hpa: f64,
    calib: &CalibrationPoint,
) -> Result<f64, HeightError> {
    let thickness =
        hypsometric_thickness(calib.pressure_hpa, aircraft_pressure_hpa, calib.mean_temp_c)?;
    Ok(calib.hae_m + thickness)
}

/// Aircraft HAE from two altimeter readings taken with the same setting: the
/// aircraft's and the one observed at a calibration point of known HAE.
pub fn qnh_offset_to_hae(aircraft_alt_m: f64, calib_alt_m: f64, calib_hae_m: f64) -> f64 {
    aircraft_alt_m - calib_alt_m + calib_hae_m
}

/// Height above the QNH datum from the 8.3 m/hPa rule of thumb.
pub fn empirical_pressure_to_msl(pressure_hpa: f64, qnh_hpa: f64) -> f64 {
    (qnh_hpa - pressure_hpa) * METERS_PER_HPA
}

/// HAE of the terrain surface at a point.
pub fn surface_hae(
    terrain: &TerrainRaster,
    geoid: Option<&GeoidGrid>,
    lat: f64,
    lon: f64,
) -> Result<f64, HeightError> {
    let elevation = terrain.sample_elevation(lat, lon)?;
    match terrain.vertical_ref() {
        HeightReference::Hae => Ok(elevation),
        HeightReference::Msl { .. } => {
            let geoid = geoid.ok_or(HeightError::MissingContext {
                which: ContextMember::Geoid,
            })?;
            Ok(msl_to_hae(elevation, geoid.undulation(lat, lon)?))
        }
        other => Err(HeightError::InvalidReference(format!(
            "terrain referenced to {other:?}"
        ))),
    }
}

/// Converts a height in any supported reference to HAE at `(lat, lon)`.
pub fn to_hae(
    height: &Height,
    ctx: &ConversionContext<'_>,
    lat: f64,
    lon: f64,
) -> Result<f64, HeightError> {
    height.reference.validate()?;
    let v = height.value_m;
    match &height.reference {
        HeightReference::Hae => Ok(v),
        HeightReference::Msl { .. } => Ok(msl_to_hae(v, ctx.geoid()?.undulation(lat, lon)?)),
        HeightReference::Agl { surface } => {
            let ground = surface_hae(ctx.terrain(*surface)?, ctx.geoid, lat, lon)?;
            Ok(agl_to_hae(v, ground))
        }
        HeightReference::Baro {
            ref_pressure_hpa, ..
        } => {
            let calib = ctx.calibration("source")?;
            calib.validate()?;
            Ok(qnh_offset_to_hae(
                v,
                calib.reading_at(*ref_pressure_hpa)?,
                calib.hae_m,
            ))
        }
    }
}

/// Expresses an HAE value in `target` at `(lat, lon)`.
pub fn from_hae(
    hae_m: f64,
    target: &HeightReference,
    ctx: &ConversionContext<'_>,
    lat: f64,
    lon: f64,
) -> Result<f64, HeightError> {
    target.validate()?;
    match target {
        HeightReference::Hae => Ok(hae_m),
        HeightReference::Msl { .. } => Ok(hae_to_msl(hae_m, ctx.geoid()?.undulation(lat, lon)?)),
        HeightReference::Agl { surface } => {
            let ground = surface_hae(ctx.terrain(*surface)?, ctx.geoid, lat, lon)?;
            Ok(hae_to_agl(hae_m, ground))
        }
        HeightReference::Baro {
            ref_pressure_hpa, ..
        } => {
            let calib = ctx.calibration("target")?;
            calib.validate()?;
            // Inverse of qnh_offset_to_hae.
            Ok(hae_m - calib.hae_m + calib.reading_at(*ref_pressure_hpa)?)
        }
    }
}

/// Converts `height` to `target` through HAE.
pub fn convert(
    height: &Height,
    target: &HeightReference,
    ctx: &ConversionContext<'_>,
    lat: f64,
    lon: f64,
) -> Result<Height, HeightError> {
    if height.reference == *target {
        target.validate()?;
        return Ok(height.clone());
    }
    let hae = to_hae(height, ctx, lat, lon)?;
    let value_m = from_hae(hae, target, ctx, lat, lon)?;
    Ok(Height {
        value_m,
        reference: target.clone(),
    })
}
