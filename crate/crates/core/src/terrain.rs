//! Terrain rasters (DTM/DSM): loading, sampling and conversion to HAE.
//!
//! Two on-disk formats are supported. ESRI ASCII grids carry no vertical
//! metadata, so the caller supplies the surface kind and vertical reference.
//! The extended UGG binary layout (magic `UGGD`) stores them inline:
//!
//! ```text
//! "UGGD" | f64 lat0 lon0 dlat dlon | u32 nrows ncols
//!        | u8 surface (0=DTM, 1=DSM) | u8 vertical ref (0=MSL, 1=HAE)
//!        | [u8; 16] zero-padded datum label | f32 nodata | f32 values...
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::geoid::{
    read_binary_header, read_f32_values, write_binary_header, ByteCursor, GeoidError, GeoidGrid,
};
use crate::grid::{bilinear, GridError, GridGeometry};
use crate::heights::{HeightReference, SurfaceKind};

pub const BINARY_MAGIC: &[u8; 4] = b"UGGD";
pub const MIN_ELEVATION_M: f64 = -500.0;
pub const MAX_ELEVATION_M: f64 = 9000.0;
pub const DEFAULT_NODATA: f64 = -9999.0;
const DATUM_LABEL_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum TerrainError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("expected {expected} values, found {found}")]
    ValueCountMismatch { expected: usize, found: usize },
    #[error("invalid elevation {value} at index {index}")]
    InvalidValue { index: usize, value: f64 },
    #[error("invalid vertical reference: {0}")]
    InvalidReference(String),
    #[error("query ({lat}, {lon}) is outside the raster")]
    OutOfExtent { lat: f64, lon: f64 },
    #[error("query ({lat}, {lon}) touches a nodata cell")]
    NodataNeighborhood { lat: f64, lon: f64 },
    #[error("geoid does not cover pixel (row {row}, col {col})")]
    GeoidCoverageGap { row: usize, col: usize },
    #[error("raster cannot be written as ESRI ASCII: {0}")]
    UnsupportedGeometry(String),
    #[error(transparent)]
    Geometry(GridError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<GridError> for TerrainError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::OutOfExtent { lat, lon } => TerrainError::OutOfExtent { lat, lon },
            other => TerrainError::Geometry(other),
        }
    }
}

impl From<GeoidError> for TerrainError {
    fn from(e: GeoidError) -> Self {
        match e {
            GeoidError::MalformedHeader(m) => TerrainError::MalformedHeader(m),
            GeoidError::ValueCountMismatch { expected, found } => {
                TerrainError::ValueCountMismatch { expected, found }
            }
            GeoidError::NonFiniteValue { index } => TerrainError::InvalidValue {
                index,
                value: f64::NAN,
            },
            GeoidError::ValueOutOfRange { index, value } => {
                TerrainError::InvalidValue { index, value }
            }
            GeoidError::OutOfExtent { lat, lon } => TerrainError::OutOfExtent { lat, lon },
            GeoidError::Geometry(g) => TerrainError::Geometry(g),
            GeoidError::Io(io) => TerrainError::Io(io),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainRaster {
    surface_kind: SurfaceKind,
    vertical_ref: HeightReference,
    geometry: GridGeometry,
    nodata: f64,
    values: Vec<f64>,
}

impl TerrainRaster {
    pub fn new(
        surface_kind: SurfaceKind,
        vertical_ref: HeightReference,
        geometry: GridGeometry,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        geometry.validate()?;
        match &vertical_ref {
            HeightReference::Hae => {}
            HeightReference::Msl { datum } if !datum.trim().is_empty() => {}
            other => {
                return Err(TerrainError::InvalidReference(format!(
                    "terrain must be MSL or HAE referenced, got {other:?}"
                )))
            }
        }
        if !nodata.is_finite() {
            return Err(TerrainError::MalformedHeader(
                "nodata sentinel must be finite".into(),
            ));
        }
        if values.len() != geometry.len() {
            return Err(TerrainError::ValueCountMismatch {
                expected: geometry.len(),
                found: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if value == nodata {
                continue;
            }
            if !(MIN_ELEVATION_M..=MAX_ELEVATION_M).contains(&value) {
                return Err(TerrainError::InvalidValue { index, value });
            }
        }
        Ok(Self {
            surface_kind,
            vertical_ref,
            geometry,
            nodata,
            values,
        })
    }

    pub fn surface_kind(&self) -> SurfaceKind {
        self.surface_kind
    }

    pub fn vertical_ref(&self) -> &HeightReference {
        &self.vertical_ref
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nodata(&self, value: f64) -> bool {
        value == self.nodata
    }

    pub fn value_at(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.geometry.ncols + col];
        (!self.is_nodata(v)).then_some(v)
    }

    /// Non-nodata pixels as `(flat index, value)` in row-major order.
    pub fn valid_pixels(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| !self.is_nodata(*v))
    }

    /// Bilinear elevation at a point. Cells that carry zero weight may be
    /// nodata; any weighted nodata neighbor is an error.
    pub fn sample_elevation(&self, lat: f64, lon: f64) -> Result<f64, TerrainError> {
        let pos = self.geometry.locate(lat, lon)?;
        let ncols = self.geometry.ncols;
        let touches_nodata = pos
            .corners()
            .iter()
            .any(|&(r, c, w)| w != 0.0 && self.is_nodata(self.values[r * ncols + c]));
        if touches_nodata {
            return Err(TerrainError::NodataNeighborhood { lat, lon });
        }
        Ok(bilinear(&self.values, ncols, &pos))
    }

    /// Converts an MSL raster to HAE with the undulation at every pixel
    /// center. Nodata cells stay nodata.
    pub fn raster_to_hae(&self, geoid: &GeoidGrid) -> Result<TerrainRaster, TerrainError> {
        if !matches!(self.vertical_ref, HeightReference::Msl { .. }) {
            return Err(TerrainError::InvalidReference(
                "raster_to_hae needs an MSL-referenced raster".into(),
            ));
        }
        let values = self.shift_by_undulation(geoid, 1.0)?;
        TerrainRaster::new(
            self.surface_kind,
            HeightReference::Hae,
            self.geometry,
            self.nodata,
            values,
        )
    }

    /// Inverse of [`raster_to_hae`](Self::raster_to_hae).
    pub fn raster_to_msl(
        &self,
        geoid: &GeoidGrid,
        datum: impl Into<String>,
    ) -> Result<TerrainRaster, TerrainError> {
        if self.vertical_ref != HeightReference::Hae {
            return Err(TerrainError::InvalidReference(
                "raster_to_msl needs an HAE-referenced raster".into(),
            ));
        }
        let values = self.shift_by_undulation(geoid, -1.0)?;
        TerrainRaster::new(
            self.surface_kind,
            HeightReference::msl(datum),
            self.geometry,
            self.nodata,
            values,
        )
    }

    fn shift_by_undulation(&self, geoid: &GeoidGrid, sign: f64) -> Result<Vec<f64>, TerrainError> {
        let g = &self.geometry;
        let mut out = Vec::with_capacity(self.values.len());
        for row in 0..g.nrows {
            for col in 0..g.ncols {
                let v = self.values[row * g.ncols + col];
                if self.is_nodata(v) {
                    out.push(v);
                    continue;
                }
                let (lat, lon) = g.cell_center(row, col);
                let n = geoid
                    .undulation(lat, lon)
                    .map_err(|_| TerrainError::GeoidCoverageGap { row, col })?;
                out.push(v + sign * n);
            }
        }
        Ok(out)
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.valid_pixels().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

/// Reads an ESRI ASCII grid. Corner registration is shifted to cell centers;
/// rows are stored north-up as in the file.
pub fn load_esri_ascii<R: Read>(
    mut source: R,
    surface_kind: SurfaceKind,
    vertical_ref: HeightReference,
) -> Result<TerrainRaster, TerrainError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|_| TerrainError::MalformedHeader("grid is not valid UTF-8 text".into()))?;
    let mut tokens = text.split_whitespace().peekable();

    let mut header: HashMap<String, f64> = HashMap::new();
    while let Some(tok) = tokens.peek() {
        if !tok.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let key = tokens.next().unwrap_or_default().to_ascii_lowercase();
        let raw = tokens
            .next()
            .ok_or_else(|| TerrainError::MalformedHeader(format!("`{key}` has no value")))?;
        let value = raw
            .parse::<f64>()
            .map_err(|_| TerrainError::MalformedHeader(format!("`{key}` value `{raw}`")))?;
        if header.insert(key.clone(), value).is_some() {
            return Err(TerrainError::MalformedHeader(format!("duplicate `{key}`")));
        }
    }

    let get = |k: &str| {
        header
            .get(k)
            .copied()
            .ok_or_else(|| TerrainError::MalformedHeader(format!("missing `{k}`")))
    };
    let count = |k: &str| -> Result<usize, TerrainError> {
        let v = get(k)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(TerrainError::MalformedHeader(format!(
                "`{k}` must be a count"
            )));
        }
        Ok(v as usize)
    };
    let ncols = count("ncols")?;
    let nrows = count("nrows")?;
    let cellsize = get("cellsize")?;
    if !(cellsize > 0.0) {
        return Err(TerrainError::MalformedHeader(
            "cellsize must be positive".into(),
        ));
    }
    let center = |corner: &str, center: &str| match (header.get(corner), header.get(center)) {
        (Some(v), None) => Ok(v + cellsize / 2.0),
        (None, Some(v)) => Ok(*v),
        _ => Err(TerrainError::MalformedHeader(format!(
            "need exactly one of `{corner}` / `{center}`"
        ))),
    };
    let west = center("xllcorner", "xllcenter")?;
    let south = center("yllcorner", "yllcenter")?;
    let nodata = header
        .get("nodata_value")
        .copied()
        .unwrap_or(DEFAULT_NODATA);
    if let Some(k) = header.keys().find(|k| {
        !matches!(
            k.as_str(),
            "ncols"
                | "nrows"
                | "xllcorner"
                | "xllcenter"
                | "yllcorner"
                | "yllcenter"
                | "cellsize"
                | "nodata_value"
        )
    }) {
        return Err(TerrainError::MalformedHeader(format!("unknown key `{k}`")));
    }

    let geometry = GridGeometry {
        lat0: south + nrows.saturating_sub(1) as f64 * cellsize,
        lon0: west,
        dlat: -cellsize,
        dlon: cellsize,
        nrows,
        ncols,
    };
    geometry.validate()?;

    let mut values = Vec::with_capacity(geometry.len());
    for tok in tokens {
        let v = tok.parse::<f64>().map_err(|_| {
            TerrainError::MalformedHeader(format!("bad value `{tok}` at index {}", values.len()))
        })?;
        if !v.is_finite() {
            return Err(TerrainError::InvalidValue {
                index: values.len(),
                value: v,
            });
        }
        values.push(v);
    }
    TerrainRaster::new(surface_kind, vertical_ref, geometry, nodata, values)
}

/// Writes an ESRI ASCII grid with corner registration. Requires square cells.
pub fn write_esri_ascii<W: Write>(raster: &TerrainRaster, mut sink: W) -> Result<(), TerrainError> {
    let g = &raster.geometry;
    if g.dlat.abs() != g.dlon {
        return Err(TerrainError::UnsupportedGeometry(format!(
            "cells are {} x {} degrees, ESRI ASCII needs square cells",
            g.dlat.abs(),
            g.dlon
        )));
    }
    let cellsize = g.dlon;
    let north_up = g.dlat < 0.0;
    let south = if north_up {
        g.lat0 + (g.nrows - 1) as f64 * g.dlat
    } else {
        g.lat0
    };
    writeln!(sink, "ncols {}", g.ncols)?;
    writeln!(sink, "nrows {}", g.nrows)?;
    writeln!(sink, "xllcorner {}", g.lon0 - cellsize / 2.0)?;
    writeln!(sink, "yllcorner {}", south - cellsize / 2.0)?;
    writeln!(sink, "cellsize {}", cellsize)?;
    writeln!(sink, "NODATA_value {}", raster.nodata)?;
    for i in 0..g.nrows {
        let row = if north_up { i } else { g.nrows - 1 - i };
        let line: Vec<String> = raster.values[row * g.ncols..(row + 1) * g.ncols]
            .iter()
            .map(|v| v.to_string())
            .collect();
        writeln!(sink, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Writes the extended UGG binary layout. Values and nodata are stored as
/// `f32`.
pub fn write_ugg_dem<W: Write>(raster: &TerrainRaster, mut sink: W) -> Result<(), TerrainError> {
    let mut buf = Vec::with_capacity(66 + 4 * raster.values.len());
    buf.extend_from_slice(BINARY_MAGIC);
    write_binary_header(&mut buf, &raster.geometry)?;
    buf.push(match raster.surface_kind {
        SurfaceKind::Dtm => 0,
        SurfaceKind::Dsm => 1,
    });
    let (class, datum) = match &raster.vertical_ref {
        HeightReference::Msl { datum } => (0u8, datum.as_str()),
        _ => (1u8, ""),
    };
    if datum.len() > DATUM_LABEL_LEN {
        return Err(TerrainError::InvalidReference(format!(
            "datum label `{datum}` longer than {DATUM_LABEL_LEN} bytes"
        )));
    }
    buf.push(class);
    let mut label = [0u8; DATUM_LABEL_LEN];
    label[..datum.len()].copy_from_slice(datum.as_bytes());
    buf.extend_from_slice(&label);
    buf.extend_from_slice(&(raster.nodata as f32).to_le_bytes());
    for v in &raster.values {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(())
}

pub fn load_ugg_dem<R: Read>(mut source: R) -> Result<TerrainRaster, TerrainError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if !bytes.starts_with(BINARY_MAGIC) {
        return Err(TerrainError::MalformedHeader("missing UGGD magic".into()));
    }
    let mut cur = ByteCursor::new(&bytes[4..]);
    let geometry = read_binary_header(&mut cur)?;
    let surface_kind = match cur.u8()? {
        0 => SurfaceKind::Dtm,
        1 => SurfaceKind::Dsm,
        x => {
            return Err(TerrainError::MalformedHeader(format!(
                "surface kind byte {x}"
            )))
        }
    };
    let class = cur.u8()?;
    let label = cur.take(DATUM_LABEL_LEN)?;
    let end = label.iter().position(|&b| b == 0).unwrap_or(label.len());
    if label[end..].iter().any(|&b| b != 0) {
        return Err(TerrainError::MalformedHeader(
            "datum label is not zero-padded".into(),
        ));
    }
    let datum = std::str::from_utf8(&label[..end])
        .map_err(|_| TerrainError::MalformedHeader("datum label is not UTF-8".into()))?;
    let vertical_ref = match class {
        0 => HeightReference::msl(datum),
        1 => HeightReference::Hae,
        x => {
            return Err(TerrainError::MalformedHeader(format!(
                "vertical ref byte {x}"
            )))
        }
    };
    let nodata = cur.f32()? as f64;
    let values = read_f32_values(cur.rest(), geometry.len())?;
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(TerrainError::InvalidValue {
            index,
            value: values[index],
        });
    }
    TerrainRaster::new(surface_kind, vertical_ref, geometry, nodata, values)
}

/// Loads a terrain file, choosing the parser from its leading bytes. ESRI
/// grids take their metadata from the arguments; UGGD files carry their own.
pub fn load_terrain_bytes(
    bytes: &[u8],
    surface_kind: SurfaceKind,
    vertical_ref: HeightReference,
) -> Result<TerrainRaster, TerrainError> {
    if bytes.starts_with(BINARY_MAGIC) {
        load_ugg_dem(bytes)
    } else {
        load_esri_ascii(bytes, surface_kind, vertical_ref)
    }
}
