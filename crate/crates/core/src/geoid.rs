//! Geoid undulation grids in the portable UGG format.
//!
//! UGG text:
//!
//! ```text
//! UGG1 <name>
//! <lat0> <lon0> <dlat> <dlon> <nrows> <ncols>
//! <nrows lines of ncols undulations in meters>
//! ```
//!
//! UGG binary: magic `UGGB`, then little-endian `f64` lat0, lon0, dlat, dlon,
//! `u32` nrows, ncols, then `nrows * ncols` `f32` undulations, row-major.

use std::io::{Read, Write};

use thiserror::Error;

use crate::grid::{bilinear, GridError, GridGeometry};

pub const TEXT_MAGIC: &str = "UGG1";
pub const BINARY_MAGIC: &[u8; 4] = b"UGGB";

/// Undulations beyond this magnitude are rejected as corrupt.
pub const MAX_ABS_UNDULATION_M: f64 = 150.0;

#[derive(Debug, Error)]
pub enum GeoidError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("expected {expected} values, found {found}")]
    ValueCountMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("undulation {value} m at index {index} exceeds the ±150 m sanity bound")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("query ({lat}, {lon}) is outside the geoid grid")]
    OutOfExtent { lat: f64, lon: f64 },
    #[error(transparent)]
    Geometry(GridError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<GridError> for GeoidError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::OutOfExtent { lat, lon } => GeoidError::OutOfExtent { lat, lon },
            other => GeoidError::Geometry(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoidFormat {
    UggText,
    UggBinary,
}

impl GeoidFormat {
    /// Guesses the format from the leading bytes of a file.
    pub fn detect(head: &[u8]) -> Option<Self> {
        if head.starts_with(BINARY_MAGIC) {
            Some(Self::UggBinary)
        } else if head.starts_with(TEXT_MAGIC.as_bytes()) {
            Some(Self::UggText)
        } else {
            None
        }
    }
}

/// A regular grid of geoid undulations `N` (geoid minus ellipsoid), meters.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoidGrid {
    name: String,
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl GeoidGrid {
    pub fn new(
        name: impl Into<String>,
        geometry: GridGeometry,
        values: Vec<f64>,
    ) -> Result<Self, GeoidError> {
        geometry.validate()?;
        if values.len() != geometry.len() {
            return Err(GeoidError::ValueCountMismatch {
                expected: geometry.len(),
                found: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(GeoidError::NonFiniteValue { index });
            }
            if value.abs() >= MAX_ABS_UNDULATION_M {
                return Err(GeoidError::ValueOutOfRange { index, value });
            }
        }
        Ok(Self {
            name: name.into(),
            geometry,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.geometry.ncols + col]
    }

    /// Bilinearly interpolated undulation in meters.
    pub fn undulation(&self, lat: f64, lon: f64) -> Result<f64, GeoidError> {
        let pos = self.geometry.locate(lat, lon)?;
        Ok(bilinear(&self.values, self.geometry.ncols, &pos))
    }
}

pub fn load_geoid_grid<R: Read>(
    mut source: R,
    format: GeoidFormat,
) -> Result<GeoidGrid, GeoidError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    match format {
        GeoidFormat::UggText => parse_text(&bytes),
        GeoidFormat::UggBinary => parse_binary(&bytes),
    }
}

/// Writes `grid` in the requested format. The binary layout stores `f32`
/// undulations, so values not representable in single precision are rounded.
pub fn write_geoid_grid<W: Write>(
    grid: &GeoidGrid,
    mut sink: W,
    format: GeoidFormat,
) -> Result<(), GeoidError> {
    let g = &grid.geometry;
    match format {
        GeoidFormat::UggText => {
            writeln!(sink, "{} {}", TEXT_MAGIC, grid.name)?;
            writeln!(
                sink,
                "{} {} {} {} {} {}",
                g.lat0, g.lon0, g.dlat, g.dlon, g.nrows, g.ncols
            )?;
            for row in grid.values.chunks(g.ncols) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(sink, "{}", line.join(" "))?;
            }
        }
        GeoidFormat::UggBinary => {
            let mut buf = Vec::with_capacity(44 + 4 * grid.values.len());
            buf.extend_from_slice(BINARY_MAGIC);
            write_binary_header(&mut buf, g)?;
            for v in &grid.values {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
            sink.write_all(&buf)?;
        }
    }
    Ok(())
}

fn parse_text(bytes: &[u8]) -> Result<GeoidGrid, GeoidError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| GeoidError::MalformedHeader("grid is not valid UTF-8".into()))?;
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| GeoidError::MalformedHeader("empty input".into()))?;
    let name = first
        .strip_prefix(TEXT_MAGIC)
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .ok_or_else(|| GeoidError::MalformedHeader(format!("expected `{TEXT_MAGIC} <name>`")))?;

    let second = lines
        .next()
        .ok_or_else(|| GeoidError::MalformedHeader("missing geometry line".into()))?;
    let fields: Vec<&str> = second.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(GeoidError::MalformedHeader(format!(
            "geometry line has {} fields, expected 6",
            fields.len()
        )));
    }
    let float = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| GeoidError::MalformedHeader(format!("bad number `{s}`")))
    };
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| GeoidError::MalformedHeader(format!("bad count `{s}`")))
    };
    let geometry = GridGeometry {
        lat0: float(fields[0])?,
        lon0: float(fields[1])?,
        dlat: float(fields[2])?,
        dlon: float(fields[3])?,
        nrows: count(fields[4])?,
        ncols: count(fields[5])?,
    };
    geometry.validate()?;

    let mut values = Vec::with_capacity(geometry.len());
    for token in lines.flat_map(str::split_whitespace) {
        let v = token.parse::<f64>().map_err(|_| {
            GeoidError::MalformedHeader(format!("bad value `{token}` at index {}", values.len()))
        })?;
        values.push(v);
    }
    GeoidGrid::new(name, geometry, values)
}

fn parse_binary(bytes: &[u8]) -> Result<GeoidGrid, GeoidError> {
    if !bytes.starts_with(BINARY_MAGIC) {
        return Err(GeoidError::MalformedHeader("missing UGGB magic".into()));
    }
    let mut cursor = ByteCursor::new(&bytes[4..]);
    let geometry = read_binary_header(&mut cursor)?;
    let values = read_f32_values(cursor.rest(), geometry.len())?;
    GeoidGrid::new("UGGB", geometry, values)
}

pub(crate) fn write_binary_header(buf: &mut Vec<u8>, g: &GridGeometry) -> Result<(), GeoidError> {
    for v in [g.lat0, g.lon0, g.dlat, g.dlon] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for n in [g.nrows, g.ncols] {
        let n = u32::try_from(n)
            .map_err(|_| GeoidError::MalformedHeader("grid dimension exceeds u32".into()))?;
        buf.extend_from_slice(&n.to_le_bytes());
    }
    Ok(())
}

pub(crate) fn read_binary_header(cur: &mut ByteCursor<'_>) -> Result<GridGeometry, GeoidError> {
    let geometry = GridGeometry {
        lat0: cur.f64()?,
        lon0: cur.f64()?,
        dlat: cur.f64()?,
        dlon: cur.f64()?,
        nrows: cur.u32()? as usize,
        ncols: cur.u32()? as usize,
    };
    geometry.validate()?;
    Ok(geometry)
}

pub(crate) fn read_f32_values(payload: &[u8], expected: usize) -> Result<Vec<f64>, GeoidError> {
    if !payload.len().is_multiple_of(4) || payload.len() / 4 != expected {
        return Err(GeoidError::ValueCountMismatch {
            expected,
            found: payload.len() / 4,
        });
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Little-endian reader over a byte slice; running short is a header error.
pub(crate) struct ByteCursor<'a> {
    bytes: &'a [u8],
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], GeoidError> {
        if self.bytes.len() < n {
            return Err(GeoidError::MalformedHeader("truncated header".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    pub(crate) fn f64(&mut self) -> Result<f64, GeoidError> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub(crate) fn f32(&mut self) -> Result<f32, GeoidError> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, GeoidError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub(crate) fn u8(&mut self) -> Result<u8, GeoidError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn rest(self) -> &'a [u8] {
        self.bytes
    }
}
