//! Regular latitude/longitude grid geometry shared by geoid and terrain data.
//!
//! Grids are cell-center registered: `lat0`/`lon0` locate the center of the
//! first row and column, and `dlat`/`dlon` step between centers. `dlat` may be
//! negative (north-up rasters); `dlon` is always positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fractional distance from an integer index below which a query is treated
/// as sitting exactly on that cell center.
const SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("query ({lat}, {lon}) is outside the grid extent")]
    OutOfExtent { lat: f64, lon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub nrows: usize,
    pub ncols: usize,
}

/// The four cells surrounding a query point and the bilinear weights toward
/// the second row and column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPosition {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
    pub row_frac: f64,
    pub col_frac: f64,
}

impl CellPosition {
    /// The surrounding cells as `(row, col, weight)`.
    pub fn corners(&self) -> [(usize, usize, f64); 4] {
        let (fr, fc) = (self.row_frac, self.col_frac);
        [
            (self.row0, self.col0, (1.0 - fr) * (1.0 - fc)),
            (self.row0, self.col1, (1.0 - fr) * fc),
            (self.row1, self.col0, fr * (1.0 - fc)),
            (self.row1, self.col1, fr * fc),
        ]
    }
}

impl GridGeometry {
    pub fn new(
        lat0: f64,
        lon0: f64,
        dlat: f64,
        dlon: f64,
        nrows: usize,
        ncols: usize,
    ) -> Result<Self, GridError> {
        let g = Self {
            lat0,
            lon0,
            dlat,
            dlon,
            nrows,
            ncols,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |m: &str| Err(GridError::InvalidGeometry(m.to_string()));
        if self.nrows < 2 || self.ncols < 2 {
            return bad("grid needs at least 2 rows and 2 columns");
        }
        if ![self.lat0, self.lon0, self.dlat, self.dlon]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("origin and steps must be finite");
        }
        if self.dlat == 0.0 {
            return bad("latitude step must be non-zero");
        }
        if self.dlon <= 0.0 {
            return bad("longitude step must be positive");
        }
        if self.ncols as f64 * self.dlon > 360.0 + 1e-9 {
            return bad("longitude span exceeds 360 degrees");
        }
        let last_lat = self.lat0 + (self.nrows - 1) as f64 * self.dlat;
        if self.lat0.abs() > 90.0 || last_lat.abs() > 90.0 {
            return bad("row centers must lie within [-90, 90]");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nrows * self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the columns wrap all the way around the globe.
    pub fn is_global(&self) -> bool {
        (self.ncols as f64 * self.dlon - 360.0).abs() < 1e-9
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lat0 + row as f64 * self.dlat,
            self.lon0 + col as f64 * self.dlon,
        )
    }

    /// Latitude/longitude of the grid corner shared by cells around
    /// `(row, col)` in corner-index space (`0..=nrows`, `0..=ncols`).
    pub fn cell_corner(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lat0 + (row as f64 - 0.5) * self.dlat,
            self.lon0 + (col as f64 - 0.5) * self.dlon,
        )
    }

    /// Locates the bilinear stencil for a query.
    ///
    /// Latitude clamps to the outermost row centers within half a cell beyond
    /// them. Longitude wraps for global grids; for regional grids it is first
    /// shifted by multiples of 360° toward the grid and then clamped with the
    /// same half-cell tolerance.
    pub fn locate(&self, lat: f64, lon: f64) -> Result<CellPosition, GridError> {
        let out = || GridError::OutOfExtent { lat, lon };
        if !lat.is_finite() || !lon.is_finite() || lat.abs() > 90.0 {
            return Err(out());
        }

        let r = (lat - self.lat0) / self.dlat;
        let last_row = (self.nrows - 1) as f64;
        if !self.is_global() && (r < -0.5 - SNAP || r > last_row + 0.5 + SNAP) {
            return Err(out());
        }
        let r = snap(r.clamp(0.0, last_row));
        let row0 = (r.floor() as usize).min(self.nrows - 2);
        let row_frac = r - row0 as f64;

        let (col0, col1, col_frac) = if self.is_global() {
            let c = snap(((lon - self.lon0) / self.dlon).rem_euclid(self.ncols as f64));
            let c = if c >= self.ncols as f64 { 0.0 } else { c };
            let col0 = c.floor() as usize;
            (col0, (col0 + 1) % self.ncols, c - col0 as f64)
        } else {
            let last_col = (self.ncols - 1) as f64;
            let in_range = |c: f64| (-0.5 - SNAP..=last_col + 0.5 + SNAP).contains(&c);
            let mut c = (lon - self.lon0) / self.dlon;
            if !in_range(c) {
                // Shifting by 360° costs precision, so only when needed.
                let mid = self.lon0 + 0.5 * last_col * self.dlon;
                let lon = mid + (lon - mid + 180.0).rem_euclid(360.0) - 180.0;
                c = (lon - self.lon0) / self.dlon;
            }
            if !in_range(c) {
                return Err(out());
            }
            let c = snap(c.clamp(0.0, last_col));
            let col0 = (c.floor() as usize).min(self.ncols - 2);
            (col0, col0 + 1, c - col0 as f64)
        };

        Ok(CellPosition {
            row0,
            row1: row0 + 1,
            col0,
            col1,
            row_frac,
            col_frac,
        })
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP {
        r
    } else {
        x
    }
}

/// Bilinear interpolation of row-major `values` at `pos`.
pub fn bilinear(values: &[f64], ncols: usize, pos: &CellPosition) -> f64 {
    pos.corners()
        .iter()
        .map(|&(r, c, w)| w * values[r * ncols + c])
        .sum()
}
