//! Height Above Ellipsoid (HAE) as the hub vertical datum for low-altitude
//! airspace.
//!
//! The crate is organised around the data flow of an HAE-based airspace
//! scheme:
//!
//! - [`geoid`] and [`terrain`] load gridded undulation and elevation data and
//!   interpolate them bilinearly.
//! - [`heights`] converts between HAE, MSL, AGL and barometric readings, always
//!   routing through HAE.
//! - [`zoning`] clusters an HAE terrain raster into simple and complex regions
//!   and publishes baseline heights and Class-W ceilings.
//! - [`risk`] and [`capacity`] size vertical separation from sensor error
//!   models and turn the resulting number of flight levels into throughput.
//! - [`logstats`] extracts those error models from flight logs.
//!
//! [`synthetic`] builds deterministic fixtures for tests and demos.

pub mod capacity;
pub mod geoid;
pub mod grid;
pub mod heights;
pub mod logstats;
pub mod risk;
pub mod stats;
pub mod synthetic;
pub mod terrain;
pub mod zoning;

pub use geoid::{GeoidFormat, GeoidGrid};
pub use grid::GridGeometry;
pub use heights::{
    CalibrationPoint, ConversionContext, Height, HeightReference, QCode, SurfaceKind,
};
pub use risk::ErrorModel;
pub use terrain::TerrainRaster;

/// Version string recorded in published documents.
pub const TOOLKIT_VERSION: &str = concat!("haekit ", env!("CARGO_PKG_VERSION"));
