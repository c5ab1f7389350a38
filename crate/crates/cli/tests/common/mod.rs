//! Fixture files and a runner for the `haekit` binary.

#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use haekit_core::geoid::write_geoid_grid;
use haekit_core::logstats::write_log_csv;
use haekit_core::synthetic::{self, LogSpec};
use haekit_core::terrain::write_ugg_dem;
use haekit_core::GeoidFormat;
use tempfile::TempDir;

pub struct Fixtures {
    pub dir: TempDir,
}

impl Fixtures {
    pub fn new() -> Self {
        Self {
            dir: tempfile::tempdir().expect("temp dir"),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn create(&self, name: &str) -> (PathBuf, File) {
        let path = self.path(name);
        let file = File::create(&path).expect("create fixture");
        (path, file)
    }

    pub fn geoid(&self) -> PathBuf {
        let (path, file) = self.create("hkia.ugg");
        write_geoid_grid(&synthetic::hkia_geoid(), file, GeoidFormat::UggText).unwrap();
        path
    }

    /// MSL terrain around the airport, UGGD binary.
    pub fn dem(&self) -> PathBuf {
        let (path, file) = self.create("hkia.uggd");
        write_ugg_dem(&synthetic::hkia_dem(), file).unwrap();
        path
    }

    /// Calibration JSON; `hae_m` is omitted when `None`.
    pub fn calibration(&self, hae_m: Option<f64>) -> PathBuf {
        let mut value = serde_json::json!({
            "lat": synthetic::HKIA_LAT,
            "lon": synthetic::HKIA_LON,
            "pressure_hPa": synthetic::HKIA_PRESSURE_HPA,
            "mean_temp_C": synthetic::HKIA_MEAN_TEMP_C,
        });
        if let Some(h) = hae_m {
            value["hae_m"] = h.into();
        }
        let path = self.path(if hae_m.is_some() {
            "calib.json"
        } else {
            "calib-derived.json"
        });
        std::fs::write(&path, value.to_string()).unwrap();
        path
    }

    /// The 512×512 four-mode city surface, HAE, UGGD binary.
    pub fn city(&self) -> PathBuf {
        let (path, file) = self.create("city.uggd");
        write_ugg_dem(&synthetic::city_raster(), file).unwrap();
        path
    }

    pub fn logs(&self, spec: &LogSpec) -> PathBuf {
        let (path, file) = self.create("logs.csv");
        write_log_csv(&synthetic::flight_logs(spec), file).unwrap();
        path
    }
}

pub fn haekit<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_haekit"))
        .args(args)
        .output()
        .expect("run haekit")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Parses stdout as JSON, panicking with stderr on failure.
pub fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}
