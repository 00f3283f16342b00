//! Append-only ride store.
//!
//! Directory layout:
//!
//! ```text
//! <root>/manifest.json            ordered ride_id + started_at list, schema_version
//! <root>/rides/<ride_id>.json     one RideSummary per file
//! <root>/diagnostics/<ride_id>.json
//! ```
//!
//! A path ending in `.jsonl` selects single-file mode instead: one line per
//! ride holding `{"summary": ..., "diagnostics": ...}`.
//!
//! Ride and diagnostics files are written to a temporary name and renamed
//! into place before the manifest is replaced the same way, so a reader that
//! goes through the manifest never sees a partial record. In single-file mode
//! a trailing line without its newline is an in-flight append and is ignored.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ReportConfig;
use crate::report::{self, ComparisonReport, ReportError, TrendSeries};
use crate::summary::{RideDiagnostics, RideSummary, SCHEMA_VERSION};

const MANIFEST: &str = "manifest.json";
const RIDES_DIR: &str = "rides";
const DIAG_DIR: &str = "diagnostics";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("ride `{0}` is already stored")]
    DuplicateRideId(String),
    #[error("ride `{0}` not found")]
    RideNotFound(String),
    #[error("invalid ride id {0:?}: use 1-128 characters from [A-Za-z0-9._-], not starting with '.'")]
    InvalidRideId(String),
    #[error("storage failure at {path}: {message}")]
    Storage { path: PathBuf, message: String },
}

impl StoreError {
    fn storage(path: &Path, err: impl std::fmt::Display) -> Self {
        StoreError::Storage {
            path: path.to_owned(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub ride_id: String,
    pub started_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub rides: Vec<ManifestEntry>,
}

impl Manifest {
    fn of(rides: &[RideSummary]) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            rides: rides
                .iter()
                .map(|r| ManifestEntry {
                    ride_id: r.ride_id.clone(),
                    started_at: r.started_at,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Memory { diagnostics: Vec<Option<RideDiagnostics>> },
    Directory { root: PathBuf },
    SingleFile { path: PathBuf },
}

#[derive(Serialize)]
struct LineOut<'a> {
    summary: &'a RideSummary,
    diagnostics: Option<&'a RideDiagnostics>,
}

#[derive(Deserialize)]
struct LineSummary {
    summary: RideSummary,
    #[allow(dead_code)]
    diagnostics: IgnoredAny,
}

#[derive(Deserialize)]
struct LineFull {
    summary: RideSummary,
    diagnostics: Option<RideDiagnostics>,
}

/// Ride summaries in insertion order, with write-through persistence.
#[derive(Debug, Clone)]
pub struct RideStore {
    rides: Vec<RideSummary>,
    backend: Backend,
}

impl RideStore {
    pub fn in_memory() -> Self {
        RideStore {
            rides: Vec::new(),
            backend: Backend::Memory {
                diagnostics: Vec::new(),
            },
        }
    }

    /// Opens (creating if needed) a store at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        if path.extension().is_some_and(|e| e == "jsonl") {
            Self::open_single_file(path)
        } else {
            Self::open_directory(path)
        }
    }

    fn open_directory(root: &Path) -> Result<Self, StoreError> {
        for dir in [root.to_owned(), root.join(RIDES_DIR), root.join(DIAG_DIR)] {
            fs::create_dir_all(&dir).map_err(|e| StoreError::storage(&dir, e))?;
        }
        let manifest_path = root.join(MANIFEST);
        let manifest = match fs::read(&manifest_path) {
            Ok(bytes) => serde_json::from_slice::<Manifest>(&bytes)
                .map_err(|e| StoreError::storage(&manifest_path, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Manifest::of(&[]),
            Err(e) => return Err(StoreError::storage(&manifest_path, e)),
        };
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(StoreError::storage(
                &manifest_path,
                format!("unsupported schema_version {}", manifest.schema_version),
            ));
        }
        let mut rides = Vec::with_capacity(manifest.rides.len());
        for entry in &manifest.rides {
            let p = root.join(RIDES_DIR).join(format!("{}.json", entry.ride_id));
            let bytes = fs::read(&p).map_err(|e| StoreError::storage(&p, e))?;
            let summary: RideSummary =
                serde_json::from_slice(&bytes).map_err(|e| StoreError::storage(&p, e))?;
            rides.push(summary);
        }
        Ok(RideStore {
            rides,
            backend: Backend::Directory {
                root: root.to_owned(),
            },
        })
    }

    fn open_single_file(path: &Path) -> Result<Self, StoreError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| StoreError::storage(parent, e))?;
        }
        let mut rides = Vec::new();
        for line in complete_lines(path)? {
            let parsed: LineSummary =
                serde_json::from_str(&line).map_err(|e| StoreError::storage(path, e))?;
            rides.push(parsed.summary);
        }
        Ok(RideStore {
            rides,
            backend: Backend::SingleFile {
                path: path.to_owned(),
            },
        })
    }

    /// Summaries in insertion order.
    pub fn rides(&self) -> &[RideSummary] {
        &self.rides
    }

    pub fn len(&self) -> usize {
        self.rides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rides.is_empty()
    }

    pub fn get(&self, ride_id: &str) -> Option<&RideSummary> {
        self.rides.iter().find(|r| r.ride_id == ride_id)
    }

    pub fn contains(&self, ride_id: &str) -> bool {
        self.get(ride_id).is_some()
    }

    pub fn chronological(&self) -> Vec<&RideSummary> {
        report::chronological(&self.rides)
    }

    /// Fuel-efficiency values of every stored ride and cruise state.
    pub fn fe_population(&self) -> Vec<f64> {
        self.rides.iter().flat_map(|r| r.fe_values()).collect()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest::of(&self.rides)
    }

    /// Entity tag of the current manifest.
    pub fn etag(&self) -> String {
        format!("\"{:016x}\"", fnv1a(self.manifest().to_json().as_bytes()))
    }

    pub fn store_ride(&mut self, summary: RideSummary) -> Result<usize, StoreError> {
        self.append(summary, None)
    }

    /// Appends a ride and returns its ordinal.
    pub fn append(
        &mut self,
        summary: RideSummary,
        diagnostics: Option<&RideDiagnostics>,
    ) -> Result<usize, StoreError> {
        validate_ride_id(&summary.ride_id)?;
        if self.contains(&summary.ride_id) {
            return Err(StoreError::DuplicateRideId(summary.ride_id));
        }
        match &mut self.backend {
            Backend::Memory { diagnostics: diags } => diags.push(diagnostics.cloned()),
            Backend::Directory { root } => {
                if let Some(d) = diagnostics {
                    let p = root.join(DIAG_DIR).join(format!("{}.json", summary.ride_id));
                    let body = serde_json::to_vec(d).map_err(|e| StoreError::storage(&p, e))?;
                    write_atomic(&p, &body)?;
                }
                let p = root.join(RIDES_DIR).join(format!("{}.json", summary.ride_id));
                write_atomic(&p, summary.to_canonical_json().as_bytes())?;
                let mut next = Manifest::of(&self.rides);
                next.rides.push(ManifestEntry {
                    ride_id: summary.ride_id.clone(),
                    started_at: summary.started_at,
                });
                write_atomic(&root.join(MANIFEST), next.to_json().as_bytes())?;
            }
            Backend::SingleFile { path } => {
                let mut line = serde_json::to_string(&LineOut {
                    summary: &summary,
                    diagnostics,
                })
                .map_err(|e| StoreError::storage(path, e))?;
                line.push('\n');
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&*path)
                    .map_err(|e| StoreError::storage(path, e))?;
                f.write_all(line.as_bytes())
                    .and_then(|_| f.sync_data())
                    .map_err(|e| StoreError::storage(path, e))?;
            }
        }
        self.rides.push(summary);
        Ok(self.rides.len() - 1)
    }

    /// Stored per-sample series of a ride, if they were stored.
    pub fn diagnostics(&self, ride_id: &str) -> Result<Option<RideDiagnostics>, StoreError> {
        let idx = self
            .rides
            .iter()
            .position(|r| r.ride_id == ride_id)
            .ok_or_else(|| StoreError::RideNotFound(ride_id.to_owned()))?;
        match &self.backend {
            Backend::Memory { diagnostics } => Ok(diagnostics[idx].clone()),
            Backend::Directory { root } => {
                let p = root.join(DIAG_DIR).join(format!("{ride_id}.json"));
                match fs::read(&p) {
                    Ok(bytes) => serde_json::from_slice(&bytes)
                        .map(Some)
                        .map_err(|e| StoreError::storage(&p, e)),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                    Err(e) => Err(StoreError::storage(&p, e)),
                }
            }
            Backend::SingleFile { path } => {
                for line in complete_lines(path)? {
                    let parsed: LineFull =
                        serde_json::from_str(&line).map_err(|e| StoreError::storage(path, e))?;
                    if parsed.summary.ride_id == ride_id {
                        return Ok(parsed.diagnostics);
                    }
                }
                Ok(None)
            }
        }
    }

    pub fn comparison_report(
        &self,
        ride_id: &str,
        cfg: &ReportConfig,
    ) -> Result<ComparisonReport, ReportError> {
        report::comparison_report(&self.rides, ride_id, cfg)
    }

    pub fn trend_series(&self, metric_name: &str) -> Result<TrendSeries, ReportError> {
        report::trend_series(&self.rides, metric_name)
    }
}

pub fn validate_ride_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidRideId(id.to_owned()))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    let mut f = File::create(&tmp).map_err(|e| StoreError::storage(&tmp, e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_data())
        .map_err(|e| StoreError::storage(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StoreError::storage(path, e))
}

fn complete_lines(path: &Path) -> Result<Vec<String>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::storage(path, e)),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader
            .read_line(&mut buf)
            .map_err(|e| StoreError::storage(path, e))?;
        if n == 0 || !buf.ends_with('\n') {
            break;
        }
        if !buf.trim().is_empty() {
            out.push(buf.trim_end().to_owned());
        }
    }
    Ok(out)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
