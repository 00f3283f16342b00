//! Canonical trip CSV ingestion.
//!
//! The canonical header is
//!
//! ```text
//! timestamp,speed,lead_distance,accel,cruise_on,odometer
//! ```
//!
//! `timestamp` is in seconds, `speed` in m/s, `lead_distance` in meters,
//! `accel` in m/s², `cruise_on` is `0` or `1` and `odometer` is in km. Empty
//! cells in the optional columns mean the signal is absent for that row.
//! Columns are matched by name, so an adapter may emit them in any order and
//! may omit the optional ones entirely.

use std::collections::BTreeMap;

use thiserror::Error;

/// Header of the canonical trip CSV, in the order the exporters write it.
pub const CANONICAL_HEADER: [&str; 6] = [
    "timestamp",
    "speed",
    "lead_distance",
    "accel",
    "cruise_on",
    "odometer",
];

const REQUIRED_COLUMNS: [&str; 3] = ["timestamp", "speed", "cruise_on"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("trip log has {valid} valid sample(s); at least 2 are required")]
    EmptyLog { valid: usize },
    #[error("duplicate timestamp {timestamp} in trip log")]
    NonMonotonicTime { timestamp: f64 },
    #[error("missing required column(s): {}", missing.join(", "))]
    SchemaMismatch { missing: Vec<String> },
    #[error("line {line}: bad value {value:?} in column `{column}`: {reason}")]
    BadRow {
        line: u64,
        column: String,
        value: String,
        reason: String,
    },
    #[error("odometer decreases at timestamp {timestamp}")]
    OdometerDecreasing { timestamp: f64 },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

/// What to do with a row whose numeric cells do not parse or violate the
/// sample invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BadRowPolicy {
    #[default]
    Reject,
    Skip,
}

/// One row of decoded CAN signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    pub timestamp: f64,
    /// Ego speed in m/s.
    pub speed: f64,
    /// Longitudinal spacing to the lead vehicle in meters, `None` when no lead is detected.
    pub lead_distance: Option<f64>,
    /// Measured longitudinal acceleration in m/s², when the vehicle publishes one.
    pub accel: Option<f64>,
    pub cruise_on: bool,
    /// Odometer reading in km.
    pub odometer: Option<f64>,
}

/// All samples of a single drive, sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct TripLog {
    pub ride_id: String,
    pub samples: Vec<SignalSample>,
    pub source_meta: BTreeMap<String, String>,
    /// Rows dropped under [`BadRowPolicy::Skip`].
    pub skipped_rows: usize,
}

impl TripLog {
    pub fn start_time(&self) -> f64 {
        self.samples[0].timestamp
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].timestamp
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }
}

/// Parses canonical CSV content, rejecting the whole log on the first bad row.
pub fn parse_trip_log(bytes: &[u8], ride_id: &str) -> Result<TripLog, IngestError> {
    parse_trip_log_with(bytes, ride_id, BadRowPolicy::Reject)
}

pub fn parse_trip_log_with(
    bytes: &[u8],
    ride_id: &str,
    policy: BadRowPolicy,
) -> Result<TripLog, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = reader
        .byte_headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    let columns = ColumnMap::from_headers(&headers)?;

    let mut samples = Vec::new();
    let mut skipped_rows = 0usize;
    let mut record = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(IngestError::Csv(e.to_string())),
        }
        if record.iter().all(|cell| cell.is_empty()) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line());
        match columns.parse_row(&record, line) {
            Ok(sample) => samples.push(sample),
            Err(err) => match policy {
                BadRowPolicy::Reject => return Err(err),
                BadRowPolicy::Skip => skipped_rows += 1,
            },
        }
    }

    if samples.len() < 2 {
        return Err(IngestError::EmptyLog {
            valid: samples.len(),
        });
    }

    samples.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    for pair in samples.windows(2) {
        if pair[1].timestamp <= pair[0].timestamp {
            return Err(IngestError::NonMonotonicTime {
                timestamp: pair[1].timestamp,
            });
        }
        if let (Some(prev), Some(next)) = (pair[0].odometer, pair[1].odometer) {
            if next < prev {
                return Err(IngestError::OdometerDecreasing {
                    timestamp: pair[1].timestamp,
                });
            }
        }
    }

    Ok(TripLog {
        ride_id: ride_id.to_owned(),
        samples,
        source_meta: BTreeMap::new(),
        skipped_rows,
    })
}

struct ColumnMap {
    timestamp: usize,
    speed: usize,
    cruise_on: usize,
    lead_distance: Option<usize>,
    accel: Option<usize>,
    odometer: Option<usize>,
}

impl ColumnMap {
    fn from_headers(headers: &csv::ByteRecord) -> Result<Self, IngestError> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| strip_bom(h).eq_ignore_ascii_case(name.as_bytes()))
        };
        let missing: Vec<String> = REQUIRED_COLUMNS
            .iter()
            .filter(|c| find(c).is_none())
            .map(|c| (*c).to_owned())
            .collect();
        if !missing.is_empty() {
            return Err(IngestError::SchemaMismatch { missing });
        }
        Ok(Self {
            timestamp: find("timestamp").unwrap(),
            speed: find("speed").unwrap(),
            cruise_on: find("cruise_on").unwrap(),
            lead_distance: find("lead_distance"),
            accel: find("accel"),
            odometer: find("odometer"),
        })
    }

    fn parse_row(&self, record: &csv::ByteRecord, line: u64) -> Result<SignalSample, IngestError> {
        let cell = |idx: usize| record.get(idx).unwrap_or(b"");
        let bad = |column: &str, raw: &[u8], reason: &str| IngestError::BadRow {
            line,
            column: column.to_owned(),
            value: String::from_utf8_lossy(raw).into_owned(),
            reason: reason.to_owned(),
        };
        let required = |column: &str, idx: usize| -> Result<f64, IngestError> {
            let raw = cell(idx);
            parse_finite(raw).ok_or_else(|| bad(column, raw, "expected a finite number"))
        };
        let optional = |column: &str, idx: Option<usize>| -> Result<Option<f64>, IngestError> {
            match idx.map(cell) {
                None | Some(b"") => Ok(None),
                Some(raw) => parse_finite(raw)
                    .map(Some)
                    .ok_or_else(|| bad(column, raw, "expected a finite number or an empty cell")),
            }
        };

        let timestamp = required("timestamp", self.timestamp)?;
        let speed = required("speed", self.speed)?;
        if speed < 0.0 {
            return Err(bad("speed", cell(self.speed), "speed must be >= 0"));
        }
        let lead_distance = optional("lead_distance", self.lead_distance)?;
        if matches!(lead_distance, Some(d) if d <= 0.0) {
            return Err(bad(
                "lead_distance",
                cell(self.lead_distance.unwrap()),
                "lead distance must be > 0 (leave the cell empty when no lead is detected)",
            ));
        }
        let accel = optional("accel", self.accel)?;
        let odometer = optional("odometer", self.odometer)?;
        if matches!(odometer, Some(o) if o < 0.0) {
            return Err(bad("odometer", cell(self.odometer.unwrap()), "odometer must be >= 0"));
        }
        let cruise_on = match cell(self.cruise_on) {
            b"0" | b"false" | b"False" => false,
            b"1" | b"true" | b"True" => true,
            raw => return Err(bad("cruise_on", raw, "expected 0 or 1")),
        };

        Ok(SignalSample {
            timestamp,
            speed,
            lead_distance,
            accel,
            cruise_on,
            odometer,
        })
    }
}

fn strip_bom(h: &[u8]) -> &[u8] {
    h.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(h)
}

fn parse_finite(raw: &[u8]) -> Option<f64> {
    let s = std::str::from_utf8(raw).ok()?;
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}
