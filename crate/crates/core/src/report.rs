//! Trend series and recent-vs-history comparison reports.
//!
//! Everything here is a pure function of a list of ride summaries, so a report
//! built from the on-disk store equals one built from the same summaries in
//! memory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ReportConfig;
use crate::summary::{CruiseState, MetricTriple, RideSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("ride `{0}` not found")]
    RideNotFound(String),
    #[error("unknown metric `{name}`; valid metrics: {}", valid.join(", "))]
    UnknownMetric { name: String, valid: Vec<String> },
}

/// The cruise-split metrics of a ride summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleMetric {
    SafetyIndex,
    FuelIndex,
    FuelEfficiency,
    ComfortIndex,
}

impl TripleMetric {
    pub const ALL: [TripleMetric; 4] = [
        TripleMetric::SafetyIndex,
        TripleMetric::FuelIndex,
        TripleMetric::FuelEfficiency,
        TripleMetric::ComfortIndex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TripleMetric::SafetyIndex => "safety_index",
            TripleMetric::FuelIndex => "fuel_index",
            TripleMetric::FuelEfficiency => "fuel_efficiency_kmpl",
            TripleMetric::ComfortIndex => "comfort_index",
        }
    }
}

/// One numeric slot of a metric row, e.g. `safety_index.on` or `acc_on_percent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Triple(TripleMetric, CruiseState),
    AccOnPercent,
    DurationS,
    DistanceKm,
    MeanSpeedKph,
}

impl Slot {
    /// Every published slot: the triples in table column order, then the scalars.
    pub fn all() -> Vec<Slot> {
        let mut slots: Vec<Slot> = TripleMetric::ALL
            .iter()
            .flat_map(|&m| CruiseState::ALL.iter().map(move |&s| Slot::Triple(m, s)))
            .collect();
        slots.extend([
            Slot::AccOnPercent,
            Slot::DurationS,
            Slot::DistanceKm,
            Slot::MeanSpeedKph,
        ]);
        slots
    }

    pub fn names() -> Vec<String> {
        Slot::all().iter().map(|s| s.to_string()).collect()
    }

    pub fn get(self, row: &MetricRow) -> Option<f64> {
        match self {
            Slot::Triple(m, s) => row.triple(m).get(s),
            Slot::AccOnPercent => row.acc_on_percent,
            Slot::DurationS => row.duration_s,
            Slot::DistanceKm => row.distance_km,
            Slot::MeanSpeedKph => row.mean_speed_kph,
        }
    }

    pub fn set(self, row: &mut MetricRow, value: Option<f64>) {
        let slot = match self {
            Slot::Triple(m, s) => row.triple_mut(m).slot_mut(s),
            Slot::AccOnPercent => &mut row.acc_on_percent,
            Slot::DurationS => &mut row.duration_s,
            Slot::DistanceKm => &mut row.distance_km,
            Slot::MeanSpeedKph => &mut row.mean_speed_kph,
        };
        *slot = value;
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Triple(m, s) => write!(f, "{}.{}", m.name(), s.as_str()),
            Slot::AccOnPercent => f.write_str("acc_on_percent"),
            Slot::DurationS => f.write_str("duration_s"),
            Slot::DistanceKm => f.write_str("distance_km"),
            Slot::MeanSpeedKph => f.write_str("mean_speed_kph"),
        }
    }
}

impl FromStr for Slot {
    type Err = ReportError;

    fn from_str(name: &str) -> Result<Self, Self::Err> {
        Slot::all()
            .into_iter()
            .find(|s| s.to_string() == name)
            .ok_or_else(|| ReportError::UnknownMetric {
                name: name.to_owned(),
                valid: Slot::names(),
            })
    }
}

/// The numeric content of a ride summary, every slot optional. Used for
/// averages and change rates as well as single rides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub duration_s: Option<f64>,
    pub distance_km: Option<f64>,
    pub mean_speed_kph: Option<f64>,
    pub acc_on_percent: Option<f64>,
    pub safety_index: MetricTriple,
    pub fuel_index: MetricTriple,
    pub fuel_efficiency_kmpl: MetricTriple,
    pub comfort_index: MetricTriple,
}

impl MetricRow {
    pub fn triple(&self, m: TripleMetric) -> &MetricTriple {
        match m {
            TripleMetric::SafetyIndex => &self.safety_index,
            TripleMetric::FuelIndex => &self.fuel_index,
            TripleMetric::FuelEfficiency => &self.fuel_efficiency_kmpl,
            TripleMetric::ComfortIndex => &self.comfort_index,
        }
    }

    fn triple_mut(&mut self, m: TripleMetric) -> &mut MetricTriple {
        match m {
            TripleMetric::SafetyIndex => &mut self.safety_index,
            TripleMetric::FuelIndex => &mut self.fuel_index,
            TripleMetric::FuelEfficiency => &mut self.fuel_efficiency_kmpl,
            TripleMetric::ComfortIndex => &mut self.comfort_index,
        }
    }
}

impl From<&RideSummary> for MetricRow {
    fn from(s: &RideSummary) -> Self {
        MetricRow {
            duration_s: Some(s.duration_s),
            distance_km: Some(s.distance_km),
            mean_speed_kph: Some(s.mean_speed_kph),
            acc_on_percent: Some(s.acc_on_percent),
            safety_index: s.safety_index,
            fuel_index: s.fuel_index,
            fuel_efficiency_kmpl: s.fuel_efficiency_kmpl,
            comfort_index: s.comfort_index,
        }
    }
}

/// Slot-wise mean over the rides where each slot is present; a slot absent
/// from every ride stays absent.
pub fn rolling_average<'a>(rides: impl IntoIterator<Item = &'a RideSummary>) -> MetricRow {
    let rows: Vec<MetricRow> = rides.into_iter().map(MetricRow::from).collect();
    let mut out = MetricRow::default();
    for slot in Slot::all() {
        let present: Vec<f64> = rows.iter().filter_map(|r| slot.get(r)).collect();
        let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        slot.set(&mut out, mean);
    }
    out
}

/// Percent change of `recent` relative to `baseline`; `None` for a zero or
/// missing baseline.
pub fn change_rate(recent: Option<f64>, baseline: Option<f64>) -> Option<f64> {
    let (r, b) = (recent?, baseline?);
    (b != 0.0).then(|| 100.0 * (r - b) / b)
}

pub fn change_row(recent: &MetricRow, baseline: &MetricRow) -> MetricRow {
    let mut out = MetricRow::default();
    for slot in Slot::all() {
        slot.set(&mut out, change_rate(slot.get(recent), slot.get(baseline)));
    }
    out
}

/// Rounds to one decimal for display.
pub fn display_round(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub recent: RideSummary,
    pub previous: Option<RideSummary>,
    /// Requested window size.
    pub window: usize,
    /// Rides actually averaged, oldest first.
    pub window_ride_ids: Vec<String>,
    pub rolling_avg: Option<MetricRow>,
    pub change_to_avg: Option<MetricRow>,
    pub change_to_prev: Option<MetricRow>,
}

/// Stable chronological order by `started_at`; ties keep input order.
pub fn chronological(rides: &[RideSummary]) -> Vec<&RideSummary> {
    let mut sorted: Vec<&RideSummary> = rides.iter().collect();
    sorted.sort_by(|a, b| a.started_at.total_cmp(&b.started_at));
    sorted
}

/// Compares ride `ride_id` with its predecessor and with the average of the
/// `cfg.window` rides before it. With `window_includes_recent` the window
/// ends at the ride itself instead.
pub fn comparison_report(
    rides: &[RideSummary],
    ride_id: &str,
    cfg: &ReportConfig,
) -> Result<ComparisonReport, ReportError> {
    let ordered = chronological(rides);
    let pos = ordered
        .iter()
        .position(|r| r.ride_id == ride_id)
        .ok_or_else(|| ReportError::RideNotFound(ride_id.to_owned()))?;
    let recent = ordered[pos];
    let previous = pos.checked_sub(1).map(|p| ordered[p]);

    let window = cfg.window.max(1);
    let end = if cfg.window_includes_recent { pos + 1 } else { pos };
    let start = end.saturating_sub(window);
    let in_window = &ordered[start..end];

    let recent_row = MetricRow::from(recent);
    let rolling_avg = (!in_window.is_empty()).then(|| rolling_average(in_window.iter().copied()));

    Ok(ComparisonReport {
        recent: recent.clone(),
        previous: previous.cloned(),
        window,
        window_ride_ids: in_window.iter().map(|r| r.ride_id.clone()).collect(),
        change_to_avg: rolling_avg.as_ref().map(|avg| change_row(&recent_row, avg)),
        change_to_prev: previous.map(|p| change_row(&recent_row, &MetricRow::from(p))),
        rolling_avg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    /// Position of the ride in storage order.
    pub ordinal: usize,
    pub ride_id: String,
    pub started_at: f64,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub metric_name: String,
    pub points: Vec<TrendPoint>,
}

/// One point per ride in `rides` (storage order), sorted by start time.
pub fn trend_series(rides: &[RideSummary], metric_name: &str) -> Result<TrendSeries, ReportError> {
    let slot: Slot = metric_name.parse()?;
    let mut points: Vec<TrendPoint> = rides
        .iter()
        .enumerate()
        .map(|(ordinal, r)| TrendPoint {
            ordinal,
            ride_id: r.ride_id.clone(),
            started_at: r.started_at,
            value: slot.get(&MetricRow::from(r)),
        })
        .collect();
    points.sort_by(|a, b| a.started_at.total_cmp(&b.started_at));
    Ok(TrendSeries {
        metric_name: metric_name.to_owned(),
        points,
    })
}
