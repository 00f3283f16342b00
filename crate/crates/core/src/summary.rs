//! Per-ride summaries and the diagnostic series persisted beside them.

use serde::{Deserialize, Serialize};

use crate::comfort::violation_mask;
use crate::config::AnalysisConfig;
use crate::cruise::segment_by_cruise;
use crate::fuel::{fcr_series, fuel_index, fuel_over_steps, MPS_TO_KPH};
use crate::safety::{headway_series, lead_speed_series, ttc_series, zone_of, Zone, ZoneCounter};
use crate::trace::UniformTrace;

pub const SCHEMA_VERSION: u32 = 1;

/// A scalar split by cruise state. A state that never occurs in the ride has
/// no value, which is different from a value of zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub on: Option<f64>,
    pub off: Option<f64>,
    pub all: Option<f64>,
}

impl MetricTriple {
    pub fn new(on: Option<f64>, off: Option<f64>, all: Option<f64>) -> Self {
        Self { on, off, all }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(Some(v), Some(v), Some(v))
    }

    pub fn get(&self, state: CruiseState) -> Option<f64> {
        match state {
            CruiseState::On => self.on,
            CruiseState::Off => self.off,
            CruiseState::All => self.all,
        }
    }

    pub fn slot_mut(&mut self, state: CruiseState) -> &mut Option<f64> {
        match state {
            CruiseState::On => &mut self.on,
            CruiseState::Off => &mut self.off,
            CruiseState::All => &mut self.all,
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::new(self.on.map(&mut f), self.off.map(&mut f), self.all.map(&mut f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CruiseState {
    On,
    Off,
    All,
}

impl CruiseState {
    pub const ALL: [CruiseState; 3] = [CruiseState::On, CruiseState::Off, CruiseState::All];

    pub fn as_str(self) -> &'static str {
        match self {
            CruiseState::On => "on",
            CruiseState::Off => "off",
            CruiseState::All => "all",
        }
    }

    pub fn includes(self, cruise_on: bool) -> bool {
        match self {
            CruiseState::On => cruise_on,
            CruiseState::Off => !cruise_on,
            CruiseState::All => true,
        }
    }
}

impl std::str::FromStr for CruiseState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(CruiseState::On),
            "off" => Ok(CruiseState::Off),
            "all" => Ok(CruiseState::All),
            other => Err(format!("unknown cruise state `{other}` (expected on, off or all)")),
        }
    }
}

/// Headway zone occupancy as fractions of considered samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneOccupancy {
    pub alert: MetricTriple,
    pub attention: MetricTriple,
    pub safe: MetricTriple,
}

/// Aggregate of one drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideSummary {
    pub ride_id: String,
    /// Timestamp of the first sample, seconds since the Unix epoch.
    pub started_at: f64,
    pub duration_s: f64,
    pub distance_km: f64,
    pub mean_speed_kph: f64,
    pub acc_on_percent: f64,
    pub safety_index: MetricTriple,
    pub fuel_index: MetricTriple,
    pub fuel_efficiency_kmpl: MetricTriple,
    pub comfort_index: MetricTriple,
    #[serde(default)]
    pub zone_fractions: ZoneOccupancy,
    #[serde(default)]
    pub fuel_liters: MetricTriple,
    pub schema_version: u32,
}

impl RideSummary {
    /// Canonical serialized form, as stored on disk.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Present fuel-efficiency values, the ride's contribution to the
    /// fuel-index population.
    pub fn fe_values(&self) -> impl Iterator<Item = f64> + '_ {
        CruiseState::ALL
            .into_iter()
            .filter_map(|s| self.fuel_efficiency_kmpl.get(s))
    }
}

/// Per-sample series behind a summary, for plotting and export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideDiagnostics {
    pub ride_id: String,
    pub rate_hz: f64,
    /// Sample stride relative to the analysis grid; 1 at full resolution.
    pub stride: usize,
    pub t: Vec<f64>,
    pub speed_mps: Vec<f64>,
    pub cruise_on: Vec<bool>,
    /// Seconds; `"inf"` when the ego is stationary behind a lead, `null` without a lead.
    #[serde(with = "crate::jsonnum::opt_vec")]
    pub headway: Vec<Option<f64>>,
    pub zone: Vec<Option<Zone>>,
    #[serde(with = "crate::jsonnum::opt_vec")]
    pub ttc: Vec<Option<f64>>,
    pub accel: Vec<f64>,
    pub jerk: Vec<f64>,
    /// L/100km
    pub fcr: Vec<f64>,
    pub distance_km: Vec<f64>,
    pub violation: Vec<bool>,
}

impl RideDiagnostics {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Keeps every `stride`-th sample, starting from the first, with the
    /// smallest stride that leaves at most `max_points` samples.
    pub fn downsample(&self, max_points: usize) -> RideDiagnostics {
        let n = self.len();
        let max_points = max_points.max(1);
        let stride = n.div_ceil(max_points).max(1);
        fn pick<T: Clone>(v: &[T], stride: usize) -> Vec<T> {
            v.iter().step_by(stride).cloned().collect()
        }
        RideDiagnostics {
            ride_id: self.ride_id.clone(),
            rate_hz: self.rate_hz,
            stride: self.stride * stride,
            t: pick(&self.t, stride),
            speed_mps: pick(&self.speed_mps, stride),
            cruise_on: pick(&self.cruise_on, stride),
            headway: pick(&self.headway, stride),
            zone: pick(&self.zone, stride),
            ttc: pick(&self.ttc, stride),
            accel: pick(&self.accel, stride),
            jerk: pick(&self.jerk, stride),
            fcr: pick(&self.fcr, stride),
            distance_km: pick(&self.distance_km, stride),
            violation: pick(&self.violation, stride),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripAnalysis {
    pub summary: RideSummary,
    pub diagnostics: RideDiagnostics,
}

/// Computes the ride summary.
///
/// `fe_history` holds the fuel-efficiency values of previously stored rides;
/// together with this ride's own values it forms the min-max population of
/// the fuel index.
pub fn summarize_trip(
    ride_id: &str,
    trace: &UniformTrace,
    cfg: &AnalysisConfig,
    fe_history: &[f64],
) -> RideSummary {
    analyze_trace(ride_id, trace, cfg, fe_history).summary
}

pub fn analyze_trace(
    ride_id: &str,
    trace: &UniformTrace,
    cfg: &AnalysisConfig,
    fe_history: &[f64],
) -> TripAnalysis {
    let n = trace.len();
    let headway = headway_series(trace, cfg.v_eps);
    let zones: Vec<Option<Zone>> = headway
        .iter()
        .map(|&h| zone_of(h, &cfg.zones, cfg.no_lead))
        .collect();
    let violation = violation_mask(&trace.accel, &trace.jerk, &cfg.comfort);
    let rates = fcr_series(&trace.speed, &trace.accel, &cfg.fuel);
    let lead_speed = lead_speed_series(trace);
    let ttc = ttc_series(trace, &lead_speed);
    let cruise = segment_by_cruise(&trace.cruise_on);

    let mut safety_index = MetricTriple::default();
    let mut occupancy = ZoneOccupancy::default();
    let mut comfort_index = MetricTriple::default();
    let mut fuel_liters = MetricTriple::default();
    let mut fuel_efficiency = MetricTriple::default();

    for state in CruiseState::ALL {
        let members = || (0..n).filter(move |&i| state.includes(trace.cruise_on[i]));
        let samples = members().count();
        if samples == 0 {
            continue;
        }

        let mut counter = ZoneCounter::default();
        members().for_each(|i| counter.push(zones[i]));
        if let Some(f) = counter.fractions() {
            *safety_index.slot_mut(state) = Some(f.safety_index);
            *occupancy.alert.slot_mut(state) = Some(f.alert_fraction);
            *occupancy.attention.slot_mut(state) = Some(f.attention_fraction);
            *occupancy.safe.slot_mut(state) = Some(f.safe_fraction);
        }

        let violations = members().filter(|&i| violation[i]).count();
        *comfort_index.slot_mut(state) = Some(100.0 * (1.0 - violations as f64 / samples as f64));

        let tally = fuel_over_steps(&rates, &trace.distance_km, members().filter(|&i| i + 1 < n));
        *fuel_liters.slot_mut(state) = Some(tally.fuel_liters);
        *fuel_efficiency.slot_mut(state) = tally.efficiency();
    }

    let population: Vec<f64> = fe_history
        .iter()
        .copied()
        .chain(CruiseState::ALL.iter().filter_map(|&s| fuel_efficiency.get(s)))
        .collect();
    let fuel_idx = MetricTriple::new(
        fuel_efficiency.on.and_then(|v| fuel_index(&population, v).ok()),
        fuel_efficiency.off.and_then(|v| fuel_index(&population, v).ok()),
        fuel_efficiency.all.and_then(|v| fuel_index(&population, v).ok()),
    );

    let mean_speed_kph = trace.speed.iter().sum::<f64>() / n as f64 * MPS_TO_KPH;

    let summary = RideSummary {
        ride_id: ride_id.to_owned(),
        started_at: trace.t0,
        duration_s: trace.duration_s(),
        distance_km: trace.total_distance_km(),
        mean_speed_kph,
        acc_on_percent: cruise.acc_on_percent,
        safety_index,
        fuel_index: fuel_idx,
        fuel_efficiency_kmpl: fuel_efficiency,
        comfort_index,
        zone_fractions: occupancy,
        fuel_liters,
        schema_version: SCHEMA_VERSION,
    };

    let diagnostics = RideDiagnostics {
        ride_id: ride_id.to_owned(),
        rate_hz: trace.rate_hz,
        stride: 1,
        t: (0..n).map(|i| trace.time(i)).collect(),
        speed_mps: trace.speed.clone(),
        cruise_on: trace.cruise_on.clone(),
        headway,
        zone: zones,
        ttc,
        accel: trace.accel.clone(),
        jerk: trace.jerk.clone(),
        fcr: rates,
        distance_km: trace.distance_km.clone(),
        violation,
    };

    TripAnalysis {
        summary,
        diagnostics,
    }
}
