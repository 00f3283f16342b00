//! Uniform-rate kinematic traces built from irregular trip logs.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TripLog;

pub const DEFAULT_RATE_HZ: f64 = 10.0;
pub const MIN_RATE_HZ: f64 = 1.0;
pub const MAX_RATE_HZ: f64 = 100.0;

// Bracketing weights closer than this to 0 or 1 snap onto the raw sample, so
// a grid point that coincides with a raw timestamp (up to round-off) reads that
// sample alone.
const SNAP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("resample rate {0} Hz is outside [1, 100]")]
    InvalidRate(f64),
    #[error("trip of {duration_s} s yields fewer than 2 grid points at {rate_hz} Hz")]
    DurationTooShort { duration_s: f64, rate_hz: f64 },
}

/// A trip resampled onto a fixed-rate grid starting at `t0`.
///
/// All per-sample vectors have the same length. `accel` and `jerk` are zero
/// until [`derive_acceleration`] and [`compute_jerk`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTrace {
    pub rate_hz: f64,
    pub t0: f64,
    /// m/s
    pub speed: Vec<f64>,
    /// meters, `None` where no lead vehicle is known on both sides of the grid point
    pub lead_distance: Vec<Option<f64>>,
    /// Measured acceleration interpolated from the log, where the log carried it.
    pub measured_accel: Vec<Option<f64>>,
    /// m/s²
    pub accel: Vec<f64>,
    /// m/s³
    pub jerk: Vec<f64>,
    pub cruise_on: Vec<bool>,
    /// Cumulative distance since `t0`, km.
    pub distance_km: Vec<f64>,
}

impl UniformTrace {
    /// Builds a trace directly on a uniform grid. Distance is the trapezoidal
    /// integral of `speed`; acceleration and jerk start at zero.
    pub fn from_speed(
        rate_hz: f64,
        t0: f64,
        speed: Vec<f64>,
        lead_distance: Vec<Option<f64>>,
        cruise_on: Vec<bool>,
    ) -> Self {
        let n = speed.len();
        assert_eq!(lead_distance.len(), n, "lead_distance length");
        assert_eq!(cruise_on.len(), n, "cruise_on length");
        let dt = 1.0 / rate_hz;
        let mut distance_km = Vec::with_capacity(n);
        let mut meters = 0.0;
        for i in 0..n {
            if i > 0 {
                meters += 0.5 * (speed[i - 1] + speed[i]) * dt;
            }
            distance_km.push(meters / 1000.0);
        }
        Self {
            rate_hz,
            t0,
            speed,
            lead_distance,
            measured_accel: vec![None; n],
            accel: vec![0.0; n],
            jerk: vec![0.0; n],
            cruise_on,
            distance_km,
        }
    }

    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    /// Time of grid point `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 / self.rate_hz
    }

    pub fn total_distance_km(&self) -> f64 {
        self.distance_km.last().copied().unwrap_or(0.0)
    }

    /// Copies the samples in `range` into a new trace, rebasing time and distance.
    pub fn slice(&self, range: Range<usize>) -> UniformTrace {
        let base = self.distance_km[range.start];
        UniformTrace {
            rate_hz: self.rate_hz,
            t0: self.time(range.start),
            speed: self.speed[range.clone()].to_vec(),
            lead_distance: self.lead_distance[range.clone()].to_vec(),
            measured_accel: self.measured_accel[range.clone()].to_vec(),
            accel: self.accel[range.clone()].to_vec(),
            jerk: self.jerk[range.clone()].to_vec(),
            cruise_on: self.cruise_on[range.clone()].to_vec(),
            distance_km: self.distance_km[range].iter().map(|d| d - base).collect(),
        }
    }
}

/// Resamples a trip log onto a uniform grid at `rate_hz`.
///
/// Speed, lead distance, measured acceleration and odometer are linearly
/// interpolated; cruise state is held from the latest raw sample at or before
/// each grid point. Lead distance is absent wherever either bracketing raw
/// sample lacks it. Without a complete odometer column, distance is the exact
/// integral of the piecewise-linear raw speed.
pub fn resample(log: &TripLog, rate_hz: f64) -> Result<UniformTrace, TraceError> {
    if !(MIN_RATE_HZ..=MAX_RATE_HZ).contains(&rate_hz) {
        return Err(TraceError::InvalidRate(rate_hz));
    }
    let samples = &log.samples;
    let t0 = log.start_time();
    let duration_s = log.duration();
    let n = (duration_s * rate_hz + 1e-9).floor() as usize + 1;
    if samples.len() < 2 || n < 2 {
        return Err(TraceError::DurationTooShort {
            duration_s,
            rate_hz,
        });
    }

    let rel: Vec<f64> = samples.iter().map(|s| s.timestamp - t0).collect();
    let last = rel.len() - 1;

    // Cumulative trapezoid of raw speed, meters.
    let mut cum_m = Vec::with_capacity(rel.len());
    cum_m.push(0.0);
    for k in 1..rel.len() {
        let step = 0.5 * (samples[k - 1].speed + samples[k].speed) * (rel[k] - rel[k - 1]);
        cum_m.push(cum_m[k - 1] + step);
    }
    let odometer_complete = samples.iter().all(|s| s.odometer.is_some());
    let odo0 = samples[0].odometer.unwrap_or(0.0);

    let mut speed = Vec::with_capacity(n);
    let mut lead_distance = Vec::with_capacity(n);
    let mut measured_accel = Vec::with_capacity(n);
    let mut cruise_on = Vec::with_capacity(n);
    let mut distance_km = Vec::with_capacity(n);

    let mut lo = 0usize;
    for i in 0..n {
        let t = i as f64 / rate_hz;
        while lo + 1 < last && rel[lo + 1] <= t {
            lo += 1;
        }
        let span = rel[lo + 1] - rel[lo];
        let mut w = ((t - rel[lo]) / span).clamp(0.0, 1.0);
        if w < SNAP {
            w = 0.0;
        } else if w > 1.0 - SNAP {
            w = 1.0;
        }
        let a = &samples[lo];
        let z = &samples[lo + 1];

        let v = lerp(a.speed, z.speed, w);
        speed.push(v);
        lead_distance.push(lerp_opt(a.lead_distance, z.lead_distance, w));
        measured_accel.push(lerp_opt(a.accel, z.accel, w));
        cruise_on.push(if w >= 1.0 { z.cruise_on } else { a.cruise_on });

        let d_km = if odometer_complete {
            lerp(a.odometer.unwrap(), z.odometer.unwrap(), w) - odo0
        } else {
            let partial = 0.5 * (a.speed + v) * (w * span);
            (cum_m[lo] + partial) / 1000.0
        };
        distance_km.push(d_km);
    }
    // Guard against round-off making the cumulative series dip.
    for i in 1..n {
        if distance_km[i] < distance_km[i - 1] {
            distance_km[i] = distance_km[i - 1];
        }
    }
    distance_km[0] = 0.0;

    Ok(UniformTrace {
        rate_hz,
        t0,
        speed,
        lead_distance,
        measured_accel,
        accel: vec![0.0; n],
        jerk: vec![0.0; n],
        cruise_on,
        distance_km,
    })
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        a
    } else if w == 1.0 {
        b
    } else {
        a + (b - a) * w
    }
}

fn lerp_opt(a: Option<f64>, b: Option<f64>, w: f64) -> Option<f64> {
    match (w, a, b) {
        (w, Some(a), _) if w == 0.0 => Some(a),
        (w, _, Some(b)) if w == 1.0 => Some(b),
        (w, Some(a), Some(b)) => Some(lerp(a, b, w)),
        _ => None,
    }
}

/// Moving-average smoothing applied to acceleration before jerk is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccelSmoothing {
    /// Odd window length in samples.
    pub window: usize,
}

impl Default for AccelSmoothing {
    fn default() -> Self {
        Self { window: 5 }
    }
}

/// Fills `accel`: measured acceleration where the log supplied it, otherwise
/// the derivative of speed. Optionally smoothed.
pub fn derive_acceleration(mut trace: UniformTrace, smoothing: Option<AccelSmoothing>) -> UniformTrace {
    let derived = differentiate(&trace.speed, trace.dt());
    let mut accel: Vec<f64> = trace
        .measured_accel
        .iter()
        .zip(derived)
        .map(|(m, d)| m.unwrap_or(d))
        .collect();
    if let Some(s) = smoothing {
        accel = moving_average(&accel, s.window);
    }
    trace.accel = accel;
    trace
}

/// Fills `jerk` with the time derivative of `accel`.
pub fn compute_jerk(mut trace: UniformTrace) -> UniformTrace {
    trace.jerk = differentiate(&trace.accel, trace.dt());
    trace
}

/// Finite-difference derivative on a uniform grid with spacing `dt`.
///
/// Interior points use the central difference `(x[i+1] − x[i−1]) / 2dt`.
/// With three or more points the ends use the second-order one-sided
/// differences `(−3x₀ + 4x₁ − x₂) / 2dt` and `(3xₙ − 4xₙ₋₁ + xₙ₋₂) / 2dt`;
/// with two points both ends get the plain forward difference.
pub fn differentiate(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => {
            let d = (values[1] - values[0]) / dt;
            vec![d, d]
        }
        _ => {
            let mut out = Vec::with_capacity(n);
            out.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt));
            for i in 1..n - 1 {
                out.push((values[i + 1] - values[i - 1]) / (2.0 * dt));
            }
            out.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt));
            out
        }
    }
}

/// Centered moving average; the window shrinks to the available samples at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    if half == 0 || values.is_empty() {
        return values.to_vec();
    }
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SignalSample, TripLog};

    fn log_of(points: &[(f64, f64)]) -> TripLog {
        TripLog {
            ride_id: "t".into(),
            samples: points
                .iter()
                .map(|&(t, v)| SignalSample {
                    timestamp: t,
                    speed: v,
                    lead_distance: None,
                    accel: None,
                    cruise_on: false,
                    odometer: None,
                })
                .collect(),
            source_meta: Default::default(),
            skipped_rows: 0,
        }
    }

    #[test]
    fn constant_speed_grid_and_distance() {
        let log = log_of(&[(0.0, 20.0), (4.0, 20.0), (10.0, 20.0)]);
        let trace = resample(&log, 10.0).unwrap();
        assert_eq!(trace.len(), 101);
        assert!((trace.total_distance_km() - 0.2).abs() < 1e-12);
        assert!(trace.speed.iter().all(|&v| v == 20.0));
    }

    #[test]
    fn midpoint_interpolation() {
        let log = log_of(&[(0.0, 0.0), (1.0, 10.0)]);
        let trace = resample(&log, 10.0).unwrap();
        assert!((trace.speed[5] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rate_bounds_and_short_duration() {
        let log = log_of(&[(0.0, 0.0), (1.0, 10.0)]);
        assert_eq!(resample(&log, 0.5), Err(TraceError::InvalidRate(0.5)));
        assert_eq!(resample(&log, 101.0), Err(TraceError::InvalidRate(101.0)));
        let short = log_of(&[(0.0, 0.0), (0.05, 1.0)]);
        assert!(matches!(
            resample(&short, 10.0),
            Err(TraceError::DurationTooShort { .. })
        ));
    }

    #[test]
    fn lead_distance_gaps_are_not_bridged() {
        let mut log = log_of(&[(0.0, 10.0), (1.0, 10.0), (2.0, 10.0)]);
        log.samples[0].lead_distance = Some(30.0);
        log.samples[2].lead_distance = Some(40.0);
        let trace = resample(&log, 2.0).unwrap();
        // grid: 0, 0.5, 1.0, 1.5, 2.0
        assert_eq!(
            trace.lead_distance,
            vec![Some(30.0), None, None, None, Some(40.0)]
        );
    }

    #[test]
    fn cruise_is_zero_order_hold() {
        let mut log = log_of(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]);
        log.samples[1].cruise_on = true;
        let trace = resample(&log, 4.0).unwrap();
        // grid 0, .25, .5, .75, 1, 1.25, 1.5, 1.75, 2
        assert_eq!(
            trace.cruise_on,
            vec![false, false, false, false, true, true, true, true, false]
        );
    }

    #[test]
    fn odometer_used_when_complete() {
        let mut log = log_of(&[(0.0, 10.0), (10.0, 10.0)]);
        log.samples[0].odometer = Some(1000.0);
        log.samples[1].odometer = Some(1000.5);
        let trace = resample(&log, 1.0).unwrap();
        assert!((trace.total_distance_km() - 0.5).abs() < 1e-9);
        assert!((trace.distance_km[5] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn ramp_acceleration_and_constant_speed() {
        let speed: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let n = speed.len();
        let trace = UniformTrace::from_speed(10.0, 0.0, speed, vec![None; n], vec![false; n]);
        let trace = derive_acceleration(trace, None);
        assert!(trace.accel.iter().all(|a| (a - 1.0).abs() < 1e-9));

        let trace = UniformTrace::from_speed(10.0, 0.0, vec![7.0; 50], vec![None; 50], vec![false; 50]);
        let trace = derive_acceleration(trace, Some(AccelSmoothing::default()));
        assert!(trace.accel.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn measured_accel_takes_precedence() {
        let mut trace = UniformTrace::from_speed(10.0, 0.0, vec![5.0; 4], vec![None; 4], vec![false; 4]);
        trace.measured_accel = vec![Some(1.5), None, Some(-2.0), None];
        let trace = derive_acceleration(trace, None);
        assert_eq!(trace.accel, vec![1.5, 0.0, -2.0, 0.0]);
    }

    #[test]
    fn jerk_of_constant_and_ramp_accel() {
        let mut trace = UniformTrace::from_speed(10.0, 0.0, vec![0.0; 11], vec![None; 11], vec![false; 11]);
        trace.accel = vec![1.0; 11];
        assert!(compute_jerk(trace.clone()).jerk.iter().all(|&j| j == 0.0));
        trace.accel = (0..=10).map(|i| i as f64 * 0.5).collect();
        let jerk = compute_jerk(trace).jerk;
        assert!(jerk.iter().all(|j| (j - 5.0).abs() < 1e-9), "{jerk:?}");
    }

    #[test]
    fn moving_average_shrinks_at_edges() {
        let out = moving_average(&[0.0, 0.0, 10.0, 0.0, 0.0], 3);
        assert_eq!(out, vec![0.0, 10.0 / 3.0, 10.0 / 3.0, 10.0 / 3.0, 0.0]);
        assert_eq!(moving_average(&[1.0, 2.0], 1), vec![1.0, 2.0]);
    }

    #[test]
    fn two_point_derivative() {
        assert_eq!(differentiate(&[1.0, 3.0], 0.5), vec![4.0, 4.0]);
        assert_eq!(differentiate(&[1.0], 0.5), vec![0.0]);
    }

    #[test]
    fn slice_rebases_distance() {
        let trace = UniformTrace::from_speed(1.0, 5.0, vec![10.0; 5], vec![None; 5], vec![false; 5]);
        let s = trace.slice(2..5);
        assert_eq!(s.t0, 7.0);
        assert_eq!(s.distance_km[0], 0.0);
        assert!((s.total_distance_km() - 0.02).abs() < 1e-12);
    }
}
