//! Fuel consumption model and fuel-efficiency index.
//!
//! The consumption rate (L/100km) is affine-quadratic in speed plus linear in
//! acceleration:
//!
//! ```text
//! FCR = a + b·V + c·V² + d·A        V in kph, A in m/s²
//! ```
//!
//! Fuel over a step of length Δd km is `Δd · FCR / 100` litres and efficiency
//! is distance over fuel, in km/L.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MPS_TO_KPH: f64 = 3.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuelError {
    #[error("trace covers zero distance; fuel efficiency is undefined")]
    ZeroDistance,
    #[error("fuel-efficiency population is empty")]
    EmptyPopulation,
    #[error("invalid fuel parameters: {0}")]
    InvalidParams(String),
}

/// Coefficients of the consumption-rate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelParams {
    /// Idle consumption, L/100km.
    pub a: f64,
    /// Rolling-resistance term, L/100km per kph.
    pub b: f64,
    /// Aerodynamic-drag term, L/100km per kph².
    pub c: f64,
    /// Acceleration term, L/100km per m/s².
    pub d: f64,
}

impl Default for FuelParams {
    fn default() -> Self {
        Self {
            a: 5.0,
            b: 0.05,
            c: 0.001,
            d: 0.2,
        }
    }
}

impl FuelParams {
    pub fn validate(&self) -> Result<(), FuelError> {
        let all_finite = [self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(FuelError::InvalidParams("coefficients must be finite".into()));
        }
        if self.a <= 0.0 {
            return Err(FuelError::InvalidParams(format!("a must be > 0, got {}", self.a)));
        }
        if self.b < 0.0 || self.c < 0.0 {
            return Err(FuelError::InvalidParams(format!(
                "b and c must be >= 0, got b={} c={}",
                self.b, self.c
            )));
        }
        Ok(())
    }
}

/// Unclamped model value, L/100km. Goes negative under hard braking.
pub fn fcr_raw(speed_kph: f64, accel: f64, p: &FuelParams) -> f64 {
    p.a + p.b * speed_kph + p.c * speed_kph * speed_kph + p.d * accel
}

/// Consumption rate in L/100km, never below zero.
pub fn fcr(speed_kph: f64, accel: f64, p: &FuelParams) -> f64 {
    fcr_raw(speed_kph, accel, p).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuelResult {
    /// Rate at every sample, L/100km.
    pub fcr: Vec<f64>,
    pub fuel_liters: f64,
    pub distance_km: f64,
    /// km/L; `None` when the trace covers no distance.
    pub fuel_efficiency: Option<f64>,
}

impl FuelResult {
    pub fn efficiency(&self) -> Result<f64, FuelError> {
        self.fuel_efficiency.ok_or(FuelError::ZeroDistance)
    }
}

/// Per-step fuel totals over the steps `i → i+1` for `i` in `steps`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FuelTally {
    pub fuel_liters: f64,
    pub distance_km: f64,
}

impl FuelTally {
    pub fn efficiency(&self) -> Option<f64> {
        (self.distance_km > 0.0 && self.fuel_liters > 0.0).then(|| self.distance_km / self.fuel_liters)
    }
}

/// Accumulates fuel over the given step starts. The rate of a step is taken
/// at its starting sample.
pub fn fuel_over_steps(
    rates: &[f64],
    distance_km: &[f64],
    steps: impl IntoIterator<Item = usize>,
) -> FuelTally {
    let mut tally = FuelTally::default();
    for i in steps {
        let dd = distance_km[i + 1] - distance_km[i];
        tally.distance_km += dd;
        tally.fuel_liters += dd * rates[i] / 100.0;
    }
    tally
}

pub fn fcr_series(speed_mps: &[f64], accel: &[f64], p: &FuelParams) -> Vec<f64> {
    speed_mps
        .iter()
        .zip(accel)
        .map(|(&v, &a)| fcr(v * MPS_TO_KPH, a, p))
        .collect()
}

/// Fuel used and efficiency over a whole trace.
pub fn fuel_result(trace: &crate::trace::UniformTrace, p: &FuelParams) -> FuelResult {
    let rates = fcr_series(&trace.speed, &trace.accel, p);
    let tally = fuel_over_steps(&rates, &trace.distance_km, 0..trace.len().saturating_sub(1));
    FuelResult {
        fuel_efficiency: tally.efficiency(),
        fuel_liters: tally.fuel_liters,
        distance_km: tally.distance_km,
        fcr: rates,
    }
}

/// Min-max scales `current` against the efficiency population, in percent.
/// A degenerate population (all equal) maps to 50.
pub fn fuel_index(population: &[f64], current: f64) -> Result<f64, FuelError> {
    let (min, max) = population
        .iter()
        .fold(None, |acc: Option<(f64, f64)>, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .ok_or(FuelError::EmptyPopulation)?;
    let min = min.min(current);
    let max = max.max(current);
    if max == min {
        return Ok(50.0);
    }
    Ok(((current - min) / (max - min) * 100.0).clamp(0.0, 100.0))
}
