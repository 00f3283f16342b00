//! Longitudinal ride comfort from acceleration and jerk thresholds.

use serde::{Deserialize, Serialize};

use crate::trace::UniformTrace;

/// A sample is uncomfortable when `A > a_hi`, `A < a_lo`, `J > j_abs` or `J < −j_abs`.
/// All comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortThresholds {
    pub a_hi: f64,
    pub a_lo: f64,
    pub j_abs: f64,
}

impl Default for ComfortThresholds {
    fn default() -> Self {
        Self {
            a_hi: 2.0,
            a_lo: -3.5,
            j_abs: 5.0,
        }
    }
}

impl ComfortThresholds {
    pub fn violates(&self, accel: f64, jerk: f64) -> bool {
        accel > self.a_hi || accel < self.a_lo || jerk > self.j_abs || jerk < -self.j_abs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComfortResult {
    pub discomfort_fraction: f64,
    pub comfort_index: f64,
    pub violation_mask: Vec<bool>,
}

pub fn violation_mask(accel: &[f64], jerk: &[f64], th: &ComfortThresholds) -> Vec<bool> {
    accel.iter().zip(jerk).map(|(&a, &j)| th.violates(a, j)).collect()
}

/// Comfort over parallel acceleration and jerk series; `None` for empty input.
pub fn comfort_over(accel: &[f64], jerk: &[f64], th: &ComfortThresholds) -> Option<ComfortResult> {
    if accel.is_empty() {
        return None;
    }
    let violation_mask = violation_mask(accel, jerk, th);
    let violations = violation_mask.iter().filter(|&&v| v).count();
    let discomfort_fraction = violations as f64 / violation_mask.len() as f64;
    Some(ComfortResult {
        discomfort_fraction,
        comfort_index: 100.0 * (1.0 - discomfort_fraction),
        violation_mask,
    })
}

pub fn comfort_result(trace: &UniformTrace, th: &ComfortThresholds) -> ComfortResult {
    comfort_over(&trace.accel, &trace.jerk, th).expect("trace has at least one sample")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_trace_is_fully_comfortable() {
        let r = comfort_over(&[0.0; 30], &[0.0; 30], &ComfortThresholds::default()).unwrap();
        assert_eq!(r.comfort_index, 100.0);
        assert_eq!(r.discomfort_fraction, 0.0);
    }

    #[test]
    fn ten_percent_hard_acceleration() {
        let accel: Vec<f64> = (0..100).map(|i| if i % 10 == 0 { 3.0 } else { 0.0 }).collect();
        let r = comfort_over(&accel, &[0.0; 100], &ComfortThresholds::default()).unwrap();
        assert!((r.comfort_index - 90.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds_are_strict() {
        let th = ComfortThresholds::default();
        assert!(!th.violates(2.0, 0.0));
        assert!(!th.violates(-3.5, 0.0));
        assert!(!th.violates(0.0, 5.0));
        assert!(!th.violates(0.0, -5.0));
        assert!(th.violates(2.0001, 0.0));
        assert!(th.violates(-3.5001, 0.0));
        assert!(th.violates(0.0, 5.0001));
        assert!(th.violates(0.0, -5.0001));
    }
}
