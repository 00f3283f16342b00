//! Time headway, time-to-collision and the headway zone scheme.
//!
//! Headway is the lead spacing divided by ego speed. Samples are banded by the
//! two-second rule: `h <= 1` s is the alert zone, `1 < h <= 2` s the attention
//! zone and `h > 2` s (including infinite headway) the safe zone. The safety
//! index is the percentage of considered samples outside the alert zone.

use serde::{Deserialize, Serialize};

use crate::trace::UniformTrace;

pub const DEFAULT_V_EPS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Alert,
    Attention,
    Safe,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Alert => "alert",
            Zone::Attention => "attention",
            Zone::Safe => "safe",
        }
    }
}

/// Upper (inclusive) headway bounds of the alert and attention zones, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneBounds {
    pub alert_max: f64,
    pub attention_max: f64,
}

impl Default for ZoneBounds {
    fn default() -> Self {
        Self {
            alert_max: 1.0,
            attention_max: 2.0,
        }
    }
}

impl ZoneBounds {
    pub fn classify(&self, headway: f64) -> Zone {
        if headway <= self.alert_max {
            Zone::Alert
        } else if headway <= self.attention_max {
            Zone::Attention
        } else {
            Zone::Safe
        }
    }
}

/// How samples without a detected lead vehicle enter the zoning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoLeadPolicy {
    /// Not counted at all.
    #[default]
    Exclude,
    /// Counted as safe.
    Safe,
}

/// Per-sample headway in seconds: `None` without a lead, `+inf` when the ego
/// speed is below `v_eps`.
pub fn headway_series(trace: &UniformTrace, v_eps: f64) -> Vec<Option<f64>> {
    trace
        .lead_distance
        .iter()
        .zip(&trace.speed)
        .map(|(d, &v)| d.map(|d| headway(d, v, v_eps)))
        .collect()
}

pub fn headway(lead_distance: f64, speed: f64, v_eps: f64) -> f64 {
    if speed < v_eps {
        f64::INFINITY
    } else {
        lead_distance / speed
    }
}

/// Lead-vehicle speed estimated as ego speed plus the rate of change of the
/// spacing. Central difference inside, one-sided at the ends; `None` wherever
/// a needed spacing sample is missing.
pub fn lead_speed_series(trace: &UniformTrace) -> Vec<Option<f64>> {
    let n = trace.len();
    let d = &trace.lead_distance;
    let rate = trace.rate_hz;
    (0..n)
        .map(|i| {
            let (lo, hi) = if n < 2 {
                return None;
            } else if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let (a, b) = (d[lo]?, d[hi]?);
            d[i]?;
            let rate_of_change = (b - a) * rate / (hi - lo) as f64;
            Some(trace.speed[i] + rate_of_change)
        })
        .collect()
}

pub fn ttc(lead_distance: f64, ego_speed: f64, lead_speed: f64) -> f64 {
    if ego_speed > lead_speed {
        lead_distance / (ego_speed - lead_speed)
    } else {
        f64::INFINITY
    }
}

/// Time to collision per sample; `None` where spacing or lead speed is unknown.
pub fn ttc_series(trace: &UniformTrace, lead_speed: &[Option<f64>]) -> Vec<Option<f64>> {
    trace
        .lead_distance
        .iter()
        .zip(&trace.speed)
        .zip(lead_speed)
        .map(|((d, &v), vl)| Some(ttc((*d)?, v, (*vl)?)))
        .collect()
}

/// Running zone tally. Feeding samples one at a time yields the same result as
/// [`classify_zones`] over the whole series.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZoneCounter {
    pub alert: usize,
    pub attention: usize,
    pub safe: usize,
    pub absent: usize,
}

impl ZoneCounter {
    pub fn push(&mut self, zone: Option<Zone>) {
        match zone {
            Some(Zone::Alert) => self.alert += 1,
            Some(Zone::Attention) => self.attention += 1,
            Some(Zone::Safe) => self.safe += 1,
            None => self.absent += 1,
        }
    }

    pub fn considered(&self) -> usize {
        self.alert + self.attention + self.safe
    }

    pub fn fractions(&self) -> Option<ZoneFractions> {
        let total = self.considered();
        if total == 0 {
            return None;
        }
        let total = total as f64;
        let attention_fraction = self.attention as f64 / total;
        let safe_fraction = self.safe as f64 / total;
        Some(ZoneFractions {
            alert_fraction: self.alert as f64 / total,
            attention_fraction,
            safe_fraction,
            safety_index: 100.0 * (self.attention + self.safe) as f64 / total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneFractions {
    pub alert_fraction: f64,
    pub attention_fraction: f64,
    pub safe_fraction: f64,
    /// Percentage of considered samples in the attention or safe zones.
    pub safety_index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyZoning {
    pub fractions: ZoneFractions,
    pub considered_samples: usize,
    pub headway: Vec<Option<f64>>,
    /// Zone per sample; `None` for samples excluded from the tally.
    pub zones: Vec<Option<Zone>>,
}

impl SafetyZoning {
    pub fn safety_index(&self) -> f64 {
        self.fractions.safety_index
    }
}

/// Zone label of one headway sample under a no-lead policy.
pub fn zone_of(headway: Option<f64>, bounds: &ZoneBounds, no_lead: NoLeadPolicy) -> Option<Zone> {
    match (headway, no_lead) {
        (Some(h), _) => Some(bounds.classify(h)),
        (None, NoLeadPolicy::Safe) => Some(Zone::Safe),
        (None, NoLeadPolicy::Exclude) => None,
    }
}

/// Classifies every headway sample; `None` when no sample is considered
/// (a drive without any detected lead under the exclude policy).
pub fn classify_zones(
    headway: &[Option<f64>],
    bounds: &ZoneBounds,
    no_lead: NoLeadPolicy,
) -> Option<SafetyZoning> {
    let mut counter = ZoneCounter::default();
    let zones: Vec<Option<Zone>> = headway
        .iter()
        .map(|&h| {
            let z = zone_of(h, bounds, no_lead);
            counter.push(z);
            z
        })
        .collect();
    let fractions = counter.fractions()?;
    Some(SafetyZoning {
        fractions,
        considered_samples: counter.considered(),
        headway: headway.to_vec(),
        zones,
    })
}
