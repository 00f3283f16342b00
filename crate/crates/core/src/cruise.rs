//! Cruise-control state segmentation.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CruiseSegment {
    pub on: bool,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CruiseSegmentation {
    pub segments: Vec<CruiseSegment>,
    /// Share of samples with cruise engaged, percent.
    pub acc_on_percent: f64,
}

impl CruiseSegmentation {
    pub fn of_state(&self, on: bool) -> impl Iterator<Item = &CruiseSegment> {
        self.segments.iter().filter(move |s| s.on == on)
    }
}

/// Splits the cruise-state vector into maximal runs of equal state.
pub fn segment_by_cruise(cruise_on: &[bool]) -> CruiseSegmentation {
    let mut segments: Vec<CruiseSegment> = Vec::new();
    for (i, &on) in cruise_on.iter().enumerate() {
        match segments.last_mut() {
            Some(seg) if seg.on == on => seg.range.end = i + 1,
            _ => segments.push(CruiseSegment { on, range: i..i + 1 }),
        }
    }
    let on_samples = cruise_on.iter().filter(|&&c| c).count();
    let acc_on_percent = if cruise_on.is_empty() {
        0.0
    } else {
        100.0 * on_samples as f64 / cruise_on.len() as f64
    };
    CruiseSegmentation {
        segments,
        acc_on_percent,
    }
}
