//! End-to-end analysis of one trip log: parse, resample, differentiate, summarize.

use thiserror::Error;

use crate::config::AnalysisConfig;
use crate::ingest::{parse_trip_log_with, BadRowPolicy, IngestError, TripLog};
use crate::summary::{analyze_trace, TripAnalysis};
use crate::trace::{compute_jerk, derive_acceleration, resample, TraceError, UniformTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Resamples a log and fills acceleration and jerk.
pub fn prepare_trace(log: &TripLog, cfg: &AnalysisConfig) -> Result<UniformTrace, TraceError> {
    let trace = resample(log, cfg.rate_hz)?;
    Ok(compute_jerk(derive_acceleration(trace, cfg.smoothing)))
}

pub fn analyze_log(
    log: &TripLog,
    cfg: &AnalysisConfig,
    fe_history: &[f64],
) -> Result<TripAnalysis, AnalysisError> {
    let trace = prepare_trace(log, cfg)?;
    Ok(analyze_trace(&log.ride_id, &trace, cfg, fe_history))
}

/// Runs the whole pipeline on canonical CSV bytes.
pub fn analyze_csv(
    bytes: &[u8],
    ride_id: &str,
    cfg: &AnalysisConfig,
    policy: BadRowPolicy,
    fe_history: &[f64],
) -> Result<TripAnalysis, AnalysisError> {
    let log = parse_trip_log_with(bytes, ride_id, policy)?;
    analyze_log(&log, cfg, fe_history)
}
