//! Trip analytics over decoded CAN-bus logs.
//!
//! A drive is ingested from the canonical trip CSV ([`ingest`]), resampled to
//! a uniform grid with derived acceleration and jerk ([`trace`]), and reduced
//! to a [`RideSummary`] of safety, fuel-efficiency and comfort indices, each
//! split by cruise-control state ([`summary`]). Summaries are kept in an
//! append-only [`RideStore`] that serves trend series and comparison reports
//! ([`report`]).

pub mod comfort;
pub mod config;
pub mod cruise;
pub mod fuel;
pub mod ingest;
pub mod jsonnum;
pub mod pipeline;
pub mod report;
pub mod safety;
pub mod store;
pub mod summary;
pub mod trace;

pub use config::{AnalysisConfig, ReportConfig, Settings};
pub use ingest::{parse_trip_log, BadRowPolicy, SignalSample, TripLog};
pub use pipeline::{analyze_csv, analyze_log, prepare_trace, AnalysisError};
pub use report::{ComparisonReport, MetricRow, Slot, TrendSeries};
pub use store::{RideStore, StoreError};
pub use summary::{summarize_trip, CruiseState, MetricTriple, RideDiagnostics, RideSummary};
pub use trace::UniformTrace;
