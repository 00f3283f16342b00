//! Local HTTP/1.1 JSON API over a ride store.
//!
//! Routing lives in [`App::handle`], which maps an [`ApiRequest`] to an
//! [`ApiResponse`] without touching a socket; [`Server`] feeds it from a
//! `tiny_http` listener on a pool of worker threads. Endpoint schemas are
//! documented in `docs/api.md`.

mod multipart;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;

use drivefit_core::config::ConfigError;
use drivefit_core::ingest::IngestError;
use drivefit_core::report::ReportError;
use drivefit_core::trace::TraceError;
use drivefit_core::{
    analyze_csv, AnalysisConfig, AnalysisError, BadRowPolicy, ReportConfig, RideDiagnostics,
    RideStore, RideSummary, Settings, Slot, StoreError,
};
use serde::Serialize;
use thiserror::Error;

/// Per-series point cap for `GET /rides/{id}`.
pub const MAX_SERIES_POINTS: usize = 2000;
pub const DEFAULT_WORKERS: usize = 4;
pub const DEFAULT_MAX_BODY_BYTES: usize = 512 * 1024 * 1024;
const MAX_WINDOW: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub bind: String,
    /// `None` keeps rides in memory only.
    pub store: Option<PathBuf>,
    pub analysis: AnalysisConfig,
    pub report: ReportConfig,
    pub workers: usize,
    pub max_body_bytes: usize,
}

impl ApiConfig {
    /// Validated service configuration from merged settings.
    pub fn from_settings(settings: &Settings) -> Result<Self, ConfigError> {
        settings.validate()?;
        Ok(ApiConfig {
            bind: settings.bind.clone(),
            store: settings.store.clone(),
            analysis: settings.analysis.clone(),
            report: settings.report,
            workers: DEFAULT_WORKERS,
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
        })
    }
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self::from_settings(&Settings::default()).expect("defaults are valid")
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {bind}: {message}")]
    Bind { bind: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: String,
    /// Path plus optional query string, as on the request line.
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn get(url: &str) -> Self {
        ApiRequest {
            method: "GET".into(),
            url: url.into(),
            headers: Vec::new(),
            body: Vec::new(),
        }
    }

    pub fn post(url: &str, body: impl Into<Vec<u8>>) -> Self {
        ApiRequest {
            method: "POST".into(),
            url: url.into(),
            headers: Vec::new(),
            body: body.into(),
        }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        find_header(&self.headers, name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        find_header(&self.headers, name)
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).expect("response body is JSON")
    }

    fn json_body(status: u16, body: Vec<u8>) -> Self {
        ApiResponse {
            status,
            headers: vec![("Content-Type".into(), "application/json".into())],
            body,
        }
    }

    fn ok<T: Serialize>(value: &T) -> Self {
        Self::json_body(200, serde_json::to_vec(value).expect("response serializes"))
    }

    fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self::error_with(status, code, message, None)
    }

    fn error_with(status: u16, code: &str, message: impl Into<String>, valid: Option<Vec<String>>) -> Self {
        let body = ErrorBody {
            error: code,
            message: message.into(),
            valid,
        };
        Self::json_body(status, serde_json::to_vec(&body).expect("error serializes"))
    }
}

fn find_header<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(name))
        .map(|(_, v)| v.as_str())
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    valid: Option<Vec<String>>,
}

/// Entry of `GET /rides`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RideHeader {
    pub ride_id: String,
    pub started_at: f64,
    pub duration_s: f64,
    pub distance_km: f64,
    pub acc_on_percent: f64,
    pub safety_index_all: Option<f64>,
    pub fuel_index_all: Option<f64>,
    pub fuel_efficiency_kmpl_all: Option<f64>,
    pub comfort_index_all: Option<f64>,
}

impl From<&RideSummary> for RideHeader {
    fn from(s: &RideSummary) -> Self {
        RideHeader {
            ride_id: s.ride_id.clone(),
            started_at: s.started_at,
            duration_s: s.duration_s,
            distance_km: s.distance_km,
            acc_on_percent: s.acc_on_percent,
            safety_index_all: s.safety_index.all,
            fuel_index_all: s.fuel_index.all,
            fuel_efficiency_kmpl_all: s.fuel_efficiency_kmpl.all,
            comfort_index_all: s.comfort_index.all,
        }
    }
}

/// Body of `GET /rides/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RideDetail {
    pub summary: RideSummary,
    pub diagnostics: Option<RideDiagnostics>,
}

/// Shared service state: the store behind a reader-writer lock, plus a gate
/// that serializes ingests so each one sees the fuel-efficiency population
/// it will be appended after.
pub struct App {
    store: RwLock<RideStore>,
    ingest_gate: Mutex<()>,
    config: ApiConfig,
}

impl App {
    pub fn new(store: RideStore, config: ApiConfig) -> Self {
        App {
            store: RwLock::new(store),
            ingest_gate: Mutex::new(()),
            config,
        }
    }

    /// Opens the configured store, or an in-memory one.
    pub fn open(config: ApiConfig) -> Result<Self, StoreError> {
        let store = match &config.store {
            Some(path) => RideStore::open(path)?,
            None => RideStore::in_memory(),
        };
        Ok(Self::new(store, config))
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    /// Read access to the store, e.g. for tests comparing layers.
    pub fn with_store<T>(&self, f: impl FnOnce(&RideStore) -> T) -> T {
        f(&self.store.read().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        let (path, query) = match req.url.split_once('?') {
            Some((p, q)) => (p, q),
            None => (req.url.as_str(), ""),
        };
        let query: Vec<(String, String)> = form_urlencoded::parse(query.as_bytes()).into_owned().collect();
        let segments: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        let method = req.method.as_str();

        let (allowed, response) = match segments.as_slice() {
            ["rides"] => ("GET", (method == "GET").then(|| self.list_rides())),
            ["rides", id] => ("GET", (method == "GET").then(|| self.ride_detail(id))),
            ["rides", id, "comparison"] => ("GET", (method == "GET").then(|| self.comparison(id, &query))),
            ["trends"] => ("GET", (method == "GET").then(|| self.trends(&query))),
            ["ingest"] => ("POST", (method == "POST").then(|| self.ingest(req, &query))),
            _ => return ApiResponse::error(404, "NotFound", format!("no route for {path}")),
        };
        match response {
            None => {
                let mut r = ApiResponse::error(405, "MethodNotAllowed", format!("{path} accepts {allowed}"));
                r.headers.push(("Allow".into(), allowed.into()));
                r
            }
            Some(r) if method == "GET" => with_etag(r, req),
            Some(r) => r,
        }
    }

    fn list_rides(&self) -> ApiResponse {
        let store = self.store.read().unwrap_or_else(|e| e.into_inner());
        let headers: Vec<RideHeader> = store.chronological().into_iter().map(RideHeader::from).collect();
        let mut r = ApiResponse::ok(&headers);
        // rides are immutable, so the manifest determines this body
        r.headers.push(("ETag".into(), store.etag()));
        r
    }

    fn ride_detail(&self, id: &str) -> ApiResponse {
        let store = self.store.read().unwrap_or_else(|e| e.into_inner());
        let Some(summary) = store.get(id) else {
            return not_found(id);
        };
        let diagnostics = match store.diagnostics(id) {
            Ok(d) => d.map(|d| d.downsample(MAX_SERIES_POINTS)),
            Err(e) => return store_error(e),
        };
        ApiResponse::ok(&RideDetail {
            summary: summary.clone(),
            diagnostics,
        })
    }

    fn comparison(&self, id: &str, query: &[(String, String)]) -> ApiResponse {
        let mut cfg = self.config.report;
        if let Some(w) = param(query, "window") {
            match w.parse::<usize>() {
                Ok(n) if (1..=MAX_WINDOW).contains(&n) => cfg.window = n,
                _ => {
                    return ApiResponse::error(
                        400,
                        "BadRequest",
                        format!("window must be an integer in 1..={MAX_WINDOW}, got {w:?}"),
                    )
                }
            }
        }
        let store = self.store.read().unwrap_or_else(|e| e.into_inner());
        match store.comparison_report(id, &cfg) {
            Ok(report) => ApiResponse::ok(&report),
            Err(e) => report_error(e),
        }
    }

    fn trends(&self, query: &[(String, String)]) -> ApiResponse {
        let Some(metric) = param(query, "metric") else {
            return ApiResponse::error_with(400, "BadRequest", "missing `metric` parameter", Some(Slot::names()));
        };
        let store = self.store.read().unwrap_or_else(|e| e.into_inner());
        match store.trend_series(metric) {
            Ok(series) => ApiResponse::ok(&series),
            Err(e) => report_error(e),
        }
    }

    fn ingest(&self, req: &ApiRequest, query: &[(String, String)]) -> ApiResponse {
        if req.body.len() > self.config.max_body_bytes {
            return ApiResponse::error(413, "PayloadTooLarge", "request body exceeds the configured limit");
        }
        let content_type = req.header("Content-Type").unwrap_or("");
        let upload = if content_type.to_ascii_lowercase().starts_with("multipart/form-data") {
            match multipart::extract_upload(content_type, &req.body) {
                Ok(u) => u,
                Err(message) => return ApiResponse::error(400, "BadRequest", message),
            }
        } else {
            multipart::Upload {
                csv: &req.body,
                ride_id: None,
            }
        };
        let Some(ride_id) = param(query, "ride_id").map(str::to_owned).or(upload.ride_id) else {
            return ApiResponse::error(400, "BadRequest", "missing `ride_id` parameter");
        };
        let policy = match param(query, "bad_rows") {
            None | Some("reject") => BadRowPolicy::Reject,
            Some("skip") => BadRowPolicy::Skip,
            Some(other) => {
                return ApiResponse::error(400, "BadRequest", format!("bad_rows must be reject or skip, got {other:?}"))
            }
        };

        let _gate = self.ingest_gate.lock().unwrap_or_else(|e| e.into_inner());
        let history = {
            let store = self.store.read().unwrap_or_else(|e| e.into_inner());
            if let Err(e) = drivefit_core::store::validate_ride_id(&ride_id) {
                return store_error(e);
            }
            if store.contains(&ride_id) {
                return store_error(StoreError::DuplicateRideId(ride_id));
            }
            store.fe_population()
        };
        let analysis = match analyze_csv(upload.csv, &ride_id, &self.config.analysis, policy, &history) {
            Ok(a) => a,
            Err(e) => return analysis_error(e),
        };
        let mut store = self.store.write().unwrap_or_else(|e| e.into_inner());
        match store.append(analysis.summary.clone(), Some(&analysis.diagnostics)) {
            Ok(_) => {
                let mut r = ApiResponse::json_body(200, analysis.summary.to_canonical_json().into_bytes());
                r.headers.push(("Location".into(), format!("/rides/{ride_id}")));
                r
            }
            Err(e) => store_error(e),
        }
    }
}

fn param<'a>(query: &'a [(String, String)], name: &str) -> Option<&'a str> {
    query.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
}

/// Adds an ETag (the body's own unless the handler set one) and answers
/// conditional requests with 304.
fn with_etag(mut r: ApiResponse, req: &ApiRequest) -> ApiResponse {
    if r.status != 200 {
        return r;
    }
    let tag = match r.header("ETag") {
        Some(t) => t.to_owned(),
        None => {
            let t = format!("\"{:016x}\"", fnv1a(&r.body));
            r.headers.push(("ETag".into(), t.clone()));
            t
        }
    };
    let matches = req.header("If-None-Match").is_some_and(|v| {
        v.split(',')
            .map(str::trim)
            .any(|c| c == "*" || c.trim_start_matches("W/") == tag)
    });
    if matches {
        return ApiResponse {
            status: 304,
            headers: vec![("ETag".into(), tag)],
            body: Vec::new(),
        };
    }
    r
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn not_found(id: &str) -> ApiResponse {
    ApiResponse::error(404, "RideNotFound", format!("ride `{id}` not found"))
}

fn report_error(e: ReportError) -> ApiResponse {
    match e {
        ReportError::RideNotFound(id) => not_found(&id),
        ReportError::UnknownMetric { ref valid, .. } => {
            ApiResponse::error_with(400, "UnknownMetric", e.to_string(), Some(valid.clone()))
        }
    }
}

fn store_error(e: StoreError) -> ApiResponse {
    let (status, code) = match &e {
        StoreError::DuplicateRideId(_) => (409, "DuplicateRideId"),
        StoreError::RideNotFound(_) => (404, "RideNotFound"),
        StoreError::InvalidRideId(_) => (400, "InvalidRideId"),
        StoreError::Storage { .. } => (500, "StorageFailure"),
    };
    ApiResponse::error(status, code, e.to_string())
}

fn analysis_error(e: AnalysisError) -> ApiResponse {
    let code = match &e {
        AnalysisError::Ingest(i) => match i {
            IngestError::EmptyLog { .. } => "EmptyLog",
            IngestError::NonMonotonicTime { .. } => "NonMonotonicTime",
            IngestError::SchemaMismatch { .. } => "SchemaMismatch",
            IngestError::BadRow { .. } => "BadRow",
            IngestError::OdometerDecreasing { .. } => "OdometerDecreasing",
            IngestError::Csv(_) => "MalformedCsv",
        },
        AnalysisError::Trace(TraceError::DurationTooShort { .. }) => "DurationTooShort",
        AnalysisError::Trace(TraceError::InvalidRate(_)) => {
            return ApiResponse::error(500, "InternalError", e.to_string())
        }
    };
    ApiResponse::error(400, code, e.to_string())
}

/// A running listener; dropping it without [`Server::shutdown`] leaves the
/// workers serving until the process exits.
pub struct Server {
    addr: SocketAddr,
    http: Arc<tiny_http::Server>,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl Server {
    pub fn start(app: Arc<App>) -> Result<Server, ServeError> {
        let bind = app.config.bind.clone();
        let http = tiny_http::Server::http(&bind).map_err(|e| ServeError::Bind {
            bind: bind.clone(),
            message: e.to_string(),
        })?;
        let addr = http.server_addr().to_ip().ok_or_else(|| ServeError::Bind {
            bind: bind.clone(),
            message: "not an IP listener".into(),
        })?;
        let http = Arc::new(http);
        let stop = Arc::new(AtomicBool::new(false));
        let workers = (0..app.config.workers.max(1))
            .map(|_| {
                let (app, http, stop) = (app.clone(), http.clone(), stop.clone());
                std::thread::spawn(move || loop {
                    match http.recv() {
                        Ok(rq) => respond(&app, rq),
                        Err(_) if stop.load(Ordering::SeqCst) => break,
                        Err(_) => continue,
                    }
                })
            })
            .collect();
        Ok(Server {
            addr,
            http,
            stop,
            workers,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks while the workers run.
    pub fn join(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        for _ in &self.workers {
            self.http.unblock();
        }
        self.join();
    }
}

fn respond(app: &App, mut rq: tiny_http::Request) {
    let headers: Vec<(String, String)> = rq
        .headers()
        .iter()
        .map(|h| (h.field.as_str().as_str().to_owned(), h.value.as_str().to_owned()))
        .collect();
    let limit = app.config.max_body_bytes as u64;
    let mut body = Vec::new();
    let read = std::io::Read::read_to_end(&mut std::io::Read::take(rq.as_reader(), limit + 1), &mut body);
    let response = match read {
        Err(e) => ApiResponse::error(400, "BadRequest", format!("cannot read body: {e}")),
        Ok(_) => app.handle(&ApiRequest {
            method: rq.method().as_str().to_owned(),
            url: rq.url().to_owned(),
            headers,
            body,
        }),
    };
    let mut out = tiny_http::Response::from_data(response.body).with_status_code(response.status);
    for (k, v) in &response.headers {
        if let Ok(h) = tiny_http::Header::from_bytes(k.as_bytes(), v.as_bytes()) {
            out.add_header(h);
        }
    }
    let _ = rq.respond(out);
}
