//! `drivefit` command-line front end.
//!
//! Exit status: 0 on success, 1 on an input error (bad arguments, unreadable
//! or invalid logs, unknown rides or metrics, invalid settings), 2 on an
//! internal error such as a storage failure.

mod export;
mod render;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use drivefit_core::config::ConfigError;
use drivefit_core::report::ReportError;
use drivefit_core::summary::analyze_trace;
use drivefit_core::trace::TraceError;
use drivefit_core::{
    analyze_csv, prepare_trace, AnalysisError, BadRowPolicy, CruiseState, RideStore,
    Settings, StoreError,
};
use drivefit_server::{ApiConfig, App, ServeError, Server};

use export::Series;

#[derive(Debug, Parser)]
#[command(name = "drivefit", version, about = "Safety, fuel-efficiency and comfort analytics for recorded drives")]
struct Cli {
    /// Ride store: a directory, or a `.jsonl` file for single-file mode.
    #[arg(long, global = true, value_name = "PATH")]
    store: Option<PathBuf>,
    /// Settings file of `key = value` lines (default: $DRIVEFIT_CONFIG).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Fuel-model coefficients, e.g. `a=5,b=0.05,c=0.001,d=0.2`.
    #[arg(long, global = true, value_name = "LIST")]
    params: Option<String>,
    /// Thresholds, e.g. `a_hi=2,a_lo=-3.5,j_abs=5,v_eps=0.1,alert_max=1,attention_max=2`.
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    thresholds: Option<String>,
    /// Resampling rate in Hz.
    #[arg(long, global = true)]
    rate_hz: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze trip logs and append them to the store.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        rows: RowArgs,
    },
    /// Analyze one trip log and print its summary without storing it.
    Summarize {
        file: PathBuf,
        /// Ride id to report (default: the file stem).
        #[arg(long)]
        ride_id: Option<String>,
        #[arg(long, conflicts_with = "table")]
        json: bool,
        /// Text table (the default).
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        rows: RowArgs,
    },
    /// Compare a stored ride with its predecessor and recent average.
    Compare {
        #[arg(long)]
        ride: String,
        /// Number of preceding rides to average.
        #[arg(long)]
        window: Option<usize>,
        /// Count the compared ride itself in the average window.
        #[arg(long)]
        include_recent: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print one metric over all stored rides.
    Trends {
        /// Metric slot such as `safety_index.all` or `acc_on_percent`.
        #[arg(long)]
        metric: String,
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Write plot-ready CSV series.
    Export {
        /// Ride to export (not needed for `trends`).
        #[arg(long, required_if_eq_any([("what", "headway"), ("what", "fuel"), ("what", "comfort")]))]
        ride: Option<String>,
        #[arg(long, value_enum)]
        what: Series,
        #[arg(long)]
        out: PathBuf,
        /// Restrict per-sample series to one cruise state.
        #[arg(long, default_value = "all")]
        state: CruiseState,
    },
}

#[derive(Debug, Args)]
struct RowArgs {
    /// Drop malformed rows instead of rejecting the log.
    #[arg(long)]
    skip_bad_rows: bool,
}

impl RowArgs {
    fn policy(&self) -> BadRowPolicy {
        if self.skip_bad_rows {
            BadRowPolicy::Skip
        } else {
            BadRowPolicy::Reject
        }
    }
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Storage { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn analysis_error(path: &Path, e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Trace(TraceError::InvalidRate(_)) => CliError::Internal(e.to_string()),
        e => CliError::Input(format!("{}: {e}", path.display())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Input(_) => 1,
                CliError::Internal(_) => 2,
            })
        }
    }
}

/// Defaults, then the settings file, then `DRIVEFIT_*` variables, then flags.
fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    let file = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("DRIVEFIT_CONFIG").map(PathBuf::from));
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        s.apply_text(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    s.apply_env(std::env::vars())?;
    if let Some(p) = &cli.store {
        s.store = Some(p.clone());
    }
    if let Some(r) = cli.rate_hz {
        s.set("rate_hz", &r.to_string())?;
    }
    if let Some(list) = &cli.params {
        apply_list(&mut s, list, |k| match k {
            "a" | "b" | "c" | "d" => Some(format!("fuel.{k}")),
            _ => None,
        })?;
    }
    if let Some(list) = &cli.thresholds {
        apply_list(&mut s, list, |k| match k {
            "a_hi" | "a_lo" | "j_abs" => Some(format!("comfort.{k}")),
            "alert_max" | "attention_max" => Some(format!("zone.{k}")),
            "v_eps" => Some(k.to_owned()),
            _ => None,
        })?;
    }
    if let Command::Serve { bind: Some(b) } = &cli.command {
        s.bind = b.clone();
    }
    s.validate()?;
    Ok(s)
}

fn apply_list(s: &mut Settings, list: &str, key: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
    for item in list.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected name=value, got {item:?}")))?;
        let full = key(k.trim()).ok_or_else(|| CliError::Input(format!("unknown parameter `{}`", k.trim())))?;
        s.set(&full, v.trim())?;
    }
    Ok(())
}

fn open_store(s: &Settings) -> Result<RideStore, CliError> {
    let path = s.store.as_ref().ok_or_else(|| {
        CliError::Input("no ride store configured; pass --store or set DRIVEFIT_STORE".into())
    })?;
    Ok(RideStore::open(path)?)
}

fn ride_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ride".to_owned())
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializes")
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = settings(&cli)?;
    match cli.command {
        Command::Ingest { files, rows } => ingest(&s, &files, rows.policy()),
        Command::Summarize {
            file,
            ride_id,
            json,
            table: _,
            rows,
        } => {
            let bytes = read_input(&file)?;
            let history = match &s.store {
                Some(_) => open_store(&s)?.fe_population(),
                None => Vec::new(),
            };
            let id = ride_id.unwrap_or_else(|| ride_id_of(&file));
            let analysis = analyze_csv(&bytes, &id, &s.analysis, rows.policy(), &history)
                .map_err(|e| analysis_error(&file, e))?;
            if json {
                println!("{}", analysis.summary.to_canonical_json());
            } else {
                print!("{}", render::summary_table(&analysis.summary));
            }
            Ok(())
        }
        Command::Compare {
            ride,
            window,
            include_recent,
            json,
        } => {
            let mut cfg = s.report;
            if let Some(w) = window {
                cfg.window = w;
            }
            cfg.window_includes_recent |= include_recent;
            if cfg.window == 0 {
                return Err(CliError::Input("--window must be at least 1".into()));
            }
            let report = open_store(&s)?.comparison_report(&ride, &cfg)?;
            if json {
                println!("{}", to_json(&report));
            } else {
                print!("{}", render::comparison_table(&report));
            }
            Ok(())
        }
        Command::Trends { metric, json } => {
            let series = open_store(&s)?.trend_series(&metric)?;
            if json {
                println!("{}", to_json(&series));
            } else {
                print!("{}", render::trend_table(&series));
            }
            Ok(())
        }
        Command::Serve { .. } => serve(&s),
        Command::Export {
            ride,
            what,
            out,
            state,
        } => export(&s, ride.as_deref(), what, &out, state),
    }
}

/// Parses and prepares traces in parallel, then summarizes and stores them
/// in argument order so each ride's fuel index sees exactly the rides
/// stored before it.
fn ingest(s: &Settings, files: &[PathBuf], policy: BadRowPolicy) -> Result<(), CliError> {
    let mut store = open_store(s)?;
    let prepared: Vec<Result<_, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .iter()
            .map(|path| {
                scope.spawn(move || {
                    let bytes = read_input(path)?;
                    let log = drivefit_core::ingest::parse_trip_log_with(&bytes, &ride_id_of(path), policy)
                        .map_err(|e| analysis_error(path, e.into()))?;
                    let trace = prepare_trace(&log, &s.analysis).map_err(|e| analysis_error(path, e.into()))?;
                    Ok((log.ride_id, trace))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Internal("worker panicked".into()))))
            .collect()
    });

    let mut first_error = None;
    for (path, item) in files.iter().zip(prepared) {
        let result = item.and_then(|(id, trace)| {
            let analysis = analyze_trace(&id, &trace, &s.analysis, &store.fe_population());
            let ordinal = store.append(analysis.summary, Some(&analysis.diagnostics))?;
            println!("stored {id} (#{ordinal}) from {}", path.display());
            Ok(())
        });
        if let Err(e) = result {
            eprintln!("error: {e}");
            first_error.get_or_insert(e);
        }
    }
    match first_error {
        None => Ok(()),
        Some(CliError::Internal(m)) => Err(CliError::Internal(m)),
        Some(_) => Err(CliError::Input("some logs were not stored".into())),
    }
}

fn serve(s: &Settings) -> Result<(), CliError> {
    let cfg = ApiConfig::from_settings(s)?;
    let app = App::open(cfg)?;
    let server = Server::start(Arc::new(app)).map_err(|e| match e {
        ServeError::Store(e) => e.into(),
        e @ ServeError::Bind { .. } => CliError::Input(e.to_string()),
    })?;
    eprintln!("listening on http://{}", server.addr());
    server.join();
    Ok(())
}

fn export(s: &Settings, ride: Option<&str>, what: Series, out: &Path, state: CruiseState) -> Result<(), CliError> {
    let store = open_store(s)?;
    let text = match what {
        Series::Trends => {
            let ordered = store.chronological();
            let ordinal = |id: &str| store.rides().iter().position(|r| r.ride_id == id).unwrap_or(0);
            export::trends(&ordered, ordinal)
        }
        _ => {
            let ride = ride.expect("clap requires --ride");
            let diag = store
                .diagnostics(ride)?
                .ok_or_else(|| CliError::Input(format!("ride `{ride}` has no stored per-sample series")))?;
            let (text, rows) = export::ride_series(&diag, what, state);
            if rows == 0 {
                eprintln!(
                    "warning: ride `{ride}` has no samples with cruise state `{}`; wrote header only",
                    state.as_str()
                );
            }
            text
        }
    };
    std::fs::write(out, text).map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    Ok(())
}
