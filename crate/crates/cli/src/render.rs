//! Plain-text tables in the column order of the comparison table:
//! four ON/OFF/All metric groups followed by ACC ON %.

use std::fmt::Write;

use drivefit_core::report::{display_round, MetricRow, TrendSeries, TripleMetric};
use drivefit_core::{ComparisonReport, CruiseState, RideSummary, Slot};

const COL: usize = 8;
const ACC_COL: usize = 9;
const ABSENT: &str = "—";

const GROUPS: [(&str, TripleMetric); 4] = [
    ("Safety Index (%)", TripleMetric::SafetyIndex),
    ("Fuel Effic. Index (%)", TripleMetric::FuelIndex),
    ("Fuel Effic. (km/L)", TripleMetric::FuelEfficiency),
    ("Comfort Index (%)", TripleMetric::ComfortIndex),
];

/// One decimal, `—` when absent, never `-0.0`.
pub fn cell(v: Option<f64>) -> String {
    match v {
        None => ABSENT.to_owned(),
        Some(v) => {
            let r = display_round(v);
            format!("{:.1}", if r == 0.0 { 0.0 } else { r })
        }
    }
}

fn row_cells(row: Option<&MetricRow>) -> Vec<String> {
    let mut cells: Vec<String> = GROUPS
        .iter()
        .flat_map(|&(_, m)| CruiseState::ALL.map(|s| cell(row.and_then(|r| Slot::Triple(m, s).get(r)))))
        .collect();
    cells.push(cell(row.and_then(|r| r.acc_on_percent)));
    cells
}

/// Renders labelled rows; a `None` row prints as all-absent.
pub fn metric_table(rows: &[(String, Option<&MetricRow>)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
    let group_w = 3 * COL;
    let mut out = String::new();

    write!(out, "{:label_w$}", "").unwrap();
    for (title, _) in GROUPS {
        write!(out, " |{title:^group_w$}").unwrap();
    }
    writeln!(out, " |{:>ACC_COL$}", "ACC ON %").unwrap();

    write!(out, "{:label_w$}", "").unwrap();
    for _ in GROUPS {
        out.push_str(" |");
        for s in CruiseState::ALL {
            let name = match s {
                CruiseState::On => "ON",
                CruiseState::Off => "OFF",
                CruiseState::All => "All",
            };
            write!(out, "{name:>COL$}").unwrap();
        }
    }
    writeln!(out, " |{:>ACC_COL$}", "").unwrap();

    for (label, row) in rows {
        write!(out, "{label:<label_w$}").unwrap();
        let cells = row_cells(*row);
        for group in cells[..12].chunks(3) {
            out.push_str(" |");
            for c in group {
                write!(out, "{c:>COL$}").unwrap();
            }
        }
        writeln!(out, " |{:>ACC_COL$}", cells[12]).unwrap();
    }
    out
}

pub fn summary_table(s: &RideSummary) -> String {
    let mut out = String::new();
    writeln!(out, "Ride:        {}", s.ride_id).unwrap();
    writeln!(out, "Duration:    {:.1} s", s.duration_s).unwrap();
    writeln!(out, "Distance:    {:.2} km", s.distance_km).unwrap();
    writeln!(out, "Mean speed:  {:.1} km/h", s.mean_speed_kph).unwrap();
    writeln!(out, "ACC ON %:    {}", cell(Some(s.acc_on_percent))).unwrap();
    out.push('\n');
    out.push_str(&metric_table(&[(s.ride_id.clone(), Some(&MetricRow::from(s)))]));
    out
}

pub fn comparison_table(r: &ComparisonReport) -> String {
    let n = if r.window_ride_ids.is_empty() {
        r.window
    } else {
        r.window_ride_ids.len()
    };
    let recent = MetricRow::from(&r.recent);
    let previous = r.previous.as_ref().map(MetricRow::from);
    let rows = [
        (format!("Avg. of nearest {n} rides"), r.rolling_avg.as_ref()),
        ("Previous ride".to_owned(), previous.as_ref()),
        ("Recent ride".to_owned(), Some(&recent)),
        ("Change rate (to avg.)".to_owned(), r.change_to_avg.as_ref()),
        ("Change rate (to prev.)".to_owned(), r.change_to_prev.as_ref()),
    ];
    let mut out = format!("Ride: {}\n", r.recent.ride_id);
    if !r.window_ride_ids.is_empty() {
        writeln!(out, "Window: {}", r.window_ride_ids.join(", ")).unwrap();
    }
    out.push('\n');
    out.push_str(&metric_table(&rows));
    out
}

pub fn trend_table(t: &TrendSeries) -> String {
    let id_w = t.points.iter().map(|p| p.ride_id.chars().count()).max().unwrap_or(0).max(7);
    let mut out = format!("{}\n", t.metric_name);
    writeln!(out, "{:>7}  {:id_w$}  {:>16}  {:>8}", "ordinal", "ride_id", "started_at", "value").unwrap();
    for p in &t.points {
        writeln!(out, "{:>7}  {:id_w$}  {:>16.3}  {:>8}", p.ordinal, p.ride_id, p.started_at, cell(p.value)).unwrap();
    }
    out
}
