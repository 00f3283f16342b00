//! CSV series for plotting.
//!
//! | what | header |
//! |------|--------|
//! | `headway` | `t,headway,zone,cruise_on` |
//! | `fuel` | `t,speed_kph,accel,fcr,distance_km,cruise_on` |
//! | `comfort` | `t,accel,jerk,violation,cruise_on` |
//! | `trends` | `ordinal,ride_id,started_at,<every metric slot>` |
//!
//! Numbers are written at full precision. Absent values are empty cells;
//! a stationary-ego headway is `inf`.

use std::fmt::Write;

use clap::ValueEnum;
use drivefit_core::report::MetricRow;
use drivefit_core::{CruiseState, RideDiagnostics, RideSummary, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Series {
    Headway,
    Fuel,
    Comfort,
    Trends,
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Rows of the ride's per-sample series restricted to `state`; returns the
/// CSV text and the number of data rows.
pub fn ride_series(d: &RideDiagnostics, what: Series, state: CruiseState) -> (String, usize) {
    let header = match what {
        Series::Headway => "t,headway,zone,cruise_on",
        Series::Fuel => "t,speed_kph,accel,fcr,distance_km,cruise_on",
        Series::Comfort => "t,accel,jerk,violation,cruise_on",
        Series::Trends => unreachable!("trends are not per-ride"),
    };
    let mut out = format!("{header}\n");
    let mut rows = 0;
    for i in (0..d.len()).filter(|&i| state.includes(d.cruise_on[i])) {
        let on = d.cruise_on[i] as u8;
        let t = num(d.t[i]);
        match what {
            Series::Headway => {
                let zone = d.zone[i].map(|z| z.as_str()).unwrap_or("");
                writeln!(out, "{t},{},{zone},{on}", opt(d.headway[i])).unwrap();
            }
            Series::Fuel => writeln!(
                out,
                "{t},{},{},{},{},{on}",
                num(d.speed_mps[i] * drivefit_core::fuel::MPS_TO_KPH),
                num(d.accel[i]),
                num(d.fcr[i]),
                num(d.distance_km[i])
            )
            .unwrap(),
            Series::Comfort => writeln!(
                out,
                "{t},{},{},{},{on}",
                num(d.accel[i]),
                num(d.jerk[i]),
                d.violation[i] as u8
            )
            .unwrap(),
            Series::Trends => unreachable!(),
        }
        rows += 1;
    }
    (out, rows)
}

/// One row per ride, oldest first, one column per metric slot.
pub fn trends(rides: &[&RideSummary], ordinal_of: impl Fn(&str) -> usize) -> String {
    let slots = Slot::all();
    let mut out = String::from("ordinal,ride_id,started_at");
    for s in &slots {
        write!(out, ",{s}").unwrap();
    }
    out.push('\n');
    for r in rides {
        let row = MetricRow::from(*r);
        write!(out, "{},{},{}", ordinal_of(&r.ride_id), r.ride_id, num(r.started_at)).unwrap();
        for s in &slots {
            write!(out, ",{}", opt(s.get(&row))).unwrap();
        }
        out.push('\n');
    }
    out
}
