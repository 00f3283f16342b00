use drivefit_core::report::{change_rate, comparison_report, rolling_average, MetricRow};
use drivefit_core::store::StoreError;
use drivefit_core::summary::{RideDiagnostics, ZoneOccupancy, SCHEMA_VERSION};
use drivefit_core::{
    analyze_csv, AnalysisConfig, BadRowPolicy, MetricTriple, ReportConfig, RideStore, RideSummary,
    Slot,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn maybe(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Option<f64> {
    rng.gen_bool(0.85).then(|| rng.gen_range(lo..hi))
}

fn triple(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> MetricTriple {
    MetricTriple::new(maybe(rng, lo, hi), maybe(rng, lo, hi), Some(rng.gen_range(lo..hi)))
}

fn random_ride(rng: &mut ChaCha8Rng, id: String, started_at: f64) -> RideSummary {
    RideSummary {
        ride_id: id,
        started_at,
        duration_s: rng.gen_range(60.0..7200.0),
        distance_km: rng.gen_range(0.5..150.0),
        mean_speed_kph: rng.gen_range(10.0..120.0),
        acc_on_percent: rng.gen_range(0.0..100.0),
        safety_index: triple(rng, 0.0, 100.0),
        fuel_index: triple(rng, 0.0, 100.0),
        fuel_efficiency_kmpl: triple(rng, 3.0, 15.0),
        comfort_index: triple(rng, 0.0, 100.0),
        zone_fractions: ZoneOccupancy {
            alert: triple(rng, 0.0, 1.0),
            attention: triple(rng, 0.0, 1.0),
            safe: triple(rng, 0.0, 1.0),
        },
        fuel_liters: triple(rng, 0.0, 10.0),
        schema_version: SCHEMA_VERSION,
    }
}

fn random_rides(seed: u64, n: usize) -> Vec<RideSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let t = 1.69e9 + rng.gen_range(0.0..3.0e7);
            random_ride(&mut rng, format!("ride-{i:03}"), t)
        })
        .collect()
}

fn backends(dir: &tempfile::TempDir) -> Vec<(&'static str, RideStore)> {
    vec![
        ("memory", RideStore::in_memory()),
        ("directory", RideStore::open(dir.path().join("store")).unwrap()),
        ("jsonl", RideStore::open(dir.path().join("rides.jsonl")).unwrap()),
    ]
}

#[test]
fn read_back_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let rides = random_rides(1, 20);
    for (name, mut store) in backends(&dir) {
        for r in &rides {
            store.store_ride(r.clone()).unwrap();
        }
        for r in &rides {
            assert_eq!(
                store.get(&r.ride_id).unwrap().to_canonical_json(),
                r.to_canonical_json(),
                "{name}"
            );
        }
    }
    for path in ["store", "rides.jsonl"] {
        let reopened = RideStore::open(dir.path().join(path)).unwrap();
        for (a, b) in reopened.rides().iter().zip(&rides) {
            assert_eq!(a.to_canonical_json(), b.to_canonical_json(), "{path}");
        }
    }
    let on_disk = std::fs::read_to_string(dir.path().join("store/rides/ride-007.json")).unwrap();
    assert_eq!(on_disk, rides[7].to_canonical_json());
}

#[test]
fn hundred_rides_list_in_insertion_order() {
    let dir = tempfile::tempdir().unwrap();
    let rides = random_rides(2, 100);
    for (name, mut store) in backends(&dir) {
        for (i, r) in rides.iter().enumerate() {
            assert_eq!(store.store_ride(r.clone()).unwrap(), i);
        }
        let ids: Vec<&str> = store.rides().iter().map(|r| r.ride_id.as_str()).collect();
        let expected: Vec<&str> = rides.iter().map(|r| r.ride_id.as_str()).collect();
        assert_eq!(ids, expected, "{name}");
        assert_eq!(store.len(), 100);
    }
    for path in ["store", "rides.jsonl"] {
        assert_eq!(RideStore::open(dir.path().join(path)).unwrap().rides(), &rides[..]);
    }
}

#[test]
fn duplicates_and_bad_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, mut store) in backends(&dir) {
        let r = random_ride(&mut rng, "dup".into(), 1.0);
        store.store_ride(r.clone()).unwrap();
        assert!(
            matches!(store.store_ride(r), Err(StoreError::DuplicateRideId(id)) if id == "dup"),
            "{name}"
        );
        for bad in ["", "../x", ".hidden", "a b", "a/b"] {
            let r = random_ride(&mut rng, bad.into(), 1.0);
            assert!(matches!(store.store_ride(r), Err(StoreError::InvalidRideId(_))), "{name} {bad:?}");
        }
        assert_eq!(store.len(), 1);
    }
}

#[test]
fn appends_leave_existing_records_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let rides = random_rides(4, 10);
    let mut store = RideStore::open(dir.path().join("store")).unwrap();
    let mut lines = RideStore::open(dir.path().join("rides.jsonl")).unwrap();
    for r in &rides[..5] {
        store.store_ride(r.clone()).unwrap();
        lines.store_ride(r.clone()).unwrap();
    }
    let first = std::fs::read(dir.path().join("store/rides/ride-002.json")).unwrap();
    let prefix = std::fs::read(dir.path().join("rides.jsonl")).unwrap();
    for r in &rides[5..] {
        store.store_ride(r.clone()).unwrap();
        lines.store_ride(r.clone()).unwrap();
    }
    assert_eq!(std::fs::read(dir.path().join("store/rides/ride-002.json")).unwrap(), first);
    let grown = std::fs::read(dir.path().join("rides.jsonl")).unwrap();
    assert!(grown.starts_with(&prefix));
}

#[test]
fn truncated_trailing_line_is_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rides.jsonl");
    let rides = random_rides(5, 3);
    let mut store = RideStore::open(&path).unwrap();
    for r in &rides {
        store.store_ride(r.clone()).unwrap();
    }
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.extend_from_slice(b"{\"summary\":{\"ride_id\":\"half");
    std::fs::write(&path, bytes).unwrap();
    assert_eq!(RideStore::open(&path).unwrap().rides(), &rides[..]);
}

#[test]
fn diagnostics_persist_with_the_ride() {
    let csv = "timestamp,speed,lead_distance,accel,cruise_on,odometer\n\
               0,10,25,,1,\n1,12,20,,1,\n2,14,,,0,\n3,13,30,,0,\n";
    let analysis = analyze_csv(csv.as_bytes(), "d1", &AnalysisConfig::default(), BadRowPolicy::Reject, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, mut store) in backends(&dir) {
        store.append(analysis.summary.clone(), Some(&analysis.diagnostics)).unwrap();
        let back: RideDiagnostics = store.diagnostics("d1").unwrap().unwrap();
        assert_eq!(back, analysis.diagnostics, "{name}");
        assert!(back.headway.iter().any(|h| h.is_none()));
        assert!(matches!(store.diagnostics("nope"), Err(StoreError::RideNotFound(_))));
    }
    for path in ["store", "rides.jsonl"] {
        let store = RideStore::open(dir.path().join(path)).unwrap();
        assert_eq!(store.diagnostics("d1").unwrap().unwrap(), analysis.diagnostics);
    }
}

#[test]
fn reports_do_not_depend_on_storage_backend() {
    let dir = tempfile::tempdir().unwrap();
    let rides = random_rides(6, 30);
    let cfg = ReportConfig::default();
    let mut reports = Vec::new();
    for (_, mut store) in backends(&dir) {
        for r in &rides {
            store.store_ride(r.clone()).unwrap();
        }
        let cmp: Vec<_> = rides
            .iter()
            .map(|r| store.comparison_report(&r.ride_id, &cfg).unwrap())
            .collect();
        let trends: Vec<_> = Slot::names()
            .iter()
            .map(|m| store.trend_series(m).unwrap())
            .collect();
        reports.push((cmp, trends, store.etag()));
    }
    for pair in reports.windows(2) {
        assert_eq!(pair[0], pair[1]);
    }
    assert_eq!(
        RideStore::open(dir.path().join("store")).unwrap().etag(),
        reports[0].2
    );
}

#[test]
fn etag_changes_on_append_only() {
    let mut store = RideStore::in_memory();
    let rides = random_rides(7, 3);
    let mut seen = vec![store.etag()];
    for r in rides {
        store.store_ride(r).unwrap();
        assert_eq!(store.etag(), store.etag());
        seen.push(store.etag());
    }
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 4);
}

#[test]
fn trends_follow_start_time_not_insertion() {
    let rides = random_rides(8, 40);
    let mut store = RideStore::in_memory();
    for r in &rides {
        store.store_ride(r.clone()).unwrap();
    }
    let series = store.trend_series("safety_index.all").unwrap();
    assert_eq!(series.points.len(), 40);
    assert!(series.points.windows(2).all(|w| w[0].started_at <= w[1].started_at));
    for p in &series.points {
        assert_eq!(rides[p.ordinal].ride_id, p.ride_id);
        assert_eq!(p.value, rides[p.ordinal].safety_index.all);
    }
    let err = store.trend_series("speed").unwrap_err().to_string();
    assert!(err.contains("comfort_index.all") && err.contains("acc_on_percent"), "{err}");
}

#[test]
fn window_of_one_equals_that_ride() {
    let rides = random_rides(9, 12);
    let ordered = drivefit_core::report::chronological(&rides);
    let cfg = ReportConfig { window: 1, window_includes_recent: false };
    for pair in ordered.windows(2) {
        let report = comparison_report(&rides, &pair[1].ride_id, &cfg).unwrap();
        assert_eq!(report.window_ride_ids, vec![pair[0].ride_id.clone()]);
        assert_eq!(report.rolling_avg.unwrap(), MetricRow::from(pair[0]));
        assert_eq!(report.change_to_avg, report.change_to_prev);
    }
    let first = comparison_report(&rides, &ordered[0].ride_id, &cfg).unwrap();
    assert!(first.previous.is_none() && first.rolling_avg.is_none() && first.change_to_prev.is_none());
}

#[test]
fn rolling_average_matches_hand_mean_over_the_window() {
    let rides = random_rides(10, 25);
    let ordered = drivefit_core::report::chronological(&rides);
    let cfg = ReportConfig::default();
    let recent = ordered[20];
    let report = comparison_report(&rides, &recent.ride_id, &cfg).unwrap();
    let window = &ordered[15..20];
    let avg = report.rolling_avg.unwrap();
    for slot in Slot::all() {
        let present: Vec<f64> = window
            .iter()
            .filter_map(|r| slot.get(&MetricRow::from(*r)))
            .collect();
        let expected = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        match (slot.get(&avg), expected) {
            (Some(a), Some(e)) => assert!((a - e).abs() <= 1e-12 * e.abs().max(1.0), "{slot}"),
            (a, e) => assert_eq!(a, e, "{slot}"),
        }
    }
    let inclusive = ReportConfig { window: 5, window_includes_recent: true };
    let ids = comparison_report(&rides, &recent.ride_id, &inclusive).unwrap().window_ride_ids;
    assert_eq!(ids.last().unwrap(), &recent.ride_id);
    assert_eq!(ids.len(), 5);
}

#[test]
fn identical_rides_average_to_themselves() {
    let ride = random_rides(11, 1).remove(0);
    let copies: Vec<RideSummary> = (0..5).map(|_| ride.clone()).collect();
    let avg = rolling_average(&copies);
    let row = MetricRow::from(&ride);
    for slot in Slot::all() {
        match (slot.get(&avg), slot.get(&row)) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0)),
            (a, b) => assert_eq!(a, b),
        }
    }
}

proptest! {
    #[test]
    fn change_rate_properties(r in -1e4f64..1e4, b in -1e4f64..1e4) {
        prop_assert_eq!(change_rate(Some(r), Some(0.0)), None);
        prop_assert_eq!(change_rate(None, Some(b)), None);
        prop_assert_eq!(change_rate(Some(r), None), None);
        if b != 0.0 {
            let c = change_rate(Some(r), Some(b)).unwrap();
            prop_assert_eq!(change_rate(Some(b), Some(b)), Some(0.0));
            // inverting the rate recovers the recent value
            let back = b * (1.0 + c / 100.0);
            prop_assert!((back - r).abs() <= 1e-9 * r.abs().max(b.abs()).max(1.0));
            if b > 0.0 {
                prop_assert_eq!(c > 0.0, r > b);
            }
        }
    }
}
