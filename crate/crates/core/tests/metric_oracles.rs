use drivefit_core::comfort::{comfort_over, comfort_result, ComfortThresholds};
use drivefit_core::config::AnalysisConfig;
use drivefit_core::cruise::segment_by_cruise;
use drivefit_core::fuel::{fcr, fuel_index, fuel_result, FuelParams, MPS_TO_KPH};
use drivefit_core::safety::{
    classify_zones, headway_series, lead_speed_series, ttc_series, NoLeadPolicy, Zone, ZoneBounds,
};
use drivefit_core::summary::{summarize_trip, CruiseState};
use drivefit_core::trace::UniformTrace;
use drivefit_core::{parse_trip_log, prepare_trace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURE: &str = include_str!("fixtures/trip_fixture.csv");

fn fixture_trace() -> UniformTrace {
    let log = parse_trip_log(FIXTURE.as_bytes(), "fixture").unwrap();
    prepare_trace(&log, &AnalysisConfig::default()).unwrap()
}

/// Random trace with smooth-ish speed, lead gaps and cruise blocks, with
/// random accel and jerk independent of speed.
fn random_trace(rng: &mut ChaCha8Rng, n: usize) -> UniformTrace {
    let mut v: f64 = rng.gen_range(0.0..30.0);
    let mut d: f64 = rng.gen_range(5.0..80.0);
    let mut on = rng.gen_bool(0.5);
    let mut lead_present = true;
    let mut speed = Vec::with_capacity(n);
    let mut lead = Vec::with_capacity(n);
    let mut cruise = Vec::with_capacity(n);
    for _ in 0..n {
        v = (v + rng.gen_range(-0.4..0.4)).clamp(0.0, 40.0);
        d = (d + rng.gen_range(-1.0..1.0)).clamp(1.0, 150.0);
        if rng.gen_bool(0.02) {
            on = !on;
        }
        if rng.gen_bool(0.01) {
            lead_present = !lead_present;
        }
        speed.push(v);
        lead.push(lead_present.then_some(d));
        cruise.push(on);
    }
    let mut trace = UniformTrace::from_speed(10.0, 0.0, speed, lead, cruise);
    trace.accel = (0..n).map(|_| rng.gen_range(-5.0..4.0)).collect();
    trace.jerk = (0..n).map(|_| rng.gen_range(-8.0..8.0)).collect();
    trace
}

fn brute_zone(h: Option<f64>) -> Option<Zone> {
    let h = h?;
    Some(if h <= 1.0 {
        Zone::Alert
    } else if h <= 2.0 {
        Zone::Attention
    } else {
        Zone::Safe
    })
}

#[test]
fn fixture_headway_matches_per_index_division() {
    let trace = fixture_trace();
    let window = 300..1300;
    let sub = trace.slice(window.clone());
    let h = headway_series(&sub, 0.1);
    assert_eq!(h.len(), 1000);
    let mut with_lead = 0;
    for i in 0..1000 {
        let expected = match sub.lead_distance[i] {
            None => None,
            Some(_) if sub.speed[i] < 0.1 => Some(f64::INFINITY),
            Some(d) => Some(d / sub.speed[i]),
        };
        assert_eq!(h[i], expected, "index {i}");
        with_lead += expected.is_some() as usize;
    }
    assert!(with_lead > 500);
}

#[test]
fn ttc_is_infinite_exactly_when_not_closing() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let trace = random_trace(&mut rng, 800);
        let vl = lead_speed_series(&trace);
        let ttc = ttc_series(&trace, &vl);
        for i in 0..trace.len() {
            match (trace.lead_distance[i], vl[i]) {
                (Some(d), Some(lead_v)) => {
                    let t = ttc[i].unwrap();
                    assert!(t >= 0.0);
                    let closing = trace.speed[i] > lead_v;
                    assert_eq!(t.is_infinite(), !closing, "index {i}");
                    if closing {
                        assert_eq!(t, d / (trace.speed[i] - lead_v));
                    }
                }
                _ => assert_eq!(ttc[i], None),
            }
        }
    }
}

#[test]
fn zone_classification_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let n = rng.gen_range(1..400);
        let h: Vec<Option<f64>> = (0..n)
            .map(|_| match rng.gen_range(0..10) {
                0 => None,
                1 => Some(f64::INFINITY),
                2 => Some([1.0, 2.0][rng.gen_range(0..2)]),
                _ => Some(rng.gen_range(0.0..4.0)),
            })
            .collect();
        let expected: Vec<Option<Zone>> = h.iter().map(|&x| brute_zone(x)).collect();
        match classify_zones(&h, &ZoneBounds::default(), NoLeadPolicy::Exclude) {
            None => assert!(expected.iter().all(Option::is_none)),
            Some(z) => {
                assert_eq!(z.zones, expected);
                let f = z.fractions;
                assert!((f.alert_fraction + f.attention_fraction + f.safe_fraction - 1.0).abs() < 1e-9);
                let considered = expected.iter().flatten().count();
                let alert = expected.iter().filter(|z| **z == Some(Zone::Alert)).count();
                assert_eq!(z.considered_samples, considered);
                assert_eq!(f.alert_fraction, alert as f64 / considered as f64);
            }
        }
    }
}

#[test]
fn fuel_point_values() {
    let p = FuelParams::default();
    assert_eq!(fcr(0.0, 0.0, &p), 5.0);
    assert!((fcr(100.0, 0.0, &p) - 20.0).abs() < 1e-12);
    assert_eq!(fcr(0.0, -30.0, &p), 0.0);
}

#[test]
fn constant_speed_efficiency_identity() {
    let p = FuelParams::default();
    for kph in [30.0, 60.0, 100.0] {
        let n = 6001;
        let v = kph / MPS_TO_KPH;
        let trace = UniformTrace::from_speed(10.0, 0.0, vec![v; n], vec![None; n], vec![false; n]);
        let fe = fuel_result(&trace, &p).efficiency().unwrap();
        let identity = 100.0 / fcr(kph, 0.0, &p);
        assert!((fe - identity).abs() <= 1e-9 * identity, "{kph}: {fe} vs {identity}");
    }
}

#[test]
fn fuel_matches_per_step_accumulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = FuelParams::default();
    for _ in 0..20 {
        let trace = random_trace(&mut rng, 1500);
        let r = fuel_result(&trace, &p);
        let mut liters = 0.0;
        for i in 1..trace.len() {
            let kph = trace.speed[i - 1] * 3.6;
            let a = trace.accel[i - 1];
            let rate = (p.a + p.b * kph + p.c * kph * kph + p.d * a).max(0.0);
            liters += (trace.distance_km[i] - trace.distance_km[i - 1]) * rate / 100.0;
        }
        assert!((r.fuel_liters - liters).abs() <= 1e-9 * liters);
        assert!(r.fuel_liters >= 0.0);
        let fe = r.efficiency().unwrap();
        assert!((fe - r.distance_km / r.fuel_liters).abs() < 1e-12);
    }
}

#[test]
fn comfort_matches_literal_predicate() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let th = ComfortThresholds::default();
    for _ in 0..50 {
        let trace = random_trace(&mut rng, 700);
        let r = comfort_result(&trace, &th);
        let violations = (0..trace.len())
            .filter(|&i| {
                let (a, j) = (trace.accel[i], trace.jerk[i]);
                (a > 2.0) || (a < -3.5) || (j > 5.0) || (j < -5.0)
            })
            .count();
        let expected = 100.0 * (1.0 - violations as f64 / trace.len() as f64);
        assert_eq!(r.comfort_index, expected);
    }
}

#[test]
fn per_state_slots_match_restricted_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = AnalysisConfig::default();
    let mut traces: Vec<UniformTrace> = (0..10).map(|_| random_trace(&mut rng, 1200)).collect();
    traces.push(fixture_trace());
    for trace in traces {
        let s = summarize_trip("r", &trace, &cfg, &[]);
        let n = trace.len();
        for state in [CruiseState::On, CruiseState::Off] {
            let idx: Vec<usize> = (0..n).filter(|&i| state.includes(trace.cruise_on[i])).collect();
            if idx.is_empty() {
                assert_eq!(s.comfort_index.get(state), None);
                continue;
            }
            // safety and comfort: run the whole-series kernels on the restricted samples
            let h: Vec<Option<f64>> = {
                let all = headway_series(&trace, cfg.v_eps);
                idx.iter().map(|&i| all[i]).collect()
            };
            let zoning = classify_zones(&h, &cfg.zones, cfg.no_lead);
            assert_eq!(s.safety_index.get(state), zoning.map(|z| z.safety_index()));
            let accel: Vec<f64> = idx.iter().map(|&i| trace.accel[i]).collect();
            let jerk: Vec<f64> = idx.iter().map(|&i| trace.jerk[i]).collect();
            let comfort = comfort_over(&accel, &jerk, &cfg.comfort).unwrap();
            assert_eq!(s.comfort_index.get(state), Some(comfort.comfort_index));

            // fuel: whole-trace kernel on each run of the state, steps attributed to their start
            let seg = segment_by_cruise(&trace.cruise_on);
            let (mut liters, mut km) = (0.0, 0.0);
            for run in seg.of_state(state == CruiseState::On) {
                let end = (run.range.end + 1).min(n);
                let r = fuel_result(&trace.slice(run.range.start..end), &cfg.fuel);
                liters += r.fuel_liters;
                km += r.distance_km;
            }
            let slot = s.fuel_liters.get(state).unwrap();
            assert!((slot - liters).abs() <= 1e-9 * liters.max(1e-12));
            if let Some(fe) = s.fuel_efficiency_kmpl.get(state) {
                assert!((fe - km / liters).abs() <= 1e-9 * fe);
            }
        }
        let all = summarize_trip("r", &trace, &cfg, &[]);
        assert_eq!(all.comfort_index.all, Some(comfort_result(&trace, &cfg.comfort).comfort_index));
    }
}

#[test]
fn block_trip_recovers_per_state_safety() {
    // cruise ON blocks follow at 3 s; OFF blocks alternate 0.8 s and 1.6 s
    let rate = 10.0;
    let mut speed = Vec::new();
    let mut lead = Vec::new();
    let mut cruise = Vec::new();
    for block in 0..6 {
        let on = block % 2 == 0;
        let headway = if on { 3.0 } else if block % 4 == 1 { 0.8 } else { 1.6 };
        for _ in 0..200 {
            speed.push(20.0);
            lead.push(Some(20.0 * headway));
            cruise.push(on);
        }
    }
    let trace = UniformTrace::from_speed(rate, 0.0, speed, lead, cruise);
    let s = summarize_trip("blocks", &trace, &AnalysisConfig::default(), &[]);
    assert_eq!(s.safety_index.on, Some(100.0));
    assert_eq!(s.zone_fractions.safe.on, Some(1.0));
    // OFF: blocks 1 and 5 at 0.8 s (alert), block 3 at 1.6 s
    assert_eq!(s.zone_fractions.alert.off, Some(400.0 / 600.0));
    assert!((s.safety_index.off.unwrap() - 100.0 / 3.0).abs() < 1e-9);
    assert!((s.safety_index.all.unwrap() - 100.0 * 800.0 / 1200.0).abs() < 1e-9);
    assert_eq!(s.acc_on_percent, 50.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fuel_is_additive_over_partitions(seed in any::<u64>(), cuts in prop::collection::vec(1usize..599, 0..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = random_trace(&mut rng, 600);
        let p = FuelParams::default();
        let whole = fuel_result(&trace, &p).fuel_liters;
        let mut bounds = cuts.clone();
        bounds.push(0);
        bounds.push(599);
        bounds.sort_unstable();
        bounds.dedup();
        let parts: f64 = bounds
            .windows(2)
            .map(|w| fuel_result(&trace.slice(w[0]..w[1] + 1), &p).fuel_liters)
            .sum();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1e-12));
    }

    #[test]
    fn headway_is_scale_free(seed in any::<u64>(), k in 0.5f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 300;
        let speed: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..35.0)).collect();
        let lead: Vec<Option<f64>> = (0..n).map(|_| rng.gen_bool(0.9).then(|| rng.gen_range(2.0..90.0))).collect();
        let base = UniformTrace::from_speed(10.0, 0.0, speed.clone(), lead.clone(), vec![false; n]);
        let scaled = UniformTrace::from_speed(
            10.0,
            0.0,
            speed.iter().map(|v| v * k).collect(),
            lead.iter().map(|d| d.map(|d| d * k)).collect(),
            vec![false; n],
        );
        let h0 = headway_series(&base, 0.1);
        let h1 = headway_series(&scaled, 0.1);
        for (a, b) in h0.iter().zip(&h1) {
            match (a, b) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.abs()),
                (None, None) => {}
                _ => prop_assert!(false, "presence differs"),
            }
        }
        let cfg = AnalysisConfig::default();
        let s0 = summarize_trip("a", &base, &cfg, &[]);
        let s1 = summarize_trip("b", &scaled, &cfg, &[]);
        // zone membership can only flip at exact boundaries, which random data avoids
        prop_assert_eq!(s0.safety_index, s1.safety_index);
    }

    #[test]
    fn more_spacing_never_lowers_safety(seed in any::<u64>(), bumps in prop::collection::vec(0.0f64..20.0, 200)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 200;
        let speed: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..35.0)).collect();
        let lead: Vec<Option<f64>> = (0..n).map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(2.0..90.0))).collect();
        let wider: Vec<Option<f64>> = lead.iter().zip(&bumps).map(|(d, b)| d.map(|d| d + b)).collect();
        let cfg = AnalysisConfig::default();
        let a = summarize_trip("a", &UniformTrace::from_speed(10.0, 0.0, speed.clone(), lead, vec![true; n]), &cfg, &[]);
        let b = summarize_trip("b", &UniformTrace::from_speed(10.0, 0.0, speed, wider, vec![true; n]), &cfg, &[]);
        if let (Some(x), Some(y)) = (a.safety_index.all, b.safety_index.all) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn harsher_acceleration_never_raises_comfort(seed in any::<u64>(), grow in prop::collection::vec(1.0f64..3.0, 300)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let accel: Vec<f64> = (0..300).map(|_| rng.gen_range(-5.0..4.0)).collect();
        let jerk: Vec<f64> = (0..300).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let th = ComfortThresholds::default();
        let harsher: Vec<f64> = accel.iter().zip(&grow).map(|(a, g)| a * g).collect();
        let before = comfort_over(&accel, &jerk, &th).unwrap().comfort_index;
        let after = comfort_over(&harsher, &jerk, &th).unwrap().comfort_index;
        prop_assert!(after <= before);
    }

    #[test]
    fn indices_stay_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = random_trace(&mut rng, 500);
        let history: Vec<f64> = (0..5).map(|_| rng.gen_range(3.0..15.0)).collect();
        let s = summarize_trip("r", &trace, &AnalysisConfig::default(), &history);
        for triple in [s.safety_index, s.fuel_index, s.comfort_index] {
            for state in CruiseState::ALL {
                if let Some(v) = triple.get(state) {
                    prop_assert!((0.0..=100.0).contains(&v));
                }
            }
        }
        for state in CruiseState::ALL {
            if let Some(alert) = s.zone_fractions.alert.get(state) {
                let sum = alert
                    + s.zone_fractions.attention.get(state).unwrap()
                    + s.zone_fractions.safe.get(state).unwrap();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }
        prop_assert!((0.0..=100.0).contains(&s.acc_on_percent));
    }

    #[test]
    fn segmentation_reconstructs_vector(bits in prop::collection::vec(any::<bool>(), 0..300)) {
        let seg = segment_by_cruise(&bits);
        let mut rebuilt = Vec::new();
        let mut expected_start = 0;
        for s in &seg.segments {
            prop_assert_eq!(s.range.start, expected_start);
            prop_assert!(s.range.end > s.range.start);
            rebuilt.extend(std::iter::repeat(s.on).take(s.range.len()));
            expected_start = s.range.end;
        }
        for w in seg.segments.windows(2) {
            prop_assert_ne!(w[0].on, w[1].on);
        }
        prop_assert_eq!(rebuilt, bits);
    }

    #[test]
    fn fuel_index_extremes_survive_affine_rescaling(
        pop in prop::collection::vec(1.0f64..20.0, 2..20),
        scale in 0.1f64..10.0,
        shift in 0.0f64..10.0,
    ) {
        let rescaled: Vec<f64> = pop.iter().map(|v| v * scale + shift).collect();
        let max = rescaled.iter().cloned().fold(f64::MIN, f64::max);
        let min = rescaled.iter().cloned().fold(f64::MAX, f64::min);
        if max > min {
            prop_assert_eq!(fuel_index(&rescaled, max).unwrap(), 100.0);
            prop_assert_eq!(fuel_index(&rescaled, min).unwrap(), 0.0);
        }
    }
}
