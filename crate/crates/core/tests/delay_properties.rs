use delayed_oco::delay_model::{
    online_perceived_dmax, realize_schedule, DelayRegime, DelayRegimeSpec, DelaySchedule, OnlineDelayTracker,
};
use delayed_oco_testkit as oracle;
use proptest::prelude::*;

fn raw_delays() -> impl Strategy<Value = Vec<usize>> {
    (1usize..60).prop_flat_map(|t| prop::collection::vec(0usize..=t + 3, t))
}

fn regime() -> impl Strategy<Value = DelayRegime> {
    prop_oneof![
        (0usize..8).prop_map(DelayRegime::Fixed),
        (0usize..4, 0usize..10).prop_map(|(lo, w)| DelayRegime::Uniform { lo, hi: lo + w }),
        (0.0f64..0.5).prop_map(|p| DelayRegime::HeavyTail {
            base: Box::new(DelayRegime::Uniform { lo: 0, hi: 5 }),
            p,
        }),
        (0.05f64..1.0, 1usize..12).prop_map(|(p, period)| DelayRegime::GeometricAlternating {
            p: Some(p),
            period,
            fallback: Box::new(DelayRegime::Uniform { lo: 0, hi: 5 }),
        }),
    ]
}

proptest! {
    #[test]
    fn sets_and_statistics_match_definitions(raw in raw_delays()) {
        let s = DelaySchedule::new(raw.clone()).unwrap().truncate();
        let d = oracle::truncate(&raw);
        prop_assert_eq!(s.delays(), &d[..]);
        prop_assert!(s.is_truncated());
        let horizon = d.len();
        let mut missing_total = 0;
        for t in 1..=horizon {
            let m = s.missing_at(t).unwrap();
            let o = s.observed_at(t).unwrap();
            prop_assert_eq!(&m, &oracle::missing(&d, t));
            prop_assert_eq!(&o, &oracle::observed(&d, t));
            prop_assert_eq!(m.len() + o.len(), t - 1);
            if t < horizon {
                let next = s.missing_at(t + 1).unwrap();
                prop_assert!(next.iter().all(|tau| m.contains(tau) || *tau == t));
            }
            missing_total += m.len();
        }
        prop_assert!(s.missing_at(horizon + 1).unwrap().is_empty());
        let stats = s.stats();
        prop_assert_eq!(missing_total, stats.d_tot);
        prop_assert_eq!(stats.d_tot, oracle::d_tot(&d));
        prop_assert_eq!(stats.d_max, oracle::d_max(&d));
        prop_assert_eq!(stats.sigma_max, oracle::sigma_max(&d));
        for t in 1..=horizon {
            prop_assert_eq!(stats.perceived_dmax[t - 1], oracle::perceived_dmax(&d, t));
        }
        let summary = s.summary();
        prop_assert_eq!((summary.sigma_max, summary.d_max, summary.d_tot), (stats.sigma_max, stats.d_max, stats.d_tot));
    }

    #[test]
    fn sigma_max_is_bounded_by_d_max_and_total_delay(kind in regime(), seed in any::<u64>(), horizon in 1usize..200) {
        let s = realize_schedule(&DelayRegimeSpec { kind, seed }, horizon).unwrap();
        let st = s.summary();
        prop_assert!(st.sigma_max <= st.d_max);
        prop_assert!(st.sigma_max as f64 <= 2.0 * 2f64.sqrt() * (st.d_tot as f64).sqrt() + 1e-12);
    }

    #[test]
    fn sigma_max_equals_best_subset_split(raw in (1usize..10).prop_flat_map(|t| prop::collection::vec(0usize..=t, t))) {
        let d = oracle::truncate(&raw);
        let s = DelaySchedule::new(d.clone()).unwrap();
        prop_assert_eq!(s.summary().sigma_max, oracle::sigma_max_subset_min(&d));
    }

    #[test]
    fn tracker_reproduces_offline_perceived_delay(raw in raw_delays()) {
        let s = DelaySchedule::new(raw).unwrap().truncate();
        let stats = s.stats();
        let arrivals = s.arrival_index();
        let mut tracker = OnlineDelayTracker::new();
        let mut log = Vec::new();
        for t in 1..=s.horizon() {
            tracker.begin_round(t).unwrap();
            prop_assert_eq!(tracker.perceived_dmax(), stats.perceived_dmax[t - 1]);
            prop_assert_eq!(online_perceived_dmax(&log, t).unwrap(), stats.perceived_dmax[t - 1]);
            prop_assert_eq!(tracker.missing_now(), s.missing_at(t).unwrap().len());
            tracker.deliver(arrivals[t - 1].iter().copied()).unwrap();
            log.extend(arrivals[t - 1].iter().map(|&o| (o, t)));
        }
    }

    #[test]
    fn realization_is_deterministic_and_round_trips(kind in regime(), seed in any::<u64>(), horizon in 1usize..100) {
        let spec = DelayRegimeSpec { kind, seed };
        let a = realize_schedule(&spec, horizon).unwrap();
        let b = realize_schedule(&spec, horizon).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(DelaySchedule::from_text(&a.to_text()).unwrap(), a);
    }
}

#[test]
fn witness_sequences() {
    for n in 10..=50 {
        let s = DelaySchedule::countdown(n).unwrap().summary();
        assert_eq!(s.sigma_max, n - 1);
        assert_eq!(s.d_tot, n * (n - 1) / 2);
        // σ_max ≥ √(1.5·d_tot) ⇔ 2σ² ≥ 3·d_tot.
        assert!(2 * s.sigma_max * s.sigma_max >= 3 * s.d_tot);
    }
    for horizon in [2, 10, 100, 1000] {
        let s = DelaySchedule::constant(horizon, 1).unwrap().summary();
        assert_eq!((s.sigma_max, s.d_tot), (1, horizon - 1));
    }
}

#[test]
fn regime_grammar_round_trips() {
    for text in [
        "fixed:3",
        "uniform:0:5",
        "heavy:0.1:uniform:0:5",
        "geoalt:0.5:30:uniform:0:5",
    ] {
        let r = DelayRegime::parse(text).unwrap();
        assert_eq!(DelayRegime::parse(&r.to_string()).unwrap(), r, "{text}");
    }
    for bad in ["", "uniform:5:1", "heavy:1.5:fixed:1", "fixed:x", "nope:1"] {
        assert!(DelayRegime::parse(bad).is_err(), "{bad}");
    }
}
