use std::fs;
use std::path::Path;

use delayed_oco::delay_model::DelaySchedule;
use delayed_oco::environments::{DataSource, EnvSpec, Environment, LossFamily};
use delayed_oco::harness::output::{AGGREGATE_HEADER, TRACE_HEADER};
use delayed_oco::harness::{
    aggregate, build_learner, emit_csv, offline_comparator, parse_config, read_trace_csv, run_cell, run_experiment,
    run_learner, write_experiment, AlgoSpec, ExperimentConfig, TrialSetup,
};
use delayed_oco::learners::DelayedFtrl;
use delayed_oco::rng::rng_from_seed;
use delayed_oco::Vector;
use delayed_oco_testkit as oracle;
use proptest::prelude::*;

fn config(family: &str, delay: &str, algos: &[&str], horizon: usize, trials: usize, seed: u64) -> ExperimentConfig {
    let mut text = format!("[env]\nfamily = {family}\n[delay]\nregime = {delay}\n[run]\nT = {horizon}\ntrials = {trials}\nmaster_seed = {seed}\n");
    for a in algos {
        text.push_str(&format!("[algo.{a}]\n"));
    }
    parse_config(&text, Path::new(".")).unwrap()
}

const ALL_CELLS: [(&str, &[&str]); 3] = [
    ("ridge", &["ftrl", "omd", "sdmd-rsc", "dogd-sc", "bold-ogd"]),
    (
        "squared",
        &["ons-constant", "ons-sqrt", "ons-adaptive", "dogd", "bold-ons"],
    ),
    ("olr", &["vaw", "dogd", "bold-vaw"]),
];

#[test]
fn golden_transcript() {
    let features = vec![
        Vector::from_vec(vec![1.0, 0.5]),
        Vector::from_vec(vec![-0.5, 1.0]),
        Vector::from_vec(vec![0.25, -1.0]),
        Vector::from_vec(vec![1.0, 1.0]),
        Vector::from_vec(vec![-1.0, 0.0]),
    ];
    let labels = vec![1.5, -0.5, 2.0, 1.0, -0.75];
    let spec = EnvSpec::new(
        LossFamily::StronglyConvexRidge,
        DataSource::Synthetic { dim: 2, noise_sd: 0.0 },
    );
    let env = Environment::explicit(&spec, features, labels).unwrap();
    let schedule = DelaySchedule::new(vec![2, 0, 1, 0, 0]).unwrap();
    let comp = offline_comparator(&env).unwrap();
    let mut ftrl = DelayedFtrl::new(1.0, *env.domain()).unwrap();
    let rec = run_learner(&mut ftrl, &env, &schedule, &comp, true).unwrap();

    let played = [
        [0.0, 0.0],
        [0.0, 0.0],
        [0.125, -0.25],
        [0.625, 0.0],
        [0.638671875, -0.2734375],
    ];
    let inst = [1.125, 0.125, 1.51611328125, 0.265625, 0.24753189086914062];
    let cum = [
        0.4168341921562687,
        0.4039660971947863,
        0.2738036808460867,
        0.20217962472803602,
        0.2858389178117666,
    ];
    for t in 0..5 {
        assert!(
            (&rec.played[t] - Vector::from_row_slice(&played[t])).amax() <= 1e-15,
            "x at round {}",
            t + 1
        );
        assert!((rec.inst_loss[t] - inst[t]).abs() <= 1e-15);
        assert!((rec.cum_regret[t] - cum[t]).abs() <= 1e-12);
    }
    assert!((&comp.u - Vector::from_vec(vec![0.4934527911784976, -0.13576843556168158])).amax() <= 1e-12);
    assert_eq!(rec.delivered, vec![vec![], vec![2], vec![1], vec![3, 4], vec![5]]);
}

#[test]
fn regret_columns_telescope_and_deliveries_follow_the_schedule() {
    for (family, algos) in ALL_CELLS {
        let cfg = config(family, "heavy:0.1:uniform:0:5", algos, 300, 2, 11);
        for trial in 0..cfg.trials {
            let setup = TrialSetup::prepare(&cfg, trial).unwrap();
            for algo in &cfg.algos {
                let tr = run_cell(&cfg, algo, &setup, true).unwrap();
                let mut running = 0.0;
                for t in 1..=cfg.horizon {
                    running += tr.records.inst_loss[t - 1] - setup.env.loss_value(t, &setup.comparator.u).unwrap();
                    assert!(
                        (tr.records.cum_regret[t - 1] - running).abs() <= 1e-9,
                        "{} round {t}",
                        algo.name
                    );
                    assert_eq!(tr.records.delivered[t - 1], setup.schedule.arrivals_at(t).unwrap());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_round_regret_is_nonnegative(seed in any::<u64>(), cell in 0usize..3) {
        let (family, algos) = ALL_CELLS[cell];
        let cfg = config(family, "uniform:0:5", algos, 1, 1, seed);
        let setup = TrialSetup::prepare(&cfg, 0).unwrap();
        for algo in &cfg.algos {
            let tr = run_cell(&cfg, algo, &setup, false).unwrap();
            prop_assert!(tr.summary.final_regret >= -1e-9, "{}: {}", algo.name, tr.summary.final_regret);
        }
    }

    #[test]
    fn comparator_is_locally_and_globally_optimal(seed in any::<u64>(), family in 0usize..3, horizon in 1usize..80) {
        let family = [LossFamily::StronglyConvexRidge, LossFamily::ExpConcaveSquared, LossFamily::OlrSquared][family];
        let mut spec = EnvSpec::new(family, DataSource::Synthetic { dim: 4, noise_sd: 1.0 });
        if family.is_constrained() {
            // Small radii make the ball constraint active.
            spec.radius = [0.3, 1.0, 2.0][(seed % 3) as usize];
        }
        let env = Environment::materialize(&spec, horizon, seed).unwrap();
        let comp = offline_comparator(&env).unwrap();
        let best = env.total_loss(&comp.u);
        prop_assert!((best - comp.total_loss).abs() <= 1e-9 * best.abs().max(1.0));
        let mut rng = rng_from_seed(seed);
        let project = |x: Vector| env.domain().project(&x);
        for _ in 0..10 {
            let dir = oracle::random_vector(&mut rng, 4, 1.0).normalize();
            let probe = project(&comp.u + dir * 1e-3);
            prop_assert!(env.total_loss(&probe) >= best - 1e-6);
        }
        for _ in 0..50 {
            let probe = project(oracle::random_vector(&mut rng, 4, 3.0));
            prop_assert!(env.total_loss(&probe) >= best - 1e-9);
        }
    }
}

#[test]
fn experiments_are_byte_identical_across_runs_and_worker_counts() {
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, dir) in dirs.iter().enumerate() {
        let mut cfg = config(
            "squared",
            "heavy:0.1:uniform:0:5",
            &["ons-adaptive", "dogd", "bold-ons"],
            200,
            3,
            5,
        );
        cfg.workers = [1, 1, 4][i];
        let result = run_experiment(&cfg, false).unwrap();
        write_experiment(dir.path(), &cfg, &result).unwrap();
    }
    for file in ["traces.csv", "aggregate.csv", "metadata.txt", "schedules/trial_2.txt"] {
        let first = fs::read(dirs[0].path().join(file)).unwrap();
        for dir in &dirs[1..] {
            assert_eq!(first, fs::read(dir.path().join(file)).unwrap(), "{file}");
        }
    }
    let other = tempfile::tempdir().unwrap();
    let cfg = config(
        "squared",
        "heavy:0.1:uniform:0:5",
        &["ons-adaptive", "dogd", "bold-ons"],
        200,
        3,
        6,
    );
    write_experiment(other.path(), &cfg, &run_experiment(&cfg, false).unwrap()).unwrap();
    assert_ne!(
        fs::read(dirs[0].path().join("traces.csv")).unwrap(),
        fs::read(other.path().join("traces.csv")).unwrap()
    );
}

#[test]
fn trace_csv_shape_and_round_trip() {
    let cfg = config("olr", "uniform:0:5", &["vaw", "bold-vaw"], 40, 2, 3);
    let result = run_experiment(&cfg, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traces.csv");
    emit_csv(&result.traces, &path).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
    assert_eq!(lines.count(), 2 * 2 * 40);

    let rows = read_trace_csv(&path).unwrap();
    let mut i = 0;
    for tr in &result.traces {
        for t in 1..=cfg.horizon {
            let row = &rows[i];
            assert_eq!(
                (row.run_id.as_str(), row.algo.as_str(), row.t),
                (tr.run_id.as_str(), tr.algo.as_str(), t)
            );
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-11 * b.abs().max(1e-300);
            assert!(close(row.inst_loss, tr.records.inst_loss[t - 1]));
            assert!(close(row.cum_regret, tr.records.cum_regret[t - 1]));
            i += 1;
        }
    }
    assert!(emit_csv(&[], &dir.path().join("empty.csv")).is_err());
}

#[test]
fn aggregate_is_mean_and_sample_std() {
    let cfg = config("ridge", "uniform:0:5", &["ftrl", "bold-ogd"], 30, 4, 2);
    let result = run_experiment(&cfg, false).unwrap();
    assert_eq!(result.aggregate, aggregate(&result.traces));
    for row in &result.aggregate {
        let vals: Vec<f64> = result
            .traces_for(&row.algo)
            .map(|t| t.records.cum_regret[row.t - 1])
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert_eq!(row.n_trials, 4);
        assert!((row.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((row.std - std).abs() <= 1e-10 * std.max(1.0));
    }
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &cfg, &result).unwrap();
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().next().unwrap(), AGGREGATE_HEADER.join(","));
    assert_eq!(agg.lines().count(), 1 + 2 * 30);

    let single = config("ridge", "uniform:0:5", &["ftrl"], 10, 1, 2);
    assert!(run_experiment(&single, false)
        .unwrap()
        .aggregate
        .iter()
        .all(|r| r.std == 0.0));
}

#[test]
fn trials_pair_algorithms_on_one_realization() {
    let cfg = config("ridge", "heavy:0.1:uniform:0:5", &["ftrl", "dogd-sc"], 50, 3, 8);
    let result = run_experiment(&cfg, false).unwrap();
    for trial in 0..3 {
        let setup = TrialSetup::prepare(&cfg, trial).unwrap();
        assert_eq!(result.schedules[trial], setup.schedule);
        for tr in result.traces.iter().filter(|t| t.trial == trial) {
            assert_eq!(tr.seed, setup.seed);
            assert_eq!(tr.summary.delays, setup.delays);
        }
    }
}

#[test]
fn family_mismatches_and_bad_configs_are_rejected() {
    let env = Environment::materialize(
        &EnvSpec::new(
            LossFamily::ExpConcaveSquared,
            DataSource::Synthetic { dim: 2, noise_sd: 1.0 },
        ),
        5,
        0,
    )
    .unwrap();
    let summary = DelaySchedule::zero(5).summary();
    for name in ["vaw", "bold-vaw", "ftrl"] {
        assert!(
            build_learner(&AlgoSpec::named(name).unwrap(), &env, &summary).is_err(),
            "{name}"
        );
    }
    assert!(AlgoSpec::named("no-such-algo").is_err());
    let base = "[env]\nfamily = ridge\n[delay]\nregime = fixed:1\n[algo.ftrl]\n";
    assert!(parse_config(base, Path::new(".")).is_ok());
    for bad in [
        format!("{base}[run]\ntrials = 0\n"),
        format!("{base}[run]\nspeed = 3\n"),
        base.replace("fixed:1", "fixed:-1"),
        base.replace("ridge", "hinge"),
        format!("{base}[extra]\n"),
    ] {
        assert!(parse_config(&bad, Path::new(".")).is_err(), "{bad}");
    }
}
