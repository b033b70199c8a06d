//! The round loop and the multi-trial experiment driver.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::delay_model::{realize_schedule, DelayRegimeSpec, DelaySchedule, DelaySummary};
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::harness::algorithms::build_learner;
use crate::harness::comparator::{offline_comparator, Comparator};
use crate::harness::config::{AlgoSpec, ExperimentConfig};
use crate::learners::{Feedback, FeedbackKind, GradientPacket, LabelPacket, OnlineLearner, RoundDiagnostics};
use crate::rng::derive_seed;
use crate::Vector;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Per-round output of driving one learner through one stream.
#[derive(Clone, Debug, Default)]
pub struct RoundRecords {
    pub inst_loss: Vec<f64>,
    pub cum_regret: Vec<f64>,
    pub diagnostics: Vec<RoundDiagnostics>,
    /// Played points, when detail recording is on.
    pub played: Vec<Vector>,
    /// Origins delivered at the end of each round, when detail recording is on.
    pub delivered: Vec<Vec<usize>>,
}

/// Runs the delayed protocol: play `x_t` (OLR learners see `z_t` first),
/// record `f_t(x_t)`, then deliver every packet with `τ + d_τ = t`.
pub fn run_learner(
    learner: &mut dyn OnlineLearner,
    env: &Environment,
    schedule: &DelaySchedule,
    comparator: &Comparator,
    record_detail: bool,
) -> Result<RoundRecords> {
    let horizon = env.horizon();
    if schedule.horizon() != horizon {
        return Err(Error::config(
            "T",
            format!(
                "schedule horizon {} differs from the stream's {horizon}",
                schedule.horizon()
            ),
        ));
    }
    let kind = learner.feedback_kind();
    let arrivals = schedule.arrival_index();
    let mut pending: Vec<Option<Feedback>> = vec![None; horizon + 1];
    let mut out = RoundRecords {
        inst_loss: Vec::with_capacity(horizon),
        cum_regret: Vec::with_capacity(horizon),
        diagnostics: Vec::with_capacity(horizon),
        ..Default::default()
    };
    let mut regret = CompensatedSum::default();
    for t in 1..=horizon {
        let z = env.feature(t)?;
        let context = (kind == FeedbackKind::Label).then_some(z);
        let x = learner.play(t, context)?;
        let loss = env.loss_value(t, &x)?;
        regret.add(loss - env.loss_value(t, &comparator.u)?);
        out.inst_loss.push(loss);
        out.cum_regret.push(regret.value());
        out.diagnostics.push(learner.diagnostics());

        let arrival = t + schedule.delay(t);
        pending[t] = Some(match kind {
            FeedbackKind::Gradient => Feedback::Gradient(GradientPacket {
                origin: t,
                arrival,
                gradient: env.loss_grad(t, &x)?,
                played: x.clone(),
            }),
            FeedbackKind::Label => Feedback::Label(LabelPacket {
                origin: t,
                arrival,
                label: env.label(t)?,
                feature: z.clone(),
            }),
        });
        if record_detail {
            out.played.push(x);
        }

        let origins = &arrivals[t - 1];
        let batch: Vec<Feedback> = origins
            .iter()
            .map(|&o| pending[o].take().expect("each origin is delivered once"))
            .collect();
        learner.absorb(t, &batch)?;
        if record_detail {
            out.delivered.push(origins.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TraceSummary {
    pub final_regret: f64,
    pub delays: DelaySummary,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct RegretTrace {
    pub run_id: String,
    pub algo: String,
    pub env: String,
    pub delay_regime: String,
    pub seed: u64,
    pub trial: usize,
    pub records: RoundRecords,
    pub summary: TraceSummary,
}

/// One trial's shared realization: every algorithm in the trial sees the same
/// stream, schedule and comparator.
#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub trial: usize,
    pub seed: u64,
    pub env: Environment,
    pub schedule: DelaySchedule,
    pub delays: DelaySummary,
    pub comparator: Comparator,
}

impl TrialSetup {
    /// Environment and schedule sub-seeds derive from the trial seed only.
    pub fn prepare(cfg: &ExperimentConfig, trial: usize) -> Result<Self> {
        let seed = derive_seed(cfg.master_seed, "trial", trial as u64);
        let env = Environment::materialize(&cfg.env, cfg.horizon, derive_seed(seed, "env", 0))?;
        let schedule = realize_schedule(
            &DelayRegimeSpec {
                kind: cfg.delay.clone(),
                seed: derive_seed(seed, "delay", 0),
            },
            cfg.horizon,
        )?;
        let delays = schedule.summary();
        let comparator = offline_comparator(&env)?;
        Ok(Self {
            trial,
            seed,
            env,
            schedule,
            delays,
            comparator,
        })
    }
}

pub fn run_cell(
    cfg: &ExperimentConfig,
    algo: &AlgoSpec,
    setup: &TrialSetup,
    record_detail: bool,
) -> Result<RegretTrace> {
    let start = Instant::now();
    let mut learner = build_learner(algo, &setup.env, &setup.delays)?;
    let records = run_learner(
        learner.as_mut(),
        &setup.env,
        &setup.schedule,
        &setup.comparator,
        record_detail,
    )?;
    let final_regret = records.cum_regret.last().copied().unwrap_or(0.0);
    Ok(RegretTrace {
        run_id: format!("{}-t{}", algo.name, setup.trial),
        algo: algo.name.clone(),
        env: cfg.env.label(),
        delay_regime: cfg.delay.to_string(),
        seed: setup.seed,
        trial: setup.trial,
        records,
        summary: TraceSummary {
            final_regret,
            delays: setup.delays,
            wall_time: start.elapsed(),
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub algo: String,
    pub t: usize,
    pub mean: f64,
    pub std: f64,
    pub n_trials: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    /// Ordered by algorithm (config order), then trial.
    pub traces: Vec<RegretTrace>,
    pub aggregate: Vec<AggregateRow>,
    pub trials: Vec<(usize, u64, DelaySummary)>,
    pub schedules: Vec<DelaySchedule>,
}

impl ExperimentResult {
    pub fn traces_for<'a>(&'a self, algo: &'a str) -> impl Iterator<Item = &'a RegretTrace> + 'a {
        self.traces.iter().filter(move |t| t.algo == algo)
    }

    pub fn final_regrets(&self, algo: &str) -> Vec<f64> {
        self.traces_for(algo).map(|t| t.summary.final_regret).collect()
    }
}

/// Mean and sample standard deviation (`n − 1`; zero for a single trial) of
/// the cumulative regret per algorithm and round.
pub fn aggregate(traces: &[RegretTrace]) -> Vec<AggregateRow> {
    let mut algos: Vec<&str> = Vec::new();
    for t in traces {
        if !algos.contains(&t.algo.as_str()) {
            algos.push(&t.algo);
        }
    }
    let mut rows = Vec::new();
    for algo in algos {
        let group: Vec<&RegretTrace> = traces.iter().filter(|t| t.algo == algo).collect();
        let horizon = group.iter().map(|t| t.records.cum_regret.len()).min().unwrap_or(0);
        let n = group.len();
        for i in 0..horizon {
            let mut sum = CompensatedSum::default();
            for t in &group {
                sum.add(t.records.cum_regret[i]);
            }
            let mean = sum.value() / n as f64;
            let std = if n > 1 {
                let var: f64 = group
                    .iter()
                    .map(|t| (t.records.cum_regret[i] - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64;
                var.sqrt()
            } else {
                0.0
            };
            rows.push(AggregateRow {
                algo: algo.to_string(),
                t: i + 1,
                mean,
                std,
                n_trials: n,
            });
        }
    }
    rows
}

/// Runs every (algorithm, trial) cell on a pool of `cfg.workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig, record_detail: bool) -> Result<ExperimentResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::config("run.workers", e.to_string()))?;
    pool.install(|| {
        let setups = (0..cfg.trials)
            .into_par_iter()
            .map(|i| TrialSetup::prepare(cfg, i))
            .collect::<Result<Vec<_>>>()?;
        let cells: Vec<(&AlgoSpec, &TrialSetup)> = cfg
            .algos
            .iter()
            .flat_map(|a| setups.iter().map(move |s| (a, s)))
            .collect();
        let traces = cells
            .into_par_iter()
            .map(|(a, s)| run_cell(cfg, a, s, record_detail))
            .collect::<Result<Vec<_>>>()?;
        let aggregate = aggregate(&traces);
        Ok(ExperimentResult {
            aggregate,
            trials: setups.iter().map(|s| (s.trial, s.seed, s.delays)).collect(),
            schedules: setups.into_iter().map(|s| s.schedule).collect(),
            traces,
        })
    })
}
