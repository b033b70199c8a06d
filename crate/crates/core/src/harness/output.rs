//! CSV and metadata output.
//!
//! `traces.csv`: `run_id,algo,env,delay_regime,seed,t,inst_loss,cum_regret`.
//! `aggregate.csv`: `algo,t,mean_cum_regret,std_cum_regret,n_trials`.
//! Floats carry 12 significant digits.

use std::fs;
use std::path::Path;

use crate::environments::DataSource;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::run::{AggregateRow, ExperimentResult, RegretTrace};
use crate::rng::GENERATOR_ID;

pub const TRACE_HEADER: [&str; 8] = [
    "run_id",
    "algo",
    "env",
    "delay_regime",
    "seed",
    "t",
    "inst_loss",
    "cum_regret",
];
pub const AGGREGATE_HEADER: [&str; 5] = ["algo", "t", "mean_cum_regret", "std_cum_regret", "n_trials"];

fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

pub fn emit_csv(traces: &[RegretTrace], path: &Path) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::Argument("no traces to write".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(TRACE_HEADER).map_err(|e| csv_err(path, e))?;
    for tr in traces {
        let seed = tr.seed.to_string();
        for (i, (loss, regret)) in tr.records.inst_loss.iter().zip(&tr.records.cum_regret).enumerate() {
            w.write_record([
                tr.run_id.as_str(),
                &tr.algo,
                &tr.env,
                &tr.delay_regime,
                &seed,
                &(i + 1).to_string(),
                &fmt_float(*loss),
                &fmt_float(*regret),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn emit_aggregate_csv(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(AGGREGATE_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.algo.as_str(),
            &r.t.to_string(),
            &fmt_float(r.mean),
            &fmt_float(r.std),
            &r.n_trials.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row of a trace CSV read back.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub run_id: String,
    pub algo: String,
    pub t: usize,
    pub inst_loss: f64,
    pub cum_regret: f64,
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |what: &str| Error::Parse {
            line: i + 2,
            msg: format!("bad {what}"),
        };
        rows.push(TraceRow {
            run_id: rec[0].to_string(),
            algo: rec[1].to_string(),
            t: rec[5].parse().map_err(|_| bad("t"))?,
            inst_loss: rec[6].parse().map_err(|_| bad("inst_loss"))?,
            cum_regret: rec[7].parse().map_err(|_| bad("cum_regret"))?,
        });
    }
    Ok(rows)
}

pub fn metadata_text(cfg: &ExperimentConfig, result: &ExperimentResult) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "code_version = {} {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    ));
    s.push_str(&format!("generator = {GENERATOR_ID}\n"));
    s.push_str(&format!("env = {}\n", cfg.env.label()));
    s.push_str(&format!("delay_regime = {}\n", cfg.delay));
    s.push_str(&format!(
        "T = {}\ntrials = {}\nmaster_seed = {}\n",
        cfg.horizon, cfg.trials, cfg.master_seed
    ));
    let algos: Vec<&str> = cfg.algos.iter().map(|a| a.name.as_str()).collect();
    s.push_str(&format!("algos = {}\n", algos.join(",")));
    if let DataSource::Dataset(d) = &cfg.env.source {
        s.push_str(&format!("dataset_rows = {} (streamed cyclically)\n", d.len()));
    }
    s.push_str("\n[config]\n");
    s.push_str(&cfg.to_string());
    s.push_str("\n[trials]\n# trial seed sigma_max d_max d_tot\n");
    for (trial, seed, d) in &result.trials {
        s.push_str(&format!("{trial} {seed} {} {} {}\n", d.sigma_max, d.d_max, d.d_tot));
    }
    s
}

/// Writes `traces.csv`, `aggregate.csv`, `metadata.txt` and per-trial
/// schedules under `dir`.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    emit_csv(&result.traces, &dir.join("traces.csv"))?;
    emit_aggregate_csv(&result.aggregate, &dir.join("aggregate.csv"))?;
    let meta = dir.join("metadata.txt");
    fs::write(&meta, metadata_text(cfg, result)).map_err(|e| Error::io(&meta, e))?;
    let sched_dir = dir.join("schedules");
    fs::create_dir_all(&sched_dir).map_err(|e| Error::io(&sched_dir, e))?;
    for (i, s) in result.schedules.iter().enumerate() {
        s.write(&sched_dir.join(format!("trial_{i}.txt")))?;
    }
    Ok(())
}
