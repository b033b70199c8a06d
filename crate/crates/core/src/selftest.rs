//! Fast property checks runnable from the command line.
//!
//! Each check draws small random instances from a fixed seed and reports the
//! number of violations; the full suites live in the test targets.

use crate::baselines::{Bold, ClassicOns, ClassicVaw};
use crate::delay_model::{realize_schedule, DelayRegime, DelayRegimeSpec, DelaySchedule, OnlineDelayTracker};
use crate::environments::{DataSource, EnvSpec, Environment, LossFamily};
use crate::error::Result;
use crate::harness::{offline_comparator, run_learner};
use crate::learners::{
    DelayedOns, DelayedVaw, Feedback, LabelPacket, OnlineLearner, OnsConfig, OnsTuning, VawConfig, VawTuning,
};
use crate::rng::{derive_seed, rng_from_seed};
use rand::Rng as _;

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_regime(rng: &mut crate::rng::Rng) -> DelayRegime {
    match rng.random_range(0..4) {
        0 => DelayRegime::Fixed(rng.random_range(0..6)),
        1 => DelayRegime::Uniform {
            lo: 0,
            hi: rng.random_range(0..8),
        },
        2 => DelayRegime::HeavyTail {
            base: Box::new(DelayRegime::Uniform { lo: 0, hi: 5 }),
            p: rng.random_range(0.0..0.3),
        },
        _ => DelayRegime::GeometricAlternating {
            p: Some(rng.random_range(0.05..1.0)),
            period: rng.random_range(1..10),
            fallback: Box::new(DelayRegime::Uniform { lo: 0, hi: 5 }),
        },
    }
}

/// Observed/missing identities, the σ_max bounds and online perceived delays.
pub fn check_bookkeeping(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    for i in 0..cases {
        let horizon = rng.random_range(1..=200);
        let spec = DelayRegimeSpec {
            kind: random_regime(&mut rng),
            seed: derive_seed(seed, "bookkeeping", i as u64),
        };
        let s = realize_schedule(&spec, horizon)?;
        let stats = s.stats();
        let mut ok = stats.sigma_max <= stats.d_max
            && (stats.sigma_max as f64) <= 2.0 * 2f64.sqrt() * (stats.d_tot as f64).sqrt() + 1e-12;
        let mut missing_total = 0;
        let mut prev: Vec<usize> = Vec::new();
        let mut tracker = OnlineDelayTracker::new();
        let arrivals = s.arrival_index();
        for t in 1..=horizon {
            let m = s.missing_at(t)?;
            let o = s.observed_at(t)?;
            ok &= m.len() + o.len() == t - 1;
            missing_total += m.len();
            if t > 1 {
                ok &= m.iter().all(|tau| prev.contains(tau) || *tau == t - 1);
            }
            tracker.begin_round(t)?;
            ok &= tracker.perceived_dmax() == stats.perceived_dmax[t - 1];
            tracker.deliver(arrivals[t - 1].iter().copied())?;
            prev = m;
        }
        ok &= missing_total + s.missing_at(horizon + 1)?.len() == stats.d_tot;
        failures += usize::from(!ok);
    }
    Ok(CheckOutcome {
        name: "delay bookkeeping",
        cases,
        failures,
    })
}

/// Witness sequences: countdown gives σ_max = N − 1, constant-one gives σ_max = 1.
pub fn check_witnesses() -> Result<CheckOutcome> {
    let mut failures = 0;
    let mut cases = 0;
    for n in 10..=50 {
        let s = DelaySchedule::countdown(n)?.stats();
        cases += 1;
        let ok = s.sigma_max == n - 1 && s.d_tot == n * (n - 1) / 2 && 2 * (s.sigma_max * s.sigma_max) >= 3 * s.d_tot;
        failures += usize::from(!ok);
    }
    for horizon in [10, 100, 1000] {
        let s = DelaySchedule::constant(horizon, 1)?.summary();
        cases += 1;
        failures += usize::from(!(s.sigma_max == 1 && s.d_tot == horizon - 1));
    }
    Ok(CheckOutcome {
        name: "sigma_max witnesses",
        cases,
        failures,
    })
}

fn max_coord_gap(a: &[crate::Vector], b: &[crate::Vector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// Without delays, delayed ONS/VAW trace their undelayed counterparts.
pub fn check_no_delay_reductions(horizon: usize, seed: u64) -> Result<CheckOutcome> {
    let mut failures = 0;
    let zero = DelaySchedule::zero(horizon);

    let spec = EnvSpec::new(
        LossFamily::ExpConcaveSquared,
        DataSource::Synthetic { dim: 5, noise_sd: 1.0 },
    );
    let env = Environment::materialize(&spec, horizon, seed)?;
    let comp = offline_comparator(&env)?;
    let c = env.constants();
    let cfg = OnsConfig {
        domain: *env.domain().ball().expect("squared family is constrained"),
        g: c.g,
        d: c.d,
        alpha: c.alpha.expect("squared family has alpha"),
        horizon,
        tuning: OnsTuning::Constant(1.0),
    };
    let mut delayed = DelayedOns::new(cfg)?;
    let mut classic = Bold::new(ClassicOns::new(cfg.domain, cfg.beta(), 1.0)?);
    let a = run_learner(&mut delayed, &env, &zero, &comp, true)?;
    let b = run_learner(&mut classic, &env, &zero, &comp, true)?;
    failures += usize::from(!(max_coord_gap(&a.played, &b.played) <= 1e-9));

    let spec = EnvSpec::new(LossFamily::OlrSquared, DataSource::Synthetic { dim: 5, noise_sd: 1.0 });
    let env = Environment::materialize(&spec, horizon, seed)?;
    let comp = offline_comparator(&env)?;
    let mut delayed = DelayedVaw::new(VawConfig {
        gamma: 1.0,
        z_bound: None,
        horizon,
        dim: 5,
        tuning: VawTuning::Adaptive,
    })?;
    let mut classic = Bold::new(ClassicVaw::new(5, 1.0, true)?);
    let a = run_learner(&mut delayed, &env, &zero, &comp, true)?;
    let b = run_learner(&mut classic, &env, &zero, &comp, true)?;
    failures += usize::from(!(max_coord_gap(&a.played, &b.played) <= 1e-9));

    Ok(CheckOutcome {
        name: "no-delay reductions",
        cases: 2,
        failures,
    })
}

/// Clipped VAW predictions sit exactly on `±ρ_t`, on a synthetic OLR cell
/// and on streams built to trigger clipping.
pub fn check_clipping(horizon: usize, seed: u64) -> Result<CheckOutcome> {
    let spec = EnvSpec::new(LossFamily::OlrSquared, DataSource::Synthetic { dim: 5, noise_sd: 1.0 });
    let env = Environment::materialize(&spec, horizon, seed)?;
    let comp = offline_comparator(&env)?;
    let sched = realize_schedule(
        &DelayRegimeSpec {
            kind: DelayRegime::HeavyTail {
                base: Box::new(DelayRegime::Uniform { lo: 0, hi: 5 }),
                p: 0.1,
            },
            seed,
        },
        horizon,
    )?;
    let mut vaw = DelayedVaw::new(VawConfig {
        gamma: 1.0,
        z_bound: None,
        horizon,
        dim: 5,
        tuning: VawTuning::Adaptive,
    })?;
    let rec = run_learner(&mut vaw, &env, &sched, &comp, true)?;
    let mut cases = 0;
    let mut failures = 0;
    for (t, d) in rec.diagnostics.iter().enumerate() {
        if d.clip_scale.unwrap_or(1.0) < 1.0 {
            cases += 1;
            let pred = env.features()[t].dot(&rec.played[t]).abs();
            failures += usize::from((pred - d.rho.unwrap_or(0.0)).abs() > 1e-10);
        }
    }
    // Mostly tiny features with unit-scale labels fit a steep slope; the
    // occasional larger feature then overshoots ρ and gets clipped.
    let mut rng = rng_from_seed(derive_seed(seed, "clipping", 0));
    for _ in 0..50 {
        let n = rng.random_range(1..4);
        let horizon = 150;
        let mut vaw = DelayedVaw::new(VawConfig {
            gamma: 0.01,
            z_bound: None,
            horizon,
            dim: n,
            tuning: VawTuning::Fixed,
        })?;
        let direction = crate::Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut pending: Vec<Vec<Feedback>> = vec![Vec::new(); horizon + 1];
        for t in 1..=horizon {
            let scale = if rng.random_bool(0.1) { 0.2 } else { 0.02 };
            let z = crate::Vector::from_fn(n, |_, _| rng.random_range(-scale..scale));
            let y = direction.dot(&z).signum() * rng.random_range(0.5..1.0);
            let x = vaw.play(t, Some(&z))?;
            let d = vaw.diagnostics();
            if d.clip_scale.unwrap_or(1.0) < 1.0 {
                cases += 1;
                failures += usize::from((z.dot(&x).abs() - d.rho.unwrap_or(0.0)).abs() > 1e-10);
            }
            let arrival = (t + rng.random_range(0..4)).min(horizon);
            pending[arrival].push(Feedback::Label(LabelPacket {
                origin: t,
                arrival,
                label: y,
                feature: z,
            }));
            vaw.absorb(t, &std::mem::take(&mut pending[t]))?;
        }
    }
    Ok(CheckOutcome {
        name: "VAW clipping",
        cases,
        failures,
    })
}

pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_bookkeeping(200, seed)?,
        check_witnesses()?,
        check_no_delay_reductions(300, seed)?,
        check_clipping(2000, seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        for c in run_all(3).unwrap() {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn learners_are_boxable() {
        let _: Box<dyn OnlineLearner> = Box::new(Bold::new(ClassicVaw::new(1, 1.0, false).unwrap()));
    }
}
