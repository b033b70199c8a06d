//! Turns an [`AlgoSpec`] into a learner wired to an environment's constants.

use crate::baselines::{Bold, ClassicOgdSc, ClassicOns, ClassicVaw, Dogd, DogdSc, DogdScSchedule, SdmdRsc};
use crate::delay_model::DelaySummary;
use crate::environments::{Environment, LossFamily};
use crate::error::{Error, Result};
use crate::geometry::BallDomain;
use crate::harness::config::{AlgoKind, AlgoSpec};
use crate::learners::{
    DelayedFtrl, DelayedOmd, DelayedOns, DelayedVaw, OnlineLearner, OnsConfig, OnsTuning, VawConfig, VawTuning,
};

fn mismatch(algo: &AlgoSpec, msg: impl Into<String>) -> Error {
    Error::config(format!("algo.{}", algo.name), msg)
}

fn lambda(algo: &AlgoSpec, env: &Environment) -> Result<f64> {
    match algo.get_f64("lambda")?.or(env.constants().lambda) {
        Some(l) => Ok(l),
        None => Err(mismatch(
            algo,
            format!(
                "needs a strongly convex loss; `{}` has no λ (set `lambda`)",
                env.family()
            ),
        )),
    }
}

fn ball(algo: &AlgoSpec, env: &Environment) -> Result<BallDomain> {
    env.domain()
        .ball()
        .copied()
        .ok_or_else(|| mismatch(algo, "needs a ball-constrained domain; this cell is unconstrained"))
}

/// `β = ½·min{1/(4GD), α}` from the environment (or the `alpha` override).
fn ons_config(algo: &AlgoSpec, env: &Environment, tuning: OnsTuning) -> Result<OnsConfig> {
    let dom = ball(algo, env)?;
    let c = env.constants();
    let alpha = algo.get_f64("alpha")?.or(c.alpha).ok_or_else(|| {
        mismatch(
            algo,
            format!("needs an exp-concave loss; `{}` has no α (set `alpha`)", env.family()),
        )
    })?;
    Ok(OnsConfig {
        domain: dom,
        g: c.g,
        d: c.d,
        alpha,
        horizon: env.horizon(),
        tuning,
    })
}

fn ons_tuning(algo: &AlgoSpec) -> Result<OnsTuning> {
    match algo.get_str("tuning").unwrap_or("adaptive") {
        "constant" => Ok(OnsTuning::Constant(algo.get_f64("eta")?.unwrap_or(1.0))),
        "sqrt" | "sqrt_missing" => Ok(OnsTuning::SqrtMissing),
        "adaptive" => Ok(OnsTuning::Adaptive),
        other => Err(mismatch(
            algo,
            format!("unknown ONS tuning `{other}` (constant|sqrt|adaptive)"),
        )),
    }
}

fn require_olr(algo: &AlgoSpec, env: &Environment) -> Result<()> {
    if env.family() != LossFamily::OlrSquared {
        return Err(mismatch(
            algo,
            format!(
                "label-feedback learner needs the unconstrained olr family; this cell is `{}`",
                env.family()
            ),
        ));
    }
    Ok(())
}

/// Builds the learner; `delays` supplies the realized `d_tot` for DOGD's step.
pub fn build_learner(algo: &AlgoSpec, env: &Environment, delays: &DelaySummary) -> Result<Box<dyn OnlineLearner>> {
    let domain = *env.domain();
    let learner: Box<dyn OnlineLearner> = match algo.kind {
        AlgoKind::Ftrl => Box::new(DelayedFtrl::new(lambda(algo, env)?, domain)?),
        AlgoKind::Omd => Box::new(DelayedOmd::new(lambda(algo, env)?, domain)?),
        AlgoKind::SdmdRsc => Box::new(SdmdRsc::new(lambda(algo, env)?, domain)?),
        AlgoKind::DogdSc => {
            let schedule = match algo.get_str("schedule").unwrap_or("round") {
                "round" => DogdScSchedule::Round,
                "received" => DogdScSchedule::Received,
                other => {
                    return Err(mismatch(
                        algo,
                        format!("unknown DOGD-SC schedule `{other}` (round|received)"),
                    ))
                }
            };
            Box::new(DogdSc::with_schedule(lambda(algo, env)?, domain, schedule)?)
        }
        AlgoKind::Dogd => {
            let c = env.constants();
            match algo.get_f64("step")? {
                Some(eta) => Box::new(Dogd::new(eta, domain)?),
                None => Box::new(Dogd::tuned(c.d, c.g, env.horizon(), delays.d_tot, domain)?),
            }
        }
        AlgoKind::Ons => Box::new(DelayedOns::new(ons_config(algo, env, ons_tuning(algo)?)?)?),
        AlgoKind::Vaw => {
            require_olr(algo, env)?;
            let z_bound = match algo.get_str("z") {
                None | Some("auto") => None,
                Some(_) => algo.get_f64("z")?,
            };
            let tuning = match algo.get_str("tuning").unwrap_or("adaptive") {
                "adaptive" => VawTuning::Adaptive,
                "fixed" | "constant" => VawTuning::Fixed,
                other => return Err(mismatch(algo, format!("unknown VAW tuning `{other}` (adaptive|fixed)"))),
            };
            Box::new(DelayedVaw::new(VawConfig {
                gamma: algo.get_f64("gamma")?.unwrap_or(1.0),
                z_bound,
                horizon: env.horizon(),
                dim: env.dim(),
                tuning,
            })?)
        }
        AlgoKind::BoldOgd => Box::new(Bold::new(ClassicOgdSc::new(lambda(algo, env)?, domain)?)),
        AlgoKind::BoldOns => {
            let cfg = ons_config(algo, env, OnsTuning::Constant(1.0))?;
            let eps = algo.get_f64("epsilon")?.unwrap_or(1.0);
            Box::new(Bold::new(ClassicOns::new(cfg.domain, cfg.beta(), eps)?))
        }
        AlgoKind::BoldVaw => {
            require_olr(algo, env)?;
            let gamma = algo.get_f64("gamma")?.unwrap_or(1.0);
            let clip = algo.get_bool("clip")?.unwrap_or(false);
            Box::new(Bold::new(ClassicVaw::new(env.dim(), gamma, clip)?))
        }
    };
    Ok(learner)
}
