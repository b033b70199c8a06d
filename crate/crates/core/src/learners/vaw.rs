//! Delayed Vovk-Azoury-Warmuth forecaster with prediction clipping.
//!
//! Round `t`: after seeing `z_t`, solve `x_t = A_t⁻¹ b` with
//! `A_t = η_t I + Σ_{τ≤t} z_τ z_τᵀ` (the current feature included) and
//! `b = Σ_{τ∈o_t} y_τ z_τ`, then shrink `x_t` so that `|⟨z_t, x̃_t⟩| ≤ ρ_t`,
//! where `ρ_t` is the largest label magnitude observed so far.

use crate::delay_model::OnlineDelayTracker;
use crate::error::{Error, Result};
use crate::geometry::solve_psd;
use crate::learners::{accept_batch, Feedback, FeedbackKind, OnlineLearner, RoundDiagnostics, ShiftedGram};
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VawTuning {
    /// `η_t = γ` throughout.
    Fixed,
    /// `η_t = γ(min{a_t, b_t} + 1)`.
    Adaptive,
}

#[derive(Clone, Copy, Debug)]
pub struct VawConfig {
    pub gamma: f64,
    /// Feature-norm bound `Z`; `None` tracks `Z_t = max_{τ≤t} ‖z_τ‖` online.
    pub z_bound: Option<f64>,
    pub horizon: usize,
    pub dim: usize,
    pub tuning: VawTuning,
}

/// `γ(min{a_t, b_t} + 1)` with `a_t = 2n·d·ln(1 + Z²T/(γn))` and `b_t = Z·√(Σ|m_s|)`.
pub fn vaw_learning_rate(
    gamma: f64,
    dim: usize,
    horizon: usize,
    z: f64,
    perceived_dmax: usize,
    missing_sum: usize,
) -> f64 {
    let n = dim as f64;
    let a_t = 2.0 * n * perceived_dmax as f64 * (z * z * horizon as f64 / (gamma * n)).ln_1p();
    let b_t = z * (missing_sum as f64).sqrt();
    gamma * (a_t.min(b_t) + 1.0)
}

#[derive(Clone, Debug)]
pub struct DelayedVaw {
    cfg: VawConfig,
    gram: ShiftedGram,
    b_obs: Vector,
    rho: f64,
    z_seen: f64,
    tracker: OnlineDelayTracker,
    eta_prev: f64,
    x_unclipped: Vector,
    x_played: Vector,
    clip_scale: f64,
    rho_played: f64,
}

impl DelayedVaw {
    pub fn new(cfg: VawConfig) -> Result<Self> {
        if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
            return Err(Error::config(
                "gamma",
                format!("regularization must be positive, got {}", cfg.gamma),
            ));
        }
        if cfg.dim == 0 {
            return Err(Error::config("dim", "feature dimension must be positive"));
        }
        if let Some(z) = cfg.z_bound {
            if !(z >= 0.0 && z.is_finite()) {
                return Err(Error::config(
                    "Z",
                    format!("feature bound must be finite and non-negative, got {z}"),
                ));
            }
        }
        if cfg.tuning == VawTuning::Adaptive && cfg.horizon == 0 {
            return Err(Error::config("T", "horizon must be set for the adaptive tuning"));
        }
        let n = cfg.dim;
        Ok(Self {
            gram: ShiftedGram::new(n, cfg.gamma)?,
            b_obs: Vector::zeros(n),
            rho: 0.0,
            z_seen: 0.0,
            tracker: OnlineDelayTracker::new(),
            eta_prev: cfg.gamma,
            x_unclipped: Vector::zeros(n),
            x_played: Vector::zeros(n),
            clip_scale: 1.0,
            rho_played: 0.0,
            cfg,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        self.gram.eta()
    }

    pub fn unclipped(&self) -> &Vector {
        &self.x_unclipped
    }

    pub fn observed_moment(&self) -> &Vector {
        &self.b_obs
    }

    fn tune(&self) -> f64 {
        match self.cfg.tuning {
            VawTuning::Fixed => self.cfg.gamma,
            VawTuning::Adaptive => {
                let z = self.cfg.z_bound.unwrap_or(self.z_seen);
                let raw = vaw_learning_rate(
                    self.cfg.gamma,
                    self.cfg.dim,
                    self.cfg.horizon,
                    z,
                    self.tracker.perceived_dmax(),
                    self.tracker.missing_sum(),
                );
                raw.max(self.eta_prev)
            }
        }
    }

    /// Clipped prediction for feature `z`; the round must already be open.
    fn predict(&mut self, z: &Vector) -> Result<Vector> {
        if z.len() != self.cfg.dim {
            return Err(Error::Argument(format!(
                "feature has dimension {}, learner expects {}",
                z.len(),
                self.cfg.dim
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("feature contains a non-finite entry".into()));
        }
        self.z_seen = self.z_seen.max(z.norm());
        self.gram.add(z, 1.0)?;
        let eta = self.tune();
        self.gram.set_shift(eta)?;
        self.eta_prev = eta;

        let x = solve_psd(self.gram.matrix(), &self.b_obs)?;
        let pred = z.dot(&x).abs();
        let scale = if pred <= self.rho { 1.0 } else { self.rho / pred };
        self.x_played = &x * scale;
        self.x_unclipped = x;
        self.clip_scale = scale;
        self.rho_played = self.rho;
        Ok(self.x_played.clone())
    }
}

impl OnlineLearner for DelayedVaw {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Label
    }

    fn play(&mut self, t: usize, context: Option<&Vector>) -> Result<Vector> {
        let z = context
            .ok_or_else(|| Error::Argument(format!("round {t}: VAW needs the feature vector before playing")))?;
        self.tracker.begin_round(t)?;
        self.predict(z)
    }

    fn absorb(&mut self, t: usize, batch: &[Feedback]) -> Result<()> {
        let sorted = accept_batch(&mut self.tracker, t, batch)?;
        for p in sorted {
            let p = p.as_label()?;
            self.b_obs += &p.feature * p.label;
            self.rho = self.rho.max(p.label.abs());
        }
        Ok(())
    }

    fn diagnostics(&self) -> RoundDiagnostics {
        RoundDiagnostics {
            eta: Some(self.gram.eta()),
            clip_scale: Some(self.clip_scale),
            rho: Some(self.rho_played),
        }
    }
}
