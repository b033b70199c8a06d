//! Delayed OMD for λ-strongly convex losses, with `η_t = 2/(tλ)`.
//!
//! The proximal step against the gradients delivered at round `t`,
//! `argmin_{x ∈ X} ⟨Σ g_τ, x⟩ + ‖x − x_t‖²/η_t`, is the projection of
//! `x_t − (η_t/2) Σ g_τ`.

use crate::delay_model::OnlineDelayTracker;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::learners::{accept_batch, Feedback, FeedbackKind, GradientPacket, OnlineLearner, RoundDiagnostics};
use crate::Vector;

#[derive(Clone, Debug)]
pub struct DelayedOmd {
    lambda: f64,
    domain: Domain,
    t: usize,
    x_current: Vector,
    tracker: OnlineDelayTracker,
}

impl DelayedOmd {
    pub fn new(lambda: f64, domain: Domain) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::config(
                "lambda",
                format!("strong convexity must be positive, got {lambda}"),
            ));
        }
        Ok(Self {
            lambda,
            domain,
            t: 0,
            x_current: Vector::zeros(domain.dim()),
            tracker: OnlineDelayTracker::new(),
        })
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    pub fn learning_rate(&self) -> f64 {
        2.0 / (self.t as f64 * self.lambda)
    }

    pub fn step(&mut self, arrived: &[&GradientPacket]) -> &Vector {
        if arrived.is_empty() {
            return &self.x_current;
        }
        let mut total = Vector::zeros(self.x_current.len());
        for p in arrived {
            total += &p.gradient;
        }
        let half_eta = 0.5 * self.learning_rate();
        self.x_current = self.domain.project(&(&self.x_current - total * half_eta));
        &self.x_current
    }
}

impl OnlineLearner for DelayedOmd {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Gradient
    }

    fn play(&mut self, t: usize, _context: Option<&Vector>) -> Result<Vector> {
        self.tracker.begin_round(t)?;
        self.t = t;
        Ok(self.x_current.clone())
    }

    fn absorb(&mut self, t: usize, batch: &[Feedback]) -> Result<()> {
        let sorted = accept_batch(&mut self.tracker, t, batch)?;
        let grads = sorted
            .into_iter()
            .map(Feedback::as_gradient)
            .collect::<Result<Vec<_>>>()?;
        self.step(&grads);
        Ok(())
    }

    fn diagnostics(&self) -> RoundDiagnostics {
        RoundDiagnostics {
            eta: Some(self.learning_rate()),
            ..Default::default()
        }
    }
}
