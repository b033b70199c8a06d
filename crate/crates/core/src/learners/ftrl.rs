//! Delayed FTRL for λ-strongly convex losses.
//!
//! The next point minimizes the linearized observed losses plus a quadratic
//! anchored at *every* past decision:
//!
//! ```text
//! x_{t+1} = argmin_{x ∈ X}  Σ_{τ ∈ o_{t+1}} ⟨g_τ, x⟩ + (λ/2) Σ_{s ≤ t} ‖x − x_s‖²
//! ```
//!
//! The objective equals `(λt/2)‖x − c‖²` plus a constant, with
//! `c = (Σ_s x_s − Σ_τ g_τ / λ) / t`, so the constrained minimizer is the
//! Euclidean projection of `c`.

use crate::delay_model::OnlineDelayTracker;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::learners::{accept_batch, Feedback, FeedbackKind, GradientPacket, OnlineLearner, RoundDiagnostics};
use crate::Vector;

#[derive(Clone, Debug)]
pub struct DelayedFtrl {
    lambda: f64,
    domain: Domain,
    sum_x: Vector,
    sum_g_observed: Vector,
    t: usize,
    x_current: Vector,
    tracker: OnlineDelayTracker,
}

impl DelayedFtrl {
    /// Starts from `x_1 = 0`.
    pub fn new(lambda: f64, domain: Domain) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::config(
                "lambda",
                format!("strong convexity must be positive, got {lambda}"),
            ));
        }
        let n = domain.dim();
        Ok(Self {
            lambda,
            domain,
            sum_x: Vector::zeros(n),
            sum_g_observed: Vector::zeros(n),
            t: 0,
            x_current: Vector::zeros(n),
            tracker: OnlineDelayTracker::new(),
        })
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    /// Folds the gradients delivered at the end of the current round and
    /// returns `x_{t+1}`.
    pub fn step(&mut self, arrived: &[&GradientPacket]) -> &Vector {
        for p in arrived {
            self.sum_g_observed += &p.gradient;
        }
        let centroid = (&self.sum_x - &self.sum_g_observed / self.lambda) / self.t as f64;
        self.x_current = self.domain.project(&centroid);
        &self.x_current
    }
}

impl OnlineLearner for DelayedFtrl {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Gradient
    }

    fn play(&mut self, t: usize, _context: Option<&Vector>) -> Result<Vector> {
        self.tracker.begin_round(t)?;
        self.t = t;
        self.sum_x += &self.x_current;
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
        RoundDiagnostics::default()
    }
}
