//! Delayed online gradient descent with a fixed step (DOGD) and its
//! strongly convex variant (DOGD-SC).

use crate::delay_model::OnlineDelayTracker;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::learners::{accept_batch, Feedback, FeedbackKind, GradientPacket, OnlineLearner, RoundDiagnostics};
use crate::Vector;

fn gradient_sum(dim: usize, arrived: &[&GradientPacket]) -> Vector {
    let mut total = Vector::zeros(dim);
    for p in arrived {
        total += &p.gradient;
    }
    total
}

fn gradients<'a>(tracker: &mut OnlineDelayTracker, t: usize, batch: &'a [Feedback]) -> Result<Vec<&'a GradientPacket>> {
    accept_batch(tracker, t, batch)?
        .into_iter()
        .map(Feedback::as_gradient)
        .collect()
}

#[derive(Clone, Debug)]
pub struct Dogd {
    eta: f64,
    domain: Domain,
    x_current: Vector,
    tracker: OnlineDelayTracker,
}

impl Dogd {
    pub fn new(eta: f64, domain: Domain) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config("eta", format!("step size must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            x_current: Vector::zeros(domain.dim()),
            domain,
            tracker: OnlineDelayTracker::new(),
        })
    }

    /// Step `η = D / (G·√(T + d_tot))` for the realized total delay.
    pub fn tuned(diameter: f64, g: f64, horizon: usize, d_tot: usize, domain: Domain) -> Result<Self> {
        Self::new(Self::tuned_step(diameter, g, horizon, d_tot)?, domain)
    }

    pub fn tuned_step(diameter: f64, g: f64, horizon: usize, d_tot: usize) -> Result<f64> {
        if !(g > 0.0) {
            return Err(Error::config("G", "gradient bound must be positive"));
        }
        if horizon == 0 {
            return Err(Error::config("T", "horizon must be positive"));
        }
        Ok(diameter / (g * ((horizon + d_tot) as f64).sqrt()))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    pub fn step(&mut self, arrived: &[&GradientPacket]) -> &Vector {
        if !arrived.is_empty() {
            let total = gradient_sum(self.x_current.len(), arrived);
            self.x_current = self.domain.project(&(&self.x_current - total * self.eta));
        }
        &self.x_current
    }
}

impl OnlineLearner for Dogd {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Gradient
    }

    fn play(&mut self, t: usize, _context: Option<&Vector>) -> Result<Vector> {
        self.tracker.begin_round(t)?;
        Ok(self.x_current.clone())
    }

    fn absorb(&mut self, t: usize, batch: &[Feedback]) -> Result<()> {
        let grads = gradients(&mut self.tracker, t, batch)?;
        self.step(&grads);
        Ok(())
    }

    fn diagnostics(&self) -> RoundDiagnostics {
        RoundDiagnostics {
            eta: Some(self.eta),
            ..Default::default()
        }
    }
}

/// Step schedule of DOGD-SC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DogdScSchedule {
    /// The gradients arriving at round `t` are summed and applied with step
    /// `1/(λt)`.
    #[default]
    Round,
    /// Arriving gradients are applied one at a time in origin order with step
    /// `1/(λk)`, `k` counting the gradients received so far.
    Received,
}

#[derive(Clone, Debug)]
pub struct DogdSc {
    lambda: f64,
    domain: Domain,
    schedule: DogdScSchedule,
    t: usize,
    received: usize,
    x_current: Vector,
    tracker: OnlineDelayTracker,
}

impl DogdSc {
    pub fn new(lambda: f64, domain: Domain) -> Result<Self> {
        Self::with_schedule(lambda, domain, DogdScSchedule::Round)
    }

    pub fn with_schedule(lambda: f64, domain: Domain, schedule: DogdScSchedule) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::config(
                "lambda",
                format!("strong convexity must be positive, got {lambda}"),
            ));
        }
        Ok(Self {
            lambda,
            x_current: Vector::zeros(domain.dim()),
            domain,
            schedule,
            t: 0,
            received: 0,
            tracker: OnlineDelayTracker::new(),
        })
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }

    /// The step the next update applies (per gradient for `Received`).
    pub fn step_size(&self) -> f64 {
        match self.schedule {
            DogdScSchedule::Round => 1.0 / (self.lambda * self.t as f64),
            DogdScSchedule::Received => 1.0 / (self.lambda * (self.received + 1) as f64),
        }
    }

    pub fn step(&mut self, arrived: &[&GradientPacket]) -> &Vector {
        match self.schedule {
            DogdScSchedule::Round if !arrived.is_empty() => {
                let total = gradient_sum(self.x_current.len(), arrived);
                self.x_current = self.domain.project(&(&self.x_current - total * self.step_size()));
            }
            DogdScSchedule::Round => {}
            DogdScSchedule::Received => {
                for p in arrived {
                    let eta = self.step_size();
                    self.x_current = self.domain.project(&(&self.x_current - &p.gradient * eta));
                    self.received += 1;
                }
            }
        }
        &self.x_current
    }
}

impl OnlineLearner for DogdSc {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Gradient
    }

    fn play(&mut self, t: usize, _context: Option<&Vector>) -> Result<Vector> {
        self.tracker.begin_round(t)?;
        self.t = t;
        Ok(self.x_current.clone())
    }

    fn absorb(&mut self, t: usize, batch: &[Feedback]) -> Result<()> {
        let grads = gradients(&mut self.tracker, t, batch)?;
        self.step(&grads);
        Ok(())
    }

    fn diagnostics(&self) -> RoundDiagnostics {
        RoundDiagnostics {
            eta: Some(self.step_size()),
            ..Default::default()
        }
    }
}
