//! Delayed-feedback learners behind a common round protocol.
//!
//! Each round `t` the driver calls [`OnlineLearner::play`] exactly once (OLR
//! learners receive the feature vector `z_t` as context), then
//! [`OnlineLearner::absorb`] with the feedback delivered at the end of round
//! `t`, i.e. for the origins in `o_{t+1} \ o_t`. Batches are folded in
//! ascending origin order.

pub mod ftrl;
pub mod omd;
pub mod ons;
pub mod vaw;

use crate::delay_model::OnlineDelayTracker;
use crate::error::{Error, Result};
use crate::geometry::PsdMatrix;
use crate::{Matrix, Vector};

pub use ftrl::DelayedFtrl;
pub use omd::DelayedOmd;
pub use ons::{ons_learning_rate, DelayedOns, OnsConfig, OnsTuning, OnsTuningInputs};
pub use vaw::{vaw_learning_rate, DelayedVaw, VawConfig, VawTuning};

/// Delayed gradient `g_τ = ∇f_τ(x_τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientPacket {
    pub origin: usize,
    pub arrival: usize,
    pub gradient: Vector,
    /// The point `x_τ` at which the gradient was taken.
    pub played: Vector,
}

/// Delayed label of an online linear regression round.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelPacket {
    pub origin: usize,
    pub arrival: usize,
    pub label: f64,
    pub feature: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feedback {
    Gradient(GradientPacket),
    Label(LabelPacket),
}

impl Feedback {
    pub fn origin(&self) -> usize {
        match self {
            Feedback::Gradient(p) => p.origin,
            Feedback::Label(p) => p.origin,
        }
    }

    pub fn arrival(&self) -> usize {
        match self {
            Feedback::Gradient(p) => p.arrival,
            Feedback::Label(p) => p.arrival,
        }
    }

    pub fn as_gradient(&self) -> Result<&GradientPacket> {
        match self {
            Feedback::Gradient(p) => Ok(p),
            Feedback::Label(p) => Err(Error::Data(format!(
                "label packet for round {} sent to a gradient learner",
                p.origin
            ))),
        }
    }

    pub fn as_label(&self) -> Result<&LabelPacket> {
        match self {
            Feedback::Label(p) => Ok(p),
            Feedback::Gradient(p) => Err(Error::Data(format!(
                "gradient packet for round {} sent to a label learner",
                p.origin
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeedbackKind {
    Gradient,
    /// Online linear regression: the learner sees `z_t` before playing and
    /// later receives `y_t`.
    Label,
}

/// Per-round internals exposed for invariant checks and traces.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RoundDiagnostics {
    pub eta: Option<f64>,
    /// Clipping factor applied to the VAW prediction (1 when not clipped).
    pub clip_scale: Option<f64>,
    pub rho: Option<f64>,
}

pub trait OnlineLearner: Send {
    fn feedback_kind(&self) -> FeedbackKind;

    /// The point played at round `t`.
    fn play(&mut self, t: usize, context: Option<&Vector>) -> Result<Vector>;

    /// Feedback delivered at the end of round `t`.
    fn absorb(&mut self, t: usize, batch: &[Feedback]) -> Result<()>;

    /// Diagnostics of the most recent `play`.
    fn diagnostics(&self) -> RoundDiagnostics {
        RoundDiagnostics::default()
    }
}

/// Checks a batch against the tracker and returns it sorted by origin.
pub(crate) fn accept_batch<'a>(
    tracker: &mut OnlineDelayTracker,
    t: usize,
    batch: &'a [Feedback],
) -> Result<Vec<&'a Feedback>> {
    if tracker.round() != t {
        return Err(Error::Sequencing(format!(
            "feedback for round {t} while round {} is open",
            tracker.round()
        )));
    }
    let mut sorted: Vec<&Feedback> = batch.iter().collect();
    sorted.sort_by_key(|p| p.origin());
    for p in &sorted {
        if p.arrival() != t {
            return Err(Error::Data(format!(
                "packet from round {} stamped for round {} delivered at round {t}",
                p.origin(),
                p.arrival()
            )));
        }
    }
    tracker.deliver(sorted.iter().map(|p| p.origin()))?;
    Ok(sorted)
}

/// `η·I + Σ c·vvᵀ` kept alongside its inverse.
///
/// Rank-one growth goes through Sherman-Morrison; a change of the diagonal
/// shift rebuilds the inverse densely.
#[derive(Clone, Debug)]
pub(crate) struct ShiftedGram {
    gram: Matrix,
    eta: f64,
    a: PsdMatrix,
}

impl ShiftedGram {
    pub(crate) fn new(dim: usize, eta: f64) -> Result<Self> {
        Ok(Self {
            gram: Matrix::zeros(dim, dim),
            eta,
            a: PsdMatrix::scaled_identity(dim, eta)?,
        })
    }

    pub(crate) fn add(&mut self, v: &Vector, c: f64) -> Result<()> {
        if v.iter().all(|x| *x == 0.0) {
            return Ok(());
        }
        self.gram.ger(c, v, v, 1.0);
        self.a.rank_one_update(v, c)
    }

    pub(crate) fn set_shift(&mut self, eta: f64) -> Result<()> {
        if !(eta > 0.0) {
            return Err(Error::config(
                "eta",
                format!("learning rate must be positive, got {eta}"),
            ));
        }
        if eta != self.eta {
            let dim = self.gram.nrows();
            let shifted = &self.gram + Matrix::identity(dim, dim) * eta;
            self.a = PsdMatrix::new(shifted)?.with_inverse()?;
            self.eta = eta;
        }
        Ok(())
    }

    pub(crate) fn eta(&self) -> f64 {
        self.eta
    }

    pub(crate) fn matrix(&self) -> &PsdMatrix {
        &self.a
    }
}
