//! Undelayed learners used as BOLD bases. Each one alternates strictly between
//! `predict` and `update` on its own private timeline.

use crate::error::{Error, Result};
use crate::geometry::{project_ball_mahalanobis, solve_psd, BallDomain, Domain, PsdMatrix, PROJECTION_TOL};
use crate::learners::{Feedback, FeedbackKind};
use crate::{Matrix, Vector};

pub trait BaseLearner: Clone + Send {
    fn feedback_kind(&self) -> FeedbackKind;

    fn predict(&mut self, context: Option<&Vector>) -> Result<Vector>;

    /// Feedback for the most recent prediction.
    fn update(&mut self, feedback: &Feedback) -> Result<()>;
}

/// ONS in follow-the-approximate-leader form:
/// `x = argmin_{x∈X} Σ_s ⟨g_s, x⟩ + (β/2)⟨g_s, x − x_s⟩² + (ε/2)‖x‖²`.
#[derive(Clone, Debug)]
pub struct ClassicOns {
    domain: BallDomain,
    beta: f64,
    a: PsdMatrix,
    b_lin: Vector,
    x_current: Vector,
}

impl ClassicOns {
    pub fn new(domain: BallDomain, beta: f64, epsilon: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::config("beta", format!("curvature must be positive, got {beta}")));
        }
        let n = domain.dim;
        Ok(Self {
            domain,
            beta,
            a: PsdMatrix::scaled_identity(n, epsilon)?,
            b_lin: Vector::zeros(n),
            x_current: Vector::zeros(n),
        })
    }

    pub fn current(&self) -> &Vector {
        &self.x_current
    }
}

impl BaseLearner for ClassicOns {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Gradient
    }

    fn predict(&mut self, _context: Option<&Vector>) -> Result<Vector> {
        Ok(self.x_current.clone())
    }

    fn update(&mut self, feedback: &Feedback) -> Result<()> {
        let p = feedback.as_gradient()?;
        let g = &p.gradient;
        if g.iter().any(|v| *v != 0.0) {
            self.a.rank_one_update(g, self.beta)?;
        }
        self.b_lin += g * (self.beta * g.dot(&p.played)) - g;
        let x_star = solve_psd(&self.a, &self.b_lin)?;
        self.x_current = project_ball_mahalanobis(&x_star, &self.a, &self.domain, PROJECTION_TOL)?;
        Ok(())
    }
}

/// VAW forecaster `x_t = (γI + Σ_{s≤t} z_s z_sᵀ)⁻¹ Σ_{s<t} y_s z_s`, optionally
/// clipped to the largest label magnitude seen.
#[derive(Clone, Debug)]
pub struct ClassicVaw {
    a: Matrix,
    b: Vector,
    rho: f64,
    clip: bool,
    pending: Option<Vector>,
}

impl ClassicVaw {
    pub fn new(dim: usize, gamma: f64, clip: bool) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::config(
                "gamma",
                format!("regularization must be positive, got {gamma}"),
            ));
        }
        Ok(Self {
            a: Matrix::identity(dim, dim) * gamma,
            b: Vector::zeros(dim),
            rho: 0.0,
            clip,
            pending: None,
        })
    }
}

impl BaseLearner for ClassicVaw {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Label
    }

    fn predict(&mut self, context: Option<&Vector>) -> Result<Vector> {
        let z = context.ok_or_else(|| Error::Argument("VAW needs the feature vector before predicting".into()))?;
        if self.pending.is_some() {
            return Err(Error::Sequencing(
                "VAW base asked to predict twice without feedback".into(),
            ));
        }
        self.a.ger(1.0, z, z, 1.0);
        let chol = self
            .a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numeric("VAW covariance lost positive definiteness"))?;
        let mut x = chol.solve(&self.b);
        if self.clip {
            let pred = z.dot(&x).abs();
            if pred > self.rho {
                x *= self.rho / pred;
            }
        }
        self.pending = Some(z.clone());
        Ok(x)
    }

    fn update(&mut self, feedback: &Feedback) -> Result<()> {
        let p = feedback.as_label()?;
        if self.pending.take().is_none() {
            return Err(Error::Sequencing(
                "VAW base received a label without a prediction".into(),
            ));
        }
        self.b += &p.feature * p.label;
        self.rho = self.rho.max(p.label.abs());
        Ok(())
    }
}

/// Projected OGD with step `1/(λk)` at the base's `k`-th update.
#[derive(Clone, Debug)]
pub struct ClassicOgdSc {
    lambda: f64,
    domain: Domain,
    updates: usize,
    x_current: Vector,
}

impl ClassicOgdSc {
    pub fn new(lambda: f64, domain: Domain) -> Result<Self> {
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
            updates: 0,
        })
    }
}

impl BaseLearner for ClassicOgdSc {
    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Gradient
    }

    fn predict(&mut self, _context: Option<&Vector>) -> Result<Vector> {
        Ok(self.x_current.clone())
    }

    fn update(&mut self, feedback: &Feedback) -> Result<()> {
        let p = feedback.as_gradient()?;
        self.updates += 1;
        let step = 1.0 / (self.lambda * self.updates as f64);
        self.x_current = self.domain.project(&(&self.x_current - &p.gradient * step));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{GradientPacket, LabelPacket};
    use nalgebra::dvector;

    fn grad(g: Vector) -> Feedback {
        Feedback::Gradient(GradientPacket {
            origin: 1,
            arrival: 1,
            played: Vector::zeros(g.len()),
            gradient: g,
        })
    }

    #[test]
    fn zero_feedback_keeps_initial_point() {
        let dom = BallDomain::new(2, 1.0).unwrap();
        let mut ons = ClassicOns::new(dom, 0.5, 1.0).unwrap();
        ons.predict(None).unwrap();
        ons.update(&grad(Vector::zeros(2))).unwrap();
        assert_eq!(ons.predict(None).unwrap(), Vector::zeros(2));

        let mut ogd = ClassicOgdSc::new(1.0, Domain::Ball(dom)).unwrap();
        ogd.predict(None).unwrap();
        ogd.update(&grad(Vector::zeros(2))).unwrap();
        assert_eq!(ogd.predict(None).unwrap(), Vector::zeros(2));

        let mut vaw = ClassicVaw::new(2, 1.0, true).unwrap();
        let z = dvector![1.0, 2.0];
        assert_eq!(vaw.predict(Some(&z)).unwrap(), Vector::zeros(2));
        vaw.update(&Feedback::Label(LabelPacket {
            origin: 1,
            arrival: 1,
            label: 0.0,
            feature: z.clone(),
        }))
        .unwrap();
        assert_eq!(vaw.predict(Some(&z)).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn vaw_requires_alternation() {
        let mut vaw = ClassicVaw::new(1, 1.0, false).unwrap();
        vaw.predict(Some(&dvector![1.0])).unwrap();
        assert!(vaw.predict(Some(&dvector![1.0])).is_err());
    }

    #[test]
    fn ons_single_gradient() {
        // β = 1, ε = 1: A = diag(2, 1), b = (−1, 0)
        let dom = BallDomain::new(2, 2.0).unwrap();
        let mut ons = ClassicOns::new(dom, 1.0, 1.0).unwrap();
        ons.predict(None).unwrap();
        ons.update(&grad(dvector![1.0, 0.0])).unwrap();
        assert!((ons.current() - dvector![-0.5, 0.0]).amax() < 1e-15);
    }
}
