//! Dense kernels shared by the learners: ball projections, PSD solves and
//! Sherman-Morrison maintenance of a cached inverse.

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Default tolerance on `‖x(μ)‖₂` for the Mahalanobis projection.
pub const PROJECTION_TOL: f64 = 1e-10;

const MAX_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 200;
/// Rank-one updates between dense recomputations of the cached inverse.
const REFRESH_EVERY: usize = 512;

/// Centered Euclidean ball `{x ∈ ℝⁿ : ‖x‖₂ ≤ R}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallDomain {
    pub dim: usize,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("domain.dim", "dimension must be positive"));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::config("domain.radius", format!("invalid radius {radius}")));
        }
        Ok(Self { dim, radius })
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, x: &Vector, slack: f64) -> bool {
        x.norm() <= self.radius + slack
    }
}

/// Feasible set of a learner: a centered ball or all of `ℝⁿ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Ball(BallDomain),
    Unconstrained { dim: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball(b) => b.dim,
            Domain::Unconstrained { dim } => *dim,
        }
    }

    pub fn ball(&self) -> Option<&BallDomain> {
        match self {
            Domain::Ball(b) => Some(b),
            Domain::Unconstrained { .. } => None,
        }
    }

    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            Domain::Ball(b) => project_ball(x, b),
            Domain::Unconstrained { .. } => x.clone(),
        }
    }
}

/// Symmetric positive (semi)definite matrix with an optional cached inverse.
#[derive(Clone, Debug)]
pub struct PsdMatrix {
    mat: Matrix,
    inv: Option<Matrix>,
    updates_since_refresh: usize,
}

impl PsdMatrix {
    /// Wraps a symmetric matrix; no inverse is cached.
    pub fn new(mat: Matrix) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::numeric("matrix must be square and non-empty"));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("matrix has non-finite entries"));
        }
        let scale = mat.amax().max(1.0);
        if (&mat - mat.transpose()).amax() > 1e-12 * scale {
            return Err(Error::numeric("matrix is not symmetric"));
        }
        Ok(Self {
            mat,
            inv: None,
            updates_since_refresh: 0,
        })
    }

    /// `η·I` with its exact inverse cached.
    pub fn scaled_identity(dim: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::config(
                "eta",
                format!("diagonal shift must be positive, got {eta}"),
            ));
        }
        Ok(Self {
            mat: Matrix::identity(dim, dim) * eta,
            inv: Some(Matrix::identity(dim, dim) / eta),
            updates_since_refresh: 0,
        })
    }

    /// Same matrix with a freshly computed dense inverse.
    pub fn with_inverse(mut self) -> Result<Self> {
        self.refresh_inverse()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn inverse(&self) -> Option<&Matrix> {
        self.inv.as_ref()
    }

    pub fn refresh_inverse(&mut self) -> Result<()> {
        let chol = Cholesky::new(self.mat.clone()).ok_or_else(|| Error::numeric("matrix is not positive definite"))?;
        let mut inv = chol.inverse();
        symmetrize(&mut inv);
        self.inv = Some(inv);
        self.updates_since_refresh = 0;
        Ok(())
    }

    /// In-place `A ← A + c·vvᵀ`, updating the cached inverse by Sherman-Morrison.
    pub fn rank_one_update(&mut self, v: &Vector, c: f64) -> Result<()> {
        if !(c > 0.0) {
            return Err(Error::config("c", format!("rank-one weight must be positive, got {c}")));
        }
        let inv = self
            .inv
            .as_mut()
            .ok_or_else(|| Error::numeric("rank-one update requires a cached inverse"))?;
        self.mat.ger(c, v, v, 1.0);
        symmetrize(&mut self.mat);

        let inv_v = &*inv * v;
        let denom = 1.0 + c * v.dot(&inv_v);
        inv.ger(-c / denom, &inv_v, &inv_v, 1.0);
        symmetrize(inv);

        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= REFRESH_EVERY {
            self.refresh_inverse()?;
        }
        Ok(())
    }

    /// `xᵀ A x`.
    pub fn quad(&self, x: &Vector) -> f64 {
        x.dot(&(&self.mat * x))
    }

    /// `xᵀ A⁻¹ x`, via the cached inverse when present.
    pub fn inv_quad(&self, x: &Vector) -> Result<f64> {
        Ok(x.dot(&solve_psd(self, x)?))
    }
}

fn symmetrize(m: &mut Matrix) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `A + c·vvᵀ` with the cached inverse updated by Sherman-Morrison.
pub fn sm_rank_one_update(a: &PsdMatrix, v: &Vector, c: f64) -> Result<PsdMatrix> {
    let mut out = a.clone();
    out.rank_one_update(v, c)?;
    Ok(out)
}

/// Solves `A x = b` for positive definite `A`.
pub fn solve_psd(a: &PsdMatrix, b: &Vector) -> Result<Vector> {
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("right-hand side has non-finite entries"));
    }
    match &a.inv {
        Some(inv) => Ok(inv * b),
        None => {
            let chol = Cholesky::new(a.mat.clone()).ok_or_else(|| Error::numeric("matrix is not positive definite"))?;
            Ok(chol.solve(b))
        }
    }
}

/// Euclidean projection onto the ball.
pub fn project_ball(x: &Vector, dom: &BallDomain) -> Vector {
    let norm = x.norm();
    if norm <= dom.radius {
        x.clone()
    } else if dom.radius == 0.0 {
        Vector::zeros(x.len())
    } else {
        x * (dom.radius / norm)
    }
}

/// Result of a ball-constrained quadratic minimization.
#[derive(Clone, Debug)]
pub struct BallMinimizer {
    pub x: Vector,
    /// Lagrange multiplier of the norm constraint.
    pub mu: f64,
}

fn shifted_solve(h: &Matrix, b: &Vector, mu: f64) -> Option<Vector> {
    let mut m = h.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += mu;
    }
    Cholesky::<f64, Dyn>::new(m).map(|c| c.solve(b))
}

/// Minimizes `½ xᵀHx − bᵀx` over `‖x‖₂ ≤ R` for symmetric PSD `H`.
///
/// The minimizer is `x(μ) = (H + μI)⁻¹ b` for the smallest `μ ≥ 0` with
/// `‖x(μ)‖₂ ≤ R`. `‖x(μ)‖₂` decreases monotonically in `μ`, so `μ` is found by
/// bracketing (doubling from 1) and bisection until `‖x(μ)‖₂ ∈ [R − tol, R]`.
/// When `H` is singular the unconstrained candidate is the minimum-norm
/// least-squares solution.
pub fn minimize_quadratic_on_ball(h: &Matrix, b: &Vector, radius: f64, tol: f64) -> Result<BallMinimizer> {
    if !(tol > 0.0) {
        return Err(Error::config("tol", "tolerance must be positive"));
    }
    if radius == 0.0 {
        return Ok(BallMinimizer {
            x: Vector::zeros(b.len()),
            mu: f64::INFINITY,
        });
    }
    let unconstrained = match shifted_solve(h, b, 0.0) {
        Some(x) => Some(x),
        None => {
            let svd = h.clone().svd(true, true);
            let eps = 1e-12 * svd.singular_values.max().max(1.0);
            svd.solve(b, eps).ok()
        }
    };
    if let Some(x) = unconstrained {
        if x.iter().all(|v| v.is_finite()) && x.norm() <= radius {
            return Ok(BallMinimizer { x, mu: 0.0 });
        }
    }

    let norm_at = |mu: f64| -> Result<(Vector, f64)> {
        let x = shifted_solve(h, b, mu).ok_or(Error::Numeric {
            msg: format!("H + {mu}·I is not positive definite"),
            bracket: None,
        })?;
        let n = x.norm();
        Ok((x, n))
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let (mut x_hi, mut n_hi) = norm_at(hi)?;
    let mut doublings = 0;
    while n_hi > radius {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Numeric {
                msg: "could not bracket the multiplier".into(),
                bracket: Some((lo, hi)),
            });
        }
        lo = hi;
        hi *= 2.0;
        (x_hi, n_hi) = norm_at(hi)?;
        doublings += 1;
    }
    for _ in 0..MAX_BISECTIONS {
        if n_hi >= radius - tol || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(BallMinimizer { x: x_hi, mu: hi });
        }
        let mid = 0.5 * (lo + hi);
        let (x_mid, n_mid) = norm_at(mid)?;
        if n_mid > radius {
            lo = mid;
        } else {
            hi = mid;
            x_hi = x_mid;
            n_hi = n_mid;
        }
    }
    if n_hi >= radius - tol {
        return Ok(BallMinimizer { x: x_hi, mu: hi });
    }
    Err(Error::Numeric {
        msg: "bisection did not reach the requested tolerance".into(),
        bracket: Some((lo, hi)),
    })
}

/// `argmin_{‖x‖₂ ≤ R} (x − x*)ᵀ A (x − x*)`.
pub fn project_ball_mahalanobis(x_star: &Vector, a: &PsdMatrix, dom: &BallDomain, tol: f64) -> Result<Vector> {
    if x_star.norm() <= dom.radius {
        return Ok(x_star.clone());
    }
    let b = a.matrix() * x_star;
    Ok(minimize_quadratic_on_ball(a.matrix(), &b, dom.radius, tol)?.x)
}
