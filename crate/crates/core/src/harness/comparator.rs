//! Best fixed point in hindsight for the quadratic loss families.
//!
//! `Σ_t f_t(x) = ½ xᵀHx − bᵀx + c` with `H = Σ z zᵀ (+ T·I for ridge)` and
//! `b = Σ y z`, so the comparator is an exact (ball-constrained) quadratic
//! minimizer. Singular unconstrained systems resolve to the minimum-norm
//! minimizer.

use crate::environments::{Environment, LossFamily};
use crate::error::{Error, Result};
use crate::geometry::{minimize_quadratic_on_ball, project_ball, BallDomain};
use crate::{Matrix, Vector};

const KKT_TOL: f64 = 1e-12;
const PGD_MAX_ITERS: usize = 10_000;
const PGD_GRAD_MAP_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct Comparator {
    pub u: Vector,
    /// `Σ_t f_t(u)`.
    pub total_loss: f64,
    /// First-order optimality residual (gradient mapping norm on a ball).
    pub residual: f64,
}

/// Normal-equation pieces `(H, b)` of the total loss.
pub fn normal_equations(env: &Environment) -> (Matrix, Vector) {
    let n = env.dim();
    let mut h = Matrix::zeros(n, n);
    let mut b = Vector::zeros(n);
    for (z, y) in env.features().iter().zip(env.labels()) {
        h.ger(1.0, z, z, 1.0);
        b.axpy(*y, z, 1.0);
    }
    if env.family() == LossFamily::StronglyConvexRidge {
        for i in 0..n {
            h[(i, i)] += env.horizon() as f64;
        }
    }
    (h, b)
}

fn gradient_mapping(h: &Matrix, b: &Vector, x: &Vector, ball: Option<&BallDomain>, step: f64) -> f64 {
    let grad = h * x - b;
    match ball {
        Some(dom) => (x - project_ball(&(x - &grad * step), dom)).norm() / step,
        None => grad.norm(),
    }
}

pub fn offline_comparator(env: &Environment) -> Result<Comparator> {
    let (h, b) = normal_equations(env);
    let ball = env.domain().ball().copied();
    let u = match &ball {
        Some(dom) => {
            let mut x = minimize_quadratic_on_ball(&h, &b, dom.radius, KKT_TOL)?.x;
            if x.norm() > dom.radius {
                x = project_ball(&x, dom);
            }
            // projected-gradient polish of the boundary solution
            let lipschitz = h.symmetric_eigenvalues().max().max(f64::MIN_POSITIVE);
            let step = 1.0 / lipschitz;
            for _ in 0..PGD_MAX_ITERS {
                if gradient_mapping(&h, &b, &x, Some(dom), step) <= PGD_GRAD_MAP_TOL {
                    break;
                }
                let grad = &h * &x - &b;
                x = project_ball(&(&x - grad * step), dom);
            }
            x
        }
        None => match h.clone().cholesky() {
            Some(chol) => chol.solve(&b),
            None => {
                let svd = h.clone().svd(true, true);
                let eps = 1e-12 * svd.singular_values.max().max(1.0);
                svd.solve(&b, eps)
                    .map_err(|e| Error::numeric(format!("normal equations: {e}")))?
            }
        },
    };
    let step = 1.0 / h.symmetric_eigenvalues().max().max(1.0);
    let residual = gradient_mapping(&h, &b, &u, ball.as_ref(), step);
    let scale = 1.0 + b.norm();
    if !(residual <= OPTIMALITY_TOL * scale) {
        return Err(Error::numeric(format!(
            "comparator optimality residual {residual:.3e} exceeds {:.3e}; consider a small ridge term",
            OPTIMALITY_TOL * scale
        )));
    }
    Ok(Comparator {
        total_loss: env.total_loss(&u),
        u,
        residual,
    })
}
