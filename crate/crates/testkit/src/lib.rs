//! Reference oracles for the test targets, written directly from the
//! definitions and independent of the library under test.
//!
//! Delays are plain slices `d[0..T]` where `d[t-1]` is the delay of round `t`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// `d_t ← min(d_t, T − t)`.
pub fn truncate(delays: &[usize]) -> Vec<usize> {
    let n = delays.len();
    delays.iter().enumerate().map(|(i, &d)| d.min(n - (i + 1))).collect()
}

/// `m_t = {τ < t : τ + d_τ ≥ t}` straight from the definition.
pub fn missing(delays: &[usize], t: usize) -> Vec<usize> {
    (1..t).filter(|&tau| tau + delays[tau - 1] >= t).collect()
}

/// `o_t = {τ : τ + d_τ < t}`.
pub fn observed(delays: &[usize], t: usize) -> Vec<usize> {
    (1..t).filter(|&tau| tau + delays[tau - 1] < t).collect()
}

pub fn sigma_max(delays: &[usize]) -> usize {
    (1..=delays.len()).map(|t| missing(delays, t).len()).max().unwrap_or(0)
}

pub fn d_max(delays: &[usize]) -> usize {
    delays.iter().copied().max().unwrap_or(0)
}

pub fn d_tot(delays: &[usize]) -> usize {
    delays.iter().sum()
}

/// `max_{τ ≤ t} min{d_τ, t − τ}`: the largest delay visible at the start of round `t`.
pub fn perceived_dmax(delays: &[usize], t: usize) -> usize {
    (1..=t.min(delays.len()))
        .map(|tau| delays[tau - 1].min(t - tau))
        .max()
        .unwrap_or(0)
}

/// `min_S |S| + σ_max` of the rounds outside `S`, by enumerating every subset.
pub fn sigma_max_subset_min(delays: &[usize]) -> usize {
    let n = delays.len();
    assert!(n <= 20, "exhaustive enumeration needs a small horizon");
    let mut best = usize::MAX;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        let kept = |tau: usize| mask & (1 << (tau - 1)) == 0;
        let sigma = (1..=n)
            .map(|t| (1..t).filter(|&tau| kept(tau) && tau + delays[tau - 1] >= t).count())
            .max()
            .unwrap_or(0);
        best = best.min(size + sigma);
    }
    best
}

/// Raw random delays (not truncated) with a mix of short, long and
/// end-of-horizon delays.
pub fn random_delays<R: Rng>(rng: &mut R, horizon: usize) -> Vec<usize> {
    let style = rng.random_range(0..4);
    (0..horizon)
        .map(|_| match style {
            0 => rng.random_range(0..4),
            1 => rng.random_range(0..=horizon),
            2 => {
                if rng.random_bool(0.2) {
                    horizon
                } else {
                    rng.random_range(0..3)
                }
            }
            _ => rng.random_range(0..10),
        })
        .collect()
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// Uniform on the Euclidean ball of the given radius.
pub fn random_in_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vector {
    loop {
        let v = random_vector(rng, n, radius);
        if v.norm() <= radius {
            return v;
        }
    }
}

/// Symmetric positive definite with eigenvalues bounded below by `floor`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Matrix {
    let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + Matrix::identity(n, n) * floor
}

/// `√(xᵀ A x)`.
pub fn norm_in(a: &Matrix, x: &Vector) -> f64 {
    x.dot(&(a * x)).max(0.0).sqrt()
}

/// `√(xᵀ A⁻¹ x)` via a dense inverse.
pub fn dual_norm_in(a: &Matrix, x: &Vector) -> f64 {
    let inv = a.clone().try_inverse().expect("matrix is invertible");
    norm_in(&inv, x)
}

pub fn project_ball(x: &Vector, radius: f64) -> Vector {
    let n = x.norm();
    if n <= radius {
        x.clone()
    } else {
        x * (radius / n)
    }
}

/// Generic first-order minimizer of a smooth convex objective over the ball
/// `‖x‖ ≤ radius` (or all of ℝⁿ when `radius` is `None`): accelerated
/// projected gradient with backtracking and restarts. Stops at `iters` or
/// once the gradient mapping vanishes; returns the best point found.
pub fn minimize<F, G>(f: F, grad: G, x0: &Vector, radius: Option<f64>, iters: usize) -> Vector
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    let proj = |x: &Vector| match radius {
        Some(r) => project_ball(x, r),
        None => x.clone(),
    };
    let mut x = proj(x0);
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut step = 1.0f64;
    let mut best = x.clone();
    let mut best_val = f(&x);
    for _ in 0..iters {
        let gy = grad(&y);
        let fy = f(&y);
        let mut x_next;
        loop {
            x_next = proj(&(&y - &gy * step));
            let diff = &x_next - &y;
            if f(&x_next) <= fy + gy.dot(&diff) + diff.norm_squared() / (2.0 * step) + 1e-15 * fy.abs() {
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        let val = f(&x_next);
        // Gradient-mapping norm: zero exactly at a constrained stationary point.
        let mapping = (&x_next - &y).norm() / step;
        if val < best_val {
            best_val = val;
            best = x_next.clone();
        }
        let theta_next = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
        let momentum = (theta - 1.0) / theta_next;
        if (&x_next - &x).dot(&(&y - &x_next)) > 0.0 {
            // Objective went uphill along the momentum: restart.
            theta = 1.0;
            y = x_next.clone();
        } else {
            y = &x_next + (&x_next - &x) * momentum;
            theta = theta_next;
        }
        x = x_next;
        if mapping <= 1e-11 * (1.0 + gy.norm()) {
            break;
        }
        step *= 1.1;
    }
    best
}

/// Finite-difference gradient with central differences.
pub fn numeric_grad<F: Fn(&Vector) -> f64>(f: F, x: &Vector, h: f64) -> Vector {
    Vector::from_fn(x.len(), |i, _| {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[i] += h;
        lo[i] -= h;
        (f(&hi) - f(&lo)) / (2.0 * h)
    })
}

/// `⟨linear, x⟩ + (w/2)‖x − anchor‖² + Σ (c/2)(⟨v, x⟩ − s)² + (ridge/2)‖x‖²`
/// over `‖x‖ ≤ radius` (unconstrained when `radius` is `None`).
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub linear: Vector,
    pub anchor_weight: f64,
    pub anchor: Vector,
    /// `(v, c, s)` triples.
    pub terms: Vec<(Vector, f64, f64)>,
    pub ridge: f64,
    pub radius: Option<f64>,
}

impl Quadratic {
    pub fn value(&self, x: &Vector) -> f64 {
        self.linear.dot(x)
            + 0.5 * self.anchor_weight * (x - &self.anchor).norm_squared()
            + self
                .terms
                .iter()
                .map(|(v, c, s)| 0.5 * c * (v.dot(x) - s).powi(2))
                .sum::<f64>()
            + 0.5 * self.ridge * x.norm_squared()
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        let mut g = &self.linear + (x - &self.anchor) * self.anchor_weight + x * self.ridge;
        for (v, c, s) in &self.terms {
            g += v * (c * (v.dot(x) - s));
        }
        g
    }

    /// Checks that `point` is feasible and attains the minimum found by
    /// [`minimize`] up to `tol` in objective value.
    pub fn check(&self, point: &Vector, tol: f64) -> Result<(), String> {
        if let Some(r) = self.radius {
            if point.norm() > r + 1e-9 {
                return Err(format!("infeasible point: norm {} > {r}", point.norm()));
            }
        }
        let reference = minimize(
            |x| self.value(x),
            |x| self.grad(x),
            &Vector::zeros(point.len()),
            self.radius,
            20_000,
        );
        let (ours, theirs) = (self.value(point), self.value(&reference));
        if (ours - theirs).abs() <= tol || ours <= theirs {
            Ok(())
        } else {
            Err(format!("objective {ours} vs reference {theirs}"))
        }
    }
}

/// Everything revealed so far in a synthetic delayed stream; round `τ` sits
/// at index `τ − 1`.
#[derive(Clone, Debug, Default)]
pub struct History {
    pub played: Vec<Vector>,
    pub grads: Vec<Vector>,
    /// `τ + d_τ`.
    pub arrival: Vec<usize>,
    pub z: Vec<Vector>,
    pub y: Vec<f64>,
}

impl History {
    /// `o_t`: rounds whose feedback arrived by the end of round `t − 1`.
    pub fn observed(&self, t: usize) -> Vec<usize> {
        (1..t).filter(|&tau| self.arrival[tau - 1] < t).collect()
    }

    pub fn arrived_at(&self, t: usize) -> Vec<usize> {
        (1..=t).filter(|&tau| self.arrival[tau - 1] == t).collect()
    }

    pub fn grad_sum(&self, rounds: &[usize], n: usize) -> Vector {
        rounds
            .iter()
            .fold(Vector::zeros(n), |acc, &tau| acc + &self.grads[tau - 1])
    }
}
