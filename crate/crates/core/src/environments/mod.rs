//! Loss families, data streams and the constants learners are tuned with.
//!
//! Every family uses the squared residual `½(⟨z_t, x⟩ − y_t)²`; the ridge
//! family adds `½‖x‖²`. Ridge and squared losses live on a centered ball,
//! online linear regression is unconstrained.

pub mod libsvm;
pub mod noise;

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, Domain};
use crate::rng::rng_from_seed;
use crate::Vector;

pub use libsvm::{parse_libsvm, read_libsvm, serialize_libsvm, Dataset};
pub use noise::{parse_noise, read_noise, BUNDLED_SAMPLE};

/// Ball radius used by the constrained families unless configured otherwise.
pub const DEFAULT_RADIUS: f64 = 2.0;
/// Radius assumed when a ball-based step size is needed for an unconstrained cell.
pub const OLR_REFERENCE_RADIUS: f64 = 2.0;
pub const DEFAULT_PERIOD: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossFamily {
    StronglyConvexRidge,
    ExpConcaveSquared,
    OlrSquared,
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::StronglyConvexRidge => "ridge",
            LossFamily::ExpConcaveSquared => "squared",
            LossFamily::OlrSquared => "olr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "ridge" | "strongly_convex_ridge" => Ok(LossFamily::StronglyConvexRidge),
            "squared" | "exp_concave_squared" => Ok(LossFamily::ExpConcaveSquared),
            "olr" | "olr_squared" => Ok(LossFamily::OlrSquared),
            other => Err(Error::config(
                "family",
                format!("unknown loss family `{other}` (ridge|squared|olr)"),
            )),
        }
    }

    pub fn is_constrained(&self) -> bool {
        !matches!(self, LossFamily::OlrSquared)
    }
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn loss_value(family: LossFamily, z: &Vector, y: f64, x: &Vector) -> f64 {
    let r = z.dot(x) - y;
    let base = 0.5 * r * r;
    match family {
        LossFamily::StronglyConvexRidge => base + 0.5 * x.norm_squared(),
        _ => base,
    }
}

pub fn loss_grad(family: LossFamily, z: &Vector, y: f64, x: &Vector) -> Vector {
    let r = z.dot(x) - y;
    match family {
        LossFamily::StronglyConvexRidge => z * r + x,
        _ => z * r,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// `z ~ U[−1,1]^n`, `y = ⟨z, 1⟩ + noise_sd·ε` with standard Gaussian `ε`.
    /// `noise_sd = 0` gives noiseless labels.
    Synthetic { dim: usize, noise_sd: f64 },
    /// Features as in `Synthetic`; `θ_t` alternates between `1` and `0` every
    /// `period` rounds (starting with `1`), noise read cyclically from `noise`.
    NonStationary {
        dim: usize,
        period: usize,
        noise: Arc<Vec<f64>>,
    },
    /// Dataset rows streamed cyclically.
    Dataset(Arc<Dataset>),
}

impl DataSource {
    pub fn dim(&self) -> usize {
        match self {
            DataSource::Synthetic { dim, .. } | DataSource::NonStationary { dim, .. } => *dim,
            DataSource::Dataset(d) => d.dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DataSource::Synthetic { .. } => "synthetic",
            DataSource::NonStationary { .. } => "nonstationary",
            DataSource::Dataset(_) => "dataset",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub family: LossFamily,
    pub source: DataSource,
    /// Ball radius for the constrained families.
    pub radius: f64,
    /// Label bound `Y`; defaults to the realized `max |y_t|`.
    pub y_cap: Option<f64>,
    /// Feature bound `Z`; defaults to `√n` for generated features and to the
    /// largest row norm for datasets.
    pub z_cap: Option<f64>,
}

impl EnvSpec {
    pub fn new(family: LossFamily, source: DataSource) -> Self {
        Self {
            family,
            source,
            radius: DEFAULT_RADIUS,
            y_cap: None,
            z_cap: None,
        }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.family.name(), self.source.kind())
    }

    pub fn domain(&self) -> Result<Domain> {
        let n = self.source.dim();
        if n == 0 {
            return Err(Error::config("dim", "dimension must be positive"));
        }
        if self.family.is_constrained() {
            Ok(Domain::Ball(BallDomain::new(n, self.radius)?))
        } else {
            Ok(Domain::Unconstrained { dim: n })
        }
    }
}

/// Problem constants derived from the domain and data ranges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvConstants {
    /// Gradient norm bound over the domain.
    pub g: f64,
    /// Domain diameter.
    pub d: f64,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub y_bound: f64,
    pub z_bound: f64,
    /// Ball radius; `None` for unconstrained cells.
    pub radius: Option<f64>,
}

/// `D = 2R`; `G = Z(ZR + Y) (+ R for ridge)`; `α = 1/(ZR + Y)²`.
///
/// Unconstrained cells report `G` and `D` at [`OLR_REFERENCE_RADIUS`].
pub fn env_constants(family: LossFamily, radius: Option<f64>, z: f64, y: f64) -> EnvConstants {
    let r = radius.unwrap_or(OLR_REFERENCE_RADIUS);
    let residual = z * r + y;
    let g = match family {
        LossFamily::StronglyConvexRidge => z * residual + r,
        _ => z * residual,
    };
    EnvConstants {
        g,
        d: 2.0 * r,
        lambda: (family == LossFamily::StronglyConvexRidge).then_some(1.0),
        alpha: (family == LossFamily::ExpConcaveSquared && residual > 0.0).then(|| 1.0 / (residual * residual)),
        y_bound: y,
        z_bound: z,
        radius,
    }
}

/// A fully materialized loss stream for `T` rounds.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvSpec,
    domain: Domain,
    features: Vec<Vector>,
    labels: Vec<f64>,
    constants: EnvConstants,
}

impl Environment {
    /// Draws rounds `1..=T` from `seed`; the stream is a deterministic
    /// function of `(spec, seed)` and prefix-stable in `T`.
    pub fn materialize(spec: &EnvSpec, horizon: usize, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("T", "horizon must be positive"));
        }
        let domain = spec.domain()?;
        let n = spec.source.dim();
        let mut features = Vec::with_capacity(horizon);
        let mut labels = Vec::with_capacity(horizon);
        let mut rng = rng_from_seed(seed);
        let uniform_feature = |rng: &mut crate::rng::Rng| Vector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        match &spec.source {
            DataSource::Synthetic { noise_sd, .. } => {
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    return Err(Error::config("noise_sd", "noise scale must be finite and non-negative"));
                }
                for _ in 0..horizon {
                    let z = uniform_feature(&mut rng);
                    let eps: f64 = rng.sample(StandardNormal);
                    labels.push(z.sum() + noise_sd * eps);
                    features.push(z);
                }
            }
            DataSource::NonStationary { period, noise, .. } => {
                if *period == 0 {
                    return Err(Error::config("period", "alternation period must be positive"));
                }
                if noise.is_empty() {
                    return Err(Error::Data("noise stream is empty".into()));
                }
                for t in 1..=horizon {
                    let z = uniform_feature(&mut rng);
                    let theta_ones = ((t - 1) / period) % 2 == 0;
                    let signal = if theta_ones { z.sum() } else { 0.0 };
                    labels.push(signal + noise[(t - 1) % noise.len()]);
                    features.push(z);
                }
            }
            DataSource::Dataset(data) => {
                if data.is_empty() {
                    return Err(Error::Data("dataset has no rows".into()));
                }
                for t in 0..horizon {
                    features.push(data.features[t % data.len()].clone());
                    labels.push(data.labels[t % data.len()]);
                }
            }
        }
        let z_bound = match (spec.z_cap, &spec.source) {
            (Some(z), _) => z,
            (None, DataSource::Dataset(d)) => d.max_feature_norm(),
            (None, _) => (n as f64).sqrt(),
        };
        let y_bound = spec
            .y_cap
            .unwrap_or_else(|| labels.iter().map(|y: &f64| y.abs()).fold(0.0, f64::max));
        let constants = env_constants(spec.family, domain.ball().map(|b| b.radius), z_bound, y_bound);
        Ok(Self {
            spec: spec.clone(),
            domain,
            features,
            labels,
            constants,
        })
    }

    /// Stream with explicitly given rounds, for hand-built instances.
    pub fn explicit(spec: &EnvSpec, features: Vec<Vector>, labels: Vec<f64>) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::Data(
                "explicit stream needs equally many features and labels".into(),
            ));
        }
        let domain = spec.domain()?;
        if features.iter().any(|z| z.len() != domain.dim()) {
            return Err(Error::Data("feature dimension does not match the domain".into()));
        }
        let z_bound = spec
            .z_cap
            .unwrap_or_else(|| features.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let y_bound = spec
            .y_cap
            .unwrap_or_else(|| labels.iter().map(|y| y.abs()).fold(0.0, f64::max));
        let constants = env_constants(spec.family, domain.ball().map(|b| b.radius), z_bound, y_bound);
        Ok(Self {
            spec: spec.clone(),
            domain,
            features,
            labels,
            constants,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn family(&self) -> LossFamily {
        self.spec.family
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn horizon(&self) -> usize {
        self.labels.len()
    }

    pub fn constants(&self) -> &EnvConstants {
        &self.constants
    }

    pub fn features(&self) -> &[Vector] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn index(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.labels.len() {
            return Err(Error::Sequencing(format!(
                "round {t} is outside the materialized range 1..={}",
                self.labels.len()
            )));
        }
        Ok(t - 1)
    }

    pub fn feature(&self, t: usize) -> Result<&Vector> {
        Ok(&self.features[self.index(t)?])
    }

    pub fn label(&self, t: usize) -> Result<f64> {
        Ok(self.labels[self.index(t)?])
    }

    pub fn loss_value(&self, t: usize, x: &Vector) -> Result<f64> {
        let i = self.index(t)?;
        Ok(loss_value(self.spec.family, &self.features[i], self.labels[i], x))
    }

    pub fn loss_grad(&self, t: usize, x: &Vector) -> Result<Vector> {
        let i = self.index(t)?;
        Ok(loss_grad(self.spec.family, &self.features[i], self.labels[i], x))
    }

    /// `Σ_t f_t(x)`.
    pub fn total_loss(&self, x: &Vector) -> f64 {
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(z, y)| loss_value(self.spec.family, z, *y, x))
            .sum()
    }
}
