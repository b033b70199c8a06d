//! Delay schedules and the observed/missing bookkeeping derived from them.
//!
//! Rounds are 1-based throughout. The feedback of round `τ` is delivered at
//! the end of round `τ + d_τ`, so it is part of `o_t` for every `t > τ + d_τ`:
//!
//! ```text
//! o_t = { τ : τ + d_τ < t }        m_t = [t - 1] \ o_t
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Per-round delays `d_1..d_T` over a horizon `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelaySchedule {
    horizon: usize,
    delays: Vec<usize>,
}

/// Summary statistics of a truncated schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelayStats {
    /// `max_t |m_t|`.
    pub sigma_max: usize,
    pub d_max: usize,
    pub d_tot: usize,
    /// `perceived_dmax[t - 1] = max_{τ ≤ t} min{d_τ, t - τ}` for `t = 1..=T`.
    pub perceived_dmax: Vec<usize>,
}

/// `σ_max`, `d_max` and `d_tot` without the per-round perceived maxima.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DelaySummary {
    pub sigma_max: usize,
    pub d_max: usize,
    pub d_tot: usize,
}

impl DelaySchedule {
    pub fn new(delays: Vec<usize>) -> Result<Self> {
        if delays.is_empty() {
            return Err(Error::config("T", "horizon must be at least 1"));
        }
        Ok(Self {
            horizon: delays.len(),
            delays,
        })
    }

    /// No delay at all: every gradient arrives at the end of its own round.
    pub fn zero(horizon: usize) -> Self {
        Self {
            horizon: horizon.max(1),
            delays: vec![0; horizon.max(1)],
        }
    }

    /// `d_t = N − t`: all feedback lands at the end of round `N`, so
    /// `σ_max = N − 1` while `d_tot = N(N − 1)/2`.
    pub fn countdown(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|t| n - t).collect())
    }

    /// `d_t = d` for every round, truncated to the horizon.
    pub fn constant(horizon: usize, d: usize) -> Result<Self> {
        Ok(Self::new(vec![d; horizon])?.truncate())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    /// Delay of round `t` (1-based).
    pub fn delay(&self, t: usize) -> usize {
        self.delays[t - 1]
    }

    pub fn is_truncated(&self) -> bool {
        self.delays.iter().enumerate().all(|(i, &d)| i + 1 + d <= self.horizon)
    }

    /// Caps every delay at `T - t` so all feedback arrives within the horizon.
    pub fn truncate(&self) -> Self {
        let t_max = self.horizon;
        let delays = self
            .delays
            .iter()
            .enumerate()
            .map(|(i, &d)| d.min(t_max - (i + 1)))
            .collect();
        Self { horizon: t_max, delays }
    }

    fn check_round(&self, t: usize, upper: usize) -> Result<()> {
        if t == 0 || t > upper {
            return Err(Error::Argument(format!(
                "round {t} outside [1, {upper}] for horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Rounds whose feedback is delivered at the end of round `t`, i.e. `o_{t+1} \ o_t`,
    /// in ascending order.
    pub fn arrivals_at(&self, t: usize) -> Result<Vec<usize>> {
        self.check_round(t, self.horizon)?;
        Ok((1..=t).filter(|&tau| tau + self.delay(tau) == t).collect())
    }

    /// `m_t` for `t ∈ [1, T + 1]`, ascending.
    pub fn missing_at(&self, t: usize) -> Result<Vec<usize>> {
        self.check_round(t, self.horizon + 1)?;
        Ok((1..t).filter(|&tau| tau + self.delay(tau) >= t).collect())
    }

    /// `o_t` for `t ∈ [1, T + 1]`, ascending.
    pub fn observed_at(&self, t: usize) -> Result<Vec<usize>> {
        self.check_round(t, self.horizon + 1)?;
        Ok((1..t).filter(|&tau| tau + self.delay(tau) < t).collect())
    }

    /// Origins grouped by delivery round: entry `t - 1` holds `o_{t+1} \ o_t`.
    pub fn arrival_index(&self) -> Vec<Vec<usize>> {
        let mut by_round = vec![Vec::new(); self.horizon];
        for (i, &d) in self.delays.iter().enumerate() {
            let arrival = i + 1 + d;
            if arrival <= self.horizon {
                by_round[arrival - 1].push(i + 1);
            }
        }
        by_round
    }

    /// Walks `m_1, m_2, …, m_{T+1}`, updating one sorted set per round.
    pub fn missing_sets(&self) -> MissingSets<'_> {
        MissingSets {
            arrivals: self.arrival_index(),
            current: BTreeSet::new(),
            next_round: 1,
            schedule: self,
        }
    }

    /// `σ_max`, `d_max`, `d_tot` in `O(T log T)`.
    pub fn summary(&self) -> DelaySummary {
        DelaySummary {
            sigma_max: self.missing_sets().map(|(_, m)| m.len()).max().unwrap_or(0),
            d_max: self.delays.iter().copied().max().unwrap_or(0),
            d_tot: self.delays.iter().sum(),
        }
    }

    pub fn stats(&self) -> DelayStats {
        let sigma_max = self.missing_sets().map(|(_, m)| m.len()).max().unwrap_or(0);
        let d_max = self.delays.iter().copied().max().unwrap_or(0);
        let d_tot = self.delays.iter().sum();
        let perceived_dmax = (1..=self.horizon)
            .map(|t| (1..=t).map(|tau| self.delay(tau).min(t - tau)).max().unwrap_or(0))
            .collect();
        DelayStats {
            sigma_max,
            d_max,
            d_tot,
            perceived_dmax,
        }
    }

    /// Two-line text form: `T=<int>` then the space-separated delays.
    pub fn to_text(&self) -> String {
        let body: Vec<String> = self.delays.iter().map(|d| d.to_string()).collect();
        format!("T={}\n{}\n", self.horizon, body.join(" "))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `T=<int>` header".into(),
        })?;
        let horizon: usize = header
            .trim()
            .strip_prefix("T=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `T=<int>`, got `{}`", header.trim()),
            })?;
        let delays = match lines.next() {
            Some((j, body)) => body
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Parse {
                        line: j + 1,
                        msg: format!("bad delay `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        if delays.len() != horizon {
            return Err(Error::Parse {
                line: 2,
                msg: format!("expected {horizon} delays, found {}", delays.len()),
            });
        }
        DelaySchedule::new(delays)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Iterator over `(t, m_t)` for `t = 1..=T+1`.
pub struct MissingSets<'a> {
    schedule: &'a DelaySchedule,
    arrivals: Vec<Vec<usize>>,
    current: BTreeSet<usize>,
    next_round: usize,
}

impl Iterator for MissingSets<'_> {
    type Item = (usize, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        let t = self.next_round;
        if t > self.schedule.horizon + 1 {
            return None;
        }
        if t > 1 {
            // m_t = (m_{t-1} ∪ {t-1}) \ (o_t \ o_{t-1})
            self.current.insert(t - 1);
            for tau in &self.arrivals[t - 2] {
                self.current.remove(tau);
            }
        }
        self.next_round += 1;
        Some((t, self.current.iter().copied().collect()))
    }
}

/// `d_max^{≤t}` from the arrival log alone: delivered origins contribute their
/// delay, origins still outstanding at round `t` contribute `t - τ`.
///
/// `arrival_log` holds `(origin, arrival)` pairs; entries arriving after `t`
/// are ignored so a full-horizon log can be queried at any round.
pub fn online_perceived_dmax(arrival_log: &[(usize, usize)], t: usize) -> Result<usize> {
    if t == 0 {
        return Err(Error::Argument("round 0 is not a valid round".into()));
    }
    let mut arrival_of = vec![None; t + 1];
    for &(origin, arrival) in arrival_log {
        if origin == 0 || arrival < origin {
            return Err(Error::Data(format!("arrival {arrival} precedes origin {origin}")));
        }
        if origin > t || arrival > t {
            continue;
        }
        if arrival_of[origin].replace(arrival).is_some() {
            return Err(Error::Data(format!("duplicate origin {origin} in log")));
        }
    }
    Ok((1..=t)
        .map(|tau| match arrival_of[tau] {
            Some(arrival) => arrival - tau,
            None => t - tau,
        })
        .max()
        .unwrap_or(0))
}

/// Incremental delay bookkeeping as seen by a learner: it only learns about
/// delays through the timestamps of delivered feedback.
#[derive(Clone, Debug, Default)]
pub struct OnlineDelayTracker {
    round: usize,
    pending: BTreeSet<usize>,
    max_delivered_delay: usize,
    missing_now: usize,
    missing_sum: usize,
}

impl OnlineDelayTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens round `t`: records `|m_t|` and marks `t` as outstanding.
    pub fn begin_round(&mut self, t: usize) -> Result<()> {
        if t != self.round + 1 {
            return Err(Error::Sequencing(format!(
                "round {t} opened after round {}",
                self.round
            )));
        }
        self.round = t;
        self.missing_now = self.pending.len();
        self.missing_sum += self.missing_now;
        self.pending.insert(t);
        Ok(())
    }

    /// Feedback for `origins` delivered at the end of the current round.
    pub fn deliver<I: IntoIterator<Item = usize>>(&mut self, origins: I) -> Result<()> {
        for tau in origins {
            if !self.pending.remove(&tau) {
                return Err(Error::Data(format!(
                    "feedback for round {tau} delivered at round {} but not outstanding",
                    self.round
                )));
            }
            self.max_delivered_delay = self.max_delivered_delay.max(self.round - tau);
        }
        Ok(())
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// `|m_t|` for the current round.
    pub fn missing_now(&self) -> usize {
        self.missing_now
    }

    /// `Σ_{s ≤ t} |m_s|`.
    pub fn missing_sum(&self) -> usize {
        self.missing_sum
    }

    /// `d_max^{≤t}` for the current round.
    pub fn perceived_dmax(&self) -> usize {
        let outstanding = self.pending.iter().next().map_or(0, |&oldest| self.round - oldest);
        self.max_delivered_delay.max(outstanding)
    }

    pub fn is_outstanding(&self, tau: usize) -> bool {
        self.pending.contains(&tau)
    }
}

/// Distribution of per-round delays.
#[derive(Clone, Debug, PartialEq)]
pub enum DelayRegime {
    Fixed(usize),
    /// Uniform over the integers `lo..=hi`.
    Uniform {
        lo: usize,
        hi: usize,
    },
    /// With probability `p` the feedback never usefully arrives (`d_t = T - t`),
    /// otherwise the delay is drawn from `base`.
    HeavyTail {
        base: Box<DelayRegime>,
        p: f64,
    },
    /// Alternates every `period` rounds between a geometric law on `{0, 1, …}`
    /// (first phase) and `fallback`. `p = None` means `T^{-1/3}`.
    GeometricAlternating {
        p: Option<f64>,
        period: usize,
        fallback: Box<DelayRegime>,
    },
    Trace {
        delays: Vec<usize>,
        label: String,
    },
}

/// A delay regime together with the seed of its generator.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayRegimeSpec {
    pub kind: DelayRegime,
    pub seed: u64,
}

impl DelayRegime {
    pub fn validate(&self) -> Result<()> {
        match self {
            DelayRegime::Fixed(_) => Ok(()),
            DelayRegime::Uniform { lo, hi } => {
                if lo > hi {
                    Err(Error::config("uniform.lo", format!("lo={lo} exceeds hi={hi}")))
                } else {
                    Ok(())
                }
            }
            DelayRegime::HeavyTail { base, p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::config("heavy_tail.p", format!("{p} not in [0, 1]")));
                }
                base.validate()
            }
            DelayRegime::GeometricAlternating { p, period, fallback } => {
                if let Some(p) = p {
                    if !(*p > 0.0 && *p <= 1.0) {
                        return Err(Error::config("geometric_alternating.p", format!("{p} not in (0, 1]")));
                    }
                }
                if *period == 0 {
                    return Err(Error::config("geometric_alternating.period", "period must be positive"));
                }
                fallback.validate()
            }
            DelayRegime::Trace { .. } => Ok(()),
        }
    }

    fn sample(&self, t: usize, horizon: usize, rng: &mut crate::rng::Rng) -> Result<usize> {
        Ok(match self {
            DelayRegime::Fixed(d) => *d,
            DelayRegime::Uniform { lo, hi } => rng.random_range(*lo..=*hi),
            DelayRegime::HeavyTail { base, p } => {
                if rng.random_bool(*p) {
                    horizon - t
                } else {
                    base.sample(t, horizon, rng)?
                }
            }
            DelayRegime::GeometricAlternating { p, period, fallback } => {
                if ((t - 1) / period) % 2 == 0 {
                    let p = p.unwrap_or_else(|| (horizon as f64).powf(-1.0 / 3.0)).min(1.0);
                    let law = Geometric::new(p).map_err(|e| Error::config("geometric_alternating.p", e.to_string()))?;
                    usize::try_from(law.sample(rng)).unwrap_or(usize::MAX)
                } else {
                    fallback.sample(t, horizon, rng)?
                }
            }
            DelayRegime::Trace { delays, .. } => delays[t - 1],
        })
    }

    /// Parses the colon-separated form used on the command line and in configs:
    ///
    /// ```text
    /// fixed:D | uniform:LO:HI | heavy:P:<regime> | geoalt:P|auto:PERIOD:<regime>
    /// trace:D1,D2,… | tracefile:PATH
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = text.split_once(':').unwrap_or((text, ""));
        let field = |name: &str| format!("delay.{name}");
        let num = |tok: &str, name: &str| -> Result<usize> {
            tok.trim()
                .parse()
                .map_err(|_| Error::config(field(name), format!("`{tok}` is not a non-negative integer")))
        };
        let prob = |tok: &str, name: &str| -> Result<f64> {
            tok.trim()
                .parse()
                .map_err(|_| Error::config(field(name), format!("`{tok}` is not a number")))
        };
        let regime = match head {
            "fixed" => DelayRegime::Fixed(num(rest, "fixed")?),
            "uniform" => {
                let (lo, hi) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::config(field("uniform"), "expected uniform:LO:HI"))?;
                DelayRegime::Uniform {
                    lo: num(lo, "uniform.lo")?,
                    hi: num(hi, "uniform.hi")?,
                }
            }
            "heavy" => {
                let (p, base) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::config(field("heavy"), "expected heavy:P:<regime>"))?;
                DelayRegime::HeavyTail {
                    p: prob(p, "heavy.p")?,
                    base: Box::new(DelayRegime::parse(base)?),
                }
            }
            "geoalt" => {
                let mut parts = rest.splitn(3, ':');
                let (p, period, fallback) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(p), Some(period), Some(fb)) => (p, period, fb),
                    _ => return Err(Error::config(field("geoalt"), "expected geoalt:P|auto:PERIOD:<regime>")),
                };
                DelayRegime::GeometricAlternating {
                    p: if p.trim() == "auto" {
                        None
                    } else {
                        Some(prob(p, "geoalt.p")?)
                    },
                    period: num(period, "geoalt.period")?,
                    fallback: Box::new(DelayRegime::parse(fallback)?),
                }
            }
            "trace" => DelayRegime::Trace {
                delays: rest
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(s, "trace"))
                    .collect::<Result<_>>()?,
                label: text.to_string(),
            },
            "tracefile" => {
                let schedule = DelaySchedule::read(Path::new(rest.trim()))?;
                DelayRegime::Trace {
                    delays: schedule.delays,
                    label: text.to_string(),
                }
            }
            other => return Err(Error::config("delay", format!("unknown delay regime `{other}`"))),
        };
        regime.validate()?;
        Ok(regime)
    }
}

impl fmt::Display for DelayRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayRegime::Fixed(d) => write!(f, "fixed:{d}"),
            DelayRegime::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            DelayRegime::HeavyTail { base, p } => write!(f, "heavy:{p}:{base}"),
            DelayRegime::GeometricAlternating { p, period, fallback } => match p {
                Some(p) => write!(f, "geoalt:{p}:{period}:{fallback}"),
                None => write!(f, "geoalt:auto:{period}:{fallback}"),
            },
            DelayRegime::Trace { label, .. } => write!(f, "{label}"),
        }
    }
}

/// Draws `d_1..d_T` from the regime, deterministically in `spec.seed`.
///
/// The result is *not* truncated; see [`realize_schedule`].
pub fn build_schedule(spec: &DelayRegimeSpec, horizon: usize) -> Result<DelaySchedule> {
    if horizon == 0 {
        return Err(Error::config("T", "horizon must be at least 1"));
    }
    spec.kind.validate()?;
    if let DelayRegime::Trace { delays, .. } = &spec.kind {
        if delays.len() != horizon {
            return Err(Error::config(
                "delay.trace",
                format!("trace has {} entries, horizon is {horizon}", delays.len()),
            ));
        }
    }
    let mut rng = rng_from_seed(spec.seed);
    let delays = (1..=horizon)
        .map(|t| spec.kind.sample(t, horizon, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    DelaySchedule::new(delays)
}

/// [`build_schedule`] followed by truncation; what experiments consume.
pub fn realize_schedule(spec: &DelayRegimeSpec, horizon: usize) -> Result<DelaySchedule> {
    Ok(build_schedule(spec, horizon)?.truncate())
}
