//! Experiment configuration and the algorithm registry.
//!
//! Config files are INI-style `key = value` text with the sections `[env]`,
//! `[delay]`, `[run]` and one `[algo.<name>]` per algorithm. Keys:
//!
//! | section | key | meaning |
//! |---|---|---|
//! | env | `family` | `ridge`, `squared` or `olr` |
//! | env | `source` | `synthetic` (default), `nonstationary` or `libsvm` |
//! | env | `dim` | feature dimension (default 5; libsvm: inferred unless set) |
//! | env | `noise_sd` | Gaussian noise scale for `synthetic` (default 1) |
//! | env | `noise_path` | noise stream for `nonstationary` (default: bundled sample) |
//! | env | `period` | θ alternation period for `nonstationary` (default 30) |
//! | env | `path` | LIBSVM file for `libsvm` |
//! | env | `radius` | ball radius for ridge/squared (default 2) |
//! | env | `y_cap`, `z_cap` | label / feature bounds (default: from data) |
//! | delay | `regime` | delay regime, e.g. `uniform:0:5`, `heavy:0.1:uniform:0:5` |
//! | run | `T`, `trials`, `master_seed`, `out`, `workers` | run settings |
//! | algo.NAME | `kind` | registry entry (defaults to NAME) |
//! | algo.NAME | `tuning`, `eta`, `gamma`, `z`, `clip`, `lambda`, `alpha`, `step`, `schedule`, `epsilon` | per-kind parameters |
//!
//! `#` and `;` start comments, also after a value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::delay_model::DelayRegime;
use crate::environments::{
    parse_noise, read_libsvm, read_noise, DataSource, EnvSpec, LossFamily, BUNDLED_SAMPLE, DEFAULT_PERIOD,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoKind {
    Ftrl,
    Omd,
    SdmdRsc,
    Dogd,
    DogdSc,
    Ons,
    Vaw,
    BoldOgd,
    BoldOns,
    BoldVaw,
}

pub const REGISTRY: &[(&str, AlgoKind)] = &[
    ("ftrl", AlgoKind::Ftrl),
    ("omd", AlgoKind::Omd),
    ("sdmd-rsc", AlgoKind::SdmdRsc),
    ("dogd", AlgoKind::Dogd),
    ("dogd-sc", AlgoKind::DogdSc),
    ("ons", AlgoKind::Ons),
    ("ons-constant", AlgoKind::Ons),
    ("ons-sqrt", AlgoKind::Ons),
    ("ons-adaptive", AlgoKind::Ons),
    ("vaw", AlgoKind::Vaw),
    ("bold-ogd", AlgoKind::BoldOgd),
    ("bold-ons", AlgoKind::BoldOns),
    ("bold-vaw", AlgoKind::BoldVaw),
];

impl AlgoKind {
    pub fn lookup(name: &str) -> Result<Self> {
        REGISTRY
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, k)| *k)
            .ok_or_else(|| {
                let known: Vec<&str> = REGISTRY.iter().map(|(n, _)| *n).collect();
                Error::config(
                    "kind",
                    format!("unknown algorithm `{name}`; known: {}", known.join(", ")),
                )
            })
    }
}

/// One algorithm entry: a display name, its registry kind and raw parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoSpec {
    pub name: String,
    pub kind: AlgoKind,
    pub params: BTreeMap<String, String>,
}

impl AlgoSpec {
    /// Entry with default parameters; names like `ons-sqrt` imply their tuning.
    pub fn named(name: &str) -> Result<Self> {
        Self::with_params(name, BTreeMap::new())
    }

    pub fn with_params(name: &str, mut params: BTreeMap<String, String>) -> Result<Self> {
        let kind_name = params.remove("kind").unwrap_or_else(|| name.to_string());
        let kind = AlgoKind::lookup(&kind_name)?;
        if let Some(t) = kind_name.strip_prefix("ons-") {
            params.entry("tuning".into()).or_insert_with(|| t.to_string());
        }
        Ok(Self {
            name: name.to_string(),
            kind,
            params,
        })
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.params
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::config(format!("algo.{}.{key}", self.name), format!("`{v}` is not a number")))
            })
            .transpose()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.params
            .get(key)
            .map(|v| match v.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::config(
                    format!("algo.{}.{key}", self.name),
                    format!("`{v}` is not a boolean"),
                )),
            })
            .transpose()
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub delay: DelayRegime,
    pub algos: Vec<AlgoSpec>,
    pub horizon: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub workers: usize,
    /// Echo of the configuration as key/value lines, for run metadata.
    pub echo: Vec<(String, String)>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("run.T", "horizon must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("run.trials", "at least one trial is required"));
        }
        if self.algos.is_empty() {
            return Err(Error::config("algo", "no algorithms configured"));
        }
        let mut seen = std::collections::HashSet::new();
        for a in &self.algos {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::config("algo", format!("algorithm `{}` listed twice", a.name)));
            }
        }
        self.delay.validate()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.echo {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

type Sections = Vec<(String, BTreeMap<String, String>)>;

fn strip_comment(v: &str) -> &str {
    let cut = v.find(['#', ';']).unwrap_or(v.len());
    v[..cut].trim()
}

fn parse_sections(text: &str) -> Result<Sections> {
    let ini = ini::Ini::load_from_str_noescape(text).map_err(|e| Error::Parse {
        line: e.line,
        msg: e.msg.to_string(),
    })?;
    let mut out: Sections = Vec::new();
    for (name, props) in ini.iter() {
        let Some(name) = name else {
            if props.iter().next().is_some() {
                return Err(Error::config("config", "keys must appear inside a section"));
            }
            continue;
        };
        if out.iter().any(|(n, _)| n == name) {
            return Err(Error::config(name, "section appears twice"));
        }
        let mut map = BTreeMap::new();
        for (k, v) in props.iter() {
            if map.insert(k.to_string(), strip_comment(v).to_string()).is_some() {
                return Err(Error::config(format!("{name}.{k}"), "key appears twice"));
            }
        }
        out.push((name.to_string(), map));
    }
    Ok(out)
}

fn take<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, section: &str, key: &str) -> Result<Option<T>> {
    map.remove(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::config(format!("{section}.{key}"), format!("cannot parse `{v}`")))
        })
        .transpose()
}

fn reject_leftovers(section: &str, map: &BTreeMap<String, String>) -> Result<()> {
    match map.keys().next() {
        Some(k) => Err(Error::config(format!("{section}.{k}"), "unknown key")),
        None => Ok(()),
    }
}

/// Builds an [`EnvSpec`] from `[env]` keys; relative paths resolve against `base`.
pub fn env_from_keys(mut map: BTreeMap<String, String>, base: &Path) -> Result<EnvSpec> {
    let family = LossFamily::parse(&map.remove("family").unwrap_or_else(|| "ridge".into()))?;
    let source_kind = map.remove("source").unwrap_or_else(|| "synthetic".into());
    let dim: Option<usize> = take(&mut map, "env", "dim")?;
    let resolve = |p: String| {
        let p = PathBuf::from(p);
        if p.is_relative() {
            base.join(p)
        } else {
            p
        }
    };
    let source = match source_kind.as_str() {
        "synthetic" => DataSource::Synthetic {
            dim: dim.unwrap_or(5),
            noise_sd: take(&mut map, "env", "noise_sd")?.unwrap_or(1.0),
        },
        "nonstationary" => {
            let noise = match map.remove("noise_path") {
                Some(p) => read_noise(&resolve(p))?,
                None => parse_noise(BUNDLED_SAMPLE)?,
            };
            DataSource::NonStationary {
                dim: dim.unwrap_or(5),
                period: take(&mut map, "env", "period")?.unwrap_or(DEFAULT_PERIOD),
                noise: Arc::new(noise),
            }
        }
        "libsvm" => {
            let path = map
                .remove("path")
                .ok_or_else(|| Error::config("env.path", "libsvm source needs a path"))?;
            DataSource::Dataset(Arc::new(read_libsvm(&resolve(path), dim)?))
        }
        other => {
            return Err(Error::config(
                "env.source",
                format!("unknown source `{other}` (synthetic|nonstationary|libsvm)"),
            ))
        }
    };
    let mut spec = EnvSpec::new(family, source);
    if let Some(r) = take::<f64>(&mut map, "env", "radius")? {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::config("env.radius", "radius must be finite and non-negative"));
        }
        spec.radius = r;
    }
    spec.y_cap = take(&mut map, "env", "y_cap")?;
    spec.z_cap = take(&mut map, "env", "z_cap")?;
    reject_leftovers("env", &map)?;
    Ok(spec)
}

/// Parses config text; `base` anchors relative data paths.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let sections = parse_sections(text)?;
    let mut echo = Vec::new();
    for (name, map) in &sections {
        for (k, v) in map {
            echo.push((format!("{name}.{k}"), v.clone()));
        }
    }
    let mut env_keys = BTreeMap::new();
    let mut delay_keys = BTreeMap::new();
    let mut run_keys = BTreeMap::new();
    let mut algos = Vec::new();
    for (name, map) in sections {
        match name.as_str() {
            "env" => env_keys = map,
            "delay" => delay_keys = map,
            "run" => run_keys = map,
            other => match other.strip_prefix("algo.") {
                Some(algo) if !algo.is_empty() => algos.push(AlgoSpec::with_params(algo, map)?),
                _ => return Err(Error::config(other, "unknown section")),
            },
        }
    }
    let env = env_from_keys(env_keys, base)?;
    let regime = delay_keys
        .remove("regime")
        .ok_or_else(|| Error::config("delay.regime", "missing delay regime"))?;
    let delay = DelayRegime::parse(&regime)?;
    reject_leftovers("delay", &delay_keys)?;

    let horizon = take(&mut run_keys, "run", "T")?.unwrap_or(10_000);
    let trials = take(&mut run_keys, "run", "trials")?.unwrap_or(20);
    let master_seed = take(&mut run_keys, "run", "master_seed")?.unwrap_or(0);
    let workers = take(&mut run_keys, "run", "workers")?.unwrap_or(1);
    let out = run_keys.remove("out").map(PathBuf::from);
    reject_leftovers("run", &run_keys)?;

    let cfg = ExperimentConfig {
        env,
        delay,
        algos,
        horizon,
        trials,
        master_seed,
        out,
        workers,
        echo,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
[env]
family = squared   # exp-concave
dim = 3

[delay]
regime = uniform:0:5

[algo.ons-adaptive]

[algo.my-ons]
kind = ons
tuning = sqrt

[algo.dogd]

[run]
T = 50
trials = 2
master_seed = 7
workers = 2
";

    #[test]
    fn parses_sample() {
        let cfg = parse_config(SAMPLE, Path::new(".")).unwrap();
        assert_eq!(cfg.env.family, LossFamily::ExpConcaveSquared);
        assert_eq!(cfg.env.source.dim(), 3);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.trials, 2);
        let names: Vec<&str> = cfg.algos.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["ons-adaptive", "my-ons", "dogd"]);
        assert_eq!(cfg.algos[0].get_str("tuning"), Some("adaptive"));
        assert_eq!(cfg.algos[1].get_str("tuning"), Some("sqrt"));
        assert_eq!(cfg.algos[1].kind, AlgoKind::Ons);
    }

    #[test]
    fn rejects_bad_input() {
        let bad_algo = SAMPLE.replace("[algo.dogd]", "[algo.nope]");
        assert!(parse_config(&bad_algo, Path::new(".")).is_err());
        let bad_key = SAMPLE.replace("dim = 3", "dimension = 3");
        assert!(parse_config(&bad_key, Path::new(".")).is_err());
        let zero_t = SAMPLE.replace("T = 50", "T = 0");
        assert!(parse_config(&zero_t, Path::new(".")).is_err());
        let no_delay = SAMPLE.replace("regime = uniform:0:5", "");
        assert!(parse_config(&no_delay, Path::new(".")).is_err());
    }
}
