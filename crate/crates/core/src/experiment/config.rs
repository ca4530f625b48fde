use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{Boundary, ModelParams};
use crate::error::{Error, Result};
use crate::normal_form::{BoundPolicy, ScheduleProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    NormalForm,
    Measure,
    Fit,
    TameCheck,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::NormalForm => "normal-form",
            Mode::Measure => "measure",
            Mode::Fit => "fit",
            Mode::TameCheck => "tame-check",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "normal-form" => Ok(Mode::NormalForm),
            "measure" => Ok(Mode::Measure),
            "fit" => Ok(Mode::Fit),
            "tame-check" => Ok(Mode::TameCheck),
            _ => Err(Error::InvalidParameter(format!("unknown mode '{s}'"))),
        }
    }
}

/// Disorder realizations: a half-open range `a..b` or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SeedSpec {
    Range(u64, u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Range(a, b) => (*a..*b).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Range(a, b) => write!(f, "{a}..{b}"),
            SeedSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for SeedSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad seed spec '{s}' (use a..b or a,b,c)"));
        if let Some((a, b)) = s.split_once("..") {
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return Ok(SeedSpec::Range(a, b));
        }
        let list = s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<u64>>>()?;
        Ok(SeedSpec::List(list))
    }
}

/// Everything a run needs, read from a flat `key = value` file.
///
/// Lines starting with `#` and blank lines are ignored; unknown keys are
/// rejected. [`ExperimentConfig::to_text`] writes every key in a fixed order,
/// and parsing that text returns the same config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub epsilon: f64,
    pub delta: f64,
    pub radius: usize,
    pub dt: f64,
    pub boundary: Boundary,
    pub seeds: SeedSpec,
    /// The initial datum is `δ_{initial_site}`.
    pub initial_site: i64,
    pub t_first: f64,
    pub t_final: f64,
    pub per_decade: usize,
    pub fit_t_min: f64,
    pub fit_t_max: f64,
    /// Tail observable `Σ_{|k|>j0} |q_k|²` recorded along trajectories.
    pub tail_j0: usize,
    pub boundary_fraction: f64,
    pub tau: f64,
    pub kappa: f64,
    pub j0: u64,
    /// `0` selects the default `⌈10/κ⌉`.
    pub degree_cap: u32,
    pub profile: ScheduleProfile,
    pub policy: BoundPolicy,
    /// Potential radius for normal-form runs; `0` picks `j0 + ⌈2 ln j0⌉ + 2`.
    pub nf_radius: usize,
    pub samples: u64,
    pub tail_tolerance: f64,
    /// Random states and Sobolev index for the tame-inequality suite.
    pub tame_states: usize,
    pub tame_s: f64,
    /// Worker threads for ensembles; `0` uses all cores.
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            epsilon: 0.05,
            delta: 0.05,
            radius: 1024,
            dt: 0.05,
            boundary: Boundary::Dirichlet,
            seeds: SeedSpec::Range(0, 20),
            initial_site: 0,
            t_first: 1.0,
            t_final: 1e4,
            per_decade: 32,
            fit_t_min: 1e2,
            fit_t_max: 1e4,
            tail_j0: 512,
            boundary_fraction: 1e-6,
            tau: 0.009,
            kappa: 1.0,
            j0: 40,
            degree_cap: 0,
            profile: ScheduleProfile::Desk,
            policy: BoundPolicy::Record,
            nf_radius: 0,
            samples: 100_000,
            tail_tolerance: 1e-4,
            tame_states: 100,
            tame_s: 2.0,
            workers: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Keys in file order.
pub const CONFIG_KEYS: [&str; 28] = [
    "mode",
    "epsilon",
    "delta",
    "radius",
    "dt",
    "boundary",
    "seeds",
    "initial_site",
    "t_first",
    "t_final",
    "per_decade",
    "fit_t_min",
    "fit_t_max",
    "tail_j0",
    "boundary_fraction",
    "tau",
    "kappa",
    "j0",
    "degree_cap",
    "profile",
    "policy",
    "nf_radius",
    "samples",
    "tail_tolerance",
    "tame_states",
    "tame_s",
    "workers",
    "output_dir",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = '{value}'")))
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mode" => self.mode = v.parse()?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "radius" => self.radius = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "boundary" => self.boundary = v.parse()?,
            "seeds" => self.seeds = v.parse()?,
            "initial_site" => self.initial_site = parse_num(key, v)?,
            "t_first" => self.t_first = parse_num(key, v)?,
            "t_final" => self.t_final = parse_num(key, v)?,
            "per_decade" => self.per_decade = parse_num(key, v)?,
            "fit_t_min" => self.fit_t_min = parse_num(key, v)?,
            "fit_t_max" => self.fit_t_max = parse_num(key, v)?,
            "tail_j0" => self.tail_j0 = parse_num(key, v)?,
            "boundary_fraction" => self.boundary_fraction = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "kappa" => self.kappa = parse_num(key, v)?,
            "j0" => self.j0 = parse_num(key, v)?,
            "degree_cap" => self.degree_cap = parse_num(key, v)?,
            "profile" => self.profile = v.parse()?,
            "policy" => self.policy = v.parse()?,
            "nf_radius" => self.nf_radius = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "tail_tolerance" => self.tail_tolerance = parse_num(key, v)?,
            "tame_states" => self.tame_states = parse_num(key, v)?,
            "tame_s" => self.tame_s = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            other => return Err(Error::InvalidParameter(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Text form of one key.
    pub fn get(&self, key: &str) -> Result<String> {
        // `{:?}` on f64 is the shortest text that parses back to the same value
        Ok(match key {
            "mode" => self.mode.as_str().to_string(),
            "epsilon" => format!("{:?}", self.epsilon),
            "delta" => format!("{:?}", self.delta),
            "radius" => self.radius.to_string(),
            "dt" => format!("{:?}", self.dt),
            "boundary" => self.boundary.to_string(),
            "seeds" => self.seeds.to_string(),
            "initial_site" => self.initial_site.to_string(),
            "t_first" => format!("{:?}", self.t_first),
            "t_final" => format!("{:?}", self.t_final),
            "per_decade" => self.per_decade.to_string(),
            "fit_t_min" => format!("{:?}", self.fit_t_min),
            "fit_t_max" => format!("{:?}", self.fit_t_max),
            "tail_j0" => self.tail_j0.to_string(),
            "boundary_fraction" => format!("{:?}", self.boundary_fraction),
            "tau" => format!("{:?}", self.tau),
            "kappa" => format!("{:?}", self.kappa),
            "j0" => self.j0.to_string(),
            "degree_cap" => self.degree_cap.to_string(),
            "profile" => format!("{:?}", self.profile).to_lowercase(),
            "policy" => format!("{:?}", self.policy).to_lowercase(),
            "nf_radius" => self.nf_radius.to_string(),
            "samples" => self.samples.to_string(),
            "tail_tolerance" => format!("{:?}", self.tail_tolerance),
            "tame_states" => self.tame_states.to_string(),
            "tame_s" => format!("{:?}", self.tame_s),
            "workers" => self.workers.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            other => return Err(Error::InvalidParameter(format!("unknown config key '{other}'"))),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::parse_unvalidated(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without range checks, for callers that apply overrides first.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config", format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(
                    "config",
                    format!("line {}: duplicate key '{key}'", lineno + 1),
                ));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg = Self::load_unvalidated(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_unvalidated(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_unvalidated(&text)
    }

    /// Every key, one per line, in [`CONFIG_KEYS`] order.
    pub fn to_text(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("known key")))
            .collect()
    }

    /// Hex SHA-256 of [`ExperimentConfig::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.epsilon, self.delta, self.dt, self.boundary)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        self.model_params()?;
        if self.radius < 1 {
            return bad("radius must be at least 1".into());
        }
        if self.initial_site.unsigned_abs() as usize > self.radius {
            return bad(format!("initial_site {} outside the window", self.initial_site));
        }
        if self.seeds.seeds().is_empty() {
            return bad("seed list is empty".into());
        }
        // t_final = 0 records the initial datum only
        if !(self.t_first > 0.0 && (self.t_final == 0.0 || self.t_final >= self.t_first)) {
            return bad(format!(
                "need 0 < t_first <= t_final or t_final = 0 (got {}, {})",
                self.t_first, self.t_final
            ));
        }
        if self.per_decade == 0 {
            return bad("per_decade must be positive".into());
        }
        if !(self.fit_t_min > 0.0 && self.fit_t_max > self.fit_t_min) {
            return bad(format!(
                "need 0 < fit_t_min < fit_t_max (got {}, {})",
                self.fit_t_min, self.fit_t_max
            ));
        }
        if self.tail_j0 == 0 || self.tail_j0 > self.radius {
            return bad(format!("tail_j0 = {} outside (0, radius]", self.tail_j0));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction <= 1.0) {
            return bad(format!("boundary_fraction = {} outside (0, 1]", self.boundary_fraction));
        }
        if !(self.tau > 0.0 && self.tau < 0.01) {
            return bad(format!("tau = {} outside (0, 1/100)", self.tau));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa = {} must be positive", self.kappa));
        }
        if self.j0 < 2 {
            return bad(format!("j0 = {} must be at least 2", self.j0));
        }
        if !(self.tail_tolerance >= 0.0) {
            return bad(format!("tail_tolerance = {} is negative", self.tail_tolerance));
        }
        if !(self.tame_s >= 1.0) {
            return bad(format!("tame_s = {} below 1", self.tame_s));
        }
        Ok(())
    }

    /// Hash of the settings that determine a single trajectory. Seeds,
    /// worker count, fit window and output location are left out so that
    /// extending an ensemble reuses the traces already on disk.
    pub fn trajectory_hash(&self) -> String {
        let mut c = self.clone();
        let d = Self::default();
        c.mode = d.mode;
        c.seeds = d.seeds;
        c.workers = d.workers;
        c.output_dir = d.output_dir;
        c.fit_t_min = d.fit_t_min;
        c.fit_t_max = d.fit_t_max;
        c.hash()
    }

    /// Sample grid: `0` followed by `per_decade` log-spaced points per decade.
    pub fn sample_grid(&self) -> Result<Vec<f64>> {
        if self.t_final == 0.0 {
            return Ok(vec![0.0]);
        }
        crate::dynamics::log_grid(self.t_first, self.t_final, self.per_decade)
    }

    /// Potential radius used by normal-form runs.
    pub fn normal_form_radius(&self) -> usize {
        if self.nf_radius > 0 {
            self.nf_radius
        } else {
            self.j0 as usize + (2.0 * (self.j0 as f64).ln()).ceil() as usize + 2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_text();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
        assert_eq!(text.lines().count(), CONFIG_KEYS.len());
    }

    #[test]
    fn comments_overrides_and_errors() {
        let cfg = ExperimentConfig::parse("# ensemble\nmode = fit\n\nseeds = 3,1,4\n epsilon=0.1 \n").unwrap();
        assert_eq!(cfg.mode, Mode::Fit);
        assert_eq!(cfg.seeds.seeds(), vec![3, 1, 4]);
        assert_eq!(cfg.epsilon, 0.1);
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("epsilon = 0.1\nepsilon = 0.2").is_err());
        assert!(ExperimentConfig::parse("epsilon").is_err());
        assert!(ExperimentConfig::parse("tau = 0.5").is_err());
        assert!(ExperimentConfig::parse("seeds = 4..4").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set("dt", "0.025").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.set("seeds", "0..40").unwrap();
        c.set("workers", "3").unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.trajectory_hash(), c.trajectory_hash());
        assert_ne!(a.trajectory_hash(), b.trajectory_hash());
    }

    proptest! {
        #[test]
        fn arbitrary_configs_round_trip(
            eps in 0.0f64..1.0,
            delta in 0.0f64..1.0,
            dt in 1e-4f64..0.5,
            radius in 8usize..4096,
            seeds in prop::collection::vec(any::<u64>(), 1..6),
            tau in 1e-4f64..0.0099,
            kappa in 0.1f64..8.0,
            tol in 0.0f64..1e-2,
        ) {
            let mut cfg = ExperimentConfig {
                epsilon: eps,
                delta,
                dt,
                radius,
                tail_j0: radius / 2 + 1,
                seeds: SeedSpec::List(seeds),
                tau,
                kappa,
                tail_tolerance: tol,
                mode: Mode::NormalForm,
                profile: ScheduleProfile::Paper,
                policy: BoundPolicy::Enforce,
                ..ExperimentConfig::default()
            };
            cfg.output_dir = PathBuf::from("runs/a b");
            let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
