//! Benchmark configuration: plain-text `key = value` lines, `#` comments.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use drmhe::noise_lab::InitialErrorPolicy;

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSource {
    SineUniform,
    BimodalGaussian,
    /// Externally supplied corpus CSV.
    Corpus(PathBuf),
}

impl FromStr for ProfileSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sine-uniform" => ProfileSource::SineUniform,
            "bimodal-gaussian" => ProfileSource::BimodalGaussian,
            path if path.ends_with(".csv") => ProfileSource::Corpus(PathBuf::from(path)),
            other => {
                return Err(format!(
                    "expected sine-uniform, bimodal-gaussian or a .csv corpus path, got `{other}`"
                ))
            }
        })
    }
}

impl std::fmt::Display for ProfileSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileSource::SineUniform => write!(f, "sine-uniform"),
            ProfileSource::BimodalGaussian => write!(f, "bimodal-gaussian"),
            ProfileSource::Corpus(path) => write!(f, "{}", path.display()),
        }
    }
}

/// Trajectory along which the window models are linearized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinearizeAlong {
    /// Noise-free rollout from the arrival estimate (deployable).
    #[default]
    Estimate,
    /// True plant states (ablation; Jacobians only, the deviation reference
    /// stays the estimate rollout).
    Truth,
}

impl FromStr for LinearizeAlong {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "estimate" => Ok(LinearizeAlong::Estimate),
            "truth" => Ok(LinearizeAlong::Truth),
            other => Err(format!("expected estimate or truth, got `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub profile: ProfileSource,
    pub smoothing: usize,
    pub forecast: usize,
    pub dt: f64,
    pub duration: f64,
    pub n_total: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Radii `ε = ε_v = ε_w`; one DR-MHE variant per value.
    pub eps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub normalize_empirical: bool,
    pub linearize_along: LinearizeAlong,
    pub initial_error_policy: InitialErrorPolicy,
    /// Reuse the previous step's maps while the window Jacobians move less
    /// than `cache_threshold` (max-abs entry change).
    pub cache_gains: bool,
    pub cache_threshold: f64,
    /// True initial state of every test realization.
    pub x0: [f64; 2],
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            profile: ProfileSource::SineUniform,
            smoothing: 8,
            forecast: 1,
            dt: 0.1,
            duration: 8.0,
            n_total: 70,
            n_train: 20,
            n_test: 50,
            eps: vec![0.2, 0.0],
            seeds: vec![0],
            output_dir: PathBuf::from("results"),
            normalize_empirical: false,
            linearize_along: LinearizeAlong::Estimate,
            initial_error_policy: InitialErrorPolicy::DisturbanceLike,
            cache_gains: false,
            cache_threshold: 1e-3,
            x0: [1.0, 0.0],
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|item| item.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", item.trim())))
        .collect()
}

fn parse_value<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("`{value}`: {e}"))
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = BenchConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| BenchError::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|message| BenchError::Config { line, message })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        BenchConfig::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "profile" => self.profile = value.parse()?,
            "T_s" => self.smoothing = parse_value(value)?,
            "T_f" => self.forecast = parse_value(value)?,
            "dt" => self.dt = parse_value(value)?,
            "duration" => self.duration = parse_value(value)?,
            "N_total" => self.n_total = parse_value(value)?,
            "N_train" => self.n_train = parse_value(value)?,
            "N_test" => self.n_test = parse_value(value)?,
            "eps" => self.eps = parse_list(value)?,
            "seeds" => self.seeds = parse_list(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "normalize_empirical" => self.normalize_empirical = parse_value(value)?,
            "linearize_along" => self.linearize_along = value.parse()?,
            "initial_error_policy" => {
                self.initial_error_policy = value.parse().map_err(|e: drmhe::Error| e.to_string())?
            }
            "cache_gains" => self.cache_gains = parse_value(value)?,
            "cache_threshold" => self.cache_threshold = parse_value(value)?,
            "x0" => {
                let v: Vec<f64> = parse_list(value)?;
                self.x0 = v
                    .try_into()
                    .map_err(|_| "x0 needs exactly two comma-separated values".to_string())?;
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(BenchError::Invalid(message));
        if self.n_train + self.n_test > self.n_total {
            return fail(format!(
                "N_train + N_test = {} exceeds N_total = {}",
                self.n_train + self.n_test,
                self.n_total
            ));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return fail("N_train and N_test must be positive".into());
        }
        if self.eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return fail(format!("eps values must be finite and >= 0, got {:?}", self.eps));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if self.smoothing == 0 || self.forecast == 0 {
            return fail("T_s and T_f must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if self.x0.iter().any(|x| !x.is_finite()) {
            return fail("x0 must be finite".into());
        }
        let steps = drmhe::plant_sim::step_count(self.duration, self.dt)?;
        if steps < self.smoothing + self.forecast {
            return fail(format!(
                "duration covers {steps} steps, fewer than one window ({})",
                self.smoothing + self.forecast
            ));
        }
        Ok(())
    }

    /// Number of Euler steps in one realization.
    pub fn steps(&self) -> Result<usize> {
        Ok(drmhe::plant_sim::step_count(self.duration, self.dt)?)
    }

    /// The same configuration with a single seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        BenchConfig {
            seeds: vec![seed],
            ..self.clone()
        }
    }

    /// Renders every key; parsing the output yields the same configuration.
    pub fn to_text(&self) -> String {
        let join = |items: Vec<String>| items.join(", ");
        let policy = match self.initial_error_policy {
            InitialErrorPolicy::Zeros => "zeros",
            InitialErrorPolicy::DisturbanceLike => "disturbance-like",
        };
        let along = match self.linearize_along {
            LinearizeAlong::Estimate => "estimate",
            LinearizeAlong::Truth => "truth",
        };
        [
            format!("profile = {}", self.profile),
            format!("T_s = {}", self.smoothing),
            format!("T_f = {}", self.forecast),
            format!("dt = {}", self.dt),
            format!("duration = {}", self.duration),
            format!("N_total = {}", self.n_total),
            format!("N_train = {}", self.n_train),
            format!("N_test = {}", self.n_test),
            format!("eps = {}", join(self.eps.iter().map(|e| e.to_string()).collect())),
            format!("seeds = {}", join(self.seeds.iter().map(|s| s.to_string()).collect())),
            format!("output_dir = {}", self.output_dir.display()),
            format!("normalize_empirical = {}", self.normalize_empirical),
            format!("linearize_along = {along}"),
            format!("initial_error_policy = {policy}"),
            format!("cache_gains = {}", self.cache_gains),
            format!("cache_threshold = {}", self.cache_threshold),
            format!("x0 = {}, {}", self.x0[0], self.x0[1]),
        ]
        .join("\n")
            + "\n"
    }
}
