//! Experiment configuration, read from a sectioned `key = value` (TOML) file.
//!
//! ```toml
//! seed = 7
//! output = "out"
//!
//! [data]
//! prices = "prices.csv"
//! indices = "indices.csv"
//! risk_free = "riskfree.csv"
//!
//! [experiment]
//! alpha = 1.0
//! n_min = 2
//! n_max = 8
//!
//! [sa]
//! steps = 5000
//! restarts = 20
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{DEFAULT_CLIP_THRESHOLD, DEFAULT_FLOOR, DEFAULT_REQUIRED_DAYS};
use crate::qubo::{BuildMode, DEFAULT_MULTIPLIER};
use crate::scoring::DEFAULT_ALPHA;
use crate::solvers::DEFAULT_BRUTE_CAP;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[serde(default)]
    pub workers: usize,
    pub data: DataConfig,
    #[serde(default)]
    pub experiment: Params,
    #[serde(default)]
    pub random: RandomConfig,
    #[serde(default)]
    pub sa: SaSection,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub brute: BruteSection,
    #[serde(default)]
    pub stars: StarSection,
    #[serde(default)]
    pub landscape: LandscapeSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub prices: PathBuf,
    pub indices: PathBuf,
    pub risk_free: PathBuf,
    /// Per-index weights of the composite market; equal when absent.
    #[serde(default)]
    pub index_weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub alpha: f64,
    pub multiplier: f64,
    pub floor: f64,
    pub clip_threshold: f64,
    pub required_days: usize,
    pub n_min: usize,
    /// Upper portfolio size; 0 means the whole filtered universe.
    pub n_max: usize,
    pub mode: BuildMode,
    pub scale: bool,
    pub tanh_tau: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            alpha: DEFAULT_ALPHA,
            multiplier: DEFAULT_MULTIPLIER,
            floor: DEFAULT_FLOOR,
            clip_threshold: DEFAULT_CLIP_THRESHOLD,
            required_days: DEFAULT_REQUIRED_DAYS,
            n_min: 2,
            n_max: 0,
            mode: BuildMode::ExactAlpha0,
            scale: true,
            tanh_tau: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomConfig {
    pub samples: u64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { samples: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaSection {
    pub steps: u64,
    pub restarts: u64,
    /// Derived from the QUBO's flip deltas when absent.
    pub initial_temp: Option<f64>,
    pub cooling_rate: Option<f64>,
}

impl Default for SaSection {
    fn default() -> Self {
        SaSection {
            steps: 5000,
            restarts: 20,
            initial_temp: None,
            cooling_rate: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub population: usize,
    pub generations: usize,
    pub elitism_prob: f64,
    pub mutation_prob: Option<f64>,
    pub tournament: usize,
}

impl Default for GaSection {
    fn default() -> Self {
        GaSection {
            population: 256,
            generations: 200,
            elitism_prob: 0.1,
            mutation_prob: None,
            tournament: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BruteSection {
    pub enabled: bool,
    pub cap: usize,
}

impl Default for BruteSection {
    fn default() -> Self {
        BruteSection {
            enabled: true,
            cap: DEFAULT_BRUTE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StarSection {
    /// Best/worst pool size; a quarter of the pool when absent.
    pub k: Option<usize>,
    pub extras: usize,
    pub max_masks: usize,
    pub dog_cutoff: f64,
}

impl Default for StarSection {
    fn default() -> Self {
        StarSection {
            k: None,
            extras: 1,
            max_masks: 32,
            dog_cutoff: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeSection {
    pub enabled: bool,
    /// Universes up to this size are enumerated; larger ones are sampled.
    pub exhaustive_max: usize,
    pub samples: u64,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        LandscapeSection {
            enabled: true,
            exhaustive_max: 12,
            samples: 20_000,
        }
    }
}

impl ExperimentConfig {
    pub fn new(data: DataConfig) -> Self {
        ExperimentConfig {
            seed: 0,
            output: default_output(),
            workers: 0,
            data,
            experiment: Params::default(),
            random: RandomConfig::default(),
            sa: SaSection::default(),
            ga: GaSection::default(),
            brute: BruteSection::default(),
            stars: StarSection::default(),
            landscape: LandscapeSection::default(),
        }
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.output,
            &mut self.data.prices,
            &mut self.data.indices,
            &mut self.data.risk_free,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Checks everything that can be checked before data is loaded.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.n_min < 2 {
            return Err(Error::Config(format!("n_min {} must be at least 2", e.n_min)));
        }
        if e.n_max != 0 && e.n_max < e.n_min {
            return Err(Error::Config(format!("n_max {} is below n_min {}", e.n_max, e.n_min)));
        }
        for path in [&self.data.prices, &self.data.indices, &self.data.risk_free] {
            if !path.is_file() {
                return Err(Error::Config(format!("data file {} does not exist", path.display())));
            }
        }
        if self.random.samples == 0 {
            return Err(Error::Config("random.samples must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_with_defaults() {
        let text = r#"
            seed = 11
            [data]
            prices = "p.csv"
            indices = "i.csv"
            risk_free = "/abs/r.csv"
            [experiment]
            alpha = 0.5
            n_max = 6
            mode = "paper"
            [sa]
            restarts = 4
        "#;
        let cfg = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.data.prices, PathBuf::from("/base/p.csv"));
        assert_eq!(cfg.data.risk_free, PathBuf::from("/abs/r.csv"));
        assert_eq!(cfg.output, PathBuf::from("/base/out"));
        assert_eq!(cfg.experiment.mode, BuildMode::Paper);
        assert_eq!(cfg.experiment.required_days, 253);
        assert_eq!(cfg.sa.restarts, 4);
        assert_eq!(cfg.sa.steps, 5000);
        assert_eq!(cfg.ga.population, 256);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = "[data]\nprices='a'\nindices='b'\nrisk_free='c'\nbogus=1\n";
        assert!(matches!(ExperimentConfig::parse(text, Path::new(".")), Err(Error::Config(_))));
    }
}
