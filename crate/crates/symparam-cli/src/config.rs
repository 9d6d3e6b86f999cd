//! Experiment configuration: one TOML document drives every subcommand.
//!
//! Unknown keys are rejected, and `validate` runs before any training so a
//! bad config never produces partial artifacts.

use serde::{Deserialize, Serialize};
use std::path::Path;

use symparam_core::adam::AdamParams;
use symparam_core::sym::{Concentration, SymParameter};
use symparam_core::toy::SamplingScheme;
use symparam_core::train::{Mode, TrainConfig};
use symparam_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub train_n: usize,
    pub eval_n: usize,
    /// "uniform_grid" or "uniform_random".
    pub sampling: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub x_points: usize,
    pub y_points: usize,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// "sym", "hyper" or "s_in".
    pub mode: String,
    pub width: usize,
    pub batch_size: usize,
    pub alpha: Vec<f64>,
    /// Piecewise-constant schedule: [epochs, learning rate] segments.
    pub epoch_schedule: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixed_weights: Option<Vec<f64>>,
    pub weight_grid: Vec<Vec<f64>>,
    pub sweep_widths: Vec<usize>,
    pub dirichlet_draws: usize,
    pub dataset: DatasetConfig,
    pub landscape: LandscapeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            mode: "sym".into(),
            width: 64,
            batch_size: 16,
            alpha: vec![0.5, 0.5],
            epoch_schedule: vec![(200, 0.01), (200, 0.001), (100, 0.0001)],
            fixed_weights: None,
            weight_grid: vec![
                vec![1.0, 0.0],
                vec![0.75, 0.25],
                vec![0.5, 0.5],
                vec![0.25, 0.75],
                vec![0.0, 1.0],
            ],
            sweep_widths: vec![8, 16, 64],
            dirichlet_draws: 100_000,
            dataset: DatasetConfig {
                train_n: 1024,
                eval_n: 256,
                sampling: "uniform_random".into(),
            },
            landscape: LandscapeConfig {
                x_points: 201,
                y_points: 201,
                s: vec![0.5, 0.5],
            },
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, toml::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn mode(&self) -> Result<Mode> {
        parse_mode(&self.mode)
    }

    pub fn sampling(&self) -> Result<SamplingScheme> {
        match self.dataset.sampling.as_str() {
            "uniform_grid" => Ok(SamplingScheme::UniformGrid),
            "uniform_random" => Ok(SamplingScheme::UniformRandom),
            other => Err(Error::Usage(format!("unknown sampling scheme '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config()?;
        self.sampling()?;
        if self.width == 0 {
            return Err(Error::Usage("width must be >= 1".into()));
        }
        if self.dataset.train_n < 2 || self.dataset.eval_n < 2 {
            return Err(Error::Usage("dataset sizes must be >= 2".into()));
        }
        if self.landscape.x_points < 2 || self.landscape.y_points < 2 {
            return Err(Error::Usage("landscape grids need >= 2 points per axis".into()));
        }
        for s in &self.landscape.s {
            if !s.is_finite() {
                return Err(Error::Usage("landscape s entries must be finite".into()));
            }
        }
        for row in &self.weight_grid {
            SymParameter::new(row)?;
        }
        if self.weight_grid.is_empty() {
            return Err(Error::Usage("weight_grid must be nonempty".into()));
        }
        Ok(())
    }

    /// Lower the document into the trainer's configuration (validating the
    /// mode/weights/alpha combination on the way).
    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            batch_size: self.batch_size,
            epoch_schedule: self.epoch_schedule.clone(),
            adam: AdamParams::default(),
            alpha: Concentration::new(&self.alpha)?,
            seed: self.seed,
            mode: self.mode()?,
            fixed_weights: match &self.fixed_weights {
                Some(w) => Some(SymParameter::new(w)?),
                None => None,
            },
        };
        cfg.validate(self.alpha.len())?;
        Ok(cfg)
    }

    pub fn weight_grid(&self) -> Result<Vec<SymParameter>> {
        self.weight_grid.iter().map(|w| SymParameter::new(w)).collect()
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "sym" => Ok(Mode::Sym),
        "hyper" => Ok(Mode::Hyper),
        "s_in" => Ok(Mode::SIn),
        other => Err(Error::Usage(format!(
            "unknown mode '{other}' (expected sym, hyper or s_in)"
        ))),
    }
}
