use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use qrpolicy_core::envs::{ChoiceConfig, CounterConfig, RpsActionSpace, TraineeConfig};
use qrpolicy_core::quantfit::BENCHMARK_LRS;
use qrpolicy_core::{Architecture, DistributionSpec, QrdrlHyper};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fitbench,
    Rps,
    Choice,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fitbench => "fitbench",
            Experiment::Rps => "rps",
            Experiment::Choice => "choice",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "fitbench" => Ok(Experiment::Fitbench),
            "rps" => Ok(Experiment::Rps),
            "choice" => Ok(Experiment::Choice),
            other => bail!("unknown experiment '{other}' (expected fitbench, rps or choice)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Paper,
    #[default]
    Desk,
}

impl FromStr for Scale {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => bail!("unknown scale '{other}' (expected paper or desk)"),
        }
    }
}

/// Divisors applied to the paper-scale step counts at desk scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeskFactors {
    pub rps_counter_games: f64,
    pub rps_iterations: f64,
    pub choice_steps: f64,
}

impl Default for DeskFactors {
    fn default() -> Self {
        Self {
            rps_counter_games: 5.0,
            rps_iterations: 5.0,
            choice_steps: 10.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitbenchConfig {
    pub architectures: Vec<Architecture>,
    pub distributions: Vec<DistributionSpec>,
    pub lrs: Vec<f64>,
    pub batches: usize,
    pub batch_size: usize,
    /// Groups of the max-min architecture (96 units).
    pub maxmin_groups: usize,
    /// Quantile levels in the predictions table.
    pub prediction_points: usize,
}

impl Default for FitbenchConfig {
    fn default() -> Self {
        Self {
            architectures: Architecture::ALL.to_vec(),
            distributions: vec![
                DistributionSpec::Gaussian,
                DistributionSpec::BimodalGaussian,
                DistributionSpec::DiscontinuousUniform,
            ],
            lrs: BENCHMARK_LRS.to_vec(),
            batches: 10_000,
            batch_size: 128,
            maxmin_groups: 12,
            prediction_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpsSettings {
    pub space: RpsActionSpace,
    /// Counter settings at paper scale; `games` is divided at desk scale.
    pub counter: CounterConfig,
    pub trainee: TraineeConfig,
    /// Paper-scale iteration count.
    pub iterations: usize,
    pub quantile_width: usize,
    pub gaussian_hidden: usize,
    /// Moving-average window of the reported return.
    pub smoothing: usize,
    /// Trailing iterations averaged into the final return.
    pub final_window: usize,
    /// Samples drawn from each final policy for its histogram.
    pub histogram_samples: usize,
}

impl Default for RpsSettings {
    fn default() -> Self {
        Self {
            space: RpsActionSpace::default(),
            counter: CounterConfig::default(),
            trainee: TraineeConfig::default(),
            iterations: 1000,
            quantile_width: 64,
            gaussian_hidden: 64,
            smoothing: 10,
            final_window: 20,
            histogram_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChoiceSettings {
    pub env: ChoiceConfig,
    /// Paper-scale environment steps.
    pub steps: usize,
    /// PPO surrogate clip range.
    pub clip: f64,
    pub histogram_samples: usize,
}

impl Default for ChoiceSettings {
    fn default() -> Self {
        Self {
            env: ChoiceConfig::default(),
            steps: 1_000_000,
            clip: 0.2,
            histogram_samples: 10_000,
        }
    }
}

/// Everything that determines an experiment's outputs, plus where to write
/// them. Loaded from JSON; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub scale: Scale,
    pub desk: DeskFactors,
    pub hyper: QrdrlHyper,
    pub fitbench: FitbenchConfig,
    pub rps: RpsSettings,
    pub choice: ChoiceSettings,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Fitbench,
            seeds: (0..20).collect(),
            scale: Scale::Desk,
            desk: DeskFactors::default(),
            hyper: QrdrlHyper::default(),
            fitbench: FitbenchConfig::default(),
            rps: RpsSettings::default(),
            choice: ChoiceSettings::default(),
            out: PathBuf::from("results"),
        }
    }
}

fn scaled(count: usize, scale: Scale, factor: f64) -> usize {
    match scale {
        Scale::Paper => count,
        Scale::Desk => ((count as f64 / factor).ceil() as usize).max(1),
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    pub fn from_json_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        let d = &self.desk;
        if [d.rps_counter_games, d.rps_iterations, d.choice_steps].iter().any(|&f| !(f >= 1.0)) {
            bail!("desk scale factors must be at least 1");
        }
        self.hyper.validate()?;
        self.rps.space.validate()?;
        self.choice.env.validate()?;
        if !(self.choice.clip > 0.0 && self.choice.clip < 1.0) {
            bail!("clip ratio must lie in (0, 1)");
        }
        if self.fitbench.lrs.is_empty() || self.fitbench.architectures.is_empty() || self.fitbench.distributions.is_empty() {
            bail!("fitbench needs at least one architecture, distribution and learning rate");
        }
        Ok(())
    }

    pub fn rps_iterations(&self) -> usize {
        scaled(self.rps.iterations, self.scale, self.desk.rps_iterations)
    }

    pub fn rps_counter(&self) -> CounterConfig {
        CounterConfig {
            games: scaled(self.rps.counter.games, self.scale, self.desk.rps_counter_games),
            ..self.rps.counter.clone()
        }
    }

    pub fn choice_steps(&self) -> usize {
        scaled(self.choice.steps, self.scale, self.desk.choice_steps)
    }

    /// SHA-256 of the canonical JSON of everything except the output path.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_scale_matches_published_budget_cuts() {
        let cfg = ExperimentConfig::new(Experiment::Rps);
        assert_eq!(cfg.rps_iterations(), 200);
        assert_eq!(cfg.rps_counter().games, 2000);
        assert_eq!(cfg.choice_steps(), 300_000);
        let paper = ExperimentConfig {
            scale: Scale::Paper,
            ..cfg
        };
        assert_eq!(paper.rps_counter().games, 10_000);
        assert_eq!(paper.choice_steps(), 1_000_000);
    }

    #[test]
    fn partial_json_fills_defaults_and_hash_ignores_out_dir() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"experiment": "choice", "seeds": [3], "choice": {"clip": 0.1}}"#).unwrap();
        assert_eq!(cfg.experiment, Experiment::Choice);
        assert_eq!(cfg.choice.clip, 0.1);
        assert_eq!(cfg.choice.env.len, 8);
        let moved = ExperimentConfig {
            out: PathBuf::from("/elsewhere"),
            ..cfg.clone()
        };
        assert_eq!(cfg.hash(), moved.hash());
        assert_ne!(cfg.hash(), ExperimentConfig::new(Experiment::Choice).hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ExperimentConfig::new(Experiment::Choice);
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(Experiment::Choice);
        cfg.desk.choice_steps = 0.5;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::new(Experiment::Rps).validate().is_ok());
    }
}
