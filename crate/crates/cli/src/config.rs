use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use tactile_core::classifier::{ModelConfig, TrainConfig};
use tactile_core::datastore::SplitSpec;
use tactile_core::fabricsim::{
    make_fabric_bank_with, AmbientNoiseSpec, FabricBankRanges, FabricProfile, SynthConfig, DEFAULT_BANK_SIZE,
};
use tactile_core::features::FeatureConfig;
use tactile_core::motion::{AttachmentGeometry, PlannerConfig};
use tactile_core::protocol::{ProtocolSpec, SensorHeadSpec};
use tactile_core::synth::SynthPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FabricBankConfig {
    pub count: usize,
    pub seed: u64,
    pub ranges: FabricBankRanges,
    /// Explicit profiles; when present, `count`, `seed` and `ranges` are unused.
    pub profiles: Option<Vec<FabricProfile>>,
}

impl Default for FabricBankConfig {
    fn default() -> Self {
        FabricBankConfig {
            count: DEFAULT_BANK_SIZE,
            seed: 0,
            ranges: FabricBankRanges::default(),
            profiles: None,
        }
    }
}

impl FabricBankConfig {
    pub fn profiles(&self) -> Vec<FabricProfile> {
        match &self.profiles {
            Some(p) => p.clone(),
            None => make_fabric_bank_with(self.count, self.seed, &self.ranges),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// One file, one section per module. Every field has a default, so an empty
/// file is the default experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Synthesis seed; session seeds derive from it.
    pub seed: u64,
    pub protocol: ProtocolSpec,
    pub sensor_head: SensorHeadSpec,
    pub geometry: AttachmentGeometry,
    pub planner: PlannerConfig,
    pub ambient: AmbientNoiseSpec,
    pub synthesis: SynthConfig,
    pub fabric_bank: FabricBankConfig,
    pub feature: FeatureConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub paths: Paths,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ExperimentConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// `--seed` replaces every seed in the experiment.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.model.seed = seed;
        self.train.seed = seed;
        self.split.seed = seed;
    }

    pub fn synth_plan(&self) -> Result<SynthPlan> {
        let problems = self.protocol.validate();
        if !problems.is_empty() {
            bail!(tactile_core::Error::Validation {
                what: "protocol",
                violations: problems
            });
        }
        Ok(SynthPlan {
            protocol: self.protocol.clone(),
            sensor_head: self.sensor_head.clone(),
            geometry: self.geometry.clone(),
            planner: self.planner.clone(),
            ambient: self.ambient.clone(),
            synth: self.synthesis.clone(),
            bank: self.fabric_bank.profiles(),
            seed: self.seed,
        })
    }
}

/// `n` entries spread evenly over `values`, always including the last.
pub fn spread<T: Clone>(values: &[T], n: usize) -> Result<Vec<T>> {
    if n == 0 || n > values.len() {
        bail!("cannot pick {n} of {} values", values.len());
    }
    if n == 1 {
        return Ok(vec![values[values.len() - 1].clone()]);
    }
    let last = values.len() - 1;
    Ok((0..n)
        .map(|i| values[(i * last + (n - 1) / 2) / (n - 1)].clone())
        .collect())
}
