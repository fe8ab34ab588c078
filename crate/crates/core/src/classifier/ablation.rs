//! Modality × motion-label ablation over a stored dataset.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::input::ModelInput;
use super::model::{build_model, InputShapes};
use super::train::{evaluate, train};
use super::{ModelConfig, TrainConfig};
use crate::datastore::{self, DatasetManifest, SessionEntry, SplitSpec};
use crate::features::{assemble_example, FeatureConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Audio,
    Accel,
    Both,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Audio, Modality::Accel, Modality::Both];

    pub fn title(self) -> &'static str {
        match self {
            Modality::Audio => "Audio",
            Modality::Accel => "Acceleration",
            Modality::Both => "Audio&Acceleration",
        }
    }

    pub fn uses_audio(self) -> bool {
        matches!(self, Modality::Audio | Modality::Both)
    }

    pub fn uses_accel(self) -> bool {
        matches!(self, Modality::Accel | Modality::Both)
    }
}

/// Cell order: with motion first, modalities left to right.
pub fn cells() -> Vec<(bool, Modality)> {
    [true, false]
        .into_iter()
        .flat_map(|m| Modality::ALL.map(|x| (m, x)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub motion: bool,
    pub modality: Modality,
    pub model_seed: u64,
    pub train_seed: u64,
    pub accuracy: f64,
    pub correct: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    /// Hash of the cell's effective feature, model, train and split config.
    pub config_fingerprint: String,
    /// Hash of the ordered list of session ids the cell was evaluated on.
    pub test_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
    pub num_classes: usize,
    pub train_sessions: usize,
    pub test_sessions: Vec<String>,
    pub manifest_fingerprint: String,
    pub config_fingerprint: String,
}

impl AblationReport {
    pub fn cell(&self, motion: bool, modality: Modality) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.motion == motion && c.modality == modality)
    }

    /// Accuracy of one cell; NaN if the cell is missing.
    pub fn accuracy(&self, motion: bool, modality: Modality) -> f64 {
        self.cell(motion, modality).map_or(f64::NAN, |c| c.accuracy)
    }

    /// Two-row text table: columns Audio, Acceleration, Audio&Acceleration.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12}| {} | {} | {}", "", Modality::Audio.title(), Modality::Accel.title(), Modality::Both.title());
        for (motion, label) in [(true, "with Motion"), (false, "no Motion")] {
            let acc = |m: Modality| format!("{:.2}", self.accuracy(motion, m));
            let _ = writeln!(
                s,
                "{:<12}| {:>5} | {:>12} | {:>18}",
                label,
                acc(Modality::Audio),
                acc(Modality::Accel),
                acc(Modality::Both)
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// SHA-256 hex digest of a value's JSON encoding.
pub fn fingerprint<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("fingerprinted value serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Read sessions and turn them into model inputs (keyed by session id).
/// Labels are manifest item indices.
pub fn load_inputs(
    root: &Path,
    manifest: &DatasetManifest,
    entries: &[SessionEntry],
    features: &FeatureConfig,
    model: &ModelConfig,
) -> Result<Vec<ModelInput>> {
    entries
        .par_iter()
        .map(|e| {
            let label = manifest
                .item_index(&e.clothing_id)
                .ok_or_else(|| Error::UnknownItem(e.clothing_id.clone()))?;
            let rec = datastore::read_session(root, e)?;
            let ft = assemble_example(&rec, features, &manifest.protocol, label)?;
            Ok(ModelInput::from_features(&ft, &model.audio_input, &model.accel_input, e.id()))
        })
        .collect()
}

#[derive(Serialize)]
struct CellConfig<'a> {
    features: &'a FeatureConfig,
    model: &'a ModelConfig,
    train: &'a TrainConfig,
    split: &'a SplitSpec,
}

/// Train and evaluate all six grid cells on one split.
pub fn run_ablation(
    root: &Path,
    split: &SplitSpec,
    features: &FeatureConfig,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<AblationReport> {
    run_ablation_with_progress(root, split, features, model, train_cfg, &|_| {})
}

pub fn run_ablation_with_progress(
    root: &Path,
    split: &SplitSpec,
    features: &FeatureConfig,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<AblationReport> {
    let report = datastore::verify_dataset(root);
    if !report.is_clean() {
        let f = &report.findings[0];
        return Err(Error::Corruption {
            path: root.to_path_buf(),
            reason: format!(
                "dataset failed verification with {} finding(s), first: {:?} {}: {}",
                report.findings.len(),
                f.kind,
                f.subject,
                f.detail
            ),
        });
    }
    let manifest = datastore::load_manifest(root)?;
    let (train_entries, test_entries) = datastore::split_dataset(&manifest, split)?;

    // Features are extracted once with every modality on; cells mask them.
    let full = FeatureConfig {
        use_audio: true,
        use_accel: true,
        use_motion: true,
        ..features.clone()
    };
    let base_model = ModelConfig {
        num_classes: manifest.clothing_items.len(),
        ..model.clone()
    };
    progress(&format!(
        "extracting features for {} train / {} test sessions",
        train_entries.len(),
        test_entries.len()
    ));
    let train_all = load_inputs(root, &manifest, &train_entries, &full, &base_model)?;
    let test_all = load_inputs(root, &manifest, &test_entries, &full, &base_model)?;
    let test_ids: Vec<String> = test_entries.iter().map(SessionEntry::id).collect();

    let cells: Vec<AblationCell> = cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, (motion, modality))| {
            let (a, c) = (modality.uses_audio(), modality.uses_accel());
            let train_set: Vec<ModelInput> = train_all.iter().map(|m| m.restricted(a, c, motion)).collect();
            let test_set: Vec<ModelInput> = test_all.iter().map(|m| m.restricted(a, c, motion)).collect();
            let mcfg = ModelConfig {
                seed: base_model.seed.wrapping_add(i as u64),
                ..base_model.clone()
            };
            let tcfg = TrainConfig {
                seed: train_cfg.seed.wrapping_add(i as u64),
                ..train_cfg.clone()
            };
            let fcfg = FeatureConfig {
                use_audio: a,
                use_accel: c,
                use_motion: motion,
                ..features.clone()
            };
            let first = train_set.first().ok_or(Error::Empty("training split"))?;
            let m = build_model(&mcfg, InputShapes::of(first))?;
            let trained = train(m, &train_set, &tcfg)?;
            let eval = evaluate(&trained.model, &test_set)?;
            let label = if motion { "with Motion" } else { "no Motion" };
            progress(&format!("{label} / {}: {:.2}%", modality.title(), eval.accuracy));
            Ok(AblationCell {
                motion,
                modality,
                model_seed: mcfg.seed,
                train_seed: tcfg.seed,
                accuracy: eval.accuracy,
                correct: eval.correct,
                train_count: train_set.len(),
                test_count: test_set.len(),
                initial_loss: trained.initial_loss,
                final_loss: trained.final_loss(),
                loss_history: trained.loss_history.clone(),
                config_fingerprint: fingerprint(&CellConfig {
                    features: &fcfg,
                    model: &mcfg,
                    train: &tcfg,
                    split,
                }),
                test_fingerprint: fingerprint(&test_set.iter().map(|m| m.key.as_str()).collect::<Vec<_>>()),
            })
        })
        .collect::<Result<_>>()?;

    Ok(AblationReport {
        cells,
        num_classes: base_model.num_classes,
        train_sessions: train_entries.len(),
        test_sessions: test_ids,
        manifest_fingerprint: fingerprint(&manifest),
        config_fingerprint: fingerprint(&CellConfig {
            features,
            model,
            train: train_cfg,
            split,
        }),
    })
}
