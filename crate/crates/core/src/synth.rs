//! Whole-dataset synthesis: every protocol condition over every fabric.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datastore::{Dataset, DatasetManifest};
use crate::fabricsim::{synthesize_sweep_with, AmbientNoiseSpec, FabricProfile, SynthConfig};
use crate::motion::{plan_trajectory_with, AttachmentGeometry, PlannerConfig};
use crate::protocol::{enumerate_conditions, ProtocolSpec, SensorHeadSpec, SweepCondition};
use crate::{seed, Result};

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPlan {
    pub protocol: ProtocolSpec,
    pub sensor_head: SensorHeadSpec,
    pub geometry: AttachmentGeometry,
    pub planner: PlannerConfig,
    pub ambient: AmbientNoiseSpec,
    pub synth: SynthConfig,
    pub bank: Vec<FabricProfile>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub items: usize,
    pub sessions: usize,
    pub bytes: u64,
}

/// Seed of one session, a pure function of the plan seed, the item position
/// in the bank and the condition's grid position.
pub fn session_seed(plan_seed: u64, item_index: usize, condition: &SweepCondition, protocol: &ProtocolSpec) -> u64 {
    seed::derive(plan_seed, &[item_index as u64, condition.grid_index(protocol) as u64])
}

/// Sessions synthesized in parallel per batch; bounds peak memory.
const BATCH: usize = 64;

/// Synthesize all sessions into a fresh dataset at `root`. The manifest is
/// committed once, after every stream file is on disk.
pub fn synthesize_dataset(root: &Path, plan: &SynthPlan, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<SynthSummary> {
    let conditions = enumerate_conditions(&plan.protocol)?;
    let items: Vec<_> = plan.bank.iter().enumerate().map(|(i, p)| p.clothing_item(i)).collect();
    let manifest = DatasetManifest::new(plan.sensor_head.clone(), plan.protocol.clone(), items);
    let dataset = Dataset::create(root, manifest)?;

    let jobs: Vec<(usize, &SweepCondition)> = (0..plan.bank.len())
        .flat_map(|i| conditions.iter().map(move |c| (i, c)))
        .collect();
    let mut staged = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(BATCH) {
        let entries: Vec<_> = chunk
            .par_iter()
            .map(|&(i, cond)| {
                let traj = plan_trajectory_with(cond, &plan.geometry, &plan.sensor_head, &plan.planner)?;
                let s = session_seed(plan.seed, i, cond, &plan.protocol);
                let rec = synthesize_sweep_with(&plan.bank[i], &traj, &plan.sensor_head, &plan.ambient, s, &plan.synth)?;
                dataset.stage(&rec)
            })
            .collect::<Result<_>>()?;
        staged.extend(entries);
        progress(staged.len(), jobs.len());
    }
    let bytes = staged
        .iter()
        .flat_map(|e: &crate::datastore::SessionEntry| e.streams.iter().map(|(k, f)| f.expected_bytes(*k)))
        .sum();
    let sessions = staged.len();
    let mut dataset = dataset;
    dataset.commit(staged)?;
    Ok(SynthSummary {
        items: plan.bank.len(),
        sessions,
        bytes,
    })
}
