use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use tactile_core::classifier::ablation::{fingerprint, load_inputs, run_ablation_with_progress};
use tactile_core::classifier::{self, build_model, ClassifierModel, InputShapes};
use tactile_core::datastore::{self, write_tensor, SplitSpec, StreamKind, MANIFEST_FILE};
use tactile_core::dsp;
use tactile_core::features::{self, assemble_example, dominant_frequency, plateau_audio_power, FeatureConfig};
use tactile_core::synth::synthesize_dataset;

use crate::config::{spread, ExperimentConfig};
use crate::Common;

/// A request the tool declines to carry out (exit code 2).
#[derive(Debug)]
pub struct Refusal(pub String);

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Refusal {}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Use only the first N fabric-bank items.
    #[arg(long)]
    pub items: Option<usize>,
    /// Repetitions per condition.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Use N of the configured speeds, spread evenly (fastest first kept).
    #[arg(long)]
    pub speeds: Option<usize>,
    /// Number of evenly spaced sweep directions.
    #[arg(long)]
    pub dirs: Option<usize>,
    /// Use N of the configured forces, spread evenly.
    #[arg(long)]
    pub forces: Option<usize>,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn out_path(common: &Common, cfg: &ExperimentConfig, what: &str) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| cfg.paths.output.clone())
        .ok_or_else(|| anyhow!(Refusal(format!("{what} needs --out <path>"))))
}

/// Make `dir` ready to receive fresh output. A nonempty directory is only
/// cleared with `--force`, and only if it looks like one of ours.
fn prepare_output_dir(dir: &Path, force: bool, marker: &str) -> Result<()> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_some();
        if nonempty {
            if !force {
                bail!(Refusal(format!(
                    "{} is not empty; pass --force to overwrite",
                    dir.display()
                )));
            }
            if !dir.join(marker).exists() {
                bail!(Refusal(format!(
                    "{} is not empty and has no {marker}; refusing to delete it",
                    dir.display()
                )));
            }
            fs::remove_dir_all(dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

pub fn synth(common: &Common, args: &SynthArgs) -> Result<ExitCode> {
    let mut cfg = load_config(common)?;
    let root = out_path(common, &cfg, "synth")?;
    let p = &mut cfg.protocol;
    if let Some(n) = args.dirs {
        p.direction_count = n;
    }
    if let Some(n) = args.speeds {
        p.speeds = spread(&p.speeds, n).context("--speeds")?;
    }
    if let Some(n) = args.forces {
        p.forces = spread(&p.forces, n).context("--forces")?;
    }
    if let Some(n) = args.reps {
        p.repetitions_per_condition = n;
    }
    let mut plan = cfg.synth_plan()?;
    if let Some(n) = args.items {
        if n == 0 || n > plan.bank.len() {
            bail!("--items {n}: the bank has {} items", plan.bank.len());
        }
        plan.bank.truncate(n);
    }
    prepare_output_dir(&root, common.force, MANIFEST_FILE)?;
    let total = plan.bank.len() * plan.protocol.condition_count();
    eprintln!("synthesizing {total} sessions into {}", root.display());
    let step = (total / 20).max(1);
    let summary = synthesize_dataset(&root, &plan, &|done, total| {
        if done % step < 64 || done == total {
            eprintln!("  {done}/{total}");
        }
    })?;
    println!(
        "items: {}  sessions: {}  bytes: {}",
        summary.items, summary.sessions, summary.bytes
    );
    Ok(ExitCode::SUCCESS)
}

pub fn verify(root: &Path) -> Result<ExitCode> {
    let report = datastore::verify_dataset(root);
    for f in &report.findings {
        eprintln!("{:?}: {}: {}", f.kind, f.subject, f.detail);
    }
    println!(
        "sessions: {}  files: {}  findings: {}",
        report.sessions_checked,
        report.files_checked,
        report.findings.len()
    );
    Ok(if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

#[derive(Serialize)]
struct FeatureIndexEntry {
    session: String,
    label: usize,
    audio: Option<[usize; 2]>,
    accel: Option<[usize; 3]>,
    motion: Option<usize>,
}

pub fn features(common: &Common, root: &Path) -> Result<ExitCode> {
    let cfg = load_config(common)?;
    let out = out_path(common, &cfg, "features")?;
    let manifest = datastore::load_manifest(root)?;
    prepare_output_dir(&out, common.force, "index.json")?;
    let mut index = Vec::with_capacity(manifest.sessions.len());
    for entry in &manifest.sessions {
        let label = manifest
            .item_index(&entry.clothing_id)
            .ok_or_else(|| tactile_core::Error::UnknownItem(entry.clothing_id.clone()))?;
        let rec = datastore::read_session(root, entry)?;
        let ft = assemble_example(&rec, &cfg.feature, &manifest.protocol, label)?;
        let dir = out.join(entry.relative_dir());
        fs::create_dir_all(&dir)?;
        let mut item = FeatureIndexEntry {
            session: entry.id(),
            label,
            audio: None,
            accel: None,
            motion: None,
        };
        if let Some(s) = &ft.audio_spec {
            write_tensor(&dir.join("audio_spec.f32"), &[s.frames, s.bins], &to_f32(&s.data))?;
            item.audio = Some([s.frames, s.bins]);
        }
        if let Some(a) = &ft.accel_spec {
            let data: Vec<f64> = a.axes.iter().flat_map(|s| s.data.iter().copied()).collect();
            write_tensor(&dir.join("accel_spec.f32"), &[3, a.frames(), a.bins()], &to_f32(&data))?;
            item.accel = Some([3, a.frames(), a.bins()]);
        }
        if let Some(m) = &ft.motion_vec {
            write_tensor(&dir.join("motion.f32"), &[m.len()], &to_f32(m))?;
            item.motion = Some(m.len());
        }
        index.push(item);
    }
    fs::write(out.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    println!("sessions: {}  written to {}", index.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

/// What `train` saves and `eval` reads back.
#[derive(Serialize, Deserialize)]
struct SavedModel {
    feature: FeatureConfig,
    split: SplitSpec,
    model: ClassifierModel,
    initial_loss: f64,
    loss_history: Vec<f64>,
}

const MODEL_FILE: &str = "model.json";

pub fn train(common: &Common, root: &Path) -> Result<ExitCode> {
    let cfg = load_config(common)?;
    let out = out_path(common, &cfg, "train")?;
    let manifest = datastore::load_manifest(root)?;
    let (train_entries, _) = datastore::split_dataset(&manifest, &cfg.split)?;
    let model_cfg = classifier::ModelConfig {
        num_classes: manifest.clothing_items.len(),
        ..cfg.model.clone()
    };
    eprintln!("extracting features for {} sessions", train_entries.len());
    let set = load_inputs(root, &manifest, &train_entries, &cfg.feature, &model_cfg)?;
    let first = set.first().ok_or_else(|| anyhow!("training split is empty"))?;
    let model = build_model(&model_cfg, InputShapes::of(first))?;
    eprintln!("training {} parameters", model.parameter_count());
    let trained = classifier::train(model, &set, &cfg.train)?;
    prepare_output_dir(&out, common.force, MODEL_FILE)?;
    let weights = out.join("weights");
    fs::create_dir_all(&weights)?;
    for (i, p) in trained.model.parameters().iter().enumerate() {
        write_tensor(&weights.join(format!("param_{i:02}.f32")), &[p.len()], &to_f32(p))?;
    }
    let saved = SavedModel {
        feature: cfg.feature.clone(),
        split: cfg.split.clone(),
        initial_loss: trained.initial_loss,
        loss_history: trained.loss_history.clone(),
        model: trained.model,
    };
    fs::write(out.join(MODEL_FILE), serde_json::to_string(&saved)?)?;
    println!(
        "initial loss: {:.4}  final loss: {:.4}  epochs: {}",
        saved.initial_loss,
        saved.loss_history.last().copied().unwrap_or(f64::NAN),
        saved.loss_history.len()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn eval(common: &Common, root: &Path, model_dir: &Path) -> Result<ExitCode> {
    let path = model_dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let saved: SavedModel = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let manifest = datastore::load_manifest(root)?;
    let (_, test_entries) = datastore::split_dataset(&manifest, &saved.split)?;
    let set = load_inputs(root, &manifest, &test_entries, &saved.feature, &saved.model.config)?;
    let result = classifier::evaluate(&saved.model, &set)?;
    println!("accuracy: {:.2}% ({}/{})", result.accuracy, result.correct, result.total);
    println!("confusion (rows: true, columns: predicted):");
    for row in &result.confusion {
        println!("{}", row.iter().map(|v| format!("{v:>4}")).collect::<String>());
    }
    if let Some(out) = &common.out {
        fs::write(out, serde_json::to_string_pretty(&result)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AblationRecord<'a> {
    experiment_fingerprint: String,
    report: &'a classifier::AblationReport,
}

pub fn ablation(common: &Common, root: &Path) -> Result<ExitCode> {
    let cfg = load_config(common)?;
    let out = out_path(common, &cfg, "ablation")?;
    if !root.join(MANIFEST_FILE).exists() {
        bail!("no dataset at {}", root.display());
    }
    let report = run_ablation_with_progress(root, &cfg.split, &cfg.feature, &cfg.model, &cfg.train, &|msg| {
        eprintln!("  {msg}")
    })?;
    let experiment_fingerprint = fingerprint(&cfg);
    let table = report.table();
    print!("{table}");
    fs::create_dir_all(&out)?;
    fs::write(
        out.join("ablation.txt"),
        format!("{table}\nconfig fingerprint: {experiment_fingerprint}\n"),
    )?;
    fs::write(
        out.join("ablation.json"),
        serde_json::to_string_pretty(&AblationRecord {
            experiment_fingerprint,
            report: &report,
        })?,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn stats_line(name: &str, samples: usize, rate: f64, values: &[f64]) -> String {
    format!(
        "  {name:<16} {samples:>8} samples  {:>8.3} s  rms {:.6e}",
        samples as f64 / rate,
        dsp::rms(values)
    )
}

pub fn inspect(common: &Common, root: &Path, selector: &str, dump: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_config(common)?;
    let manifest = datastore::load_manifest(root)?;
    let entry = match selector.parse::<usize>() {
        Ok(i) => manifest
            .sessions
            .get(i)
            .ok_or_else(|| anyhow!("session index {i} out of range ({} sessions)", manifest.sessions.len()))?,
        Err(_) => manifest
            .find_session(selector)
            .ok_or_else(|| tactile_core::Error::UnknownSession(selector.to_string()))?,
    };
    let rec = datastore::read_session(root, entry)?;
    let head = &rec.head;
    let c = &rec.condition;
    let f64s = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();

    println!("session {}", entry.id());
    println!(
        "  direction {} ({:.1} deg)  speed {} mm/s  force {} N  repetition {}",
        c.direction_index,
        c.direction_angle.to_degrees(),
        c.speed,
        c.force,
        c.repetition
    );
    println!("  duration {:.3} s  seed {}", rec.duration(), rec.rng_seed);
    let audio_rate = f64::from(head.audio_sample_rate);
    let accel_rate = f64::from(head.accel_sample_rate);
    println!("{}", stats_line("audio_contact", rec.audio_contact.len(), audio_rate, &f64s(&rec.audio_contact)));
    println!("{}", stats_line("audio_reference", rec.audio_reference.len(), audio_rate, &f64s(&rec.audio_reference)));
    for (axis, a) in ["accel_x", "accel_y", "accel_z"].iter().zip(&rec.accel) {
        println!("{}", stats_line(axis, a.len(), accel_rate, &f64s(a)));
    }
    println!("{}", stats_line("force", rec.force.len(), f64::from(head.force_sample_rate), &f64s(&rec.force)));
    println!(
        "  {:<16} {:>8} samples",
        StreamKind::Motion.file_name(),
        rec.motion_trace.len()
    );

    match dominant_frequency(&rec, &cfg.feature)? {
        Some(f) => println!("  dominant audio frequency: {f:.1} Hz"),
        None => println!("  dominant audio frequency: none above noise floor"),
    }
    if let Some(path) = dump {
        let spec = plateau_audio_power(&rec, &cfg.feature)?;
        let log = features::to_log(&spec, cfg.feature.log_floor);
        write_tensor(path, &[log.frames, log.bins], &to_f32(&log.data))?;
        println!("  spectrogram {}x{} written to {}", log.frames, log.bins, path.display());
    }
    Ok(ExitCode::SUCCESS)
}
