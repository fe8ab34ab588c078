//! On-disk dataset.
//!
//! Layout under a dataset root:
//!
//! ```text
//! <root>/manifest                                   JSON, single source of metadata
//! <root>/sessions/<clothing_id>/<slug>/<stream>.f32 little-endian f32, no header
//! <root>/sessions/<clothing_id>/<slug>/image.bin    optional raw grayscale patch
//! ```
//!
//! `<slug>` is `d<dir>_s<speedidx>_f<forceidx>_r<rep>`. Multi-channel streams
//! are stored channel-major (all of x, then y, then z). The motion trace is
//! seven floats per tick: t, px, py, vx, vy, force setpoint, phase code.
//!
//! Stream files are written first and the manifest is replaced last by
//! write-then-rename, so readers only ever see committed sessions.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabricsim::{stream_len, MultimodalRecording, TraceSample};
use crate::motion::Phase;
use crate::protocol::{validate_items, ClothingItem, ProtocolSpec, SensorHeadSpec, SweepCondition};
use crate::seed;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest";
const MANIFEST_TMP: &str = "manifest.tmp";
pub const SESSIONS_DIR: &str = "sessions";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    AudioContact,
    AudioReference,
    Accel,
    Force,
    Motion,
    Image,
}

impl StreamKind {
    pub const ALL: [StreamKind; 6] = [
        StreamKind::AudioContact,
        StreamKind::AudioReference,
        StreamKind::Accel,
        StreamKind::Force,
        StreamKind::Motion,
        StreamKind::Image,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            StreamKind::AudioContact => "audio_contact.f32",
            StreamKind::AudioReference => "audio_reference.f32",
            StreamKind::Accel => "accel.f32",
            StreamKind::Force => "force.f32",
            StreamKind::Motion => "motion.f32",
            StreamKind::Image => "image.bin",
        }
    }

    pub fn element_bytes(self) -> usize {
        match self {
            StreamKind::Image => 1,
            _ => 4,
        }
    }
}

/// One stored stream file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamFile {
    /// Relative to the dataset root, `/`-separated.
    pub path: String,
    /// Samples per channel.
    pub samples: usize,
    pub channels: usize,
    pub crc32: u32,
}

impl StreamFile {
    pub fn expected_bytes(&self, kind: StreamKind) -> u64 {
        (self.samples * self.channels * kind.element_bytes()) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub clothing_id: String,
    pub condition: SweepCondition,
    pub rng_seed: u64,
    pub streams: BTreeMap<StreamKind, StreamFile>,
}

impl SessionEntry {
    /// `<clothing_id>/<slug>`, unique within a dataset.
    pub fn id(&self) -> String {
        format!("{}/{}", self.clothing_id, self.condition.slug())
    }

    pub fn relative_dir(&self) -> String {
        format!("{SESSIONS_DIR}/{}/{}", self.clothing_id, self.condition.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub sensor_head: SensorHeadSpec,
    pub protocol: ProtocolSpec,
    pub clothing_items: Vec<ClothingItem>,
    pub sessions: Vec<SessionEntry>,
}

impl DatasetManifest {
    pub fn new(sensor_head: SensorHeadSpec, protocol: ProtocolSpec, clothing_items: Vec<ClothingItem>) -> Self {
        DatasetManifest {
            format_version: FORMAT_VERSION,
            sensor_head,
            protocol,
            clothing_items,
            sessions: Vec::new(),
        }
    }

    pub fn item_index(&self, clothing_id: &str) -> Option<usize> {
        self.clothing_items.iter().position(|c| c.id == clothing_id)
    }

    pub fn find_session(&self, id: &str) -> Option<&SessionEntry> {
        self.sessions.iter().find(|s| s.id() == id)
    }
}

pub fn manifest_path(root: &Path) -> PathBuf {
    root.join(MANIFEST_FILE)
}

pub fn load_manifest(root: &Path) -> Result<DatasetManifest> {
    let path = manifest_path(root);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

/// Replace the manifest atomically: write a temporary file, then rename.
fn store_manifest(root: &Path, manifest: &DatasetManifest) -> Result<()> {
    let tmp = root.join(MANIFEST_TMP);
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Manifest(format!("serialize: {e}")))?;
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    let dst = manifest_path(root);
    fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))
}

pub fn f32_to_bytes(data: &[f32]) -> Vec<u8> {
    data.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn bytes_to_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

fn encode_trace(trace: &[TraceSample]) -> Vec<f32> {
    trace
        .iter()
        .flat_map(|s| {
            [
                s.t,
                s.position[0],
                s.position[1],
                s.velocity[0],
                s.velocity[1],
                s.force_setpoint,
                f32::from(s.phase.code()),
            ]
        })
        .collect()
}

fn decode_trace(data: &[f32], path: &Path) -> Result<Vec<TraceSample>> {
    data.chunks_exact(TraceSample::WIDTH)
        .map(|c| {
            let phase = Phase::from_code(c[6] as u8)
                .filter(|_| c[6].fract() == 0.0 && c[6] >= 0.0)
                .ok_or_else(|| Error::Corruption {
                    path: path.to_path_buf(),
                    reason: format!("invalid phase code {}", c[6]),
                })?;
            Ok(TraceSample {
                t: c[0],
                position: [c[1], c[2]],
                velocity: [c[3], c[4]],
                force_setpoint: c[5],
                phase,
            })
        })
        .collect()
}

/// Stream payloads of a recording, in stored byte form.
fn encode_streams(rec: &MultimodalRecording) -> Vec<(StreamKind, usize, usize, Vec<u8>)> {
    let mut out = vec![
        (StreamKind::AudioContact, rec.audio_contact.len(), 1, f32_to_bytes(&rec.audio_contact)),
        (
            StreamKind::AudioReference,
            rec.audio_reference.len(),
            1,
            f32_to_bytes(&rec.audio_reference),
        ),
        (
            StreamKind::Accel,
            rec.accel[0].len(),
            3,
            f32_to_bytes(&rec.accel.concat()),
        ),
        (StreamKind::Force, rec.force.len(), 1, f32_to_bytes(&rec.force)),
        (
            StreamKind::Motion,
            rec.motion_trace.len(),
            TraceSample::WIDTH,
            f32_to_bytes(&encode_trace(&rec.motion_trace)),
        ),
    ];
    if let Some(img) = &rec.surface_image {
        out.push((StreamKind::Image, img.len(), 1, img.clone()));
    }
    out
}

/// A dataset root with its manifest loaded. Single writer.
#[derive(Debug)]
pub struct Dataset {
    root: PathBuf,
    manifest: DatasetManifest,
}

impl Dataset {
    /// Initialize a new dataset root. Fails if a manifest already exists.
    pub fn create(root: &Path, manifest: DatasetManifest) -> Result<Self> {
        let problems = validate_items(&manifest.clothing_items);
        if !problems.is_empty() {
            return Err(Error::Validation {
                what: "clothing items",
                violations: problems,
            });
        }
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        if manifest_path(root).exists() {
            return Err(Error::Manifest(format!(
                "{} already holds a dataset",
                root.display()
            )));
        }
        store_manifest(root, &manifest)?;
        Ok(Dataset {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn open(root: &Path) -> Result<Self> {
        Ok(Dataset {
            root: root.to_path_buf(),
            manifest: load_manifest(root)?,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    /// Write one session and commit it to the manifest.
    pub fn write_session(&mut self, rec: &MultimodalRecording) -> Result<SessionEntry> {
        let staged = self.stage(rec)?;
        self.commit(vec![staged.clone()])?;
        Ok(staged)
    }

    /// Write several sessions, committing the manifest once.
    pub fn write_sessions(&mut self, recs: &[MultimodalRecording]) -> Result<Vec<SessionEntry>> {
        let mut staged = Vec::with_capacity(recs.len());
        for rec in recs {
            staged.push(self.stage_checked(rec, &staged)?);
        }
        self.commit(staged.clone())?;
        Ok(staged)
    }

    /// Write a session's stream files without touching the manifest. The
    /// session becomes visible only after [`Dataset::commit`].
    pub fn stage(&self, rec: &MultimodalRecording) -> Result<SessionEntry> {
        self.stage_checked(rec, &[])
    }

    fn stage_checked(&self, rec: &MultimodalRecording, pending: &[SessionEntry]) -> Result<SessionEntry> {
        if self.manifest.item_index(&rec.clothing_id).is_none() {
            return Err(Error::UnknownItem(rec.clothing_id.clone()));
        }
        let problems = rec.validate();
        if !problems.is_empty() {
            return Err(Error::Validation {
                what: "recording",
                violations: problems,
            });
        }
        let mut entry = SessionEntry {
            clothing_id: rec.clothing_id.clone(),
            condition: rec.condition.clone(),
            rng_seed: rec.rng_seed,
            streams: BTreeMap::new(),
        };
        let id = entry.id();
        if self.manifest.find_session(&id).is_some() || pending.iter().any(|p| p.id() == id) {
            return Err(Error::DuplicateSession(id));
        }
        let rel_dir = entry.relative_dir();
        let dir = self.root.join(&rel_dir);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (kind, samples, channels, bytes) in encode_streams(rec) {
            let path = dir.join(kind.file_name());
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            entry.streams.insert(
                kind,
                StreamFile {
                    path: format!("{rel_dir}/{}", kind.file_name()),
                    samples,
                    channels,
                    crc32: crc32fast::hash(&bytes),
                },
            );
        }
        Ok(entry)
    }

    /// Append staged sessions to the manifest and replace it atomically. On
    /// failure the in-memory and on-disk manifests are left unchanged.
    pub fn commit(&mut self, staged: Vec<SessionEntry>) -> Result<()> {
        let mut next = self.manifest.clone();
        next.sessions.extend(staged);
        store_manifest(&self.root, &next)?;
        self.manifest = next;
        Ok(())
    }

    pub fn read_session(&self, entry: &SessionEntry) -> Result<MultimodalRecording> {
        read_session_with(&self.root, &self.manifest.sensor_head, entry)
    }
}

/// Open `root`, write one session and commit it.
pub fn write_session(root: &Path, rec: &MultimodalRecording) -> Result<SessionEntry> {
    Dataset::open(root)?.write_session(rec)
}

/// Read a committed session, verifying every checksum first.
pub fn read_session(root: &Path, entry: &SessionEntry) -> Result<MultimodalRecording> {
    let manifest = load_manifest(root)?;
    read_session_with(root, &manifest.sensor_head, entry)
}

fn read_checked(root: &Path, kind: StreamKind, file: &StreamFile) -> Result<Vec<u8>> {
    let path = root.join(&file.path);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() as u64 != file.expected_bytes(kind) {
        return Err(Error::Corruption {
            path,
            reason: format!(
                "size {} bytes, manifest declares {}",
                bytes.len(),
                file.expected_bytes(kind)
            ),
        });
    }
    let crc = crc32fast::hash(&bytes);
    if crc != file.crc32 {
        return Err(Error::Corruption {
            path,
            reason: format!("crc32 {crc:08x}, manifest declares {:08x}", file.crc32),
        });
    }
    Ok(bytes)
}

fn read_session_with(root: &Path, head: &SensorHeadSpec, entry: &SessionEntry) -> Result<MultimodalRecording> {
    let stream = |kind: StreamKind| -> Result<Vec<u8>> {
        let file = entry.streams.get(&kind).ok_or_else(|| {
            Error::Manifest(format!("session {} lacks stream {kind:?}", entry.id()))
        })?;
        read_checked(root, kind, file)
    };
    let audio_contact = bytes_to_f32(&stream(StreamKind::AudioContact)?);
    let audio_reference = bytes_to_f32(&stream(StreamKind::AudioReference)?);
    let accel_flat = bytes_to_f32(&stream(StreamKind::Accel)?);
    let n = accel_flat.len() / 3;
    let accel = [
        accel_flat[..n].to_vec(),
        accel_flat[n..2 * n].to_vec(),
        accel_flat[2 * n..].to_vec(),
    ];
    let force = bytes_to_f32(&stream(StreamKind::Force)?);
    let motion_path = root.join(&entry.streams[&StreamKind::Motion].path);
    let motion_trace = decode_trace(&bytes_to_f32(&stream(StreamKind::Motion)?), &motion_path)?;
    let surface_image = match entry.streams.get(&StreamKind::Image) {
        Some(file) => Some(read_checked(root, StreamKind::Image, file)?),
        None => None,
    };
    Ok(MultimodalRecording {
        head: head.clone(),
        audio_contact,
        audio_reference,
        accel,
        force,
        motion_trace,
        condition: entry.condition.clone(),
        clothing_id: entry.clothing_id.clone(),
        surface_image,
        rng_seed: entry.rng_seed,
    })
}

/// One integrity problem found by [`verify_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// Session id or manifest path the finding refers to.
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Manifest,
    UnknownItem,
    DuplicateSession,
    MissingStream,
    MissingFile,
    CountMismatch,
    ChecksumMismatch,
    ConditionMismatch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub sessions_checked: usize,
    pub files_checked: usize,
    pub findings: Vec<Finding>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Check every manifest invariant and every file checksum.
pub fn verify_dataset(root: &Path) -> VerifyReport {
    let mut report = VerifyReport::default();
    let manifest = match load_manifest(root) {
        Ok(m) => m,
        Err(e) => {
            report.findings.push(Finding {
                kind: FindingKind::Manifest,
                subject: manifest_path(root).display().to_string(),
                detail: e.to_string(),
            });
            return report;
        }
    };
    let mut push = |kind, subject: &str, detail: String| {
        report.findings.push(Finding {
            kind,
            subject: subject.to_string(),
            detail,
        })
    };
    for v in validate_items(&manifest.clothing_items) {
        push(FindingKind::Manifest, MANIFEST_FILE, v.to_string());
    }
    for v in manifest.protocol.validate() {
        push(FindingKind::Manifest, MANIFEST_FILE, v.to_string());
    }
    let head = &manifest.sensor_head;
    let mut seen = BTreeSet::new();
    let mut files_checked = 0;
    for entry in &manifest.sessions {
        let id = entry.id();
        if !seen.insert(id.clone()) {
            push(FindingKind::DuplicateSession, &id, "listed more than once".into());
        }
        if manifest.item_index(&entry.clothing_id).is_none() {
            push(
                FindingKind::UnknownItem,
                &id,
                format!("clothing item `{}` is not declared", entry.clothing_id),
            );
        }
        if !entry.condition.is_consistent_with(&manifest.protocol) {
            push(
                FindingKind::ConditionMismatch,
                &id,
                "condition does not match the declared protocol".into(),
            );
        }
        let duration = entry
            .streams
            .get(&StreamKind::Motion)
            .map(|m| m.samples as f64 / f64::from(head.control_tick_rate));
        for kind in StreamKind::ALL {
            let Some(file) = entry.streams.get(&kind) else {
                if kind != StreamKind::Image {
                    push(FindingKind::MissingStream, &id, format!("no {kind:?} stream"));
                }
                continue;
            };
            files_checked += 1;
            let expected_channels = match kind {
                StreamKind::Accel => 3,
                StreamKind::Motion => TraceSample::WIDTH,
                _ => 1,
            };
            let rate = match kind {
                StreamKind::AudioContact | StreamKind::AudioReference => Some(head.audio_sample_rate),
                StreamKind::Accel => Some(head.accel_sample_rate),
                StreamKind::Force => Some(head.force_sample_rate),
                _ => None,
            };
            if file.channels != expected_channels {
                push(
                    FindingKind::CountMismatch,
                    &file.path,
                    format!("{} channels, expected {expected_channels}", file.channels),
                );
            } else if let (Some(rate), Some(t)) = (rate, duration) {
                let want = stream_len(t, rate);
                if file.samples.abs_diff(want) > 1 {
                    push(
                        FindingKind::CountMismatch,
                        &file.path,
                        format!("{} samples, expected {want} at {rate} Hz", file.samples),
                    );
                    continue;
                }
            }
            let path = root.join(&file.path);
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    push(FindingKind::MissingFile, &file.path, e.to_string());
                    continue;
                }
            };
            if bytes.len() as u64 != file.expected_bytes(kind) {
                push(
                    FindingKind::CountMismatch,
                    &file.path,
                    format!(
                        "file holds {} bytes, declared counts imply {}",
                        bytes.len(),
                        file.expected_bytes(kind)
                    ),
                );
                continue;
            }
            let crc = crc32fast::hash(&bytes);
            if crc != file.crc32 {
                push(
                    FindingKind::ChecksumMismatch,
                    &file.path,
                    format!("crc32 {crc:08x}, manifest declares {:08x}", file.crc32),
                );
            }
        }
    }
    report.sessions_checked = manifest.sessions.len();
    report.files_checked = files_checked;
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratify {
    ClothingId,
    /// Direction × speed × force cell; repetitions share a stratum.
    Condition,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratify_by: Stratify,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.75,
            seed: 0,
            stratify_by: Stratify::ClothingId,
        }
    }
}

fn stratum_key(entry: &SessionEntry, by: Stratify) -> String {
    let c = &entry.condition;
    let cell = format!("d{}_s{}_f{}", c.direction_index, c.speed_index, c.force_index);
    match by {
        Stratify::ClothingId => entry.clothing_id.clone(),
        Stratify::Condition => cell,
        Stratify::Both => format!("{}/{cell}", entry.clothing_id),
    }
}

/// Deterministic stratified split. Within each stratum, sessions are ordered
/// by id, shuffled with a seed derived from the split seed and stratum key, and
/// `round(n * train_fraction)` (clamped to `[1, n - 1]`) go to training.
/// Both outputs are in manifest order.
pub fn split_dataset(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
) -> Result<(Vec<SessionEntry>, Vec<SessionEntry>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Validation {
            what: "split spec",
            violations: vec![crate::protocol::Violation::new(
                "train_fraction",
                format!("{} must lie strictly between 0 and 1", spec.train_fraction),
            )],
        });
    }
    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.sessions.iter().enumerate() {
        strata.entry(stratum_key(e, spec.stratify_by)).or_default().push(i);
    }
    let mut is_train = vec![false; manifest.sessions.len()];
    for (key, mut members) in strata {
        let n = members.len();
        if n < 2 {
            return Err(Error::InfeasibleSplit(format!(
                "stratum `{key}` has {n} session; at least 2 are needed"
            )));
        }
        members.sort_by_key(|&i| manifest.sessions[i].id());
        let mut rng = seed::rng(seed::derive_str(spec.seed, &key));
        members.shuffle(&mut rng);
        let n_train = ((n as f64 * spec.train_fraction).round() as usize).clamp(1, n - 1);
        for &i in &members[..n_train] {
            is_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = manifest
        .sessions
        .iter()
        .zip(is_train)
        .partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(e, _)| e.clone()).collect(),
        test.into_iter().map(|(e, _)| e.clone()).collect(),
    ))
}

/// Shape descriptor written next to a cached tensor (`<name>.shape.json`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorShape {
    pub shape: Vec<usize>,
    pub dtype: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".shape.json");
    path.with_file_name(name)
}

/// Write a tensor as raw little-endian f32 plus a shape sidecar.
pub fn write_tensor(path: &Path, shape: &[usize], data: &[f32]) -> Result<()> {
    let count: usize = shape.iter().product();
    if count != data.len() {
        return Err(Error::Shape(format!(
            "shape {shape:?} holds {count} values, got {}",
            data.len()
        )));
    }
    fs::write(path, f32_to_bytes(data)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let desc = TensorShape {
        shape: shape.to_vec(),
        dtype: "f32le".to_string(),
    };
    let text = serde_json::to_string(&desc).map_err(|e| Error::Manifest(e.to_string()))?;
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn read_tensor(path: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let desc: TensorShape =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", side.display())))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let count: usize = desc.shape.iter().product();
    if bytes.len() != 4 * count {
        return Err(Error::Corruption {
            path: path.to_path_buf(),
            reason: format!("{} bytes for shape {:?}", bytes.len(), desc.shape),
        });
    }
    Ok((desc.shape, bytes_to_f32(&bytes)))
}
