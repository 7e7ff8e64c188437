//! Dataset-scale conversion: mirror a class-per-directory image tree into
//! event recordings, with per-dataset resize profiles, conversion reports,
//! and train/test split helpers.

use std::collections::{BTreeMap, HashSet};
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use crate::event::{self, EventStream, StreamError, EVENT_BYTES};
use crate::meta::{self, MetaEntry, MetaError};
use crate::raster::{load_intensity, IntensityImage, RasterError};
use crate::schedule::SaccadeSchedule;
use crate::seed;
use crate::sim::{simulate, SensorModel, SimError, SimParams};

/// Side of the square an image is projected to under the digit rule.
pub const DIGIT_CONTENT_PX: u16 = 28;
/// Bounding box for the fit rule.
pub const FIT_MAX_WIDTH: u16 = 240;
pub const FIT_MAX_HEIGHT: u16 = 180;

/// How source images are scaled before simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResizeRule {
    /// Project to exactly 28x28 (MNIST digits arrive at that size already).
    Digit,
    /// Scale to fit within 240x180, aspect preserved, one bound tight.
    /// Small images are scaled up: as large as possible inside the box.
    Fit,
    /// Project to an exact target.
    Exact { width: u16, height: u16 },
}

impl ResizeRule {
    /// Target dimensions for a `width` x `height` source.
    fn target(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            ResizeRule::Digit => (DIGIT_CONTENT_PX as usize, DIGIT_CONTENT_PX as usize),
            ResizeRule::Fit => {
                let sw = FIT_MAX_WIDTH as f64 / width as f64;
                let sh = FIT_MAX_HEIGHT as f64 / height as f64;
                if sw <= sh {
                    let h = (height as f64 * sw).round() as usize;
                    (FIT_MAX_WIDTH as usize, h.clamp(1, FIT_MAX_HEIGHT as usize))
                } else {
                    let w = (width as f64 * sh).round() as usize;
                    (w.clamp(1, FIT_MAX_WIDTH as usize), FIT_MAX_HEIGHT as usize)
                }
            }
            ResizeRule::Exact { width, height } => (width as usize, height as usize),
        }
    }

    /// Largest content this rule can produce, for frame-fit validation.
    fn max_target(self) -> (usize, usize) {
        match self {
            ResizeRule::Digit => (DIGIT_CONTENT_PX as usize, DIGIT_CONTENT_PX as usize),
            ResizeRule::Fit => (FIT_MAX_WIDTH as usize, FIT_MAX_HEIGHT as usize),
            ResizeRule::Exact { width, height } => (width as usize, height as usize),
        }
    }
}

/// Everything needed to turn one image tree into one recording tree.
#[derive(Clone, Debug)]
pub struct ConversionProfile {
    pub name: String,
    pub resize: ResizeRule,
    pub sensor: SensorModel,
    pub schedule: SaccadeSchedule,
    pub params: SimParams,
}

impl ConversionProfile {
    /// Digit profile: 28x28 content viewed by a 34x34 sensor, leaving a
    /// 3 px border exactly consumed by the default saccade excursion.
    pub fn nmnist() -> ConversionProfile {
        ConversionProfile {
            name: "nmnist".into(),
            resize: ResizeRule::Digit,
            sensor: SensorModel::new(34, 34),
            schedule: SaccadeSchedule::triangle(),
            params: SimParams::default(),
        }
    }

    /// Full-frame profile: content fills a 240x180 sensor.
    pub fn ncaltech101() -> ConversionProfile {
        ConversionProfile {
            name: "ncaltech101".into(),
            resize: ResizeRule::Fit,
            sensor: SensorModel::new(240, 180),
            schedule: SaccadeSchedule::triangle(),
            params: SimParams::default(),
        }
    }

    pub fn by_name(name: &str) -> Option<ConversionProfile> {
        match name {
            "nmnist" => Some(ConversionProfile::nmnist()),
            "ncaltech101" | "ncaltech" => Some(ConversionProfile::ncaltech101()),
            _ => None,
        }
    }

    /// The resize rule must never produce content larger than the frame.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let (tw, th) = self.resize.max_target();
        if tw == 0 || th == 0 {
            return Err(PipelineError::EmptyImage);
        }
        if tw > self.sensor.width as usize || th > self.sensor.height as usize {
            return Err(PipelineError::TargetExceedsFrame {
                target: (tw, th),
                frame: (self.sensor.width, self.sensor.height),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("image has a zero dimension")]
    EmptyImage,
    #[error("resize target {}x{} exceeds the {}x{} sensor frame", target.0, target.1, frame.0, frame.1)]
    TargetExceedsFrame {
        target: (usize, usize),
        frame: (u16, u16),
    },
    #[error("{name} is not listed in {}", dir.display())]
    MissingMeta { name: String, dir: PathBuf },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn resize_for_profile(
    img: &IntensityImage,
    profile: &ConversionProfile,
) -> Result<IntensityImage, PipelineError> {
    if img.width == 0 || img.height == 0 {
        return Err(PipelineError::EmptyImage);
    }
    profile.validate()?;
    let (tw, th) = profile.resize.target(img.width, img.height);
    if (tw, th) == (img.width, img.height) {
        return Ok(img.clone());
    }
    Ok(img.resize_bilinear(tw, th))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecordStatus {
    Converted,
    Skipped,
    Failed(String),
}

impl RecordStatus {
    fn csv_cell(&self) -> String {
        match self {
            RecordStatus::Converted => "ok".into(),
            RecordStatus::Skipped => "skipped".into(),
            RecordStatus::Failed(msg) => format!("failed: {}", msg.replace(',', ";")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecordEntry {
    /// Source path relative to the input root.
    pub rel_path: PathBuf,
    pub on_count: u64,
    pub off_count: u64,
    pub duration_us: u32,
    pub wall_ms: f64,
    pub status: RecordStatus,
}

#[derive(Clone, Debug, Default)]
pub struct ConversionReport {
    pub entries: Vec<RecordEntry>,
    pub wall_ms_total: f64,
}

impl ConversionReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn converted(&self) -> usize {
        self.count(|s| matches!(s, RecordStatus::Converted))
    }

    pub fn skipped(&self) -> usize {
        self.count(|s| matches!(s, RecordStatus::Skipped))
    }

    pub fn failed(&self) -> usize {
        self.count(|s| matches!(s, RecordStatus::Failed(_)))
    }

    fn count(&self, pred: impl Fn(&RecordStatus) -> bool) -> usize {
        self.entries.iter().filter(|e| pred(&e.status)).count()
    }

    /// End-to-end wall time divided by freshly converted recordings.
    pub fn ms_per_image(&self) -> f64 {
        let n = self.converted();
        if n == 0 {
            0.0
        } else {
            self.wall_ms_total / n as f64
        }
    }
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];

fn rel_path_key(rel: &Path) -> String {
    let parts: Vec<&str> = rel
        .components()
        .filter_map(|c| c.as_os_str().to_str())
        .collect();
    parts.join("/")
}

/// Convert every image under `in_dir` into a `.bin` recording under
/// `out_dir`, mirroring the directory layout.
///
/// Each recording is seeded from the profile seed and its relative path, so
/// outputs are byte-identical across runs and independent of worker count.
/// Existing outputs are skipped unless `force` is set; failures are recorded
/// in the report and never abort the batch. Writes a `meta.txt` beside each
/// recording directory and a `report.csv` at the output root.
pub fn convert_directory(
    in_dir: &Path,
    out_dir: &Path,
    profile: &ConversionProfile,
    force: bool,
) -> Result<ConversionReport, PipelineError> {
    profile.validate()?;
    let started = Instant::now();

    let mut rels: Vec<PathBuf> = WalkDir::new(in_dir)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| io::Error::new(io::ErrorKind::Other, e))?
        .into_iter()
        .filter(|e| e.file_type().is_file())
        .filter(|e| {
            e.path()
                .extension()
                .and_then(|x| x.to_str())
                .map(|x| IMAGE_EXTENSIONS.contains(&x.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .map(|e| e.path().strip_prefix(in_dir).unwrap().to_path_buf())
        .collect();
    rels.sort();

    std::fs::create_dir_all(out_dir)?;

    // Two sources with the same stem would fight over one output file;
    // the first (in sorted order) wins.
    let mut seen = HashSet::new();
    let claims: Vec<bool> = rels
        .iter()
        .map(|rel| seen.insert(rel.with_extension("bin")))
        .collect();

    let duration_us = profile.schedule.total_us();
    let mut entries: Vec<RecordEntry> = rels
        .par_iter()
        .zip(claims.par_iter())
        .map(|(rel, claimed)| {
            let item_started = Instant::now();
            let out_rel = rel.with_extension("bin");
            let out_path = out_dir.join(&out_rel);
            let mut entry = RecordEntry {
                rel_path: rel.clone(),
                on_count: 0,
                off_count: 0,
                duration_us,
                wall_ms: 0.0,
                status: RecordStatus::Converted,
            };
            if !claimed {
                entry.status = RecordStatus::Failed("output name collision".into());
                return entry;
            }
            if !force && out_path.exists() {
                match count_existing(&out_path) {
                    Ok((on, off)) => {
                        entry.on_count = on;
                        entry.off_count = off;
                        entry.status = RecordStatus::Skipped;
                    }
                    Err(e) => entry.status = RecordStatus::Failed(e.to_string()),
                }
                entry.wall_ms = item_started.elapsed().as_secs_f64() * 1e3;
                return entry;
            }
            let result = convert_one(in_dir, rel, &out_path, profile);
            entry.wall_ms = item_started.elapsed().as_secs_f64() * 1e3;
            match result {
                Ok(stream) => {
                    entry.on_count = stream.count(crate::event::Polarity::On) as u64;
                    entry.off_count = (stream.len() - stream.count(crate::event::Polarity::On)) as u64;
                }
                Err(e) => entry.status = RecordStatus::Failed(e.to_string()),
            }
            entry
        })
        .collect();
    entries.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));

    write_meta_files(out_dir, profile, &entries)?;
    let report = ConversionReport {
        entries,
        wall_ms_total: started.elapsed().as_secs_f64() * 1e3,
    };
    write_report_csv(&report, &out_dir.join("report.csv"))?;
    Ok(report)
}

fn convert_one(
    in_dir: &Path,
    rel: &Path,
    out_path: &Path,
    profile: &ConversionProfile,
) -> Result<EventStream, PipelineError> {
    let img = load_intensity(&in_dir.join(rel))?;
    let content = resize_for_profile(&img, profile)?;
    let mut params = profile.params.clone();
    params.seed = seed::mix(profile.params.seed, seed::fnv1a64(rel_path_key(rel).as_bytes()));
    let stream = simulate(&content, &profile.schedule, &profile.sensor, &params)?;
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    event::write_stream_file(out_path, &stream)?;
    Ok(stream)
}

/// ON/OFF counts of an already-converted recording, read without frame
/// context (only the polarity bit of each record is needed).
fn count_existing(path: &Path) -> Result<(u64, u64), PipelineError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % EVENT_BYTES != 0 {
        return Err(StreamError::Truncated {
            offset: bytes.len() - bytes.len() % EVENT_BYTES,
            got: bytes.len() % EVENT_BYTES,
        }
        .into());
    }
    let on = bytes
        .chunks_exact(EVENT_BYTES)
        .filter(|c| c[2] & 0x80 != 0)
        .count() as u64;
    Ok((on, bytes.len() as u64 / EVENT_BYTES as u64 - on))
}

fn write_meta_files(
    out_dir: &Path,
    profile: &ConversionProfile,
    entries: &[RecordEntry],
) -> Result<(), PipelineError> {
    let mut per_dir: BTreeMap<PathBuf, Vec<MetaEntry>> = BTreeMap::new();
    for entry in entries {
        if matches!(entry.status, RecordStatus::Failed(_)) {
            continue;
        }
        let out_rel = entry.rel_path.with_extension("bin");
        let dir = out_dir.join(out_rel.parent().unwrap_or(Path::new("")));
        per_dir.entry(dir).or_default().push(MetaEntry {
            name: out_rel
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string(),
            width: profile.sensor.width,
            height: profile.sensor.height,
            duration_us: entry.duration_us,
        });
    }
    for (dir, mut list) in per_dir {
        list.sort_by(|a, b| a.name.cmp(&b.name));
        meta::write_meta(&dir, &list)?;
    }
    Ok(())
}

pub fn write_report_csv(report: &ConversionReport, path: &Path) -> io::Result<()> {
    let mut out = String::from("path,on_count,off_count,duration_us,status\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rel_path_key(&e.rel_path),
            e.on_count,
            e.off_count,
            e.duration_us,
            e.status.csv_cell()
        ));
    }
    std::fs::write(path, out)
}

/// One recording on disk, labeled by its directory relative to the
/// dataset root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledRecording {
    pub label: String,
    pub path: PathBuf,
}

/// Every `.bin` under `root` in sorted order. The label is the relative
/// parent directory, so `digits/3/0001.bin` under root `digits` gets
/// label `3`.
pub fn list_recordings(root: &Path) -> Result<Vec<LabeledRecording>, PipelineError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(root) {
        let entry = entry.map_err(|e| io::Error::new(io::ErrorKind::Other, e))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        if path.extension().and_then(|x| x.to_str()) != Some("bin") {
            continue;
        }
        let rel = path.strip_prefix(root).unwrap();
        let label = rel
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(|p| rel_path_key(p))
            .unwrap_or_else(|| ".".into());
        out.push(LabeledRecording {
            label,
            path: path.to_path_buf(),
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Read one recording back, taking its frame geometry from the `meta.txt`
/// beside it.
pub fn load_recording(path: &Path) -> Result<EventStream, PipelineError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let entries = meta::read_meta(dir)?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let entry = meta::lookup(&entries, name).ok_or_else(|| PipelineError::MissingMeta {
        name: name.to_string(),
        dir: dir.join(meta::META_FILE),
    })?;
    Ok(event::read_stream_file(
        path,
        entry.width,
        entry.height,
        entry.duration_us,
    )?)
}

/// Load a batch of recordings in parallel, preserving order.
pub fn load_recordings(
    recordings: &[LabeledRecording],
) -> Result<Vec<(String, EventStream)>, PipelineError> {
    recordings
        .par_iter()
        .map(|r| Ok((r.label.clone(), load_recording(&r.path)?)))
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct Split {
    pub train: Vec<LabeledRecording>,
    pub test: Vec<LabeledRecording>,
    pub warnings: Vec<String>,
}

/// Pick `per_class_train` + `per_class_test` recordings per class, seeded
/// and deterministic. A class with too few samples contributes everything
/// it has (train filled first) and records a warning.
pub fn split_fixed(
    recordings: &[LabeledRecording],
    per_class_train: usize,
    per_class_test: usize,
    seed_value: u64,
) -> Split {
    let mut classes: BTreeMap<&str, Vec<&LabeledRecording>> = BTreeMap::new();
    for r in recordings {
        classes.entry(&r.label).or_default().push(r);
    }
    let mut split = Split::default();
    for (label, mut members) in classes {
        let mut rng = ChaCha12Rng::seed_from_u64(seed::mix(
            seed_value,
            seed::fnv1a64(label.as_bytes()),
        ));
        members.shuffle(&mut rng);
        let want = per_class_train + per_class_test;
        if members.len() < want {
            split.warnings.push(format!(
                "class {label}: wanted {want} samples, only {} available",
                members.len()
            ));
        }
        let n_train = per_class_train.min(members.len());
        let n_test = per_class_test.min(members.len() - n_train);
        split
            .train
            .extend(members[..n_train].iter().map(|&r| r.clone()));
        split
            .test
            .extend(members[n_train..n_train + n_test].iter().map(|&r| r.clone()));
    }
    split
}
