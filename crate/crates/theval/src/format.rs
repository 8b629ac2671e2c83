//! The canonical feature directory and corpus-level topology file.
//!
//! One directory per video:
//!
//! | file              | content                                             |
//! |-------------------|-----------------------------------------------------|
//! | `meta.json`       | `video_id`, `fps`, `n_frames`, optional `params`    |
//! | `landmarks.jsonl` | one [`LandmarkFrame`] per line                      |
//! | `pose.jsonl`      | one [`PoseFrame`] per line                          |
//! | `iqa.jsonl`       | one [`IqaFrame`] per line (optional)                |
//! | `vad.json`        | `{"segments": [VadSegment, ...]}`                   |
//! | `audio.wav`       | 16-bit PCM, mono (optional)                         |
//!
//! Landmark points are `[x, y]`; a third depth coordinate is accepted and
//! dropped.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use theval_core::audio::{energy_vad_fallback, frame_rms};
use theval_core::feature::{
    validate_bundle, FaceTopology, FeatureBundle, IqaFrame, LandmarkFrame, PoseFrame, TopologyDef, VadOrigin,
    VadSegment,
};

use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const LANDMARKS_FILE: &str = "landmarks.jsonl";
pub const POSE_FILE: &str = "pose.jsonl";
pub const IQA_FILE: &str = "iqa.jsonl";
pub const VAD_FILE: &str = "vad.json";
pub const AUDIO_FILE: &str = "audio.wav";
pub const TOPOLOGY_FILE: &str = "topology.json";

/// Frame RMS below this fraction of the peak counts as silence when no VAD
/// file is present.
pub const FALLBACK_VAD_THRESHOLD: f64 = 0.1;

const FACEMESH_TOPOLOGY: &str = include_str!("../data/topology_facemesh468.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub video_id: String,
    pub fps: f64,
    pub n_frames: usize,
    /// Free-form generation parameters echoed by the fixture generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VadFile {
    pub segments: Vec<VadSegment>,
}

/// The 468-point face-mesh layout shipped with the crate.
pub fn facemesh_topology() -> FaceTopology {
    let def: TopologyDef = serde_json::from_str(FACEMESH_TOPOLOGY).expect("bundled topology parses");
    def.build().expect("bundled topology is valid")
}

pub fn load_topology(path: &Path) -> Result<FaceTopology> {
    let def: TopologyDef = read_json(path)?;
    def.build().map_err(|source| Error::Topology { path: path.to_path_buf(), source })
}

pub fn write_topology(path: &Path, topo: &FaceTopology) -> Result<()> {
    write_json(path, &TopologyDef::from(topo))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed { path: path.to_path_buf(), line: e.line(), message: e.to_string() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    fs::write(path, text).map_err(Error::io(path))
}

/// Parses a line-per-record file. Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(Error::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Malformed { path: path.to_path_buf(), line: i + 1, message: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, records: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("records serialize");
        w.write_all(b"\n").map_err(Error::io(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Landmark line as read: points may carry a depth coordinate.
#[derive(Deserialize)]
struct LandmarkRecord {
    frame_index: usize,
    timestamp_s: f64,
    detection_ok: bool,
    points: Vec<Vec<f64>>,
}

fn read_landmarks(path: &Path, topo: &FaceTopology) -> Result<Vec<LandmarkFrame>> {
    let records: Vec<LandmarkRecord> = read_jsonl(path)?;
    let mut frames = Vec::with_capacity(records.len());
    for (pos, r) in records.into_iter().enumerate() {
        if r.points.len() != topo.total_points {
            return Err(Error::TopologyMismatch {
                path: path.to_path_buf(),
                frame: r.frame_index,
                expected: topo.total_points,
                found: r.points.len(),
            });
        }
        let mut points = Vec::with_capacity(r.points.len());
        for (k, p) in r.points.iter().enumerate() {
            if !(p.len() == 2 || p.len() == 3) {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: pos + 1,
                    message: format!("points[{k}] has {} coordinates, expected 2 or 3", p.len()),
                });
            }
            points.push([p[0], p[1]]);
        }
        frames.push(LandmarkFrame { frame_index: r.frame_index, timestamp_s: r.timestamp_s, detection_ok: r.detection_ok, points });
    }
    Ok(frames)
}

/// 16-bit mono PCM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioTrack {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl AudioTrack {
    /// Samples scaled to `[-1, 1)`.
    pub fn normalized(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64 / 32768.0).collect()
    }
}

pub fn read_wav(path: &Path) -> Result<AudioTrack> {
    let wav_err = |e: hound::Error| Error::Wav { path: path.to_path_buf(), message: e.to_string() };
    let reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Wav {
            path: path.to_path_buf(),
            message: format!(
                "expected 16-bit mono PCM, found {} channel(s) of {}-bit {:?}",
                spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        });
    }
    let samples = reader.into_samples::<i16>().collect::<Result<Vec<_>, _>>().map_err(wav_err)?;
    Ok(AudioTrack { samples, sample_rate: spec.sample_rate })
}

pub fn write_wav(path: &Path, audio: &AudioTrack) -> Result<()> {
    let wav_err = |e: hound::Error| Error::Wav { path: path.to_path_buf(), message: e.to_string() };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &audio.samples {
        w.write_sample(s).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

/// Parses a feature directory without checking value-level invariants.
///
/// Structural problems are errors: unparsable records, landmark frames
/// whose point count disagrees with `topo`, and tracks of different length.
/// Optional files that are absent leave their field empty. Without a VAD
/// file the VAD is derived from the audio volume, if any.
pub fn read_feature_bundle(dir: &Path, topo: &FaceTopology) -> Result<FeatureBundle> {
    let meta: Meta = read_json(&dir.join(META_FILE))?;
    let landmarks = read_landmarks(&dir.join(LANDMARKS_FILE), topo)?;
    let n = landmarks.len();
    let mismatch = |track, found| Error::FrameCountMismatch { dir: dir.to_path_buf(), track, expected: n, found };
    if meta.n_frames != n {
        return Err(Error::FrameCountMismatch { dir: dir.to_path_buf(), track: "meta.n_frames", expected: n, found: meta.n_frames });
    }
    let pose: Vec<PoseFrame> = read_jsonl(&dir.join(POSE_FILE))?;
    if pose.len() != n {
        return Err(mismatch("pose", pose.len()));
    }
    let iqa_path = dir.join(IQA_FILE);
    let iqa = if iqa_path.exists() {
        let iqa: Vec<IqaFrame> = read_jsonl(&iqa_path)?;
        if iqa.len() != n {
            return Err(mismatch("iqa", iqa.len()));
        }
        Some(iqa)
    } else {
        None
    };

    let audio_path = dir.join(AUDIO_FILE);
    let audio_volume = if audio_path.exists() {
        let audio = read_wav(&audio_path)?;
        let vol = frame_rms(&audio.normalized(), audio.sample_rate, meta.fps, n)
            .map_err(|source| Error::Audio { path: audio_path.clone(), source })?;
        Some(vol)
    } else {
        None
    };

    let vad_path = dir.join(VAD_FILE);
    let (vad, vad_origin) = if vad_path.exists() {
        let file: VadFile = read_json(&vad_path)?;
        (file.segments, VadOrigin::Extractor)
    } else if let Some(vol) = &audio_volume {
        let fb = energy_vad_fallback(vol, FALLBACK_VAD_THRESHOLD);
        (fb.segments, VadOrigin::EnergyFallback { low_confidence: fb.low_confidence })
    } else {
        (Vec::new(), VadOrigin::Extractor)
    };

    Ok(FeatureBundle {
        video_id: meta.video_id,
        fps: meta.fps,
        landmarks,
        pose,
        iqa,
        vad,
        vad_origin,
        audio_volume: audio_volume.map(|v| v.values),
    })
}

/// [`read_feature_bundle`] followed by the full invariant check.
pub fn load_feature_bundle(dir: &Path, topo: &FaceTopology) -> Result<FeatureBundle> {
    let bundle = read_feature_bundle(dir, topo)?;
    let report = validate_bundle(&bundle, topo);
    if !report.is_clean() {
        return Err(Error::Invalid { dir: dir.to_path_buf(), report });
    }
    Ok(bundle)
}

/// Writes a bundle in canonical form. The volume track is not written: it is
/// re-derived from `audio` on load.
pub fn write_feature_bundle(
    dir: &Path,
    bundle: &FeatureBundle,
    audio: Option<&AudioTrack>,
    params: Option<serde_json::Value>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let meta = Meta { video_id: bundle.video_id.clone(), fps: bundle.fps, n_frames: bundle.n_frames(), params };
    write_json(&dir.join(META_FILE), &meta)?;
    write_jsonl(&dir.join(LANDMARKS_FILE), &bundle.landmarks)?;
    write_jsonl(&dir.join(POSE_FILE), &bundle.pose)?;
    if let Some(iqa) = &bundle.iqa {
        write_jsonl(&dir.join(IQA_FILE), iqa)?;
    }
    if matches!(bundle.vad_origin, VadOrigin::Extractor) {
        write_json(&dir.join(VAD_FILE), &VadFile { segments: bundle.vad.clone() })?;
    }
    if let Some(a) = audio {
        write_wav(&dir.join(AUDIO_FILE), a)?;
    }
    Ok(())
}

/// Every immediate subdirectory name of `dir`, sorted.
pub(crate) fn subdirectories(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let entry = entry.map_err(Error::io(dir))?;
        if entry.file_type().map_err(Error::io(entry.path()))?.is_dir() {
            out.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
