//! Seeded synthetic talking-head feature corpora.
//!
//! A fixture face lives on a 72-point layout (see [`synthetic_topology`]).
//! The lips are scaled about the mouth center by `1 + A * e(t - lag)`, where
//! `e` is the audio envelope in `[0, 1]` during speech and 0 during silence,
//! so every lip-pair distance is affine in the amplitude `A`. The audio is a
//! 400 Hz tone whose per-frame RMS equals the envelope times the peak
//! volume. Head rotation only affects the pose track; translation jitter
//! moves the pose center and every landmark together.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use theval_core::feature::{
    FaceTopology, FeatureBundle, IqaFrame, LandmarkFrame, Point, PoseFrame, TopologyDef, VadOrigin, VadSegment,
};
use theval_core::study::{sample_pair, Choice, StudyPlan, VoteRecord};

use crate::error::{Error, Result};
use crate::format::{write_feature_bundle, write_json, write_jsonl, write_topology, AudioTrack, TOPOLOGY_FILE};
use crate::manifest::{ManifestFile, GROUND_TRUTH};

const CARRIER_HZ: f64 = 400.0;
const FACE_CENTER: Point = [256.0, 256.0];
const MOUTH_CENTER: Point = [0.0, 40.0];
/// Half of the closed-mouth inner gap, in face units.
const INNER_HALF_GAP: f64 = 1.0;
const BROW_GAP: f64 = 12.0;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VOTES_FILE: &str = "votes.jsonl";

/// The 72-point layout of fixture faces: 40 lip points, two 6-point eyes,
/// two 5-point brows and a 10-point jaw line.
pub fn synthetic_topology() -> FaceTopology {
    let range = |a: usize, b: usize| (a..b).collect::<Vec<_>>();
    TopologyDef {
        total_points: 72,
        lip_indices: range(0, 40),
        upper_lip_indices: range(0, 20),
        lower_lip_indices: range(20, 40),
        left_eye_indices: range(40, 46),
        right_eye_indices: range(46, 52),
        left_brow_indices: range(52, 57),
        right_brow_indices: range(57, 62),
        lip_pair_set: None,
        stability_pair_set: Some(vec![(13, 33), (15, 35), (17, 37)]),
    }
    .build()
    .expect("synthetic topology is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadProfile {
    #[default]
    Static,
    /// Angles ramp from 0 to the amplitude over the clip.
    Linear,
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpec {
    #[serde(default)]
    pub profile: HeadProfile,
    /// Yaw amplitude in degrees; pitch gets half, roll three tenths.
    #[serde(default)]
    pub amplitude_deg: f64,
    #[serde(default = "default_head_hz")]
    pub frequency_hz: f64,
    /// Variance of the per-frame center jitter, in squared pixels.
    #[serde(default)]
    pub translation_jitter_var: f64,
}

fn default_head_hz() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyebrowSpec {
    /// Peak raise in face units (the eye spacing is 60).
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_brow_period")]
    pub period_s: f64,
}

fn default_brow_period() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqaSpec {
    pub aesthetic: f64,
    pub face_quality: f64,
    pub mouth_quality: f64,
    /// Standard deviation of per-frame noise; scores are clamped to `[0, 1]`.
    #[serde(default)]
    pub noise: f64,
}

/// One synthetic video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub video_id: String,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_frames")]
    pub n_frames: usize,
    /// Relative lip scaling at full envelope.
    #[serde(default)]
    pub lip_amplitude: f64,
    /// Base frequency of the speech envelope.
    #[serde(default = "default_lip_hz")]
    pub lip_frequency_hz: f64,
    #[serde(default)]
    pub head: HeadSpec,
    #[serde(default)]
    pub eyebrow: EyebrowSpec,
    /// `[start_s, end_s]` intervals of silence; the rest is speech.
    #[serde(default)]
    pub silences: Vec<[f64; 2]>,
    /// Per-frame RMS at full envelope, in full-scale units.
    #[serde(default = "default_volume")]
    pub volume_peak: f64,
    /// Frames by which the mouth trails the audio.
    #[serde(default)]
    pub sync_lag_frames: i64,
    /// Standard deviation of the lip scale during silence.
    #[serde(default)]
    pub silent_jitter: f64,
    /// Standard deviation of independent per-point noise, in face units.
    #[serde(default)]
    pub landmark_noise: f64,
    #[serde(default = "default_scale")]
    pub face_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iqa: Option<IqaSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropout_frames: Vec<usize>,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    pub seed: u64,
}

fn default_fps() -> f64 {
    25.0
}
fn default_frames() -> usize {
    250
}
fn default_lip_hz() -> f64 {
    3.0
}
fn default_volume() -> f64 {
    0.3
}
fn default_scale() -> f64 {
    1.0
}
fn default_rate() -> u32 {
    16_000
}

impl FixtureSpec {
    /// A spec with every field at its default.
    pub fn new(video_id: impl Into<String>, seed: u64) -> Self {
        Self {
            video_id: video_id.into(),
            fps: default_fps(),
            n_frames: default_frames(),
            lip_amplitude: 0.0,
            lip_frequency_hz: default_lip_hz(),
            head: HeadSpec { frequency_hz: default_head_hz(), ..HeadSpec::default() },
            eyebrow: EyebrowSpec { period_s: default_brow_period(), ..EyebrowSpec::default() },
            silences: Vec::new(),
            volume_peak: default_volume(),
            sync_lag_frames: 0,
            silent_jitter: 0.0,
            landmark_noise: 0.0,
            face_scale: default_scale(),
            iqa: None,
            dropout_frames: Vec::new(),
            sample_rate: default_rate(),
            seed,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.n_frames as f64 / self.fps
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        let id = &self.video_id;
        if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(format!("`{id}` is not usable as a directory name"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(format!("{id}: fps must be positive"));
        }
        if self.n_frames < 2 {
            return Err(format!("{id}: at least two frames are needed"));
        }
        let non_negative = [
            ("lip_amplitude", self.lip_amplitude),
            ("lip_frequency_hz", self.lip_frequency_hz),
            ("head.amplitude_deg", self.head.amplitude_deg),
            ("head.frequency_hz", self.head.frequency_hz),
            ("head.translation_jitter_var", self.head.translation_jitter_var),
            ("eyebrow.amplitude", self.eyebrow.amplitude),
            ("silent_jitter", self.silent_jitter),
            ("landmark_noise", self.landmark_noise),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{id}: {name} must be a non-negative number, got {v}"));
            }
        }
        if !(self.eyebrow.period_s.is_finite() && self.eyebrow.period_s > 0.0) {
            return Err(format!("{id}: eyebrow.period_s must be positive"));
        }
        if !(self.face_scale.is_finite() && self.face_scale > 0.0) {
            return Err(format!("{id}: face_scale must be positive"));
        }
        if !(self.volume_peak.is_finite() && self.volume_peak >= 0.0 && self.volume_peak <= 0.7) {
            return Err(format!("{id}: volume_peak must lie in [0, 0.7] to avoid clipping"));
        }
        if self.sample_rate == 0 {
            return Err(format!("{id}: sample_rate must be positive"));
        }
        let duration = self.duration_s();
        let mut last_end = 0.0;
        for &[a, b] in &self.silences {
            if !(a.is_finite() && b.is_finite() && a >= last_end && b > a && b <= duration + 1e-9) {
                return Err(format!("{id}: silence [{a}, {b}] must be sorted, disjoint and inside [0, {duration}]"));
            }
            last_end = b;
        }
        if let Some(&f) = self.dropout_frames.iter().find(|&&f| f >= self.n_frames) {
            return Err(format!("{id}: dropout frame {f} is past the last frame"));
        }
        if let Some(q) = &self.iqa {
            for (name, v) in [("aesthetic", q.aesthetic), ("face_quality", q.face_quality), ("mouth_quality", q.mouth_quality)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("{id}: iqa.{name} must lie in [0, 1]"));
                }
            }
            if !(q.noise.is_finite() && q.noise >= 0.0) {
                return Err(format!("{id}: iqa.noise must be non-negative"));
            }
        }
        Ok(())
    }

    fn in_silence(&self, t: f64) -> bool {
        self.silences.iter().any(|&[a, b]| t >= a && t < b)
    }

    /// Speech envelope at time `t`, in `[0, 1]`.
    fn envelope(&self, t: f64, phases: (f64, f64)) -> f64 {
        if t < 0.0 || t >= self.duration_s() || self.in_silence(t) {
            return 0.0;
        }
        let f = self.lip_frequency_hz;
        0.5 + 0.5 * (2.0 * PI * f * t + phases.0).sin() * (0.6 + 0.4 * (2.0 * PI * 0.37 * f * t + phases.1).sin())
    }

    fn vad(&self) -> Vec<VadSegment> {
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for &[a, b] in &self.silences {
            if a > cursor {
                out.push(VadSegment::speech(cursor, a));
            }
            out.push(VadSegment::silence(a, b));
            cursor = b;
        }
        let end = self.duration_s();
        if end > cursor {
            out.push(VadSegment::speech(cursor, end));
        }
        out
    }
}

/// Base face-local layout, before mouth scaling and brow raise.
fn base_layout() -> Vec<Point> {
    let mut p = Vec::with_capacity(72);
    let outer = |x: f64| INNER_HALF_GAP + 2.0 + 6.0 * (1.0 - (x / 25.0).powi(2));
    let inner = |x: f64| INNER_HALF_GAP + 2.0 * (1.0 - (x / 20.0).powi(2));
    for sign in [-1.0, 1.0] {
        for k in 0..11 {
            let x = -25.0 + 5.0 * k as f64;
            p.push([MOUTH_CENTER[0] + x, MOUTH_CENTER[1] + sign * outer(x)]);
        }
        for k in 0..9 {
            let x = -20.0 + 5.0 * k as f64;
            p.push([MOUTH_CENTER[0] + x, MOUTH_CENTER[1] + sign * inner(x)]);
        }
    }
    for cx in [30.0, -30.0] {
        for k in 0..6 {
            let a = 2.0 * PI * k as f64 / 6.0;
            p.push([cx + 8.0 * a.cos(), -20.0 + 4.0 * a.sin()]);
        }
    }
    for cx in [30.0, -30.0] {
        for k in 0..5 {
            let x = cx - 10.0 + 5.0 * k as f64;
            p.push([x, -20.0 - BROW_GAP - 2.0 * (1.0 - ((x - cx) / 10.0).powi(2))]);
        }
    }
    for k in 0..10 {
        let a = PI * (0.1 + 0.8 * k as f64 / 9.0);
        p.push([55.0 * a.cos(), 10.0 + 60.0 * a.sin()]);
    }
    p
}

/// Renders one fixture into a bundle and its audio track.
pub fn generate(spec: &FixtureSpec) -> Result<(FeatureBundle, AudioTrack)> {
    spec.check().map_err(Error::Data)?;
    let n = spec.n_frames;
    let fps = spec.fps;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phases = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
    let head_phase: f64 = rng.random_range(0.0..2.0 * PI);
    let brow_phase: f64 = rng.random_range(0.0..2.0 * PI);
    // Noise draws are made unconditionally so that specs differing only in
    // a magnitude share every random number.
    let mut normals = |count: usize| -> Vec<f64> { (0..count).map(|_| rng.sample(StandardNormal)).collect() };
    let jitter_x = normals(n);
    let jitter_y = normals(n);
    let silent_noise = normals(n);
    let point_noise = normals(n * 72 * 2);
    let iqa_noise = normals(n * 3);

    let base = base_layout();
    let jitter_sd = spec.head.translation_jitter_var.sqrt();
    let duration = spec.duration_s();
    let dropout: std::collections::BTreeSet<usize> = spec.dropout_frames.iter().copied().collect();

    let mut landmarks = Vec::with_capacity(n);
    let mut pose = Vec::with_capacity(n);
    let mut iqa = spec.iqa.map(|_| Vec::with_capacity(n));
    let mut volume = Vec::with_capacity(n);
    for j in 0..n {
        let t = j as f64 / fps;
        let env_audio = spec.envelope(t, phases);
        volume.push(spec.volume_peak * env_audio);
        let lagged = spec.envelope(t - spec.sync_lag_frames as f64 / fps, phases);
        let lambda = if spec.in_silence(t) {
            1.0 + spec.silent_jitter * silent_noise[j]
        } else {
            1.0 + spec.lip_amplitude * lagged
        };
        let raise = spec.eyebrow.amplitude * (0.5 - 0.5 * (2.0 * PI * t / spec.eyebrow.period_s + brow_phase).cos());
        let (dx, dy) = (jitter_sd * jitter_x[j], jitter_sd * jitter_y[j]);
        let s = spec.face_scale;
        let points = base
            .iter()
            .enumerate()
            .map(|(k, &[x, y])| {
                let (x, y) = match k {
                    0..40 => (MOUTH_CENTER[0] + lambda * (x - MOUTH_CENTER[0]), MOUTH_CENTER[1] + lambda * (y - MOUTH_CENTER[1])),
                    52..62 => (x, y - raise),
                    _ => (x, y),
                };
                let nx = spec.landmark_noise * point_noise[(j * 72 + k) * 2];
                let ny = spec.landmark_noise * point_noise[(j * 72 + k) * 2 + 1];
                [FACE_CENTER[0] + s * (x + nx) + dx, FACE_CENTER[1] + s * (y + ny) + dy]
            })
            .collect();
        landmarks.push(LandmarkFrame { frame_index: j, timestamp_s: t, detection_ok: !dropout.contains(&j), points });

        let a = spec.head.amplitude_deg;
        let angle = match spec.head.profile {
            HeadProfile::Static => 0.0,
            HeadProfile::Linear => a * t / duration,
            HeadProfile::Sinusoidal => a * (2.0 * PI * spec.head.frequency_hz * t + head_phase).sin(),
        };
        pose.push(PoseFrame {
            frame_index: j,
            pitch_deg: 0.5 * angle,
            yaw_deg: angle,
            roll_deg: 0.3 * angle,
            center_x: FACE_CENTER[0] + dx,
            center_y: FACE_CENTER[1] + dy,
        });

        if let (Some(q), Some(track)) = (&spec.iqa, iqa.as_mut()) {
            let score = |m: f64, k: usize| (m + q.noise * iqa_noise[j * 3 + k]).clamp(0.0, 1.0);
            track.push(IqaFrame {
                frame_index: j,
                aesthetic: Some(score(q.aesthetic, 0)),
                face_quality: Some(score(q.face_quality, 1)),
                mouth_quality: Some(score(q.mouth_quality, 2)),
            });
        }
    }

    let audio = synthesize_audio(&volume, fps, spec.sample_rate);
    let bundle = FeatureBundle {
        video_id: spec.video_id.clone(),
        fps,
        landmarks,
        pose,
        iqa,
        vad: spec.vad(),
        vad_origin: VadOrigin::Extractor,
        audio_volume: Some(volume),
    };
    Ok((bundle, audio))
}

/// A tone whose RMS over frame `j`'s window is `volume[j]`, up to
/// quantization and partial carrier periods.
pub fn synthesize_audio(volume: &[f64], fps: f64, sample_rate: u32) -> AudioTrack {
    let bound = |j: usize| (j as f64 * sample_rate as f64 / fps + 1e-9).floor() as usize;
    let total = bound(volume.len());
    let mut samples = Vec::with_capacity(total);
    for (j, &v) in volume.iter().enumerate() {
        for s in bound(j)..bound(j + 1) {
            let x = v * SQRT_2 * (2.0 * PI * CARRIER_HZ * s as f64 / sample_rate as f64).sin();
            samples.push((x * 32767.0).round().clamp(-32768.0, 32767.0) as i16);
        }
    }
    AudioTrack { samples, sample_rate }
}

/// Bradley-Terry vote synthesis over a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteSpec {
    pub count: usize,
    pub seed: u64,
    /// Positive strength per source; the left method wins with probability
    /// `s_left / (s_left + s_right)`.
    pub strengths: BTreeMap<String, f64>,
}

/// A set of sources, each a list of fixtures. One source must be named
/// `ground_truth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub sources: BTreeMap<String, Vec<FixtureSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub votes: Option<VoteSpec>,
}

impl CorpusSpec {
    /// Video ids present in every source, sorted.
    pub fn common_videos(&self) -> Vec<String> {
        let mut sets = self.sources.values().map(|v| v.iter().map(|f| f.video_id.clone()).collect::<Vec<_>>());
        let mut common = sets.next().unwrap_or_default();
        for s in sets {
            common.retain(|v| s.contains(v));
        }
        common.sort();
        common
    }

    fn check(&self) -> Result<()> {
        if !self.sources.contains_key(GROUND_TRUTH) {
            return Err(Error::Data(format!("corpus spec has no `{GROUND_TRUTH}` source")));
        }
        for (id, fixtures) in &self.sources {
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                return Err(Error::Data(format!("`{id}` is not usable as a directory name")));
            }
            let mut seen = std::collections::BTreeSet::new();
            for f in fixtures {
                if !seen.insert(&f.video_id) {
                    return Err(Error::Data(format!("{id}: video `{}` listed twice", f.video_id)));
                }
            }
        }
        if self.common_videos().is_empty() {
            return Err(Error::Data("the sources share no video id".into()));
        }
        if let Some(v) = &self.votes {
            for id in self.sources.keys() {
                match v.strengths.get(id) {
                    Some(s) if s.is_finite() && *s > 0.0 => {}
                    _ => return Err(Error::Data(format!("votes: source `{id}` needs a positive strength"))),
                }
            }
        }
        Ok(())
    }
}

/// Draws `spec.count` votes with the study sampler and Bradley-Terry
/// outcomes.
pub fn synthesize_votes(spec: &VoteSpec, methods: Vec<String>, videos: Vec<String>) -> Result<Vec<VoteRecord>> {
    let plan = StudyPlan::new(methods, videos).map_err(|e| Error::Data(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut votes = Vec::with_capacity(spec.count);
    let mut clock: u64 = 1_700_000_000_000;
    for k in 0..spec.count {
        let d = sample_pair(&plan, &mut rng);
        let sl = spec.strengths.get(&d.left_method).copied().unwrap_or(1.0);
        let sr = spec.strengths.get(&d.right_method).copied().unwrap_or(1.0);
        let choice = if rng.random_bool(sl / (sl + sr)) { Choice::Left } else { Choice::Right };
        let think: u64 = rng.random_range(3_000..20_000);
        votes.push(VoteRecord {
            pair_id: format!("p{k:06}"),
            video_id: d.video_id,
            left_method: d.left_method,
            right_method: d.right_method,
            choice,
            issued_at: clock,
            voted_at: clock + think,
            session_id: format!("s{:02}", k % 25),
        });
        clock += think + 500;
    }
    Ok(votes)
}

/// Writes a corpus: `topology.json`, `manifest.json`, one directory per
/// source and video, and `votes.jsonl` when votes are requested.
pub fn write_corpus(spec: &CorpusSpec, out: &Path, overwrite: bool) -> Result<()> {
    spec.check()?;
    for f in spec.sources.values().flatten() {
        f.check().map_err(Error::Data)?;
    }
    if out.exists() {
        let occupied = fs::read_dir(out).map_err(Error::io(out))?.next().is_some();
        if occupied && !overwrite {
            return Err(Error::Exists { path: out.to_path_buf() });
        }
        if occupied {
            // Only a directory that looks like an earlier corpus is replaced.
            if !out.join(MANIFEST_FILE).is_file() {
                return Err(Error::Data(format!(
                    "{} is not empty and holds no {MANIFEST_FILE}; refusing to replace it",
                    out.display()
                )));
            }
            fs::remove_dir_all(out).map_err(Error::io(out))?;
        }
    }
    fs::create_dir_all(out).map_err(Error::io(out))?;
    write_topology(&out.join(TOPOLOGY_FILE), &synthetic_topology())?;

    let jobs: Vec<(&String, &FixtureSpec)> =
        spec.sources.iter().flat_map(|(id, fs)| fs.iter().map(move |f| (id, f))).collect();
    use rayon::prelude::*;
    jobs.par_iter().try_for_each(|(source, f)| {
        let (bundle, audio) = generate(f)?;
        let params = serde_json::to_value(f).expect("specs serialize");
        write_feature_bundle(&out.join(source).join(&f.video_id), &bundle, Some(&audio), Some(params))
    })?;

    let videos = spec.common_videos();
    let manifest = ManifestFile {
        ground_truth: GROUND_TRUTH.into(),
        models: spec.sources.keys().filter(|k| *k != GROUND_TRUTH).map(|k| (k.clone(), k.into())).collect(),
        videos: Some(videos.clone()),
        topology: Some(TOPOLOGY_FILE.into()),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    if let Some(v) = &spec.votes {
        let votes = synthesize_votes(v, spec.sources.keys().cloned().collect(), videos)?;
        write_jsonl(&out.join(VOTES_FILE), &votes)?;
    }
    Ok(())
}

/// Ground truth plus five models of graded fidelity over three videos, with
/// votes whose strengths follow that grading.
pub fn demo_corpus() -> CorpusSpec {
    let videos = [("talker-A", 11, vec![[3.0, 3.6], [7.2, 7.8]]), ("talker-B", 12, vec![[4.0, 4.8]]), ("talker-C", 13, vec![[1.5, 2.0], [6.0, 6.5], [8.5, 9.2]])];
    struct Style {
        lip: f64,
        head: (HeadProfile, f64, f64),
        brow: f64,
        lag: i64,
        silent: f64,
        noise: f64,
        iqa: (f64, f64, f64),
        strength: f64,
    }
    let styles = [
        (GROUND_TRUTH, Style { lip: 0.30, head: (HeadProfile::Sinusoidal, 6.0, 1.0), brow: 3.0, lag: 0, silent: 0.004, noise: 0.05, iqa: (0.62, 0.70, 0.66), strength: 2.0 }),
        ("vivid", Style { lip: 0.28, head: (HeadProfile::Sinusoidal, 5.0, 0.9), brow: 2.7, lag: 0, silent: 0.006, noise: 0.06, iqa: (0.60, 0.69, 0.65), strength: 1.6 }),
        ("steady", Style { lip: 0.22, head: (HeadProfile::Sinusoidal, 2.5, 0.5), brow: 1.8, lag: 1, silent: 0.008, noise: 0.05, iqa: (0.63, 0.66, 0.62), strength: 1.2 }),
        ("laggy", Style { lip: 0.30, head: (HeadProfile::Sinusoidal, 5.5, 1.0), brow: 2.5, lag: 6, silent: 0.010, noise: 0.08, iqa: (0.57, 0.60, 0.58), strength: 0.9 }),
        ("jittery", Style { lip: 0.46, head: (HeadProfile::Sinusoidal, 12.0, 4.0), brow: 5.5, lag: 2, silent: 0.040, noise: 0.20, iqa: (0.52, 0.55, 0.50), strength: 0.6 }),
        ("stiff", Style { lip: 0.10, head: (HeadProfile::Linear, 2.0, 0.1), brow: 0.4, lag: 3, silent: 0.002, noise: 0.03, iqa: (0.50, 0.52, 0.45), strength: 0.45 }),
    ];
    let mut sources = BTreeMap::new();
    let mut strengths = BTreeMap::new();
    for (id, s) in &styles {
        let fixtures = videos
            .iter()
            .map(|(vid, seed, silences)| FixtureSpec {
                lip_amplitude: s.lip,
                head: HeadSpec { profile: s.head.0, amplitude_deg: s.head.1, frequency_hz: 0.4, translation_jitter_var: s.head.2 },
                eyebrow: EyebrowSpec { amplitude: s.brow, period_s: 2.5 },
                silences: silences.clone(),
                sync_lag_frames: s.lag,
                silent_jitter: s.silent,
                landmark_noise: s.noise,
                iqa: Some(IqaSpec { aesthetic: s.iqa.0, face_quality: s.iqa.1, mouth_quality: s.iqa.2, noise: 0.02 }),
                ..FixtureSpec::new(*vid, *seed)
            })
            .collect();
        sources.insert(id.to_string(), fixtures);
        strengths.insert(id.to_string(), s.strength);
    }
    CorpusSpec { sources, votes: Some(VoteSpec { count: 900, seed: 2024, strengths }) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use theval_core::feature::validate_bundle;

    #[test]
    fn generated_bundles_validate() {
        let topo = synthetic_topology();
        for f in demo_corpus().sources.values().flatten() {
            let (b, _) = generate(f).unwrap();
            let report = validate_bundle(&b, &topo);
            assert!(report.is_clean(), "{}: {:?}", f.video_id, report.violations);
        }
    }

    #[test]
    fn audio_rms_tracks_volume() {
        let mut spec = FixtureSpec::new("v", 3);
        spec.silences = vec![[2.0, 2.6]];
        let (b, audio) = generate(&spec).unwrap();
        let rms = theval_core::audio::frame_rms(&audio.normalized(), audio.sample_rate, spec.fps, spec.n_frames).unwrap();
        for (got, want) in rms.values.iter().zip(b.audio_volume.as_ref().unwrap()) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn spec_checks() {
        let mut s = FixtureSpec::new("v", 0);
        s.lip_amplitude = -1.0;
        assert!(s.check().unwrap_err().contains("lip_amplitude"));
        let mut s = FixtureSpec::new("v", 0);
        s.silences = vec![[9.0, 11.0]];
        assert!(s.check().is_err());
        let mut s = FixtureSpec::new("../x", 0);
        s.n_frames = 10;
        assert!(s.check().is_err());
    }

    #[test]
    fn demo_spec_round_trips_through_json() {
        let spec = demo_corpus();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<CorpusSpec>(&text).unwrap(), spec);
    }
}
