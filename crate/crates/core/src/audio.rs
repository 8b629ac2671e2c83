//! Frame-aligned audio volume and speech / silence frame sets.
//!
//! RMS windows tile the video frames exactly: frame `t` owns the samples in
//! `[t / fps, (t + 1) / fps)`. A frame belongs to a VAD segment when its
//! midpoint `(t + 0.5) / fps` falls inside `[start, end)`.

use alloc::vec::Vec;
use core::fmt;

use crate::feature::VadSegment;

/// Minimum silence duration kept for the stability metric, seconds.
pub const MIN_SILENCE_S: f64 = 0.3;

/// Slack for comparing segment durations against the silence threshold, so
/// that a segment written as exactly 0.3 s is not promoted by rounding.
const DURATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum AudioError {
    EmptyAudio,
    InvalidRate { sample_rate: u32, fps: f64 },
    /// Frame `frame` would be computed from padding only although it is not
    /// the final frame.
    AudioTooShort { frame: usize, samples: usize },
    EmptyWindow { frame: usize },
}

impl fmt::Display for AudioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyAudio => f.write_str("audio has no samples"),
            Self::InvalidRate { sample_rate, fps } => {
                write!(f, "invalid sample rate {sample_rate} Hz or frame rate {fps}")
            }
            Self::AudioTooShort { frame, samples } => {
                write!(f, "audio ends ({samples} samples) before frame {frame} starts")
            }
            Self::EmptyWindow { frame } => {
                write!(f, "frame {frame} spans no audio samples; sample rate too low for the frame rate")
            }
        }
    }
}

impl core::error::Error for AudioError {}

/// Per-frame RMS energy, one value per video frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVolumeSeries {
    pub values: Vec<f64>,
    pub fps: f64,
}

fn window_start(frame: usize, sample_rate: u32, fps: f64) -> usize {
    libm::floor(frame as f64 * sample_rate as f64 / fps + 1e-9) as usize
}

/// RMS of the samples under each frame, zero-padding past the end of the
/// audio.
pub fn frame_rms(samples: &[f64], sample_rate: u32, fps: f64, n_frames: usize) -> Result<FrameVolumeSeries, AudioError> {
    if samples.is_empty() {
        return Err(AudioError::EmptyAudio);
    }
    if sample_rate == 0 || !(fps.is_finite() && fps > 0.0) {
        return Err(AudioError::InvalidRate { sample_rate, fps });
    }
    let mut values = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = window_start(t, sample_rate, fps);
        let end = window_start(t + 1, sample_rate, fps);
        if end <= start {
            return Err(AudioError::EmptyWindow { frame: t });
        }
        if start >= samples.len() && t + 1 < n_frames {
            return Err(AudioError::AudioTooShort { frame: t, samples: samples.len() });
        }
        let lo = start.min(samples.len());
        let hi = end.min(samples.len());
        let energy: f64 = samples[lo..hi].iter().map(|s| s * s).sum();
        values.push(libm::sqrt(energy / (end - start) as f64));
    }
    Ok(FrameVolumeSeries { values, fps })
}

/// Speech frames and qualifying silent frames of one video.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameSets {
    pub speech_frames: Vec<usize>,
    pub silent_frames: Vec<usize>,
}

fn frames_in(seg: &VadSegment, fps: f64, n_frames: usize, out: &mut Vec<usize>) {
    // first frame whose midpoint is >= start
    let first = libm::ceil(seg.start_s * fps - 0.5).max(0.0) as usize;
    for t in first..n_frames {
        let mid = (t as f64 + 0.5) / fps;
        if mid >= seg.end_s {
            break;
        }
        if mid >= seg.start_s {
            out.push(t);
        }
    }
}

/// Converts VAD segments into frame index sets. Silences count only when
/// strictly longer than `min_silence_s`.
pub fn derive_frame_sets(vad: &[VadSegment], fps: f64, n_frames: usize, min_silence_s: f64) -> FrameSets {
    let mut sets = FrameSets::default();
    for seg in vad {
        if seg.is_speech {
            frames_in(seg, fps, n_frames, &mut sets.speech_frames);
        } else if seg.duration() > min_silence_s + DURATION_SLACK {
            frames_in(seg, fps, n_frames, &mut sets.silent_frames);
        }
    }
    sets.speech_frames.sort_unstable();
    sets.speech_frames.dedup();
    sets.silent_frames.sort_unstable();
    sets.silent_frames.dedup();
    sets
}

/// VAD derived from frame volume when the extractor supplied none.
#[derive(Debug, Clone, PartialEq)]
pub struct FallbackVad {
    pub segments: Vec<VadSegment>,
    /// Set when the audio is silent throughout, so no threshold exists.
    pub low_confidence: bool,
}

/// Frames quieter than `threshold_fraction * max(volume)` become silence;
/// runs of equal labels merge into segments.
pub fn energy_vad_fallback(volume: &FrameVolumeSeries, threshold_fraction: f64) -> FallbackVad {
    let n = volume.values.len();
    let fps = volume.fps;
    let peak = volume.values.iter().copied().fold(0.0, f64::max);
    if n == 0 {
        return FallbackVad { segments: Vec::new(), low_confidence: true };
    }
    if peak <= 0.0 {
        return FallbackVad { segments: alloc::vec![VadSegment::silence(0.0, n as f64 / fps)], low_confidence: true };
    }
    let threshold = threshold_fraction * peak;
    let mut segments: Vec<VadSegment> = Vec::new();
    let mut run_start = 0;
    for t in 1..=n {
        let speech_at = |i: usize| volume.values[i] >= threshold;
        if t == n || speech_at(t) != speech_at(run_start) {
            segments.push(VadSegment {
                start_s: run_start as f64 / fps,
                end_s: t as f64 / fps,
                is_speech: speech_at(run_start),
            });
            run_start = t;
        }
    }
    FallbackVad { segments, low_confidence: false }
}
