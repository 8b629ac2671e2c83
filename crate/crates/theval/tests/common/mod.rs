//! Shared test support: a second, deliberately plain implementation of
//! every metric and a generator of random valid bundles.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use theval::fixtures::synthetic_topology;
use theval_core::feature::{FaceTopology, FeatureBundle, IqaFrame, LandmarkFrame, PoseFrame, VadOrigin, VadSegment};

pub mod oracle {
    use theval_core::feature::{FaceTopology, FeatureBundle, LandmarkFrame};

    pub fn mean(x: &[f64]) -> Option<f64> {
        if x.is_empty() {
            return None;
        }
        let mut s = 0.0;
        for v in x {
            s += v;
        }
        Some(s / x.len() as f64)
    }

    /// Two-pass sample variance; zero for a single value.
    pub fn var(x: &[f64]) -> f64 {
        if x.len() < 2 {
            return 0.0;
        }
        let m = mean(x).unwrap();
        let mut ss = 0.0;
        for v in x {
            ss += (v - m) * (v - m);
        }
        ss / (x.len() - 1) as f64
    }

    pub fn sd(x: &[f64]) -> f64 {
        var(x).sqrt()
    }

    pub fn median(x: &[f64]) -> f64 {
        let mut v = x.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    fn avg(points: &[[f64; 2]], idx: &[usize], axis: usize) -> f64 {
        idx.iter().map(|&i| points[i][axis]).sum::<f64>() / idx.len() as f64
    }

    /// Eye-centroid distance, or `None` when undetected or degenerate.
    pub fn d_io(f: &LandmarkFrame, t: &FaceTopology) -> Option<f64> {
        if !f.detection_ok {
            return None;
        }
        let p = &f.points;
        let dx = avg(p, &t.left_eye_indices, 0) - avg(p, &t.right_eye_indices, 0);
        let dy = avg(p, &t.left_eye_indices, 1) - avg(p, &t.right_eye_indices, 1);
        let d = (dx * dx + dy * dy).sqrt();
        (d >= 1e-12).then_some(d)
    }

    /// `(speech, silent)` frame indices by midpoint membership.
    pub fn frame_sets(b: &FeatureBundle) -> (Vec<usize>, Vec<usize>) {
        let mut speech = Vec::new();
        let mut silent = Vec::new();
        for j in 0..b.landmarks.len() {
            let mid = (j as f64 + 0.5) / b.fps;
            for s in &b.vad {
                if mid >= s.start_s && mid < s.end_s {
                    if s.is_speech {
                        speech.push(j);
                    } else if s.end_s - s.start_s > 0.3 + 1e-9 {
                        silent.push(j);
                    }
                }
            }
        }
        (speech, silent)
    }

    pub fn iqa(b: &FeatureBundle, which: usize) -> Option<f64> {
        let q = b.iqa.as_ref()?;
        let vals: Vec<f64> = q
            .iter()
            .filter_map(|f| [f.aesthetic, f.mouth_quality, f.face_quality][which])
            .collect();
        mean(&vals)
    }

    pub fn lip_dynamics(b: &FeatureBundle, t: &FaceTopology) -> Option<f64> {
        let frames: Vec<&LandmarkFrame> = b.landmarks.iter().filter(|f| f.detection_ok).collect();
        if frames.len() < 2 {
            return None;
        }
        let mut total = 0.0;
        for &(i, k) in &t.lip_pair_set {
            let d: Vec<f64> = frames
                .iter()
                .map(|f| {
                    let (a, c) = (f.points[i], f.points[k]);
                    ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt()
                })
                .collect();
            total += sd(&d);
        }
        Some(total / t.lip_pair_set.len() as f64)
    }

    pub fn head_motion(b: &FeatureBundle) -> Option<f64> {
        let pose: Vec<_> = b.pose.iter().zip(&b.landmarks).filter(|(_, l)| l.detection_ok).map(|(p, _)| p).collect();
        if pose.len() < 2 {
            return None;
        }
        let mut s_ang = 0.0;
        let mut v_d = 0.0;
        for k in 0..3 {
            let a: Vec<f64> = pose.iter().map(|p| [p.pitch_deg, p.yaw_deg, p.roll_deg][k]).collect();
            let d: Vec<f64> = (1..a.len()).map(|i| a[i] - a[i - 1]).collect();
            s_ang += sd(&a) / 3.0;
            v_d += var(&d) / 3.0;
        }
        let cx: Vec<f64> = pose.iter().map(|p| p.center_x).collect();
        let cy: Vec<f64> = pose.iter().map(|p| p.center_y).collect();
        let v_t = (var(&cx) + var(&cy)) / 2.0;
        Some((s_ang * v_d + v_t).sqrt())
    }

    pub fn eyebrow(b: &FeatureBundle, t: &FaceTopology) -> Option<f64> {
        let mut r = Vec::new();
        for f in &b.landmarks {
            let Some(d) = d_io(f, t) else { continue };
            let p = &f.points;
            let l = (avg(p, &t.left_brow_indices, 1) - avg(p, &t.left_eye_indices, 1)).abs();
            let rr = (avg(p, &t.right_brow_indices, 1) - avg(p, &t.right_eye_indices, 1)).abs();
            r.push((l + rr) / 2.0 / d);
        }
        (r.len() >= 2).then(|| sd(&r))
    }

    pub fn silent_stability(b: &FeatureBundle, t: &FaceTopology) -> Option<f64> {
        let (_, silent) = frame_sets(b);
        let mut g = Vec::new();
        for j in silent {
            let f = &b.landmarks[j];
            let Some(d) = d_io(f, t) else { continue };
            let s: f64 = t.stability_pair_set.iter().map(|&(u, l)| (f.points[u][1] - f.points[l][1]).abs()).sum();
            g.push(s / t.stability_pair_set.len() as f64 / d);
        }
        if g.is_empty() {
            return None;
        }
        let m = median(&g);
        let dev: Vec<f64> = g.iter().map(|x| (x - m).abs()).collect();
        Some(median(&dev))
    }

    pub fn lip_sync(b: &FeatureBundle, t: &FaceTopology) -> Option<f64> {
        let vol = b.audio_volume.as_ref()?;
        let (speech, _) = frame_sets(b);
        let mut o = Vec::new();
        let mut v = Vec::new();
        for j in speech {
            let f = &b.landmarks[j];
            let Some(d) = d_io(f, t) else { continue };
            let gap = avg(&f.points, &t.upper_lip_indices, 1) - avg(&f.points, &t.lower_lip_indices, 1);
            o.push(gap.abs() / d);
            v.push(vol[j]);
        }
        if o.is_empty() {
            return None;
        }
        let lo = |x: &[f64]| x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = |x: &[f64]| x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (ol, oh, vl, vh) = (lo(&o), hi(&o), lo(&v), hi(&v));
        let mut s = 0.0;
        for k in 0..o.len() {
            s += ((o[k] - ol) / (oh - ol + 1e-8) - (v[k] - vl) / (vh - vl + 1e-8)).abs();
        }
        Some(s / o.len() as f64)
    }

    pub fn lmd(a: &FeatureBundle, b: &FeatureBundle, idx: &[usize]) -> Option<f64> {
        let mut per_frame = Vec::new();
        for (fa, fb) in a.landmarks.iter().zip(&b.landmarks) {
            if fa.detection_ok && fb.detection_ok {
                let d: Vec<f64> = idx
                    .iter()
                    .map(|&k| ((fa.points[k][0] - fb.points[k][0]).powi(2) + (fa.points[k][1] - fb.points[k][1]).powi(2)).sqrt())
                    .collect();
                per_frame.push(mean(&d).unwrap());
            }
        }
        mean(&per_frame)
    }

    /// All eight metrics in column order.
    pub fn metrics(b: &FeatureBundle, t: &FaceTopology) -> [Option<f64>; 8] {
        [
            iqa(b, 0),
            iqa(b, 1),
            iqa(b, 2),
            lip_dynamics(b, t),
            head_motion(b),
            eyebrow(b, t),
            silent_stability(b, t),
            lip_sync(b, t),
        ]
    }

    /// `1 - |m - g| / g` clamped, with the degenerate-GT branch.
    pub fn normalize(m: f64, g: f64) -> f64 {
        if g < 1e-6 {
            if m.abs() < 1e-6 {
                1.0
            } else {
                0.0
            }
        } else {
            (1.0 - (m - g).abs() / g).clamp(0.0, 1.0)
        }
    }
}

/// `|a - b|` relative to the larger magnitude, with an absolute floor for
/// values that are zero up to rounding.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-300 {
        return 0.0;
    }
    (a - b).abs() / scale
}

pub fn topology() -> FaceTopology {
    synthetic_topology()
}

/// A random bundle that passes validation: random face geometry with
/// independent per-frame noise, random VAD with silences on both sides of
/// the 0.3 s threshold, a few failed detections and partially scored IQA.
pub fn random_bundle(seed: u64, topo: &FaceTopology) -> FeatureBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fps = [24.0, 25.0, 30.0][rng.random_range(0..3)];
    let n = rng.random_range(60..200);
    let noise = Normal::new(0.0, rng.random_range(0.2..3.0)).unwrap();
    let center = [rng.random_range(150.0..350.0), rng.random_range(150.0..350.0)];
    let base: Vec<[f64; 2]> = (0..topo.total_points)
        .map(|i| {
            let (ox, oy) = if topo.left_eye_indices.contains(&i) || topo.left_brow_indices.contains(&i) {
                (35.0, -25.0)
            } else if topo.right_eye_indices.contains(&i) || topo.right_brow_indices.contains(&i) {
                (-35.0, -25.0)
            } else if topo.upper_lip_indices.contains(&i) {
                (0.0, 35.0)
            } else if topo.lower_lip_indices.contains(&i) {
                (0.0, 50.0)
            } else {
                (0.0, 0.0)
            };
            let brow = if topo.left_brow_indices.contains(&i) || topo.right_brow_indices.contains(&i) { -15.0 } else { 0.0 };
            [center[0] + ox + rng.random_range(-8.0..8.0), center[1] + oy + brow + rng.random_range(-4.0..4.0)]
        })
        .collect();

    let mut landmarks = Vec::with_capacity(n);
    let mut pose = Vec::with_capacity(n);
    let mut iqa = Vec::with_capacity(n);
    let mut volume = Vec::with_capacity(n);
    let (mut yaw, mut pitch, mut roll) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..n {
        let points = base.iter().map(|p| [p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng)]).collect();
        let detection_ok = rng.random_bool(0.95);
        landmarks.push(LandmarkFrame { frame_index: j, timestamp_s: j as f64 / fps, detection_ok, points });
        yaw = (yaw + rng.random_range(-2.0..2.0)).clamp(-60.0, 60.0);
        pitch = (pitch + rng.random_range(-1.0..1.0)).clamp(-40.0, 40.0);
        roll = (roll + rng.random_range(-1.0..1.0)).clamp(-30.0, 30.0);
        pose.push(PoseFrame {
            frame_index: j,
            pitch_deg: pitch,
            yaw_deg: yaw,
            roll_deg: roll,
            center_x: center[0] + rng.random_range(-3.0..3.0),
            center_y: center[1] + rng.random_range(-3.0..3.0),
        });
        let score = |rng: &mut ChaCha8Rng| rng.random_bool(0.9).then(|| rng.random_range(0.0..1.0));
        iqa.push(IqaFrame { frame_index: j, aesthetic: score(&mut rng), face_quality: score(&mut rng), mouth_quality: score(&mut rng) });
        volume.push(if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..0.5) });
    }

    let duration = n as f64 / fps;
    let mut vad = Vec::new();
    let mut t = 0.0;
    let mut speech = rng.random_bool(0.5);
    while t < duration {
        let len = if speech { rng.random_range(0.2..1.5) } else { [0.2, 0.29, 0.31, 0.5, 0.9][rng.random_range(0..5)] };
        let end = (t + len).min(duration);
        vad.push(VadSegment { start_s: t, end_s: end, is_speech: speech });
        t = end;
        speech = !speech;
    }

    FeatureBundle {
        video_id: format!("rand-{seed}"),
        fps,
        landmarks,
        pose,
        iqa: rng.random_bool(0.9).then_some(iqa),
        vad,
        vad_origin: VadOrigin::Extractor,
        audio_volume: rng.random_bool(0.9).then_some(volume),
    }
}

/// A study directory with `k` methods (the first named `ground_truth`)
/// each holding `v` tiny stimulus files, and its config.
pub fn study_config(root: &std::path::Path, k: usize, v: usize, seed: u64) -> theval::service::StudyConfig {
    use std::collections::BTreeMap;
    let mut methods = BTreeMap::new();
    for m in 0..k {
        let name = if m == 0 { "ground_truth".to_owned() } else { format!("model{m:02}") };
        let dir = root.join(&name);
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..v {
            std::fs::write(dir.join(format!("video{i:02}.mp4")), format!("{name}/{i}").repeat(64)).unwrap();
        }
        methods.insert(name, dir);
    }
    let file = theval::service::StudyConfigFile {
        methods,
        votes_path: root.join("votes.jsonl"),
        port: 0,
        seed,
        pair_ttl_s: 3600,
        balance_pairs: false,
        static_dir: None,
    };
    theval::service::StudyConfig::from_file(file, root).unwrap()
}
