//! Scale-free scalar signals derived from one landmark frame.
//!
//! "Vertical" is the image y-axis; no roll correction is applied. Eye and
//! brow positions are the centroids of their index sets.

use alloc::vec::Vec;
use core::fmt;

use crate::feature::{FaceTopology, LandmarkFrame, Point};

/// Interocular distances below this are treated as a degenerate face.
pub const MIN_INTEROCULAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryError {
    /// The frame's landmark detection failed.
    NoDetection { frame: usize },
    /// Eye centroids coincide, so nothing can be normalized by them.
    DegenerateFace { frame: usize },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoDetection { frame } => write!(f, "frame {frame}: landmark detection failed"),
            Self::DegenerateFace { frame } => write!(f, "frame {frame}: eye centroids coincide"),
        }
    }
}

impl core::error::Error for GeometryError {}

fn centroid(points: &[Point], indices: &[usize]) -> Point {
    let n = indices.len() as f64;
    let (sx, sy) = indices.iter().fold((0.0, 0.0), |(sx, sy), &i| (sx + points[i][0], sy + points[i][1]));
    [sx / n, sy / n]
}

fn mean_y(points: &[Point], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| points[i][1]).sum::<f64>() / indices.len() as f64
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

fn detected(frame: &LandmarkFrame) -> Result<(), GeometryError> {
    if frame.detection_ok {
        Ok(())
    } else {
        Err(GeometryError::NoDetection { frame: frame.frame_index })
    }
}

/// Distance between the two eye centroids, in pixels.
pub fn interocular_distance(frame: &LandmarkFrame, topo: &FaceTopology) -> Result<f64, GeometryError> {
    detected(frame)?;
    let left = centroid(&frame.points, &topo.left_eye_indices);
    let right = centroid(&frame.points, &topo.right_eye_indices);
    let d = dist(left, right);
    if d < MIN_INTEROCULAR {
        return Err(GeometryError::DegenerateFace { frame: frame.frame_index });
    }
    Ok(d)
}

/// `|mean y(upper lip) - mean y(lower lip)| / d_io`.
pub fn mouth_openness(frame: &LandmarkFrame, topo: &FaceTopology) -> Result<f64, GeometryError> {
    let d_io = interocular_distance(frame, topo)?;
    let gap = mean_y(&frame.points, &topo.upper_lip_indices) - mean_y(&frame.points, &topo.lower_lip_indices);
    Ok(gap.abs() / d_io)
}

/// Euclidean distance of every pair in `lip_pair_set`, in set order.
pub fn lip_pair_distances(frame: &LandmarkFrame, topo: &FaceTopology) -> Result<Vec<f64>, GeometryError> {
    detected(frame)?;
    let p = &frame.points;
    Ok(topo.lip_pair_set.iter().map(|&(a, b)| dist(p[a], p[b])).collect())
}

/// Mean over the stability pairs of `|y_upper - y_lower| / d_io`.
pub fn lip_vertical_distances(frame: &LandmarkFrame, topo: &FaceTopology) -> Result<f64, GeometryError> {
    let d_io = interocular_distance(frame, topo)?;
    let p = &frame.points;
    let total: f64 = topo.stability_pair_set.iter().map(|&(u, l)| (p[u][1] - p[l][1]).abs() / d_io).sum();
    Ok(total / topo.stability_pair_set.len() as f64)
}

/// Per-side vertical gap between brow and eye centroids, averaged over both
/// sides and divided by `d_io`.
pub fn eyebrow_distance(frame: &LandmarkFrame, topo: &FaceTopology) -> Result<f64, GeometryError> {
    let d_io = interocular_distance(frame, topo)?;
    let p = &frame.points;
    let side = |brow: &[usize], eye: &[usize]| (centroid(p, brow)[1] - centroid(p, eye)[1]).abs();
    let d_eb = 0.5 * (side(&topo.left_brow_indices, &topo.left_eye_indices)
        + side(&topo.right_brow_indices, &topo.right_eye_indices));
    Ok(d_eb / d_io)
}

/// One named real per frame; `None` where the frame was unusable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSignal {
    pub name: &'static str,
    pub values: Vec<Option<f64>>,
}

impl ScalarSignal {
    pub fn from_frames<F>(name: &'static str, frames: &[LandmarkFrame], topo: &FaceTopology, f: F) -> Self
    where
        F: Fn(&LandmarkFrame, &FaceTopology) -> Result<f64, GeometryError>,
    {
        Self { name, values: frames.iter().map(|fr| f(fr, topo).ok()).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Present values, in frame order.
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Present values restricted to the given frame indices.
    pub fn select(&self, frames: &[usize]) -> Vec<f64> {
        frames.iter().filter_map(|&j| self.values.get(j).copied().flatten()).collect()
    }

    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}
