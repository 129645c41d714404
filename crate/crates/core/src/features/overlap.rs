use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnomonic::SphericalCoord;
use crate::icosphere::Vec3;
use crate::raster::{pixel_center, EquirectImage, Interp};

/// Rigid transform taking camera coordinates to world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

/// JSON form of a [`Pose`]: row-major rotation and a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if !(err <= 1e-9) || rotation.determinant() <= 0.0 {
            return Err(Error::Validation(format!(
                "rotation is not orthonormal (deviation {err:e})"
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("translation is not finite".into()));
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }
}

impl TryFrom<&PoseRecord> for Pose {
    type Error = Error;

    fn try_from(r: &PoseRecord) -> Result<Self> {
        let m = r.rotation;
        Pose::new(
            Matrix3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ),
            Vec3::from(r.translation),
        )
    }
}

/// Panorama with per-pixel range (meters along the ray) and camera pose.
#[derive(Debug, Clone)]
pub struct PosedSphericalImage {
    pub color: Option<EquirectImage>,
    pub depth: EquirectImage,
    pub pose: Pose,
}

impl PosedSphericalImage {
    pub fn new(color: Option<EquirectImage>, depth: EquirectImage, pose: Pose) -> Result<Self> {
        if depth.channels() != 1 {
            return Err(Error::Validation(format!(
                "depth needs one channel, found {}",
                depth.channels()
            )));
        }
        if let Some(c) = &color {
            if (c.height(), c.width()) != (depth.height(), depth.width()) {
                return Err(Error::Validation(format!(
                    "color {}x{} and depth {}x{} differ in size",
                    c.height(),
                    c.width(),
                    depth.height(),
                    depth.width()
                )));
            }
        }
        Ok(PosedSphericalImage { color, depth, pose })
    }

    /// Range along `dir` (camera frame), nearest pixel; `None` when invalid.
    fn range_toward(&self, coord: &SphericalCoord) -> Option<f64> {
        let mut out = [0f32];
        self.depth.sample_at(coord, Interp::Nearest, &mut out);
        valid_depth(out[0])
    }
}

fn valid_depth(d: f32) -> Option<f64> {
    (d.is_finite() && d > 0.0).then_some(d as f64)
}

/// A point is visible when its range matches the recorded depth within
/// `max(relative * range, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionTolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for OcclusionTolerance {
    fn default() -> Self {
        OcclusionTolerance {
            relative: 0.03,
            absolute: 0.05,
        }
    }
}

impl OcclusionTolerance {
    pub fn accepts(&self, expected: f64, recorded: f64) -> bool {
        (recorded - expected).abs() <= (self.relative * expected).max(self.absolute)
    }
}

/// Whether the world point `world` is seen unoccluded by `viewer`.
pub fn visible_from(viewer: &PosedSphericalImage, world: &Vec3, tol: &OcclusionTolerance) -> bool {
    let local = viewer.pose.to_camera(world);
    let range = local.norm();
    if !(range > 0.0) {
        return false;
    }
    match viewer.range_toward(&SphericalCoord::from_vec(&local)) {
        Some(recorded) => tol.accepts(range, recorded),
        None => false,
    }
}

/// `(visible, valid)` counts of `a`'s depth-backed pixels as seen from `b`.
pub fn directional_counts(
    a: &PosedSphericalImage,
    b: &PosedSphericalImage,
    tol: &OcclusionTolerance,
) -> (u64, u64) {
    let (h, w) = (a.depth.height(), a.depth.width());
    let depth = a.depth.samples();
    (0..h)
        .into_par_iter()
        .map(|row| {
            let mut visible = 0u64;
            let mut valid = 0u64;
            for col in 0..w {
                let Some(range) = valid_depth(depth[row * w + col]) else {
                    continue;
                };
                valid += 1;
                let world = a
                    .pose
                    .to_world(&(pixel_center(row, col, h, w).to_vec() * range));
                if visible_from(b, &world, tol) {
                    visible += 1;
                }
            }
            (visible, valid)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1))
}

/// Average of the two directional visible fractions.
pub fn fov_overlap(a: &PosedSphericalImage, b: &PosedSphericalImage) -> Result<f64> {
    fov_overlap_with(a, b, &OcclusionTolerance::default())
}

pub fn fov_overlap_with(
    a: &PosedSphericalImage,
    b: &PosedSphericalImage,
    tol: &OcclusionTolerance,
) -> Result<f64> {
    let fraction = |x: &PosedSphericalImage, y: &PosedSphericalImage, which: &str| -> Result<f64> {
        let (visible, valid) = directional_counts(x, y, tol);
        if valid == 0 {
            return Err(Error::UndefinedOverlap(format!(
                "image {which} has no valid depth"
            )));
        }
        Ok(visible as f64 / valid as f64)
    };
    let ab = fraction(a, b, "a")?;
    let ba = fraction(b, a, "b")?;
    Ok(0.5 * (ab + ba))
}

/// Number of keypoint directions of `a` (camera frame) whose depth-backed
/// points are visible from `b`.
pub fn covisible_count(
    keypoints: &[SphericalCoord],
    a: &PosedSphericalImage,
    b: &PosedSphericalImage,
    tol: &OcclusionTolerance,
) -> usize {
    keypoints
        .iter()
        .filter(|c| {
            a.range_toward(c).is_some_and(|range| {
                let world = a.pose.to_world(&(c.to_vec() * range));
                visible_from(b, &world, tol)
            })
        })
        .count()
}
