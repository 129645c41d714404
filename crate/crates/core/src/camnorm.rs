//! Resampling perspective images to a common camera whose angular resolution
//! matches a spherical level, with random principal-point shifts so crops
//! cover the whole source image.
//!
//! Pixel coordinates here are continuous with the image spanning `[0, W] x [0, H]`;
//! pixel `(i, j)` has its center at `(j + 0.5, i + 0.5)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ColumnBorder, GridView, Interp};

/// Relative slack when checking shifts against their legal interval.
const SHIFT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 || self.width == 0 || self.height == 0 {
            return Err(Error::invalid(format!(
                "invalid camera intrinsics {self:?}"
            )));
        }
        Ok(())
    }

    /// Field of view per axis, `2 atan(W / 2f)`.
    pub fn fov(&self) -> (f64, f64) {
        (
            2.0 * (self.width as f64 / (2.0 * self.fx)).atan(),
            2.0 * (self.height as f64 / (2.0 * self.fy)).atan(),
        )
    }
}

/// Radians per pixel on each axis.
pub fn angular_resolution(cam: &CameraIntrinsics) -> (f64, f64) {
    let (ox, oy) = cam.fov();
    (ox / cam.width as f64, oy / cam.height as f64)
}

/// Square virtual camera with isotropic angular resolution `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTarget {
    /// Radians per pixel.
    pub alpha: f64,
    /// Field of view actually realized, `out_dim * alpha`.
    pub fov: f64,
    /// Field of view that was asked for.
    pub requested_fov: f64,
    pub out_dim: usize,
}

impl NormalizationTarget {
    /// Intrinsics of the normalized camera: `f' = W'/(2 tan(Ω'/2))`, `c' = W'/2`.
    pub fn camera(&self) -> CameraIntrinsics {
        let w = self.out_dim as f64;
        let f = w / (2.0 * (self.fov / 2.0).tan());
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: w / 2.0,
            cy: w / 2.0,
            width: self.out_dim,
            height: self.out_dim,
        }
    }
}

/// Target matching a level-`spherical_level` equirect (width `2^(s+2)`) at the given field of view.
pub fn make_target(spherical_level: u32, fov: f64) -> Result<NormalizationTarget> {
    if !(fov > 0.0 && fov < PI) {
        return Err(Error::invalid(format!(
            "field of view must lie in (0, π), got {fov}"
        )));
    }
    if spherical_level > 40 {
        return Err(Error::invalid(format!(
            "spherical level {spherical_level} is unreasonably large"
        )));
    }
    let alpha = 2.0 * PI / (4.0 * 2f64.powi(spherical_level as i32));
    let out_dim = ((fov / alpha).round() as usize).max(1);
    let realized = out_dim as f64 * alpha;
    if realized >= PI {
        return Err(Error::invalid(format!(
            "field of view {fov} rounds to {out_dim} px covering {realized} rad, not below π"
        )));
    }
    Ok(NormalizationTarget {
        alpha,
        fov: realized,
        requested_fov: fov,
        out_dim,
    })
}

/// Affine map from target pixels to source pixels, `x = K (K')^-1 x' + δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMap {
    pub scale_x: f64,
    pub scale_y: f64,
    pub offset_x: f64,
    pub offset_y: f64,
    pub target_width: usize,
    pub target_height: usize,
}

impl PixelMap {
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.scale_x * x + self.offset_x,
            self.scale_y * y + self.offset_y,
        )
    }

    /// Source positions of the target's four outer corners.
    pub fn footprint(&self) -> [(f64, f64); 4] {
        let (w, h) = (self.target_width as f64, self.target_height as f64);
        [
            self.apply(0.0, 0.0),
            self.apply(w, 0.0),
            self.apply(0.0, h),
            self.apply(w, h),
        ]
    }

    pub fn footprint_inside(&self, src: &CameraIntrinsics, tol: f64) -> bool {
        let (w, h) = (src.width as f64, src.height as f64);
        self.footprint()
            .iter()
            .all(|&(x, y)| x >= -tol && x <= w + tol && y >= -tol && y <= h + tol)
    }
}

/// Closed interval of legal shifts on each axis keeping the crop inside the source.
pub fn legal_shift_ranges(src: &CameraIntrinsics, virt: &CameraIntrinsics) -> [(f64, f64); 2] {
    let axis = |f: f64, c: f64, size: usize, fv: f64, cv: f64, size_v: usize| {
        let k = f / fv;
        (k * cv - c, size as f64 - c - k * (size_v as f64 - cv))
    };
    [
        axis(src.fx, src.cx, src.width, virt.fx, virt.cx, virt.width),
        axis(src.fy, src.cy, src.height, virt.fy, virt.cy, virt.height),
    ]
}

/// Map taking pixels of the camera `virt` into `src`, with the source principal point shifted by `shift`.
pub fn pixel_map_between(
    src: &CameraIntrinsics,
    virt: &CameraIntrinsics,
    shift: (f64, f64),
) -> Result<PixelMap> {
    src.validate()?;
    virt.validate()?;
    let ranges = legal_shift_ranges(src, virt);
    for ((axis, value), (lo, hi)) in [('x', shift.0), ('y', shift.1)].into_iter().zip(ranges) {
        let slack = SHIFT_TOLERANCE * (1.0 + lo.abs().max(hi.abs()));
        if !(value >= lo - slack && value <= hi + slack) {
            return Err(Error::ShiftOutOfRange {
                axis,
                value,
                lo,
                hi,
            });
        }
    }
    let scale_x = src.fx / virt.fx;
    let scale_y = src.fy / virt.fy;
    Ok(PixelMap {
        scale_x,
        scale_y,
        offset_x: src.cx - scale_x * virt.cx + shift.0,
        offset_y: src.cy - scale_y * virt.cy + shift.1,
        target_width: virt.width,
        target_height: virt.height,
    })
}

pub fn normalize_camera(
    src: &CameraIntrinsics,
    target: &NormalizationTarget,
    shift: (f64, f64),
) -> Result<PixelMap> {
    pixel_map_between(src, &target.camera(), shift)
}

/// Uniform draw from the legal shift intervals, reproducible for a given seed.
pub fn sample_shift(
    src: &CameraIntrinsics,
    target: &NormalizationTarget,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    src.validate()?;
    let ranges = legal_shift_ranges(src, &target.camera());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut draw = |axis: char, (lo, hi): (f64, f64)| -> Result<f64> {
        let slack = SHIFT_TOLERANCE * (1.0 + lo.abs().max(hi.abs()));
        if lo > hi + slack {
            return Err(Error::SourceTooNarrow { axis, lo, hi });
        }
        if hi <= lo {
            return Ok(lo);
        }
        Ok(rng.gen_range(lo..=hi))
    };
    let dx = draw('x', ranges[0])?;
    let dy = draw('y', ranges[1])?;
    Ok((dx, dy))
}

/// Resamples `src` (interleaved) through `map` into a new target-sized grid.
pub fn apply_pixel_map(src: GridView<'_>, map: &PixelMap, interp: Interp) -> Vec<f32> {
    let (w, h, c) = (map.target_width, map.target_height, src.channels);
    let mut out = vec![0f32; w * h * c];
    out.par_chunks_mut(w * c)
        .enumerate()
        .for_each(|(row, line)| {
            for col in 0..w {
                let (x, y) = map.apply(col as f64 + 0.5, row as f64 + 0.5);
                src.sample(
                    y - 0.5,
                    x - 0.5,
                    interp,
                    ColumnBorder::Clamp,
                    &mut line[col * c..(col + 1) * c],
                );
            }
        });
    out
}
