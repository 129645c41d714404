//! Gnomonic projection and per-face tangent-plane sampling grids.
//!
//! Plane coordinates are in tangent units: a point at angle `t` from the
//! projection center along the east axis lands at `x = tan t`. Every tangent
//! plane is north-up, with `+x` east and `+y` toward increasing latitude.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icosphere::{vertex_resolution_at, Icosphere, Vec3};

/// Largest supported `source_level - base_level`; tangent images stay below 2^24 px per side.
pub const MAX_LEVEL_GAP: u32 = 24;

/// Points with `cos c` at or below this are treated as on or past the horizon.
const HORIZON_COS: f64 = 1e-12;

/// Latitude/longitude in radians. Longitude is kept in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCoord {
    pub lat: f64,
    pub lon: f64,
}

/// Wraps a longitude into `[-π, π)`.
pub fn wrap_lon(lon: f64) -> f64 {
    let w = (lon + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

impl SphericalCoord {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(lat.is_finite() && lon.is_finite()) || lat.abs() > FRAC_PI_2 {
            return Err(Error::invalid(format!(
                "latitude {lat} / longitude {lon} out of range"
            )));
        }
        Ok(SphericalCoord {
            lat,
            lon: wrap_lon(lon),
        })
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians())
    }

    /// Direction of a non-zero vector; the vector need not be normalized.
    pub fn from_vec(v: &Vec3) -> Self {
        let lat = v.z.atan2(v.x.hypot(v.y));
        SphericalCoord {
            lat,
            lon: wrap_lon(v.y.atan2(v.x)),
        }
    }

    pub fn to_vec(&self) -> Vec3 {
        let (sl, cl) = self.lat.sin_cos();
        let (so, co) = self.lon.sin_cos();
        Vec3::new(cl * co, cl * so, sl)
    }

    /// Great-circle angle to `other`.
    pub fn angle_to(&self, other: &SphericalCoord) -> f64 {
        crate::icosphere::angle_between(&self.to_vec(), &other.to_vec())
    }
}

/// Orthonormal east/north/center frame of a tangent plane.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFrame {
    pub center: Vec3,
    pub east: Vec3,
    pub north: Vec3,
}

impl PlaneFrame {
    pub fn new(center: &SphericalCoord) -> Self {
        let (sl, cl) = center.lat.sin_cos();
        let (so, co) = center.lon.sin_cos();
        PlaneFrame {
            center: Vec3::new(cl * co, cl * so, sl),
            east: Vec3::new(-so, co, 0.0),
            north: Vec3::new(-sl * co, -sl * so, cl),
        }
    }

    /// Plane coordinates of a direction, or `None` outside the front hemisphere.
    pub fn project(&self, dir: &Vec3) -> Option<(f64, f64)> {
        let depth = dir.dot(&self.center);
        if depth <= 0.0 {
            return None;
        }
        Some((dir.dot(&self.east) / depth, dir.dot(&self.north) / depth))
    }

    /// Unit direction of a plane point.
    pub fn unproject(&self, x: f64, y: f64) -> Vec3 {
        (self.center + self.east * x + self.north * y).normalize()
    }
}

/// Forward gnomonic projection of `point` onto the plane tangent at `center`.
pub fn gnomonic_forward(center: &SphericalCoord, point: &SphericalCoord) -> Result<(f64, f64)> {
    let (s1, c1) = center.lat.sin_cos();
    let (sp, cp) = point.lat.sin_cos();
    let (sd, cd) = (point.lon - center.lon).sin_cos();
    let cos_c = s1 * sp + c1 * cp * cd;
    if cos_c <= HORIZON_COS || !cos_c.is_finite() {
        return Err(Error::OutOfHemisphere {
            angle_deg: cos_c.clamp(-1.0, 1.0).acos().to_degrees(),
        });
    }
    let x = cp * sd / cos_c;
    let y = (c1 * sp - s1 * cp * cd) / cos_c;
    Ok((x, y))
}

/// Inverse gnomonic projection; total on finite plane coordinates.
pub fn gnomonic_inverse(center: &SphericalCoord, plane: (f64, f64)) -> SphericalCoord {
    let (x, y) = plane;
    if x == 0.0 && y == 0.0 {
        return *center;
    }
    SphericalCoord::from_vec(&PlaneFrame::new(center).unproject(x, y))
}

/// Tangent image side length `2^(source_level - base_level)`.
pub fn tangent_dim(source_level: u32, base_level: u32) -> Result<usize> {
    if source_level < base_level {
        return Err(Error::SourceBelowBase {
            source_level,
            base_level,
        });
    }
    let gap = source_level - base_level;
    if gap > MAX_LEVEL_GAP {
        return Err(Error::invalid(format!(
            "level gap {gap} exceeds the supported maximum of {MAX_LEVEL_GAP}"
        )));
    }
    Ok(1usize << gap)
}

/// One tangent image: where it touches the sphere and how its pixels are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentPlaneSpec {
    pub face_index: usize,
    pub center: SphericalCoord,
    pub dim: usize,
    /// Plane coordinate of the outermost pixel centers, `(d-1)/(2d) * R_v(b-1)`.
    pub half_extent: f64,
    /// Pixel spacing in plane units, `R_v(b-1) / d`.
    pub pitch: f64,
    pub base_level: u32,
    pub source_level: u32,
}

impl TangentPlaneSpec {
    pub fn frame(&self) -> PlaneFrame {
        PlaneFrame::new(&self.center)
    }

    /// Plane coordinates of the center of pixel `(row, col)`.
    pub fn pixel_to_plane(&self, row: f64, col: f64) -> (f64, f64) {
        (
            -self.half_extent + col * self.pitch,
            self.half_extent - row * self.pitch,
        )
    }

    /// Continuous `(row, col)` of a plane point; inverse of [`Self::pixel_to_plane`].
    pub fn plane_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (self.half_extent - y) / self.pitch,
            (x + self.half_extent) / self.pitch,
        )
    }

    /// Half-width of the grid measured to the outer pixel edges.
    pub fn edge_extent(&self) -> f64 {
        self.half_extent + 0.5 * self.pitch
    }

    /// Angle subtended by the central row, measured between the outer pixel edges.
    pub fn axis_fov(&self) -> f64 {
        let frame = self.frame();
        let e = self.edge_extent();
        crate::icosphere::angle_between(&frame.unproject(-e, 0.0), &frame.unproject(e, 0.0))
    }
}

/// One spec per face of `sphere_base`, sampling a level-`source_level` input.
pub fn make_plane_specs(
    sphere_base: &Icosphere,
    source_level: u32,
) -> Result<Vec<TangentPlaneSpec>> {
    let base_level = sphere_base.level();
    let dim = tangent_dim(source_level, base_level)?;
    let span = vertex_resolution_at(base_level as i32 - 1)?;
    let d = dim as f64;
    let half_extent = (d - 1.0) / (2.0 * d) * span;
    let pitch = span / d;
    Ok((0..sphere_base.face_count())
        .map(|f| TangentPlaneSpec {
            face_index: f,
            center: SphericalCoord::from_vec(&sphere_base.face_barycenter(f)),
            dim,
            half_extent,
            pitch,
            base_level,
            source_level,
        })
        .collect())
}

/// Spherical coordinates of every pixel center, row-major with row 0 at the top.
pub fn plane_pixel_grid(spec: &TangentPlaneSpec) -> Vec<SphericalCoord> {
    let frame = spec.frame();
    let d = spec.dim;
    let mut grid = Vec::with_capacity(d * d);
    for row in 0..d {
        for col in 0..d {
            let (x, y) = spec.pixel_to_plane(row as f64, col as f64);
            if x == 0.0 && y == 0.0 {
                grid.push(spec.center);
            } else {
                grid.push(SphericalCoord::from_vec(&frame.unproject(x, y)));
            }
        }
    }
    grid
}
