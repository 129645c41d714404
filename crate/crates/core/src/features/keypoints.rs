use std::f64::consts::{FRAC_PI_2, PI};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnomonic::{wrap_lon, SphericalCoord, TangentPlaneSpec};
use crate::icosphere::{build_icosphere, FaceLocator};
use crate::raster::sphere_to_pixel;

/// Where a keypoint was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeypointSource {
    Equirect,
    Tangent { face_index: usize },
}

/// A detection with sub-pixel position `(u, v)` = (column, row), pixel
/// centers on integer coordinates.
///
/// Scale and orientation stay in the units of the detection grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    pub source: KeypointSource,
    pub u: f64,
    pub v: f64,
    pub spherical: Option<SphericalCoord>,
    pub scale: f64,
    pub orientation: f64,
    pub descriptor: Vec<u8>,
}

impl Keypoint {
    pub fn on_face(face_index: usize, u: f64, v: f64) -> Self {
        Keypoint {
            source: KeypointSource::Tangent { face_index },
            u,
            v,
            spherical: None,
            scale: 1.0,
            orientation: 0.0,
            descriptor: Vec::new(),
        }
    }
}

/// Sphere position of a tangent-image pixel coordinate.
pub fn tangent_pixel_to_sphere(spec: &TangentPlaneSpec, u: f64, v: f64) -> SphericalCoord {
    let (x, y) = spec.pixel_to_plane(v, u);
    if x == 0.0 && y == 0.0 {
        spec.center
    } else {
        SphericalCoord::from_vec(&spec.frame().unproject(x, y))
    }
}

/// Sphere position of an equirect pixel coordinate of an `height x 2*height` image.
pub fn equirect_pixel_to_sphere(height: usize, u: f64, v: f64) -> SphericalCoord {
    let (h, w) = (height as f64, 2.0 * height as f64);
    SphericalCoord {
        lat: (PI * (0.5 - (v + 0.5) / h)).clamp(-FRAC_PI_2, FRAC_PI_2),
        lon: wrap_lon(2.0 * PI * ((u + 0.5) / w - 0.5)),
    }
}

/// Equirect `(u, v)` of a sphere position; inverse of [`equirect_pixel_to_sphere`].
pub fn sphere_to_equirect_pixel(height: usize, coord: &SphericalCoord) -> (f64, f64) {
    let (row, col) = sphere_to_pixel(coord, height, 2 * height);
    (col, row)
}

/// Lifts tangent-image keypoints to the sphere, keeping each only if its
/// direction is owned by the face it was detected on.
///
/// Tangent images overlap, so one scene point may be detected on several
/// faces; ownership keeps exactly the copy a spherical camera would see.
pub fn keypoints_to_sphere(kps: &[Keypoint], specs: &[TangentPlaneSpec]) -> Result<Vec<Keypoint>> {
    let Some(first) = specs.first() else {
        return Err(Error::invalid("no tangent plane specs given"));
    };
    let sphere = build_icosphere(first.base_level)?;
    if sphere.face_count() != specs.len() {
        return Err(Error::invalid(format!(
            "{} specs do not match the {} faces of base level {}",
            specs.len(),
            sphere.face_count(),
            first.base_level
        )));
    }
    let locator = FaceLocator::new(&sphere);
    let mut kept = Vec::with_capacity(kps.len());
    for kp in kps {
        let face = match kp.source {
            KeypointSource::Tangent { face_index } => face_index,
            KeypointSource::Equirect => {
                return Err(Error::Validation(
                    "equirect keypoints have no tangent face to de-duplicate against".into(),
                ))
            }
        };
        let spec = specs.get(face).ok_or(Error::FaceIndex {
            index: face,
            count: specs.len(),
        })?;
        let edge = spec.dim as f64 - 0.5;
        if !(kp.u >= -0.5 && kp.u <= edge && kp.v >= -0.5 && kp.v <= edge) {
            return Err(Error::Validation(format!(
                "keypoint ({}, {}) lies outside the {}x{} grid of face {face}",
                kp.u, kp.v, spec.dim, spec.dim
            )));
        }
        let coord = tangent_pixel_to_sphere(spec, kp.u, kp.v);
        if locator.owner_unchecked(&coord.to_vec()) == face {
            kept.push(Keypoint {
                spherical: Some(coord),
                ..kp.clone()
            });
        }
    }
    Ok(kept)
}

/// Fills in the sphere position of equirect keypoints.
pub fn equirect_keypoints_to_sphere(kps: &[Keypoint], height: usize) -> Result<Vec<Keypoint>> {
    kps.iter()
        .map(|kp| match kp.source {
            KeypointSource::Equirect => Ok(Keypoint {
                spherical: Some(equirect_pixel_to_sphere(height, kp.u, kp.v)),
                ..kp.clone()
            }),
            KeypointSource::Tangent { .. } => {
                Err(Error::Validation("expected equirect keypoints".into()))
            }
        })
        .collect()
}

/// One line of a keypoint JSON-lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointRecord {
    /// `"equirect"` or `"tangent"`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_index: Option<usize>,
    pub u: f64,
    pub v: f64,
    pub scale: f64,
    pub orientation: f64,
    /// Base64 of the raw descriptor bytes.
    pub descriptor: String,
    /// Radians; present once the keypoint has been placed on the sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl TryFrom<&KeypointRecord> for Keypoint {
    type Error = Error;

    fn try_from(r: &KeypointRecord) -> Result<Self> {
        let source = match (r.source.as_str(), r.face_index) {
            ("equirect", _) => KeypointSource::Equirect,
            ("tangent", Some(face_index)) => KeypointSource::Tangent { face_index },
            ("tangent", None) => {
                return Err(Error::Validation(
                    "tangent keypoint without face_index".into(),
                ))
            }
            (other, _) => {
                return Err(Error::Validation(format!(
                    "unknown keypoint source {other:?}"
                )))
            }
        };
        let descriptor = BASE64
            .decode(r.descriptor.as_bytes())
            .map_err(|e| Error::Validation(format!("bad descriptor encoding: {e}")))?;
        let spherical = match (r.lat, r.lon) {
            (Some(lat), Some(lon)) => Some(SphericalCoord::new(lat, lon)?),
            _ => None,
        };
        Ok(Keypoint {
            source,
            u: r.u,
            v: r.v,
            spherical,
            scale: r.scale,
            orientation: r.orientation,
            descriptor,
        })
    }
}

impl From<&Keypoint> for KeypointRecord {
    fn from(k: &Keypoint) -> Self {
        let (source, face_index) = match k.source {
            KeypointSource::Equirect => ("equirect", None),
            KeypointSource::Tangent { face_index } => ("tangent", Some(face_index)),
        };
        KeypointRecord {
            source: source.to_string(),
            face_index,
            u: k.u,
            v: k.v,
            scale: k.scale,
            orientation: k.orientation,
            descriptor: BASE64.encode(&k.descriptor),
            lat: k.spherical.map(|s| s.lat),
            lon: k.spherical.map(|s| s.lon),
        }
    }
}

pub fn parse_keypoint_lines(text: &str) -> Result<Vec<Keypoint>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let rec: KeypointRecord = serde_json::from_str(line)
                .map_err(|e| Error::Validation(format!("keypoint line {}: {e}", n + 1)))?;
            Keypoint::try_from(&rec)
        })
        .collect()
}

pub fn format_keypoint_lines(kps: &[Keypoint]) -> String {
    let mut out = String::new();
    for k in kps {
        out.push_str(&serde_json::to_string(&KeypointRecord::from(k)).expect("record serializes"));
        out.push('\n');
    }
    out
}
