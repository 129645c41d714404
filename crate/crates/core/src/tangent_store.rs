//! Directory layout for tangent-image sets: `face_00000.png` ... plus `meta.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnomonic::make_plane_specs;
use crate::icosphere::build_icosphere;
use crate::imageio::{load_raster, save_raster, ChannelSemantics, Raster};
use crate::raster::Interp;
use crate::resample::{Provenance, TangentImageSet};

pub const META_FILE: &str = "meta.json";

/// Tolerances for matching a stored face description against the recomputed one.
const CENTER_TOL_DEG: f64 = 1e-9;
const EXTENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceMeta {
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    pub half_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentMeta {
    pub base_level: u32,
    pub source_level: u32,
    pub dim: usize,
    pub interp: Interp,
    pub channel_semantics: ChannelSemantics,
    pub channels: usize,
    pub source_height: usize,
    pub source_width: usize,
    pub faces: Vec<FaceMeta>,
}

pub fn face_file_name(face: usize) -> String {
    format!("face_{face:05}.png")
}

impl TangentMeta {
    pub fn from_set(set: &TangentImageSet) -> Self {
        TangentMeta {
            base_level: set.provenance.base_level,
            source_level: set.provenance.source_level,
            dim: set.dim(),
            interp: set.provenance.interp,
            channel_semantics: set.semantics,
            channels: set.channels,
            source_height: set.provenance.source_height,
            source_width: set.provenance.source_width,
            faces: set
                .specs
                .iter()
                .map(|s| FaceMeta {
                    center_lat_deg: s.center.lat.to_degrees(),
                    center_lon_deg: s.center.lon.to_degrees(),
                    half_extent: s.half_extent,
                })
                .collect(),
        }
    }
}

fn write_err(path: &Path, e: impl ToString) -> Error {
    Error::Write {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

/// Writes the set into `dir`, creating it if needed. Returns the written files.
pub fn save_tangent_set(set: &TangentImageSet, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    let d = set.dim();
    let mut written = Vec::with_capacity(set.len() + 1);
    for (k, img) in set.images.iter().enumerate() {
        let path = dir.join(face_file_name(k));
        let raster = Raster {
            height: d,
            width: d,
            channels: set.channels,
            samples: img.clone(),
        };
        save_raster(&path, &raster, &set.semantics)?;
        written.push(path);
    }
    let meta_path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&TangentMeta::from_set(set)).expect("meta serializes");
    fs::write(&meta_path, text + "\n").map_err(|e| write_err(&meta_path, e))?;
    written.push(meta_path);
    Ok(written)
}

pub fn load_meta(dir: &Path) -> Result<TangentMeta> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::Read {
        path: path.clone(),
        detail: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path,
        detail: e.to_string(),
    })
}

/// Reads a set written by [`save_tangent_set`], checking the stored geometry
/// against the geometry implied by its levels.
pub fn load_tangent_set(dir: &Path) -> Result<TangentImageSet> {
    let meta = load_meta(dir)?;
    let meta_path = dir.join(META_FILE);
    let mismatch = |detail: String| Error::Format {
        path: meta_path.clone(),
        detail,
    };
    let sphere = build_icosphere(meta.base_level)?;
    let specs = make_plane_specs(&sphere, meta.source_level)?;
    if meta.dim != specs[0].dim {
        return Err(mismatch(format!(
            "dim {} does not match levels {}/{} (expected {})",
            meta.dim, meta.source_level, meta.base_level, specs[0].dim
        )));
    }
    if meta.faces.len() != specs.len() {
        return Err(mismatch(format!(
            "{} faces listed, base level {} has {}",
            meta.faces.len(),
            meta.base_level,
            specs.len()
        )));
    }
    for (k, (fm, spec)) in meta.faces.iter().zip(&specs).enumerate() {
        let dlat = (fm.center_lat_deg - spec.center.lat.to_degrees()).abs();
        let dlon = (fm.center_lon_deg - spec.center.lon.to_degrees()).abs();
        let dlon = dlon.min(360.0 - dlon);
        let dext = (fm.half_extent - spec.half_extent).abs();
        if dlat > CENTER_TOL_DEG
            || dlon > CENTER_TOL_DEG
            || dext > EXTENT_TOL * (1.0 + spec.half_extent)
        {
            return Err(mismatch(format!(
                "face {k} geometry differs from base level {}",
                meta.base_level
            )));
        }
    }
    let mut images = Vec::with_capacity(specs.len());
    for k in 0..specs.len() {
        let path = dir.join(face_file_name(k));
        let r = load_raster(&path, &meta.channel_semantics)?;
        if r.height != meta.dim || r.width != meta.dim || r.channels != meta.channels {
            return Err(Error::Format {
                path,
                detail: format!(
                    "face is {}x{}x{}, meta says {}x{}x{}",
                    r.height, r.width, r.channels, meta.dim, meta.dim, meta.channels
                ),
            });
        }
        images.push(r.samples);
    }
    TangentImageSet::new(
        specs,
        images,
        meta.channels,
        meta.channel_semantics,
        Provenance {
            source_height: meta.source_height,
            source_width: meta.source_width,
            base_level: meta.base_level,
            source_level: meta.source_level,
            interp: meta.interp,
        },
    )
}
