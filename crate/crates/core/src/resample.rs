//! Rendering between equirectangular images and tangent-image sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnomonic::{make_plane_specs, PlaneFrame, TangentPlaneSpec};
use crate::icosphere::{build_icosphere, FaceLocator, Icosphere};
use crate::imageio::ChannelSemantics;
use crate::raster::{
    level_for_height, pixel_center, ColumnBorder, EquirectImage, GridView, Interp,
};

/// Slack, in pixels, allowed past a grid's outer pixel edges before a
/// back-rendered sample counts as a coverage violation.
const COVERAGE_SLACK_PX: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_height: usize,
    pub source_width: usize,
    pub base_level: u32,
    pub source_level: u32,
    pub interp: Interp,
}

/// One `dim x dim x channels` image per base-level face.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentImageSet {
    pub specs: Vec<TangentPlaneSpec>,
    pub images: Vec<Vec<f32>>,
    pub channels: usize,
    pub semantics: ChannelSemantics,
    pub provenance: Provenance,
}

impl TangentImageSet {
    pub fn new(
        specs: Vec<TangentPlaneSpec>,
        images: Vec<Vec<f32>>,
        channels: usize,
        semantics: ChannelSemantics,
        provenance: Provenance,
    ) -> Result<Self> {
        let set = TangentImageSet {
            specs,
            images,
            channels,
            semantics,
            provenance,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.specs.first().map_or(0, |s| s.dim)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn base_level(&self) -> u32 {
        self.provenance.base_level
    }

    pub fn image(&self, face: usize) -> GridView<'_> {
        let d = self.dim();
        GridView::new(&self.images[face], d, d, self.channels)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = 20usize << (2 * self.provenance.base_level);
        if self.specs.len() != expected || self.images.len() != expected {
            return Err(Error::Validation(format!(
                "tangent set holds {} specs and {} images, base level {} needs {expected}",
                self.specs.len(),
                self.images.len(),
                self.provenance.base_level
            )));
        }
        if self.channels == 0 {
            return Err(Error::Validation("tangent set has zero channels".into()));
        }
        let d = self.dim();
        for (k, (spec, img)) in self.specs.iter().zip(&self.images).enumerate() {
            if spec.face_index != k
                || spec.dim != d
                || spec.base_level != self.provenance.base_level
                || spec.source_level != self.provenance.source_level
            {
                return Err(Error::Validation(format!(
                    "spec {k} is inconsistent with the set"
                )));
            }
            if img.len() != d * d * self.channels {
                return Err(Error::Validation(format!(
                    "image {k} has {} samples, expected {}",
                    img.len(),
                    d * d * self.channels
                )));
            }
        }
        Ok(())
    }
}

/// Renders `img` onto the tangent planes of the level-`base_level` icosphere.
pub fn to_tangent(img: &EquirectImage, base_level: u32, interp: Interp) -> Result<TangentImageSet> {
    let source_level =
        level_for_height(img.height()).ok_or(Error::HeightNotPowerOfTwo(img.height()))?;
    if base_level > source_level {
        return Err(Error::SourceBelowBase {
            source_level,
            base_level,
        });
    }
    let sphere = build_icosphere(base_level)?;
    let specs = make_plane_specs(&sphere, source_level)?;
    let channels = img.channels();
    let images = specs
        .par_iter()
        .map(|spec| render_face(img, spec, interp))
        .collect();
    TangentImageSet::new(
        specs,
        images,
        channels,
        img.semantics,
        Provenance {
            source_height: img.height(),
            source_width: img.width(),
            base_level,
            source_level,
            interp,
        },
    )
}

fn render_face(img: &EquirectImage, spec: &TangentPlaneSpec, interp: Interp) -> Vec<f32> {
    let d = spec.dim;
    let c = img.channels();
    let frame = spec.frame();
    let mut out = vec![0f32; d * d * c];
    for (p, px) in out.chunks_exact_mut(c).enumerate() {
        let (x, y) = spec.pixel_to_plane((p / d) as f64, (p % d) as f64);
        let coord = if x == 0.0 && y == 0.0 {
            spec.center
        } else {
            crate::gnomonic::SphericalCoord::from_vec(&frame.unproject(x, y))
        };
        img.sample_at(&coord, interp, px);
    }
    out
}

/// Back-rendered image together with the per-pixel write count.
#[derive(Debug, Clone)]
pub struct RenderBack {
    pub image: EquirectImage,
    pub owners: Vec<u32>,
    pub writes: Vec<u8>,
}

/// Renders a tangent set back to an equirectangular image of height `out_height`.
///
/// Each output pixel is sampled from the single face that owns its direction,
/// using the interpolation recorded in the set's provenance.
pub fn from_tangent(set: &TangentImageSet, out_height: usize) -> Result<EquirectImage> {
    Ok(from_tangent_traced(set, out_height)?.image)
}

pub fn from_tangent_traced(set: &TangentImageSet, out_height: usize) -> Result<RenderBack> {
    if level_for_height(out_height).is_none() {
        return Err(Error::HeightNotPowerOfTwo(out_height));
    }
    set.validate()?;
    let sphere = build_icosphere(set.base_level())?;
    let locator = FaceLocator::new(&sphere);
    let frames: Vec<PlaneFrame> = set.specs.iter().map(TangentPlaneSpec::frame).collect();
    let interp = set.provenance.interp;
    let (h, w, c) = (out_height, 2 * out_height, set.channels);
    let d = set.dim() as f64;
    let lo = -0.5 - COVERAGE_SLACK_PX;
    let hi = d - 0.5 + COVERAGE_SLACK_PX;

    let mut samples = vec![0f32; h * w * c];
    let mut owners = vec![0u32; h * w];
    let mut writes = vec![0u8; h * w];
    samples
        .par_chunks_mut(w * c)
        .zip(owners.par_chunks_mut(w))
        .zip(writes.par_chunks_mut(w))
        .enumerate()
        .try_for_each(|(row, ((out_row, owner_row), write_row))| -> Result<()> {
            for col in 0..w {
                let dir = pixel_center(row, col, h, w).to_vec();
                let face = locator.owner_unchecked(&dir);
                let spec = &set.specs[face];
                let (x, y) = frames[face].project(&dir).ok_or(Error::CoverageViolation {
                    row,
                    col,
                    face,
                    x: f64::NAN,
                    y: f64::NAN,
                })?;
                let (r, cc) = spec.plane_to_pixel(x, y);
                if !(lo..=hi).contains(&r) || !(lo..=hi).contains(&cc) {
                    return Err(Error::CoverageViolation {
                        row,
                        col,
                        face,
                        x,
                        y,
                    });
                }
                set.image(face).sample(
                    r,
                    cc,
                    interp,
                    ColumnBorder::Clamp,
                    &mut out_row[col * c..(col + 1) * c],
                );
                owner_row[col] = face as u32;
                write_row[col] += 1;
            }
            Ok(())
        })?;
    let image = EquirectImage::new(h, w, c, samples, set.semantics)?;
    Ok(RenderBack {
        image,
        owners,
        writes,
    })
}

/// Owning base face for every pixel of a `height x 2*height` equirect.
pub fn ownership_map(sphere: &Icosphere, height: usize) -> Vec<u32> {
    let locator = FaceLocator::new(sphere);
    let w = 2 * height;
    let mut owners = vec![0u32; height * w];
    owners.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        for (col, o) in out.iter_mut().enumerate() {
            *o = locator.owner_unchecked(&pixel_center(row, col, height, w).to_vec()) as u32;
        }
    });
    owners
}

/// Peak signal-to-noise ratio in dB for samples with peak value `peak`.
pub fn psnr(a: &[f32], b: &[f32], peak: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let mse = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}
