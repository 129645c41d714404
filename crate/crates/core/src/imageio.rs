//! PNG load/save with explicit channel semantics.
//!
//! Color samples map to `[0, 1]` by `value / maxint`, labels are stored as
//! their integer value, and 16-bit depth is `value * depth_scale` meters with
//! a sentinel for missing measurements (loaded as NaN).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, ImageBuffer, ImageReader, Luma, LumaA, Rgb, Rgba};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{EquirectImage, Interp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Color8,
    Color16,
    Label8,
    Depth16,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Color8 => "color8",
            ChannelKind::Color16 => "color16",
            ChannelKind::Label8 => "label8",
            ChannelKind::Depth16 => "depth16",
        }
    }

    fn is_16bit(self) -> bool {
        matches!(self, ChannelKind::Color16 | ChannelKind::Depth16)
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "color8" => Ok(ChannelKind::Color8),
            "color16" => Ok(ChannelKind::Color16),
            "label8" => Ok(ChannelKind::Label8),
            "depth16" => Ok(ChannelKind::Depth16),
            other => Err(Error::invalid(format!("unknown channel kind {other:?}"))),
        }
    }
}

pub const DEFAULT_DEPTH_SCALE: f64 = 1.0 / 512.0;
pub const DEFAULT_INVALID_DEPTH: u16 = 65535;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSemantics {
    pub kind: ChannelKind,
    /// Meters per stored unit for `depth16`.
    pub depth_scale: f64,
    /// Stored value marking a missing depth sample.
    pub invalid_value: u16,
}

impl Default for ChannelSemantics {
    fn default() -> Self {
        Self::new(ChannelKind::Color8)
    }
}

impl ChannelSemantics {
    pub fn new(kind: ChannelKind) -> Self {
        ChannelSemantics {
            kind,
            depth_scale: DEFAULT_DEPTH_SCALE,
            invalid_value: DEFAULT_INVALID_DEPTH,
        }
    }

    pub fn depth(depth_scale: f64, invalid_value: u16) -> Result<Self> {
        if !(depth_scale > 0.0 && depth_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "depth scale must be positive, got {depth_scale}"
            )));
        }
        Ok(ChannelSemantics {
            kind: ChannelKind::Depth16,
            depth_scale,
            invalid_value,
        })
    }

    /// Interpolation used when none is requested explicitly.
    pub fn default_interp(&self, exact_depth: bool) -> Interp {
        match self.kind {
            ChannelKind::Label8 => Interp::Nearest,
            ChannelKind::Depth16 if exact_depth => Interp::Nearest,
            _ => Interp::Bilinear,
        }
    }

    fn decode(&self, v: u16) -> f32 {
        match self.kind {
            ChannelKind::Color8 => (v as f64 / 255.0) as f32,
            ChannelKind::Color16 => (v as f64 / 65535.0) as f32,
            ChannelKind::Label8 => v as f32,
            ChannelKind::Depth16 => {
                if v == self.invalid_value {
                    f32::NAN
                } else {
                    (v as f64 * self.depth_scale) as f32
                }
            }
        }
    }

    fn encode(&self, v: f32) -> Result<u16> {
        let x = v as f64;
        let unencodable = || Error::Unencodable {
            value: x,
            kind: self.kind.as_str(),
        };
        match self.kind {
            ChannelKind::Color8 | ChannelKind::Color16 => {
                let max = if self.kind == ChannelKind::Color8 {
                    255.0
                } else {
                    65535.0
                };
                if !(0.0..=1.0).contains(&x) {
                    return Err(unencodable());
                }
                Ok((x * max + 0.5).floor() as u16)
            }
            ChannelKind::Label8 => {
                if !(0.0..=255.0).contains(&x) || x.fract() != 0.0 {
                    return Err(unencodable());
                }
                Ok(x as u16)
            }
            ChannelKind::Depth16 => {
                if x.is_nan() {
                    return Ok(self.invalid_value);
                }
                let q = (x / self.depth_scale + 0.5).floor();
                if !(0.0..=65535.0).contains(&q) || q as u16 == self.invalid_value {
                    return Err(unencodable());
                }
                Ok(q as u16)
            }
        }
    }
}

/// Decoded raster of any shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub samples: Vec<f32>,
}

pub fn load_raster(path: &Path, semantics: &ChannelSemantics) -> Result<Raster> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let read_err = |detail: String| Error::Read {
        path: path.to_path_buf(),
        detail,
    };
    let img = ImageReader::open(path)
        .map_err(|e| read_err(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| read_err(e.to_string()))?
        .decode()
        .map_err(|e| read_err(e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let bit_depth_err = |detail: String| Error::BitDepth {
        path: path.to_path_buf(),
        detail,
    };

    let (channels, raw): (usize, Vec<u16>) = match &img {
        DynamicImage::ImageLuma8(b) => (1, b.as_raw().iter().map(|&v| v as u16).collect()),
        DynamicImage::ImageLumaA8(b) => (2, b.as_raw().iter().map(|&v| v as u16).collect()),
        DynamicImage::ImageRgb8(b) => (3, b.as_raw().iter().map(|&v| v as u16).collect()),
        DynamicImage::ImageRgba8(b) => (4, b.as_raw().iter().map(|&v| v as u16).collect()),
        DynamicImage::ImageLuma16(b) => (1, b.as_raw().clone()),
        DynamicImage::ImageLumaA16(b) => (2, b.as_raw().clone()),
        DynamicImage::ImageRgb16(b) => (3, b.as_raw().clone()),
        DynamicImage::ImageRgba16(b) => (4, b.as_raw().clone()),
        other => return Err(bit_depth_err(format!("{:?}", other.color()))),
    };
    let is_16 = img.color().bytes_per_pixel() as usize / channels == 2;
    if is_16 != semantics.kind.is_16bit() {
        return Err(bit_depth_err(format!(
            "{}-bit data cannot be read as {}",
            if is_16 { 16 } else { 8 },
            semantics.kind
        )));
    }
    if semantics.kind == ChannelKind::Depth16 && channels != 1 {
        return Err(bit_depth_err(format!(
            "depth needs 1 channel, found {channels}"
        )));
    }
    let samples = raw.into_iter().map(|v| semantics.decode(v)).collect();
    Ok(Raster {
        height,
        width,
        channels,
        samples,
    })
}

pub fn save_raster(path: &Path, raster: &Raster, semantics: &ChannelSemantics) -> Result<()> {
    let Raster {
        height,
        width,
        channels,
        ref samples,
    } = *raster;
    if samples.len() != height * width * channels {
        return Err(Error::invalid("sample count does not match raster shape"));
    }
    let encoded: Vec<u16> = samples
        .iter()
        .map(|&v| semantics.encode(v))
        .collect::<Result<_>>()?;
    let (w, h) = (width as u32, height as u32);
    let shape_err = || Error::invalid(format!("cannot store {channels} channels in PNG"));
    let dynamic = if semantics.kind.is_16bit() {
        match channels {
            1 => {
                ImageBuffer::<Luma<u16>, _>::from_raw(w, h, encoded).map(DynamicImage::ImageLuma16)
            }
            2 => ImageBuffer::<LumaA<u16>, _>::from_raw(w, h, encoded)
                .map(DynamicImage::ImageLumaA16),
            3 => ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, encoded).map(DynamicImage::ImageRgb16),
            4 => {
                ImageBuffer::<Rgba<u16>, _>::from_raw(w, h, encoded).map(DynamicImage::ImageRgba16)
            }
            _ => None,
        }
    } else {
        let bytes: Vec<u8> = encoded.into_iter().map(|v| v as u8).collect();
        match channels {
            1 => ImageBuffer::<Luma<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageLuma8),
            2 => ImageBuffer::<LumaA<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageLumaA8),
            3 => ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageRgb8),
            4 => ImageBuffer::<Rgba<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageRgba8),
            _ => None,
        }
    }
    .ok_or_else(shape_err)?;
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Write {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
}

pub fn load_equirect(path: &Path, semantics: &ChannelSemantics) -> Result<EquirectImage> {
    let r = load_raster(path, semantics)?;
    if r.width != 2 * r.height {
        return Err(Error::Aspect {
            width: r.width,
            height: r.height,
        });
    }
    EquirectImage::new(r.height, r.width, r.channels, r.samples, *semantics)
}

pub fn save_equirect(img: &EquirectImage, path: &Path, semantics: &ChannelSemantics) -> Result<()> {
    let raster = Raster {
        height: img.height(),
        width: img.width(),
        channels: img.channels(),
        samples: img.samples().to_vec(),
    };
    save_raster(path, &raster, semantics)
}
