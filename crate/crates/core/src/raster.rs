//! Float sample grids and the interpolation kernels shared by every resampler.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnomonic::SphericalCoord;
use crate::imageio::ChannelSemantics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Bilinear,
    Nearest,
}

impl fmt::Display for Interp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interp::Bilinear => "bilinear",
            Interp::Nearest => "nearest",
        })
    }
}

impl FromStr for Interp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Interp::Bilinear),
            "nearest" => Ok(Interp::Nearest),
            other => Err(Error::invalid(format!(
                "unknown interpolation mode {other:?}"
            ))),
        }
    }
}

/// How out-of-range column coordinates are resolved. Rows always clamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnBorder {
    Clamp,
    Wrap,
}

/// Borrowed view of an interleaved `height x width x channels` grid.
#[derive(Debug, Clone, Copy)]
pub struct GridView<'a> {
    pub data: &'a [f32],
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl<'a> GridView<'a> {
    pub fn new(data: &'a [f32], height: usize, width: usize, channels: usize) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        GridView {
            data,
            height,
            width,
            channels,
        }
    }

    #[inline]
    fn texel(&self, row: usize, col: usize) -> &'a [f32] {
        let at = (row * self.width + col) * self.channels;
        &self.data[at..at + self.channels]
    }

    #[inline]
    fn row_index(&self, r: i64) -> usize {
        r.clamp(0, self.height as i64 - 1) as usize
    }

    #[inline]
    fn col_index(&self, c: i64, border: ColumnBorder) -> usize {
        match border {
            ColumnBorder::Clamp => c.clamp(0, self.width as i64 - 1) as usize,
            ColumnBorder::Wrap => c.rem_euclid(self.width as i64) as usize,
        }
    }

    /// Samples at continuous `(row, col)` where pixel centers sit on integers.
    pub fn sample(
        &self,
        row: f64,
        col: f64,
        interp: Interp,
        border: ColumnBorder,
        out: &mut [f32],
    ) {
        match interp {
            Interp::Nearest => {
                // Round half up.
                let r = self.row_index((row + 0.5).floor() as i64);
                let c = self.col_index((col + 0.5).floor() as i64, border);
                out.copy_from_slice(self.texel(r, c));
            }
            Interp::Bilinear => {
                let r0f = row.floor();
                let c0f = col.floor();
                let fr = row - r0f;
                let fc = col - c0f;
                let (r0, c0) = (r0f as i64, c0f as i64);
                let ra = self.row_index(r0);
                let rb = self.row_index(r0 + 1);
                let ca = self.col_index(c0, border);
                let cb = self.col_index(c0 + 1, border);
                let (t00, t01) = (self.texel(ra, ca), self.texel(ra, cb));
                let (t10, t11) = (self.texel(rb, ca), self.texel(rb, cb));
                for k in 0..self.channels {
                    let top = lerp(t00[k] as f64, t01[k] as f64, fc);
                    let bottom = lerp(t10[k] as f64, t11[k] as f64, fc);
                    out[k] = lerp(top, bottom, fr) as f32;
                }
            }
        }
    }
}

/// Linear blend that reproduces equal endpoints exactly and never leaves
/// the endpoint interval.
#[inline]
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if a == b {
        return a;
    }
    let v = a + (b - a) * t;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// Full-sphere equirectangular image (`width == 2 * height`).
///
/// Pixel `(i, j)` is centered at latitude `π(0.5 - (i + 0.5)/H)` and
/// longitude `2π((j + 0.5)/W - 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectImage {
    height: usize,
    width: usize,
    channels: usize,
    samples: Vec<f32>,
    pub semantics: ChannelSemantics,
}

impl EquirectImage {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        samples: Vec<f32>,
        semantics: ChannelSemantics,
    ) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::Aspect { width, height });
        }
        if channels == 0 {
            return Err(Error::invalid("image needs at least one channel"));
        }
        if samples.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "expected {} samples for {height}x{width}x{channels}, got {}",
                height * width * channels,
                samples.len()
            )));
        }
        Ok(EquirectImage {
            height,
            width,
            channels,
            samples,
            semantics,
        })
    }

    /// Builds an image by evaluating `f` at every pixel center.
    pub fn from_fn<F>(
        height: usize,
        channels: usize,
        semantics: ChannelSemantics,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(SphericalCoord, &mut [f32]),
    {
        let width = 2 * height;
        let mut samples = vec![0f32; height * width * channels];
        for (p, px) in samples.chunks_exact_mut(channels).enumerate() {
            let (i, j) = (p / width, p % width);
            f(pixel_center(i, j, height, width), px);
        }
        Self::new(height, width, channels, samples, semantics)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let at = (row * self.width + col) * self.channels;
        &self.samples[at..at + self.channels]
    }

    pub fn view(&self) -> GridView<'_> {
        GridView::new(&self.samples, self.height, self.width, self.channels)
    }

    /// Subdivision level whose equirect is this size (`H = 2^(s+1)`), if any.
    pub fn source_level(&self) -> Option<u32> {
        level_for_height(self.height)
    }

    /// Samples at a direction; longitude wraps, latitude clamps.
    pub fn sample_at(&self, coord: &SphericalCoord, interp: Interp, out: &mut [f32]) {
        let (row, col) = sphere_to_pixel(coord, self.height, self.width);
        self.view()
            .sample(row, col, interp, ColumnBorder::Wrap, out);
    }
}

/// `s` with `height == 2^(s+1)`; `None` unless `height` is a power of two >= 2.
pub fn level_for_height(height: usize) -> Option<u32> {
    if height >= 2 && height.is_power_of_two() {
        Some(height.trailing_zeros() - 1)
    } else {
        None
    }
}

pub fn pixel_center(row: usize, col: usize, height: usize, width: usize) -> SphericalCoord {
    SphericalCoord {
        lat: PI * (0.5 - (row as f64 + 0.5) / height as f64),
        lon: 2.0 * PI * ((col as f64 + 0.5) / width as f64 - 0.5),
    }
}

/// Continuous `(row, col)` of a direction, pixel centers on integers.
pub fn sphere_to_pixel(coord: &SphericalCoord, height: usize, width: usize) -> (f64, f64) {
    (
        (0.5 - coord.lat / PI) * height as f64 - 0.5,
        (coord.lon / (2.0 * PI) + 0.5) * width as f64 - 0.5,
    )
}
