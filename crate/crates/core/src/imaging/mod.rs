//! Camera harmonization: aspect-preserving resize with center crop, matching
//! intrinsics adjustment, and per-channel normalization.

mod normalize;
mod resize;

use std::path::Path;

pub use normalize::{denormalize, normalize, NormalizationParams};
pub use resize::{adjust_intrinsics, apply_resize_crop, plan_resize_crop, ResizeCropPlan, RESAMPLING};

use crate::error::{write_file, Error, Result};

pub const CHANNELS: usize = 3;

/// Pixel sample type: 8-bit or float.
pub trait Sample: Copy + PartialEq + std::fmt::Debug + Send + Sync {
    fn to_f32(self) -> f32;
    fn from_f32(v: f32) -> Self;
}

impl Sample for u8 {
    fn to_f32(self) -> f32 {
        self as f32
    }
    fn from_f32(v: f32) -> Self {
        v.round().clamp(0.0, 255.0) as u8
    }
}

impl Sample for f32 {
    fn to_f32(self) -> f32 {
        self
    }
    fn from_f32(v: f32) -> Self {
        v
    }
}

/// Row-major interleaved RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

pub type RgbImage = Image<u8>;
pub type FloatImage = Image<f32>;

impl<T: Sample> Image<T> {
    pub fn new(width: u32, height: u32, data: Vec<T>) -> Result<Self> {
        let expected = width as usize * height as usize * CHANNELS;
        if data.len() != expected {
            return Err(Error::Validation(format!(
                "image data has {} samples, expected {expected} for {width}x{height} RGB",
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [T; 3]) -> Self {
        let n = width as usize * height as usize;
        let data = std::iter::repeat_n(rgb, n).flatten().collect();
        Image { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [T; 3] {
        let i = (y as usize * self.width as usize + x as usize) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [T; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * CHANNELS;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Fills the axis-aligned rectangle `[x0, x1) × [y0, y1)`, clipped.
    pub fn fill_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [T; 3]) {
        let (w, h) = (self.width as i64, self.height as i64);
        let (xa, xb) = (x0.clamp(0, w) as u32, x1.clamp(0, w) as u32);
        let (ya, yb) = (y0.clamp(0, h) as u32, y1.clamp(0, h) as u32);
        for y in ya..yb {
            for x in xa..xb {
                self.put_pixel(x, y, rgb);
            }
        }
    }
}

impl RgbImage {
    /// Samples scaled to `[0, 1]`.
    pub fn to_float(&self) -> FloatImage {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }

    pub fn read_png(path: &Path) -> Result<RgbImage> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let img = image::open(path)
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .into_rgb8();
        let (w, h) = img.dimensions();
        Image::new(w, h, img.into_raw())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let buf = image::RgbImage::from_raw(self.width, self.height, self.data.clone())
            .ok_or_else(|| Error::Invariant("image buffer size".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::Image {
                path: "<memory>".into(),
                message: e.to_string(),
            })?;
        Ok(out.into_inner())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode_png()?)
    }
}

impl FloatImage {
    /// Inverse of [`RgbImage::to_float`], rounding and clamping.
    pub fn to_rgb8(&self) -> RgbImage {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| u8::from_f32(v * 255.0)).collect(),
        }
    }
}
