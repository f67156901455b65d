use serde::{Deserialize, Serialize};

use super::{Image, Sample, CHANNELS};
use crate::camera::Intrinsics;
use crate::error::{Error, Result};

/// Resampling filter used by [`apply_resize_crop`]; recorded in output metadata.
pub const RESAMPLING: &str = "bilinear";

/// Uniform scale followed by a centered crop.
///
/// The scaled canvas is `scaled_width × scaled_height` (the governing axis
/// maps exactly onto the target, the other is floored); the crop window
/// `[crop_x, crop_x + target_width) × [crop_y, crop_y + target_height)` lies
/// inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResizeCropPlan {
    pub src_width: u32,
    pub src_height: u32,
    pub scale: f64,
    pub scaled_width: u32,
    pub scaled_height: u32,
    pub crop_x: u32,
    pub crop_y: u32,
    pub target_width: u32,
    pub target_height: u32,
}

impl ResizeCropPlan {
    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
            && self.crop_x == 0
            && self.crop_y == 0
            && self.src_width == self.target_width
            && self.src_height == self.target_height
    }

    /// Source pixel coordinates to output pixel coordinates, in the same
    /// convention as the adjusted intrinsics.
    pub fn map_pixel(&self, uv: [f64; 2]) -> [f64; 2] {
        [
            uv[0] * self.scale - self.crop_x as f64,
            uv[1] * self.scale - self.crop_y as f64,
        ]
    }
}

/// `src` is `(width, height)`, `target` is `(height, width)`.
pub fn plan_resize_crop(src: (u32, u32), target: (u32, u32)) -> Result<ResizeCropPlan> {
    let (sw, sh) = src;
    let (th, tw) = target;
    if sw == 0 || sh == 0 || tw == 0 || th == 0 {
        return Err(Error::Validation(format!(
            "dimensions must be positive (src {sw}x{sh}, target {th}x{tw} h×w)"
        )));
    }
    let (sw64, sh64, tw64, th64) = (sw as u64, sh as u64, tw as u64, th as u64);
    // tw/sw >= th/sh  <=>  tw·sh >= th·sw
    let (scale, scaled_w, scaled_h) = if tw64 * sh64 >= th64 * sw64 {
        (tw as f64 / sw as f64, tw64, sh64 * tw64 / sw64)
    } else {
        (th as f64 / sh as f64, sw64 * th64 / sh64, th64)
    };
    Ok(ResizeCropPlan {
        src_width: sw,
        src_height: sh,
        scale,
        scaled_width: scaled_w as u32,
        scaled_height: scaled_h as u32,
        crop_x: ((scaled_w - tw64) / 2) as u32,
        crop_y: ((scaled_h - th64) / 2) as u32,
        target_width: tw,
        target_height: th,
    })
}

/// Bilinear resample onto the crop window. Pixel centers are aligned, i.e.
/// output pixel `u` samples source coordinate `(u + crop_x + 0.5)/scale - 0.5`,
/// clamped to the image.
pub fn apply_resize_crop<T: Sample>(img: &Image<T>, plan: &ResizeCropPlan) -> Result<Image<T>> {
    if img.width != plan.src_width || img.height != plan.src_height {
        return Err(Error::Mismatch(format!(
            "image is {}x{} but plan expects {}x{}",
            img.width, img.height, plan.src_width, plan.src_height
        )));
    }
    if plan.is_identity() {
        return Ok(img.clone());
    }
    let (w, h) = (img.width as usize, img.height as usize);
    let taps = |n_out: u32, offset: u32, n_src: usize| -> Vec<(usize, usize, f32)> {
        (0..n_out)
            .map(|u| {
                let s = ((u as f64 + offset as f64 + 0.5) / plan.scale - 0.5).clamp(0.0, (n_src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_src - 1);
                (i0, i1, (s - i0 as f64) as f32)
            })
            .collect()
    };
    let xs = taps(plan.target_width, plan.crop_x, w);
    let ys = taps(plan.target_height, plan.crop_y, h);

    let mut data = Vec::with_capacity(plan.target_width as usize * plan.target_height as usize * CHANNELS);
    let at = |x: usize, y: usize, c: usize| img.data[(y * w + x) * CHANNELS + c].to_f32();
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..CHANNELS {
                let top = at(x0, y0, c) * (1.0 - fx) + at(x1, y0, c) * fx;
                let bottom = at(x0, y1, c) * (1.0 - fx) + at(x1, y1, c) * fx;
                data.push(T::from_f32(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    Image::new(plan.target_width, plan.target_height, data)
}

pub fn adjust_intrinsics(k: &Intrinsics, plan: &ResizeCropPlan) -> Result<Intrinsics> {
    if k.width() != plan.src_width || k.height() != plan.src_height {
        return Err(Error::Mismatch(format!(
            "intrinsics are for {}x{} but plan expects {}x{}",
            k.width(),
            k.height(),
            plan.src_width,
            plan.src_height
        )));
    }
    Intrinsics::new(
        k.fx() * plan.scale,
        k.fy() * plan.scale,
        k.cx() * plan.scale - plan.crop_x as f64,
        k.cy() * plan.scale - plan.crop_y as f64,
        plan.target_width,
        plan.target_height,
    )
}
