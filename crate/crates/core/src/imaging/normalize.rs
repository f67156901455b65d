use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FloatImage, Image, CHANNELS};
use crate::error::{read_file, Error, Result};

const DEFAULT_CONFIG: &str = include_str!("../../config/normalization.toml");

/// Per-channel `(v - mean) / std` on samples scaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl NormalizationParams {
    pub fn identity() -> Self {
        NormalizationParams {
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }

    /// Constants shipped in `config/normalization.toml`.
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled normalization config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: NormalizationParams =
            toml::from_str(text).map_err(|e| Error::Validation(format!("normalization config: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::parse(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|&s| !(s > 0.0 && s.is_finite())) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation(format!(
                "normalization std {:?} must be positive and mean finite",
                self.std
            )));
        }
        Ok(())
    }
}

pub fn normalize(img: &FloatImage, params: &NormalizationParams) -> Result<FloatImage> {
    params.validate()?;
    if img.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Validation("normalize expects samples in [0, 1]".into()));
    }
    Ok(map_channels(img, |v, c| (v - params.mean[c]) / params.std[c]))
}

pub fn denormalize(img: &FloatImage, params: &NormalizationParams) -> Result<FloatImage> {
    params.validate()?;
    Ok(map_channels(img, |v, c| v * params.std[c] + params.mean[c]))
}

fn map_channels(img: &FloatImage, f: impl Fn(f32, usize) -> f32) -> FloatImage {
    Image {
        width: img.width,
        height: img.height,
        data: img.data.iter().enumerate().map(|(i, &v)| f(v, i % CHANNELS)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(v: [f32; 3]) -> FloatImage {
        FloatImage::filled(1, 1, v)
    }

    #[test]
    fn identity_params() {
        let img = single([0.1, 0.5, 0.9]);
        assert_eq!(normalize(&img, &NormalizationParams::identity()).unwrap(), img);
    }

    #[test]
    fn centering_and_scaling() {
        let p = NormalizationParams {
            mean: [0.5, 0.25, 0.0],
            std: [0.25, 0.25, 1.0],
        };
        let out = normalize(&single([0.5, 0.75, 0.0]), &p).unwrap();
        assert_eq!(out.pixel(0, 0), [0.0, 2.0, 0.0]);
    }

    #[test]
    fn rejects_bad_std_and_range() {
        let p = NormalizationParams {
            mean: [0.0; 3],
            std: [1.0, 0.0, 1.0],
        };
        assert!(normalize(&single([0.1; 3]), &p).is_err());
        assert!(normalize(&single([1.5; 3]), &NormalizationParams::identity()).is_err());
        assert!(NormalizationParams::from_toml("mean = [0.0, 0.0, 0.0]\nstd = [1.0, -1.0, 1.0]\n").is_err());
    }

    #[test]
    fn bundled_constants_load() {
        let p = NormalizationParams::bundled();
        assert_eq!(p.mean, [0.485, 0.456, 0.406]);
        assert_eq!(p.std, [0.229, 0.224, 0.225]);
    }

    proptest! {
        #[test]
        fn invertible(px in prop::collection::vec(0.0f32..=1.0, 3..=30)) {
            let n = px.len() / 3;
            let img = FloatImage::new(n as u32, 1, px[..n * 3].to_vec()).unwrap();
            let p = NormalizationParams::bundled();
            let back = denormalize(&normalize(&img, &p).unwrap(), &p).unwrap();
            for (a, b) in img.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
