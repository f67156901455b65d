use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gt::GRID_FILE;
use crate::annotation::SemanticClass;
use crate::error::{Error, Result};
use crate::grid::{GridKind, GridSpec, SemanticGrid};

/// Where predictions come from: a directory of grids or a built-in
/// reference predictor derived from the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionSource {
    Dir(PathBuf),
    Oracle,
    Zeros,
    Ones,
    /// Flips each ground-truth cell with probability `p`.
    Noisy { p: f64, seed: u64 },
}

impl FromStr for PredictionSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("builtin:") else {
            return Ok(PredictionSource::Dir(PathBuf::from(s)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || Error::Validation(format!("unknown built-in predictor `{s}`"));
        match parts.as_slice() {
            ["oracle"] => Ok(PredictionSource::Oracle),
            ["zeros"] => Ok(PredictionSource::Zeros),
            ["ones"] => Ok(PredictionSource::Ones),
            ["noisy", p, seed] => {
                let p: f64 = p.parse().map_err(|_| bad())?;
                let seed: u64 = seed.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Validation(format!("flip probability {p} outside [0, 1]")));
                }
                Ok(PredictionSource::Noisy { p, seed })
            }
            _ => Err(bad()),
        }
    }
}

impl PredictionSource {
    /// Directory sources are joined with `sub` (used for per-test-set
    /// layouts); built-ins are unchanged.
    pub fn join(&self, sub: &str) -> PredictionSource {
        match self {
            PredictionSource::Dir(d) => PredictionSource::Dir(d.join(sub)),
            other => other.clone(),
        }
    }

    /// Prediction for one sample, or `None` when a directory source has
    /// nothing for it. `index` is the sample's position in the manifest.
    pub fn predict(&self, sample_id: &str, index: usize, gt: &SemanticGrid) -> Result<Option<SemanticGrid>> {
        let spec = *gt.spec();
        let classes = gt.classes();
        match self {
            PredictionSource::Dir(dir) => load_prediction(dir, sample_id, classes, spec),
            PredictionSource::Oracle => Ok(Some(gt.clone())),
            PredictionSource::Zeros => SemanticGrid::zeros(spec, classes.to_vec()).map(Some),
            PredictionSource::Ones => {
                let n = gt.data().len();
                SemanticGrid::from_data(spec, classes.to_vec(), GridKind::Binary, vec![1.0; n]).map(Some)
            }
            PredictionSource::Noisy { p, seed } => {
                let mut rng = noise_rng(*seed, index);
                let data = gt
                    .data()
                    .iter()
                    .map(|&v| if rng.random_bool(*p) { 1.0 - v } else { v })
                    .collect();
                SemanticGrid::from_data(spec, classes.to_vec(), GridKind::Binary, data).map(Some)
            }
        }
    }
}

/// Stream for the noisy predictor on sample `index`.
pub fn noise_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

/// Reads `<dir>/<sample_id>/grid.bevg` if present, else one
/// `<class>.png` per class from `<dir>/<sample_id>/`.
pub fn load_prediction(
    dir: &Path,
    sample_id: &str,
    classes: &[SemanticClass],
    spec: GridSpec,
) -> Result<Option<SemanticGrid>> {
    let sample_dir = dir.join(sample_id);
    let bevg = sample_dir.join(GRID_FILE);
    if bevg.is_file() {
        return SemanticGrid::read_bevg(&bevg, spec)?.select(classes).map(Some);
    }
    let first_png = classes.first().map(|c| sample_dir.join(format!("{}.png", c.name())));
    if first_png.is_some_and(|p| p.is_file()) {
        return SemanticGrid::read_pngs(&sample_dir, classes, spec).map(Some);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt() -> SemanticGrid {
        let spec = GridSpec::new(4.0, 0.5).unwrap();
        let data = (0..64).map(|i| (i % 3 == 0) as u8 as f32).collect();
        SemanticGrid::from_data(spec, vec![SemanticClass::Vehicle], GridKind::Binary, data).unwrap()
    }

    #[test]
    fn parse_sources() {
        assert_eq!("builtin:oracle".parse::<PredictionSource>().unwrap(), PredictionSource::Oracle);
        assert_eq!(
            "builtin:noisy:0.1:7".parse::<PredictionSource>().unwrap(),
            PredictionSource::Noisy { p: 0.1, seed: 7 }
        );
        assert!("builtin:noisy:2:7".parse::<PredictionSource>().is_err());
        assert!("builtin:magic".parse::<PredictionSource>().is_err());
        assert_eq!("preds".parse::<PredictionSource>().unwrap(), PredictionSource::Dir("preds".into()));
    }

    #[test]
    fn builtins() {
        let g = gt();
        assert_eq!(PredictionSource::Oracle.predict("a", 0, &g).unwrap().unwrap(), g);
        assert_eq!(PredictionSource::Zeros.predict("a", 0, &g).unwrap().unwrap().count_ones(0), 0);
        assert_eq!(PredictionSource::Ones.predict("a", 0, &g).unwrap().unwrap().count_ones(0), 64);
        let noisy = PredictionSource::Noisy { p: 1.0, seed: 1 };
        let flipped = noisy.predict("a", 0, &g).unwrap().unwrap();
        assert_eq!(flipped.count_ones(0), 64 - g.count_ones(0));
        let n = PredictionSource::Noisy { p: 0.5, seed: 3 };
        assert_eq!(n.predict("a", 4, &g).unwrap(), n.predict("a", 4, &g).unwrap());
    }

    #[test]
    fn directory_formats_auto_detected() {
        let dir = tempfile::tempdir().unwrap();
        let g = gt();
        g.write_bevg(&dir.path().join("a").join(GRID_FILE)).unwrap();
        g.write_pngs(&dir.path().join("b")).unwrap();
        let src = PredictionSource::Dir(dir.path().to_path_buf());
        assert_eq!(src.predict("a", 0, &g).unwrap().unwrap(), g);
        assert_eq!(src.predict("b", 0, &g).unwrap().unwrap(), g);
        assert_eq!(src.predict("c", 0, &g).unwrap(), None);
    }
}
