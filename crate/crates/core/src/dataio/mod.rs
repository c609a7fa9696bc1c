//! Images, datasets and on-disk artifacts.
//!
//! A dataset directory holds `manifest.csv` (`id,path,label,split,c1,c2`),
//! `classes.txt` (one class name per line) and the referenced binary PGM
//! images. Paths in the manifest are relative to the directory.

mod manifest;
mod model_file;
mod pgm;
mod predictions;
mod toy;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use manifest::{DatasetManifest, ManifestEntry, Split};
pub use model_file::{load_model, save_model, ModelFile, MODEL_MAGIC};
pub use pgm::{decode_pgm, encode_pgm, load_image, save_image};
pub use predictions::{read_predictions, write_predictions, PredictionRow};
pub use toy::{
    class_signatures, default_compound_pairs, generate_compound_set, generate_toy_dataset,
    ToyGenConfig, EMOTION_NAMES,
};

/// Grayscale image with pixels in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height < 2 || width < 1 {
            return Err(Error::invalid(format!(
                "image must be at least 2x1, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::shape(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(i) = pixels
            .iter()
            .position(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
        {
            return Err(Error::invalid(format!(
                "pixel {i} = {} outside [0,1]",
                pixels[i]
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    /// Builds an image from a pixel function; values are clamped to `[0,1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c).clamp(0.0, 1.0));
            }
        }
        Self::new(height, width, pixels)
    }
}

/// One sample; `label` is `None` for unlabeled (face-recognition surrogate)
/// and compound samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub image: ImageTensor,
    pub label: Option<usize>,
}

/// A manifest together with its decoded images (same order as entries).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub images: Vec<ImageTensor>,
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const CLASSES_FILE: &str = "classes.txt";

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.manifest.class_names.len()
    }

    /// Samples of one split, in manifest order.
    pub fn split(&self, split: Split) -> Vec<LabeledSample> {
        self.manifest
            .entries
            .iter()
            .zip(&self.images)
            .filter(|(e, _)| e.split == split)
            .map(|(e, img)| LabeledSample {
                id: e.id.clone(),
                image: img.clone(),
                label: e.label,
            })
            .collect()
    }

    /// Compound samples with their constituent pairs.
    pub fn compound(&self) -> Vec<(LabeledSample, (usize, usize))> {
        self.manifest
            .entries
            .iter()
            .zip(&self.images)
            .filter_map(|(e, img)| {
                let pair = e.constituents?;
                (e.split == Split::Compound).then(|| {
                    (
                        LabeledSample {
                            id: e.id.clone(),
                            image: img.clone(),
                            label: None,
                        },
                        pair,
                    )
                })
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        if self.images.len() != self.manifest.entries.len() {
            return Err(Error::shape("manifest and image list lengths differ"));
        }
        self.manifest.validate()?;
        for (entry, img) in self.manifest.entries.iter().zip(&self.images) {
            let path = dir.join(&entry.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            save_image(&path, img)?;
        }
        self.manifest.write(dir)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = DatasetManifest::read(dir)?;
        let images = manifest
            .entries
            .iter()
            .map(|e| load_image(&dir.join(&e.path)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { manifest, images })
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn path_label(path: &Path) -> String {
    PathBuf::from(path).display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_invariants() {
        assert!(ImageTensor::new(1, 4, vec![0.0; 4]).is_err());
        assert!(ImageTensor::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImageTensor::new(2, 2, vec![0.0, 1.1, 0.0, 0.0]).is_err());
        let img = ImageTensor::from_fn(2, 3, |r, c| (r * 3 + c) as f64 / 10.0).unwrap();
        assert_eq!(img.get(1, 2), 0.5);
        assert_eq!(img.row(1), &[0.3, 0.4, 0.5]);
    }
}
