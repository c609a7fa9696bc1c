//! Procedural stand-in for a facial expression corpus.
//!
//! Each half of an image is a grid of two-level cells: two row blocks by `K`
//! column blocks, with columns folded about the vertical axis so every
//! pattern is mirror-symmetric, and rows counted away from the split line so
//! the halves mirror each other about it. A class owns one even-weight codeword over the
//! `2K` cells (any two differ in at least two cells) and draws it in both
//! halves, so either half alone identifies the class. Cells are a quarter of
//! the half wide and tall, which keeps small shifts and horizontal flips close
//! to label-preserving. A class sample is its prototype plus clamped Gaussian
//! noise, quantized to the 8-bit grid the PGM files store; a compound sample takes its upper half from one class and its lower
//! half from another.

use super::{Dataset, DatasetManifest, ImageTensor, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::numcore::SeededRng;

pub const EMOTION_NAMES: [&str; 7] = [
    "neutral",
    "happiness",
    "surprise",
    "sadness",
    "anger",
    "disgust",
    "fear",
];

// cell levels sit on the 8-bit grid (about 0.15 and 0.85)
const LOW: f64 = 38.0 / 255.0;
const HIGH: f64 = 217.0 / 255.0;

/// Stream tag mixed into the seed for compound generation.
const COMPOUND_STREAM: u64 = 0x636f_6d70_6f75_6e64;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyGenConfig {
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    pub n_train: usize,
    pub n_eval: usize,
    pub n_fr: usize,
    pub sigma: f64,
    /// Per-class geometric decay of training counts; 1 is balanced.
    pub imbalance: f64,
    pub seed: u64,
}

impl Default for ToyGenConfig {
    fn default() -> Self {
        Self {
            classes: 7,
            height: 16,
            width: 16,
            n_train: 700,
            n_eval: 350,
            n_fr: 300,
            sigma: 0.05,
            imbalance: 1.0,
            seed: 1,
        }
    }
}

impl ToyGenConfig {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid("need at least 2 classes"));
        }
        if self.n_train < self.classes {
            return Err(Error::invalid(format!(
                "n_train={} is smaller than the class count {}",
                self.n_train, self.classes
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma must be finite and >= 0"));
        }
        if !(self.imbalance > 0.0 && self.imbalance <= 1.0) {
            return Err(Error::invalid("imbalance must lie in (0, 1]"));
        }
        let blocks = column_blocks(self.classes);
        if self.height < 4 || self.width / 2 < blocks {
            return Err(Error::invalid(format!(
                "a {}x{} image cannot hold the {} cell signature grid",
                self.height,
                self.width,
                2 * blocks
            )));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.classes)
            .map(|k| {
                EMOTION_NAMES
                    .get(k)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("class{k}"))
            })
            .collect()
    }
}

/// Folded column blocks `K`: the smallest with `2^(2K-1) - 1 >= classes`
/// nonzero even-weight words.
fn column_blocks(classes: usize) -> usize {
    (1..).find(|k| (1usize << (2 * k - 1)) > classes).unwrap()
}

/// The `class`-th nonzero even-weight word over `2K` bits.
fn codeword(classes: usize, class: usize) -> usize {
    (1usize..)
        .filter(|w| w.count_ones() % 2 == 0)
        .nth(class)
        .filter(|w| *w < 1 << (2 * column_blocks(classes)))
        .expect("enough codewords")
}

/// Row range boundary between the upper and lower half.
pub(crate) fn split_row(height: usize) -> usize {
    height / 2
}

/// Level of pixel `(row, col)` for `word`; `row` counts away from the split
/// line, so the two halves mirror each other about it.
fn cell_level(cfg: &ToyGenConfig, word: usize, row: usize, half_height: usize, col: usize) -> f64 {
    let blocks = column_blocks(cfg.classes);
    let folded = col.min(cfg.width - 1 - col);
    let row_block = row * 2 / half_height;
    let col_block = (folded * blocks / cfg.width.div_ceil(2)).min(blocks - 1);
    if word >> (row_block * blocks + col_block) & 1 == 1 {
        HIGH
    } else {
        LOW
    }
}

/// Noiseless image whose upper half belongs to `upper` and lower half to `lower`.
fn composite(cfg: &ToyGenConfig, upper: usize, lower: usize) -> Result<ImageTensor> {
    let split = split_row(cfg.height);
    let (uw, lw) = (codeword(cfg.classes, upper), codeword(cfg.classes, lower));
    ImageTensor::from_fn(cfg.height, cfg.width, |r, c| {
        if r < split {
            cell_level(cfg, uw, split - 1 - r, split, c)
        } else {
            cell_level(cfg, lw, r - split, cfg.height - split, c)
        }
    })
}

/// Noiseless per-class prototypes.
pub fn class_signatures(cfg: &ToyGenConfig) -> Result<Vec<ImageTensor>> {
    cfg.validate()?;
    (0..cfg.classes).map(|k| composite(cfg, k, k)).collect()
}

/// Quantizing here makes a generated dataset equal to its reloaded copy.
fn add_noise(proto: &ImageTensor, sigma: f64, rng: &mut SeededRng) -> Result<ImageTensor> {
    let (h, w) = proto.shape();
    let mut px = Vec::with_capacity(h * w);
    for &p in proto.pixels() {
        let v = if sigma > 0.0 { p + sigma * rng.normal() } else { p };
        px.push((v.clamp(0.0, 1.0) * 255.0).round() / 255.0);
    }
    ImageTensor::new(h, w, px)
}

/// Per-class counts summing to `n`, each at least 1 when `n >= classes`,
/// proportional to `decay^k` (largest-remainder rounding).
fn class_counts(n: usize, classes: usize, decay: f64) -> Vec<usize> {
    let floor = if n >= classes { 1 } else { 0 };
    let rest = n - floor * classes;
    let weights: Vec<f64> = (0..classes).map(|k| decay.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| rest as f64 * w / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = rest - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..classes).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts.iter().map(|c| c + floor).collect()
}

fn shuffled_labels(counts: &[usize], rng: &mut SeededRng) -> Vec<usize> {
    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
        .collect();
    rng.shuffle(&mut labels);
    labels
}

/// FER train / FER eval / unlabeled FR splits. Pure function of `cfg`.
pub fn generate_toy_dataset(cfg: &ToyGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let protos = class_signatures(cfg)?;
    let mut rng = SeededRng::new(cfg.seed);
    let mut entries = Vec::new();
    let mut images = Vec::new();

    let plan = [
        (Split::FerTrain, class_counts(cfg.n_train, cfg.classes, cfg.imbalance), true),
        (Split::FerEval, class_counts(cfg.n_eval, cfg.classes, 1.0), true),
        (Split::Fr, class_counts(cfg.n_fr, cfg.classes, 1.0), false),
    ];
    for (split, counts, labeled) in plan {
        for (i, class) in shuffled_labels(&counts, &mut rng).into_iter().enumerate() {
            let id = format!("{split}-{i:05}");
            images.push(add_noise(&protos[class], cfg.sigma, &mut rng)?);
            entries.push(ManifestEntry {
                path: format!("images/{id}.pgm"),
                id,
                label: labeled.then_some(class),
                split,
                constituents: None,
            });
        }
    }
    Ok(Dataset {
        manifest: DatasetManifest {
            class_names: cfg.class_names(),
            entries,
        },
        images,
    })
}

/// Constituent pairs of the seven-class compound set (adverb class first),
/// or every unordered pair for other class counts.
pub fn default_compound_pairs(classes: usize) -> Vec<(usize, usize)> {
    if classes == 7 {
        // happily surprised, happily disgusted, sadly fearful, sadly angry,
        // sadly surprised, sadly disgusted, fearfully angry, fearfully
        // surprised, angrily surprised, angrily disgusted, disgustedly surprised
        vec![
            (1, 2),
            (1, 5),
            (3, 6),
            (3, 4),
            (3, 2),
            (3, 5),
            (6, 4),
            (6, 2),
            (4, 2),
            (4, 5),
            (5, 2),
        ]
    } else {
        (0..classes)
            .flat_map(|a| (a + 1..classes).map(move |b| (a, b)))
            .collect()
    }
}

/// `n_per_pair` compound samples per pair: upper half from `c1`, lower from `c2`.
pub fn generate_compound_set(cfg: &ToyGenConfig, pairs: &[(usize, usize)], n_per_pair: usize) -> Result<Dataset> {
    if cfg.classes < 2 || cfg.height < 4 || cfg.width / 2 < column_blocks(cfg.classes) {
        cfg.validate()?;
    }
    for &(a, b) in pairs {
        if a == b {
            return Err(Error::invalid(format!("compound pair ({a},{b}) repeats a class")));
        }
        if a >= cfg.classes || b >= cfg.classes {
            return Err(Error::invalid(format!("compound pair ({a},{b}) out of range")));
        }
    }
    let mut rng = SeededRng::new(cfg.seed ^ COMPOUND_STREAM);
    let mut entries = Vec::new();
    let mut images = Vec::new();
    for &(a, b) in pairs {
        let proto = composite(cfg, a, b)?;
        for _ in 0..n_per_pair {
            let id = format!("compound-{:05}", entries.len());
            images.push(add_noise(&proto, cfg.sigma, &mut rng)?);
            entries.push(ManifestEntry {
                path: format!("images/{id}.pgm"),
                id,
                label: None,
                split: Split::Compound,
                constituents: Some((a, b)),
            });
        }
    }
    Ok(Dataset {
        manifest: DatasetManifest {
            class_names: cfg.class_names(),
            entries,
        },
        images,
    })
}
