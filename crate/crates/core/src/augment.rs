//! Weak augmentations and region-blend sample synthesis.
//!
//! Blend mask convention: pixels inside the box come from the SECOND image,
//! everything else from the first. For the horizontal blend the box is the
//! lower half, so the first parent supplies rows `[0, floor(H/2))` and the
//! second parent supplies rows `[floor(H/2), H)`.

use crate::dataio::{ImageTensor, LabeledSample};
use crate::error::{Error, Result};
use crate::numcore::SeededRng;

/// Pixel-coordinate box `[x, x+w) x [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlendBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BlendBox {
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        col >= self.x && col < self.x + self.w && row >= self.y && row < self.y + self.h
    }
}

/// A box plus the label ratio assigned to the first parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendSpec {
    pub bbox: BlendBox,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendRecord {
    pub image: ImageTensor,
    /// `lambda * onehot(c1) + (1 - lambda) * onehot(c2)`.
    pub soft_label: Vec<f64>,
    pub parent_ids: (String, String),
    pub parent_classes: (usize, usize),
    pub lambda: f64,
}

/// Reflect index into `0..n` without repeating the edge (`-1 -> 1`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Reflect-pad by `pad` on every side, then crop a random window of the input size.
pub fn random_crop_pad(img: &ImageTensor, pad: usize, rng: &mut SeededRng) -> ImageTensor {
    if pad == 0 {
        return img.clone();
    }
    let (h, w) = img.shape();
    let oy = rng.below(2 * pad + 1) as isize - pad as isize;
    let ox = rng.below(2 * pad + 1) as isize - pad as isize;
    ImageTensor::from_fn(h, w, |r, c| {
        img.get(reflect(r as isize + oy, h), reflect(c as isize + ox, w))
    })
    .expect("crop preserves shape and range")
}

pub fn mirror(img: &ImageTensor) -> ImageTensor {
    let (h, w) = img.shape();
    ImageTensor::from_fn(h, w, |r, c| img.get(r, w - 1 - c)).expect("mirror preserves shape and range")
}

/// Mirrors columns with probability `p`. Always consumes exactly one draw.
pub fn horizontal_flip(img: &ImageTensor, rng: &mut SeededRng, p: f64) -> ImageTensor {
    if rng.next_f64() < p {
        mirror(img)
    } else {
        img.clone()
    }
}

/// Crop-with-padding followed by a fair horizontal flip.
pub fn weak_augment(img: &ImageTensor, pad: usize, rng: &mut SeededRng) -> ImageTensor {
    let cropped = random_crop_pad(img, pad, rng);
    horizontal_flip(&cropped, rng, 0.5)
}

fn require_label(s: &LabeledSample) -> Result<usize> {
    s.label
        .ok_or_else(|| Error::invalid(format!("sample '{}' has no label", s.id)))
}

fn require_same_shape(a: &LabeledSample, b: &LabeledSample) -> Result<()> {
    if a.image.shape() != b.image.shape() {
        return Err(Error::shape(format!(
            "cannot blend {:?} with {:?}",
            a.image.shape(),
            b.image.shape()
        )));
    }
    Ok(())
}

fn paste(a: &ImageTensor, b: &ImageTensor, bbox: BlendBox) -> ImageTensor {
    let (h, w) = a.shape();
    ImageTensor::from_fn(h, w, |r, c| if bbox.contains(r, c) { b.get(r, c) } else { a.get(r, c) })
        .expect("blend preserves shape and range")
}

fn mixed_label(classes: usize, c1: usize, c2: usize, lambda: f64) -> Result<Vec<f64>> {
    if c1 >= classes || c2 >= classes {
        return Err(Error::invalid(format!("labels ({c1},{c2}) out of range for {classes} classes")));
    }
    let mut y = vec![0.0; classes];
    y[c1] += lambda;
    y[c2] += 1.0 - lambda;
    Ok(y)
}

/// Box of a CutMix draw with ratio `lambda` centred at `(cx, cy)`, clipped to the image.
pub fn cutmix_box(height: usize, width: usize, lambda: f64, cx: f64, cy: f64) -> BlendBox {
    let cut = (1.0 - lambda).max(0.0).sqrt();
    let bw = width as f64 * cut;
    let bh = height as f64 * cut;
    let clip = |v: f64, hi: usize| v.round().clamp(0.0, hi as f64) as usize;
    let (x0, x1) = (clip(cx - bw / 2.0, width), clip(cx + bw / 2.0, width));
    let (y0, y1) = (clip(cy - bh / 2.0, height), clip(cy + bh / 2.0, height));
    BlendBox {
        x: x0,
        y: y0,
        w: x1 - x0,
        h: y1 - y0,
    }
}

/// CutMix with a given box; the label ratio is the area actually kept from `a`.
pub fn cutmix_with_box(a: &LabeledSample, b: &LabeledSample, bbox: BlendBox, classes: usize) -> Result<BlendRecord> {
    require_same_shape(a, b)?;
    let (c1, c2) = (require_label(a)?, require_label(b)?);
    let (h, w) = a.image.shape();
    if bbox.x + bbox.w > w || bbox.y + bbox.h > h {
        return Err(Error::invalid(format!("box {bbox:?} exceeds {h}x{w} image")));
    }
    let lambda = 1.0 - bbox.area() as f64 / (h * w) as f64;
    Ok(BlendRecord {
        image: paste(&a.image, &b.image, bbox),
        soft_label: mixed_label(classes, c1, c2, lambda)?,
        parent_ids: (a.id.clone(), b.id.clone()),
        parent_classes: (c1, c2),
        lambda,
    })
}

/// General CutMix: ratio ~ Beta(1,1) (uniform), centre uniform over the image.
pub fn cutmix_general(a: &LabeledSample, b: &LabeledSample, classes: usize, rng: &mut SeededRng) -> Result<BlendRecord> {
    require_same_shape(a, b)?;
    let (h, w) = a.image.shape();
    let lambda = rng.next_f64();
    let cx = rng.next_f64() * w as f64;
    let cy = rng.next_f64() * h as f64;
    cutmix_with_box(a, b, cutmix_box(h, w, lambda, cx, cy), classes)
}

/// Upper half of `a` over lower half of `b`, soft label 0.5 / 0.5.
pub fn blend_horizontal(a: &LabeledSample, b: &LabeledSample, classes: usize) -> Result<BlendRecord> {
    require_same_shape(a, b)?;
    let (c1, c2) = (require_label(a)?, require_label(b)?);
    if c1 == c2 {
        return Err(Error::invalid(format!(
            "horizontal blend needs different labels, both are {c1}"
        )));
    }
    let (h, w) = a.image.shape();
    let top = h / 2;
    let bbox = BlendBox {
        x: 0,
        y: top,
        w,
        h: h - top,
    };
    Ok(BlendRecord {
        image: paste(&a.image, &b.image, bbox),
        soft_label: mixed_label(classes, c1, c2, 0.5)?,
        parent_ids: (a.id.clone(), b.id.clone()),
        parent_classes: (c1, c2),
        lambda: 0.5,
    })
}
