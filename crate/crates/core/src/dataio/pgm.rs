//! Binary PGM (P5, maxval 255).

use std::path::Path;

use super::{path_label, write_bytes, ImageTensor};
use crate::error::{Error, Result};

pub fn encode_pgm(img: &ImageTensor) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    ctx: &'a str,
}

impl Cursor<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::at_offset(self.ctx, self.pos, msg)
    }

    /// Skips whitespace and `#` comments between header tokens.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::at_offset(self.ctx, start, format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8], ctx: &str) -> Result<ImageTensor> {
    let mut cur = Cursor { bytes, pos: 0, ctx };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(cur.err("missing P5 magic"));
    }
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_separators();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::at_offset(ctx, maxval_at, format!("maxval {maxval} unsupported, expected 255")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected single whitespace before raster")),
    }
    let need = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < need {
        return Err(Error::at_offset(
            ctx,
            bytes.len(),
            format!("truncated raster: {need} bytes expected, {} present", raster.len()),
        ));
    }
    if raster.len() > need {
        return Err(Error::at_offset(ctx, cur.pos + need, "trailing bytes after raster"));
    }
    let pixels = raster.iter().map(|&b| b as f64 / 255.0).collect();
    ImageTensor::new(height, width, pixels).map_err(|e| cur.err(e.to_string()))
}

pub fn save_image(path: &Path, img: &ImageTensor) -> Result<()> {
    write_bytes(path, &encode_pgm(img))
}

pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, &path_label(path))
}
