//! Model weights file: magic `ROTM1`, a little-endian u32 count of layer
//! sizes, the sizes themselves (u32 LE), then every layer's weight matrix
//! (row-major, fan_in x fan_out) followed by its bias, as f32 LE.

use std::path::Path;

use super::{path_label, write_bytes};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 5] = b"ROTM1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    /// Layer sizes, input first: `[D, Dh, C]` for the two-layer classifier.
    pub dims: Vec<u32>,
    pub weights: Vec<f32>,
}

impl ModelFile {
    pub fn expected_weights(dims: &[u32]) -> usize {
        dims.windows(2)
            .map(|w| w[0] as usize * w[1] as usize + w[1] as usize)
            .sum()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.dims.len() < 2 || self.weights.len() != Self::expected_weights(&self.dims) {
            return Err(Error::shape(format!(
                "dims {:?} declare {} weights, payload has {}",
                self.dims,
                Self::expected_weights(&self.dims),
                self.weights.len()
            )));
        }
        let mut out = Vec::with_capacity(9 + 4 * (self.dims.len() + self.weights.len()));
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], ctx: &str) -> Result<Self> {
        if bytes.len() < MODEL_MAGIC.len() || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
            let found = String::from_utf8_lossy(&bytes[..bytes.len().min(MODEL_MAGIC.len())]).into_owned();
            return Err(Error::Version(format!(
                "{ctx}: expected magic ROTM1, found '{found}'"
            )));
        }
        let mut pos = MODEL_MAGIC.len();
        let read_u32 = |pos: &mut usize, what: &str| -> Result<u32> {
            let chunk = bytes
                .get(*pos..*pos + 4)
                .ok_or_else(|| Error::at_offset(ctx, *pos, format!("payload length: file ends inside {what}")))?;
            *pos += 4;
            Ok(u32::from_le_bytes(chunk.try_into().unwrap()))
        };
        let n_dims = read_u32(&mut pos, "dimension count")? as usize;
        if !(2..=16).contains(&n_dims) {
            return Err(Error::at_offset(ctx, MODEL_MAGIC.len(), format!("implausible layer count {n_dims}")));
        }
        let dims = (0..n_dims)
            .map(|_| read_u32(&mut pos, "dimensions"))
            .collect::<Result<Vec<_>>>()?;
        let n = Self::expected_weights(&dims);
        let payload = &bytes[pos..];
        if payload.len() != 4 * n {
            return Err(Error::at_offset(
                ctx,
                pos,
                format!("payload length: dims {dims:?} need {} bytes, found {}", 4 * n, payload.len()),
            ));
        }
        let weights = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, weights })
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    write_bytes(path, &model.to_bytes()?)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_bytes(&bytes, &path_label(path))
}
