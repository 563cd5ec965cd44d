//! `NNW1` model checkpoints.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic        4 bytes  "NNW1"
//! input_dim    u32
//! n_hidden     u32, then n_hidden × u32 hidden sizes
//! head         u8 (0 = identity, 1 = softmax), then u32 classes (0 for identity)
//! loss         u8 (0 = mse, 1 = cross_entropy)
//! seed         u64
//! adam step    u64
//! per layer    weights fan_in × fan_out f64 row-major, then fan_out f64 bias
//! ```
//!
//! Layer shapes follow from the config block. Adam moments are not stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Head, Layer, Loss, NetworkConfig, NetworkState};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NNW1";

pub fn save_checkpoint(path: impl AsRef<Path>, state: &NetworkState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let cfg = state.config();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(cfg.input_dim as u32).to_le_bytes())?;
    w.write_all(&(cfg.hidden_sizes.len() as u32).to_le_bytes())?;
    for &h in &cfg.hidden_sizes {
        w.write_all(&(h as u32).to_le_bytes())?;
    }
    let (head, classes) = match cfg.head {
        Head::Identity => (0u8, 0u32),
        Head::Softmax { classes } => (1u8, classes as u32),
    };
    w.write_all(&[head])?;
    w.write_all(&classes.to_le_bytes())?;
    w.write_all(&[match cfg.loss {
        Loss::Mse => 0u8,
        Loss::CrossEntropy => 1u8,
    }])?;
    w.write_all(&cfg.seed.to_le_bytes())?;
    w.write_all(&state.step().to_le_bytes())?;
    for layer in &state.layers {
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::shape("truncated checkpoint"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NetworkState> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::shape("not an NNW1 checkpoint"));
    }
    let input_dim = cur.u32()?;
    let n_hidden = cur.u32()?;
    let hidden_sizes = (0..n_hidden).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
    let head = match (cur.u8()?, cur.u32()?) {
        (0, _) => Head::Identity,
        (1, classes) => Head::Softmax { classes },
        (tag, _) => return Err(Error::shape(format!("unknown head tag {tag}"))),
    };
    let loss = match cur.u8()? {
        0 => Loss::Mse,
        1 => Loss::CrossEntropy,
        tag => return Err(Error::shape(format!("unknown loss tag {tag}"))),
    };
    let seed = cur.u64()?;
    let step = cur.u64()?;
    let config = NetworkConfig {
        input_dim,
        hidden_sizes,
        head,
        loss,
        seed,
    };
    config.validate()?;
    let mut layers = Vec::new();
    for (fan_in, fan_out) in config.layer_dims() {
        let weights = Array2::from_shape_vec((fan_in, fan_out), cur.f64s(fan_in * fan_out)?)
            .map_err(|e| Error::shape(e.to_string()))?;
        let bias = Array1::from_vec(cur.f64s(fan_out)?);
        layers.push(Layer { weights, bias });
    }
    if cur.pos != bytes.len() {
        return Err(Error::shape("trailing bytes after checkpoint"));
    }
    NetworkState::from_parts(config, layers, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_parameters() {
        let state = NetworkState::new(NetworkConfig::classifier(5, vec![4, 3], 3, 11)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(f.path(), &state).unwrap();
        let loaded = load_checkpoint(f.path()).unwrap();
        assert_eq!(loaded.config(), state.config());
        assert_eq!(loaded.layers, state.layers);
        let len = std::fs::metadata(f.path()).unwrap().len() as usize;
        let header = 4 + 4 + 4 + 2 * 4 + 1 + 4 + 1 + 8 + 8;
        assert_eq!(len, header + state.parameter_count() * 8);
    }

    #[test]
    fn rejects_foreign_files() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), b"CFM1....").unwrap();
        assert!(load_checkpoint(f.path()).is_err());
    }
}
