//! The TNSR binary tensor format used for feature maps and embeddings.
//!
//! Layout: magic `TNSR`, `u32` version (1), `u32` rank, `rank` `u32`
//! dimensions, then the values as little-endian `f32` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::feature_map::{FeatureMap, FeatureMapError};

const MAGIC: &[u8; 4] = b"TNSR";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("tensor I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a TNSR file (bad magic)")]
    BadMagic,
    #[error("unsupported TNSR version {0}")]
    BadVersion(u32),
    #[error("expected a rank-{expected} tensor, got rank {found}")]
    Rank { expected: usize, found: usize },
    #[error("tensor shape {dims:?} does not match {len} values")]
    Shape { dims: Vec<usize>, len: usize },
    #[error("tensor value {0} is not finite")]
    NonFinite(usize),
    #[error(transparent)]
    FeatureMap(#[from] FeatureMapError),
}

/// A dense row-major tensor as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self, TensorError> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(TensorError::Shape {
                dims,
                len: data.len(),
            });
        }
        Ok(Tensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self, TensorError> {
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        if &word != MAGIC {
            return Err(TensorError::BadMagic);
        }
        let mut next_u32 = |input: &mut R| -> Result<u32, TensorError> {
            input.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = next_u32(&mut input)?;
        if version != VERSION {
            return Err(TensorError::BadVersion(version));
        }
        let rank = next_u32(&mut input)? as usize;
        let dims = (0..rank)
            .map(|_| next_u32(&mut input).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let len: usize = dims.iter().product();
        let mut body = vec![0u8; len * 4];
        input.read_exact(&mut body)?;
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(dims, data)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), TensorError> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, TensorError> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), TensorError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Rows of a rank-2 `count x dim` tensor.
    pub fn to_rows(&self) -> Result<Vec<Vec<f64>>, TensorError> {
        if self.dims.len() != 2 {
            return Err(TensorError::Rank {
                expected: 2,
                found: self.dims.len(),
            });
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite(i));
        }
        let dim = self.dims[1];
        if dim == 0 {
            return Ok(vec![Vec::new(); self.dims[0]]);
        }
        Ok(self
            .data
            .chunks_exact(dim)
            .map(|row| row.iter().map(|&v| f64::from(v)).collect())
            .collect())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let dim = rows.first().map_or(0, Vec::len);
        let data: Vec<f32> = rows.iter().flatten().map(|&v| v as f32).collect();
        Tensor::new(vec![rows.len(), dim], data)
    }

    /// A rank-3 `C x H x W` tensor as a feature map.
    pub fn to_feature_map(&self) -> Result<FeatureMap, TensorError> {
        if self.dims.len() != 3 {
            return Err(TensorError::Rank {
                expected: 3,
                found: self.dims.len(),
            });
        }
        Ok(FeatureMap::new(
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.data.iter().map(|&v| f64::from(v)).collect(),
        )?)
    }

    pub fn from_feature_map(map: &FeatureMap) -> Self {
        let (c, h, w) = map.shape();
        Tensor {
            dims: vec![c, h, w],
            data: map.data().iter().map(|&v| v as f32).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut bytes = Vec::new();
        t.write(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"TNSR");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 24);
        assert_eq!(t.to_rows().unwrap(), vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(Tensor::read(&b"XXXX"[..]), Err(TensorError::BadMagic)));
        let mut bytes = b"TNSR".to_vec();
        bytes.extend_from_slice(&7u32.to_le_bytes());
        assert!(matches!(Tensor::read(bytes.as_slice()), Err(TensorError::BadVersion(7))));
        let t = Tensor::new(vec![4], vec![0.0; 4]).unwrap();
        let mut bytes = Vec::new();
        t.write(&mut bytes).unwrap();
        assert!(matches!(Tensor::read(&bytes[..bytes.len() - 2]), Err(TensorError::Io(_))));
        assert!(matches!(t.to_rows(), Err(TensorError::Rank { expected: 2, found: 1 })));
        assert!(matches!(t.to_feature_map(), Err(TensorError::Rank { expected: 3, .. })));
        assert!(matches!(Tensor::new(vec![2, 2], vec![0.0; 3]), Err(TensorError::Shape { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(c in 1usize..4, h in 1usize..6, w in 1usize..6, seed in any::<u32>()) {
            let data: Vec<f32> = (0..c * h * w).map(|i| ((i as u32).wrapping_mul(seed) % 1000) as f32 * 0.01 - 5.0).collect();
            let t = Tensor::new(vec![c, h, w], data).unwrap();
            let mut bytes = Vec::new();
            t.write(&mut bytes).unwrap();
            let back = Tensor::read(bytes.as_slice()).unwrap();
            prop_assert_eq!(&back, &t);
            let map = back.to_feature_map().unwrap();
            prop_assert_eq!(Tensor::from_feature_map(&map), t);
        }
    }
}
