//! IDX container format (the MNIST/Fashion-MNIST binary layout):
//! big-endian magic, big-endian dimension sizes, then a u8 payload.

use std::fs;
use std::path::Path;

use crate::data::{LabeledDataset, Labels};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Parsed IDX header: the magic word and the dimension sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

/// A fully parsed IDX file. Re-serialization is byte-exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxFile {
    pub header: IdxHeader,
    pub payload: Vec<u8>,
}

impl IdxFile {
    /// Parse from raw bytes. Only u8 payloads (data type 0x08) with the
    /// image (3-dim) or label (1-dim) magic are supported.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Format("idx: truncated header".into()));
        }
        let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        let ndims = match magic {
            IMAGES_MAGIC => 3,
            LABELS_MAGIC => 1,
            other => {
                return Err(Error::Format(format!("idx: bad magic 0x{other:08x}")));
            }
        };
        let header_len = 4 + 4 * ndims;
        if bytes.len() < header_len {
            return Err(Error::Format("idx: truncated dimension table".into()));
        }
        let mut dims = Vec::with_capacity(ndims);
        for k in 0..ndims {
            let off = 4 + 4 * k;
            dims.push(u32::from_be_bytes([
                bytes[off],
                bytes[off + 1],
                bytes[off + 2],
                bytes[off + 3],
            ]));
        }
        let expected: usize = dims.iter().map(|&d| d as usize).product();
        let payload = &bytes[header_len..];
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "idx: payload holds {} bytes, dimensions require {expected}",
                payload.len()
            )));
        }
        Ok(Self {
            header: IdxHeader { magic, dims },
            payload: payload.to_vec(),
        })
    }

    /// Serialize back to the exact byte layout that [`parse`](Self::parse)
    /// accepts.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.header.dims.len() + self.payload.len());
        out.extend_from_slice(&self.header.magic.to_be_bytes());
        for d in &self.header.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }
}

/// Load an image/label IDX pair into a multiclass dataset. Pixels are the
/// flattened u8 values, divided by 255 when `normalize` is set (so 255 maps
/// to exactly 1.0).
pub fn load_idx_pair(
    images_path: &Path,
    labels_path: &Path,
    normalize: bool,
) -> Result<LabeledDataset> {
    let images = IdxFile::parse(&fs::read(images_path)?)?;
    let labels = IdxFile::parse(&fs::read(labels_path)?)?;
    if images.header.magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "idx: {} is not an image file",
            images_path.display()
        )));
    }
    if labels.header.magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "idx: {} is not a label file",
            labels_path.display()
        )));
    }
    let n = images.header.dims[0] as usize;
    if labels.header.dims[0] as usize != n {
        return Err(Error::Format(format!(
            "idx: {} images but {} labels",
            n, labels.header.dims[0]
        )));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = images.header.dims[1] as usize * images.header.dims[2] as usize;

    let classes = usize::from(*labels.payload.iter().max().unwrap_or(&0)) + 1;
    let rows: Vec<Vec<f64>> = images
        .payload
        .chunks_exact(d)
        .map(|px| {
            px.iter()
                .map(|&p| {
                    if normalize {
                        f64::from(p) / 255.0
                    } else {
                        f64::from(p)
                    }
                })
                .collect()
        })
        .collect();
    let values: Vec<u32> = labels.payload.iter().map(|&v| u32::from(v)).collect();
    LabeledDataset::from_rows(rows, Labels::Multiclass { classes, values })
}
