//! Binary tensor files, PGM frames and flat `key = value` configs.

mod config;
mod pgm;

pub use config::{parse_config, ConfigMap, FilterDescriptor, RunConfig};
pub use pgm::{read_frames_dir, read_pgm, write_pgm};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Tensor3};

const MAGIC: &[u8; 4] = b"GMS1";
const DTYPE_F64: u8 = 0;

/// Contents of a tensor file.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    Matrix(DenseMatrix),
    Tensor(Tensor3),
}

impl TensorData {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            TensorData::Matrix(m) => vec![m.rows(), m.cols()],
            TensorData::Tensor(t) => {
                let (a, b, c) = t.dims();
                vec![a, b, c]
            }
        }
    }

    fn payload(&self) -> &[f64] {
        match self {
            TensorData::Matrix(m) => m.data(),
            TensorData::Tensor(t) => t.data(),
        }
    }
}

/// Serialises to the `GMS1` layout: magic, dtype tag, order, little-endian
/// `u64` dims, then the column-major `f64` payload.
pub fn encode_tensor(data: &TensorData) -> Vec<u8> {
    let dims = data.dims();
    let payload = data.payload();
    let mut out = Vec::with_capacity(6 + 8 * dims.len() + 8 * payload.len());
    out.extend_from_slice(MAGIC);
    out.push(DTYPE_F64);
    out.push(dims.len() as u8);
    for d in &dims {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses and validates a `GMS1` buffer; `path` is only used in messages.
pub fn decode_tensor(bytes: &[u8], path: &Path) -> Result<TensorData> {
    let fmt_err = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf() });
    }
    if bytes.len() < 6 {
        return Err(fmt_err("truncated header".into()));
    }
    if bytes[4] != DTYPE_F64 {
        return Err(fmt_err(format!("unsupported element type tag {}", bytes[4])));
    }
    let order = bytes[5] as usize;
    if order != 2 && order != 3 {
        return Err(fmt_err(format!("order must be 2 or 3, got {order}")));
    }
    let header = 6 + 8 * order;
    if bytes.len() < header {
        return Err(fmt_err("truncated header".into()));
    }
    let mut dims = Vec::with_capacity(order);
    for chunk in bytes[6..header].chunks_exact(8) {
        let d = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        dims.push(usize::try_from(d).map_err(|_| fmt_err(format!("dimension {d} too large")))?);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| fmt_err("dimensions overflow".into()))?;
    let body = &bytes[header..];
    if body.len() != count {
        return Err(fmt_err(format!(
            "payload is {} bytes, dims {:?} need {count}",
            body.len(),
            dims
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{} contains NaN or infinite entries", path.display())));
    }
    Ok(if order == 2 {
        TensorData::Matrix(DenseMatrix::from_col_major(dims[0], dims[1], values)?)
    } else {
        TensorData::Tensor(Tensor3::from_data(dims[0], dims[1], dims[2], values)?)
    })
}

/// Writes through a temporary file in the same directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_tensor(path: &Path, data: &TensorData) -> Result<()> {
    write_atomic(path, &encode_tensor(data))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    write_tensor(path, &TensorData::Matrix(m.clone()))
}

pub fn read_tensor(path: &Path) -> Result<TensorData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, path)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    match read_tensor(path)? {
        TensorData::Matrix(m) => Ok(m),
        TensorData::Tensor(_) => Err(Error::Format {
            path: path.to_path_buf(),
            msg: "expected an order-2 tensor".into(),
        }),
    }
}
