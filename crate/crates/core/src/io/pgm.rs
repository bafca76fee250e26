use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Tensor3};

use super::write_atomic;

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Reads a binary (P5) 8-bit PGM, scaled to `[0, 1]` by `1/255`.
pub fn read_pgm(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

fn decode_pgm(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| format_err(path, "non-ASCII PGM header"))?);
    }
    if fields[0] != "P5" {
        return Err(format_err(path, format!("expected P5 magic, got {}", fields[0])));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format_err(path, format!("bad {what} `{s}`")));
    let width = num(fields[1], "width")?;
    let height = num(fields[2], "height")?;
    let maxval = num(fields[3], "maxval")?;
    if maxval != 255 {
        return Err(format_err(path, format!("only 8-bit PGM is supported, maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() != width * height {
        return Err(format_err(
            path,
            format!("raster is {} bytes, {width}x{height} needs {}", raster.len(), width * height),
        ));
    }
    Ok(DenseMatrix::from_fn(height, width, |i, j| raster[i * width + j] as f64 / 255.0))
}

/// Writes values in `[0, 1]` (clamped) as an 8-bit P5 PGM.
pub fn write_pgm(path: &Path, frame: &DenseMatrix) -> Result<()> {
    let (h, w) = frame.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for i in 0..h {
        for j in 0..w {
            out.push((frame.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    write_atomic(path, &out)
}

/// Loads every `*.pgm` in `dir`, in file-name order, as the slices of a tensor.
pub fn read_frames_dir(dir: &Path) -> Result<Tensor3> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no .pgm frames in {}", dir.display())));
    }
    let frames = paths.iter().map(|p| read_pgm(p)).collect::<Result<Vec<_>>>()?;
    let shape = frames[0].shape();
    if let Some((p, f)) = paths.iter().zip(&frames).find(|(_, f)| f.shape() != shape) {
        return Err(Error::Data(format!(
            "frame {} is {}x{}, expected {}x{}",
            p.display(),
            f.rows(),
            f.cols(),
            shape.0,
            shape.1
        )));
    }
    Tensor3::from_slices(&frames)
}
