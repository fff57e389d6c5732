//! Portable FloatMap (PFM) reading and writing.
//!
//! Files are written little-endian (negative scale) with rows stored bottom
//! to top, as the format prescribes. Big-endian files are rejected.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::warp::DisparityMap;
use crate::wcm::ConfidenceMap;

/// Single-precision image as stored in a PFM file, rows top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    /// 1 (`Pf`) or 3 (`PF`).
    pub channels: usize,
    pub data: Vec<f32>,
}

impl FloatMap {
    pub fn gray(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            channels: 1,
            data,
        }
    }

    fn from_f64(width: usize, height: usize, data: &[f64]) -> Self {
        Self::gray(width, height, data.iter().map(|&v| v as f32).collect())
    }
}

pub fn encode_pfm(map: &FloatMap) -> Vec<u8> {
    let magic = if map.channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", map.width, map.height).into_bytes();
    let row_len = map.width * map.channels;
    out.reserve(map.data.len() * 4);
    for y in (0..map.height).rev() {
        for v in &map.data[y * row_len..(y + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parses PFM bytes; `path` only labels errors.
pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<FloatMap> {
    let bad = |m: &str| Error::format(path, m.to_string());
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(bad("truncated PFM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos)?;
    let channels = match magic.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(bad(&format!("not a PFM file (magic '{other}')"))),
    };
    let width: usize = token(&mut pos)?
        .parse()
        .map_err(|_| bad("malformed PFM width"))?;
    let height: usize = token(&mut pos)?
        .parse()
        .map_err(|_| bad("malformed PFM height"))?;
    let scale: f64 = token(&mut pos)?
        .parse()
        .map_err(|_| bad("malformed PFM scale"))?;
    if width == 0 || height == 0 {
        return Err(bad("PFM dimensions must be positive"));
    }
    if !scale.is_finite() || scale == 0.0 {
        return Err(bad("PFM scale must be a non-zero number"));
    }
    if scale > 0.0 {
        return Err(bad(
            "big-endian PFM (positive scale) is not supported; re-save as little-endian",
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing raster data"));
    }
    pos += 1;
    let row_len = width * channels;
    let expected = row_len * height * 4;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(bad(&format!(
            "expected {expected} bytes of raster data, found {}",
            raster.len()
        )));
    }
    let mut data = vec![0f32; row_len * height];
    for (file_row, chunk) in raster.chunks_exact(row_len * 4).enumerate() {
        let y = height - 1 - file_row;
        for (x, b) in chunk.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if !v.is_finite() {
                return Err(bad("non-finite value in PFM raster"));
            }
            data[y * row_len + x] = v;
        }
    }
    Ok(FloatMap {
        width,
        height,
        channels,
        data,
    })
}

pub fn write_pfm(path: &Path, map: &FloatMap) -> Result<()> {
    std::fs::write(path, encode_pfm(map)).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<FloatMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, path)
}

/// `<stem>_dx.pfm` and `<stem>_dy.pfm`.
pub fn disparity_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let s = stem.as_os_str().to_string_lossy();
    (
        PathBuf::from(format!("{s}_dx.pfm")),
        PathBuf::from(format!("{s}_dy.pfm")),
    )
}

/// Stores the map as two single-channel PFM files (values rounded to f32).
pub fn save_disparity(stem: &Path, map: &DisparityMap) -> Result<()> {
    let (px, py) = disparity_paths(stem);
    write_pfm(
        &px,
        &FloatMap::from_f64(map.width(), map.height(), map.dx()),
    )?;
    write_pfm(
        &py,
        &FloatMap::from_f64(map.width(), map.height(), map.dy()),
    )
}

pub fn load_disparity(stem: &Path) -> Result<DisparityMap> {
    let (px, py) = disparity_paths(stem);
    let fx = read_pfm(&px)?;
    let fy = read_pfm(&py)?;
    for (f, p) in [(&fx, &px), (&fy, &py)] {
        if f.channels != 1 {
            return Err(Error::format(
                p,
                "disparity components must be single-channel",
            ));
        }
    }
    if (fx.width, fx.height) != (fy.width, fy.height) {
        return Err(Error::format(&py, "dx and dy components differ in size"));
    }
    let widen = |v: &[f32]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    DisparityMap::new(fx.width, fx.height, widen(&fx.data), widen(&fy.data))
}

pub fn save_confidence(path: &Path, map: &ConfidenceMap) -> Result<()> {
    write_pfm(
        path,
        &FloatMap::from_f64(map.width(), map.height(), map.data()),
    )
}

pub fn load_confidence(path: &Path) -> Result<ConfidenceMap> {
    let f = read_pfm(path)?;
    if f.channels != 1 {
        return Err(Error::format(
            path,
            "confidence maps must be single-channel",
        ));
    }
    ConfidenceMap::new(
        f.width,
        f.height,
        f.data.iter().map(|&v| v as f64).collect(),
    )
    .map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FloatMap {
        FloatMap::gray(3, 2, vec![0.0, -1.5, 2.25, 1e-30, 7.0, -0.0])
    }

    #[test]
    fn header_layout_and_row_order() {
        let bytes = encode_pfm(&sample());
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        let raster = &bytes[b"Pf\n3 2\n-1.0\n".len()..];
        // bottom row first
        assert_eq!(&raster[..4], &1e-30f32.to_le_bytes());
        let back = decode_pfm(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn big_endian_rejected() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&1.0f32.to_be_bytes());
        let err = decode_pfm(&bytes, Path::new("be.pfm")).unwrap_err();
        assert!(err.to_string().contains("big-endian"));
    }

    #[test]
    fn nan_rejected() {
        let mut bytes = b"Pf\n1 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_pfm(&bytes, Path::new("nan.pfm")).is_err());
    }

    #[test]
    fn malformed_headers() {
        for bad in [
            &b"P6\n1 1\n-1.0\n\0\0\0\0"[..],
            b"Pf\nx 1\n-1.0\n\0\0\0\0",
            b"Pf\n1 1\n-1.0\n\0\0\0",
            b"Pf\n1 1\n",
        ] {
            assert!(decode_pfm(bad, Path::new("bad.pfm")).is_err());
        }
    }
}
