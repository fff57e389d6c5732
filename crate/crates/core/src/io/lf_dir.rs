//! Light fields on disk: a directory of `view_RR_CC.png` files plus a
//! `lightfield.json` metadata document.

use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightfield::{AngularGrid, LightField, ViewImage};

pub const METADATA_FILE: &str = "lightfield.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightFieldMeta {
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub bit_depth: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_px: Option<f64>,
    pub source: Source,
}

pub fn view_file_name(i: usize, j: usize) -> String {
    format!("view_{i:02}_{j:02}.png")
}

fn to_pixels(view: &ViewImage, bit_depth: u8) -> DynamicImage {
    let (w, h) = (view.width() as u32, view.height() as u32);
    match (bit_depth, view.channels()) {
        (8, 1) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, quantize8(view.data())).unwrap(),
        ),
        (8, _) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, quantize8(view.data())).unwrap(),
        ),
        (_, 1) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, quantize16(view.data())).unwrap(),
        ),
        (_, _) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, quantize16(view.data())).unwrap(),
        ),
    }
}

fn quantize8(data: &[f64]) -> Vec<u8> {
    data.iter().map(|v| (v * 255.0).round() as u8).collect()
}

fn quantize16(data: &[f64]) -> Vec<u16> {
    data.iter().map(|v| (v * 65535.0).round() as u16).collect()
}

pub fn save_view_png(path: &Path, view: &ViewImage, bit_depth: u8) -> Result<()> {
    if bit_depth != 8 && bit_depth != 16 {
        return Err(Error::InvalidArgument(format!(
            "bit depth must be 8 or 16, got {bit_depth}"
        )));
    }
    to_pixels(view, bit_depth)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Loads a PNG as normalized radiance; returns the view and its bit depth.
pub fn load_view_png(path: &Path) -> Result<(ViewImage, u8)> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (data, ch, depth): (Vec<f64>, usize, u8) = match img {
        DynamicImage::ImageLuma8(b) => (
            b.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
            1,
            8,
        ),
        DynamicImage::ImageRgb8(b) => (
            b.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
            3,
            8,
        ),
        DynamicImage::ImageLuma16(b) => (
            b.into_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
            1,
            16,
        ),
        DynamicImage::ImageRgb16(b) => (
            b.into_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
            3,
            16,
        ),
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageLumaA8(_) => {
            let b = img.to_rgb8();
            (
                b.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
                3,
                8,
            )
        }
        other => {
            let b = other.to_rgb16();
            (
                b.into_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
                3,
                16,
            )
        }
    };
    let view = ViewImage::new(w, h, ch, data).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((view, depth))
}

/// Writes every view and the metadata document. `bit_depth` is 8 or 16.
pub fn save_lightfield(
    dir: &Path,
    lf: &LightField,
    bit_depth: u8,
    baseline_px: Option<f64>,
    source: Source,
) -> Result<LightFieldMeta> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let grid = lf.grid();
    for (i, j) in grid.cells() {
        let path = dir.join(view_file_name(i, j));
        save_view_png(&path, lf.view_at(i, j)?, bit_depth)?;
    }
    let meta = LightFieldMeta {
        rows: grid.rows(),
        cols: grid.cols(),
        width: lf.width(),
        height: lf.height(),
        channels: lf.channels(),
        bit_depth,
        baseline_px,
        source,
    };
    let path = dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

/// Scans `view_RR_CC.png` names to infer a grid when no metadata exists.
fn infer_grid(dir: &Path) -> Result<(usize, usize)> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let (mut rows, mut cols) = (0usize, 0usize);
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(stem) = name
            .strip_prefix("view_")
            .and_then(|s| s.strip_suffix(".png"))
        else {
            continue;
        };
        let Some((r, c)) = stem.split_once('_') else {
            continue;
        };
        if let (Ok(r), Ok(c)) = (r.parse::<usize>(), c.parse::<usize>()) {
            rows = rows.max(r + 1);
            cols = cols.max(c + 1);
        }
    }
    if rows == 0 {
        return Err(Error::format(dir, "no view_RR_CC.png files found"));
    }
    Ok((rows, cols))
}

/// Loads a light field directory. Without `lightfield.json` the grid is
/// inferred from file names and the source marked external.
pub fn load_lightfield(dir: &Path) -> Result<(LightField, LightFieldMeta)> {
    let meta_path = dir.join(METADATA_FILE);
    let declared: Option<LightFieldMeta> = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        Some(serde_json::from_str(&text).map_err(|source| Error::Json {
            path: meta_path.clone(),
            source,
        })?)
    } else {
        None
    };
    let (rows, cols) = match &declared {
        Some(m) => (m.rows, m.cols),
        None => infer_grid(dir)?,
    };
    let grid =
        AngularGrid::new(rows, cols).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    let paths: Vec<PathBuf> = grid
        .cells()
        .map(|(i, j)| dir.join(view_file_name(i, j)))
        .collect();
    if let Some(missing) = paths.iter().find(|p| !p.exists()) {
        return Err(Error::format(missing, "missing view file"));
    }
    let loaded = paths
        .par_iter()
        .map(|p| load_view_png(p))
        .collect::<Result<Vec<_>>>()?;
    let (first, depth) = (&loaded[0].0, loaded[0].1);
    for ((view, d), path) in loaded.iter().zip(&paths) {
        if !view.same_shape(first) || *d != depth {
            return Err(Error::format(
                path,
                format!(
                    "view is {}x{}x{} at {} bits, expected {}x{}x{} at {} bits",
                    view.width(),
                    view.height(),
                    view.channels(),
                    d,
                    first.width(),
                    first.height(),
                    first.channels(),
                    depth
                ),
            ));
        }
    }
    let meta = match declared {
        Some(m) => {
            if (m.width, m.height, m.channels, m.bit_depth)
                != (first.width(), first.height(), first.channels(), depth)
            {
                return Err(Error::format(
                    &meta_path,
                    format!(
                        "metadata declares {}x{}x{} at {} bits but views are {}x{}x{} at {} bits",
                        m.width,
                        m.height,
                        m.channels,
                        m.bit_depth,
                        first.width(),
                        first.height(),
                        first.channels(),
                        depth
                    ),
                ));
            }
            m
        }
        None => LightFieldMeta {
            rows,
            cols,
            width: first.width(),
            height: first.height(),
            channels: first.channels(),
            bit_depth: depth,
            baseline_px: None,
            source: Source::External,
        },
    };
    let views = loaded.into_iter().map(|(v, _)| v).collect();
    Ok((LightField::new(grid, views)?, meta))
}
