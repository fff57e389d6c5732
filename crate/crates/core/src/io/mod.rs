//! Serialization: PNG light field directories, PFM float maps, scene
//! documents, metric reports and visualizations.

mod lf_dir;
mod pfm;
mod report;
mod visual;

use std::path::Path;

pub use lf_dir::{
    load_lightfield, load_view_png, save_lightfield, save_view_png, view_file_name, LightFieldMeta,
    Source, METADATA_FILE,
};
pub use pfm::{
    decode_pfm, disparity_paths, encode_pfm, load_confidence, load_disparity, read_pfm,
    save_confidence, save_disparity, write_pfm, FloatMap,
};
pub use report::{round_sig6, MetricReport, ViewScore};
pub use visual::{
    adm_color, adm_image, epi_image, save_adm_png, save_epi_png, save_wcm_png, wcm_color,
    wcm_gray_image, wcm_image,
};

use crate::error::{Error, Result};
use crate::scene::SceneSpec;

pub fn load_scene(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneSpec::from_json(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_scene(path: &Path, spec: &SceneSpec) -> Result<()> {
    std::fs::write(path, spec.to_json() + "\n").map_err(|e| Error::io(path, e))
}
