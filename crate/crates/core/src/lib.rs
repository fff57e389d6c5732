//! Occlusion-aware light field view synthesis.
//!
//! The pipeline reconstructs a dense light field from its four corner views:
//! boundary aperture disparity maps ([`adm`]) are scaled to each target view
//! under the linear shift model, the boundary views are backward-warped
//! ([`warp`]), and the two warped images are blended with per-pixel
//! confidence maps ([`wcm`]) that route occluded pixels to the boundary view
//! that still sees them ([`synth`]). [`scene`] renders layered scenes with
//! exact ground truth for testing; [`metrics`] and [`io`] cover evaluation
//! and file formats.

pub mod adm;
pub mod error;
pub mod io;
pub mod lightfield;
pub mod metrics;
pub mod scene;
pub mod synth;
pub mod warp;
pub mod wcm;

pub use adm::{
    check_linearity, estimate_boundary_adm, estimate_boundary_adm_along,
    intermediate_adm_from_source, Estimator, LinearityReport,
};
pub use error::{Error, Result};
pub use lightfield::{AngularAxis, AngularGrid, EpiAxis, EpiImage, LightField, ViewImage};
pub use scene::{Scene, SceneSpec};
pub use synth::{
    infer_free_space, infer_occlusion_aware, reconstruct_dense, separable_conv4d, Kernel3,
    ReconstructConfig,
};
pub use warp::{warp, warp_residual, BorderMode, DisparityMap};
pub use wcm::{estimate_wcm_photometric, normalize_pair, ConfidenceMap, WcmParams};
