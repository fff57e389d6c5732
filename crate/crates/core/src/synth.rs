//! Intermediate view inference and dense light field reconstruction.
//!
//! Free-space inference blends the two warped boundary views with weights
//! `(1 - k, k)`. Occlusion-aware inference additionally scales each side by
//! its confidence map and renormalizes per pixel, so a pixel hidden in one
//! boundary view is taken entirely from the other.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adm::{estimate_boundary_adm_along, intermediate_adm_from_source, Estimator};
use crate::error::{Error, Result};
use crate::lightfield::{AngularAxis, AngularGrid, LightField, ViewImage};
use crate::scene::Scene;
use crate::warp::{warp, BorderMode, DisparityMap};
use crate::wcm::{estimate_wcm_photometric, ConfidenceMap, WcmParams};

/// Below this normalization factor a pixel falls back to the even blend.
pub const PHI_EPS: f64 = 1e-8;

fn check_k(k: f64) -> Result<()> {
    if (0.0..=1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "k must lie in [0, 1], got {k}"
        )))
    }
}

fn warped_pair(
    l0: &ViewImage,
    l1: &ViewImage,
    a_k0: &DisparityMap,
    a_k1: &DisparityMap,
) -> Result<(ViewImage, ViewImage)> {
    l0.ensure_same_shape(l1, "boundary views")?;
    a_k0.ensure_matches(l0, "A_k0")?;
    a_k1.ensure_matches(l1, "A_k1")?;
    Ok((
        warp(l0, a_k0, BorderMode::Clamp)?,
        warp(l1, a_k1, BorderMode::Clamp)?,
    ))
}

#[inline]
fn within(v: f64, a: f64, b: f64) -> f64 {
    v.clamp(a.min(b), a.max(b))
}

/// `(1 - k) P(l0, A_{k<-0}) + k P(l1, A_{k<-1})`.
pub fn infer_free_space(
    l0: &ViewImage,
    l1: &ViewImage,
    a_k0: &DisparityMap,
    a_k1: &DisparityMap,
    k: f64,
) -> Result<ViewImage> {
    check_k(k)?;
    let (w0, w1) = warped_pair(l0, l1, a_k0, a_k1)?;
    let data = w0
        .data()
        .iter()
        .zip(w1.data())
        .map(|(&p, &q)| within((1.0 - k) * p + k * q, p, q))
        .collect();
    Ok(ViewImage::from_raw(
        l0.width(),
        l0.height(),
        l0.channels(),
        data,
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InferenceDiagnostics {
    /// Pixels whose normalization factor vanished and used the even blend.
    pub fallback_pixels: usize,
}

/// Confidence-weighted blend:
/// `[(1 - k) O0 P(l0, A_{k<-0}) + k O1 P(l1, A_{k<-1})] / Phi` with
/// `Phi = (1 - k) O0 + k O1`.
#[allow(clippy::too_many_arguments)]
pub fn infer_occlusion_aware(
    l0: &ViewImage,
    l1: &ViewImage,
    a_k0: &DisparityMap,
    a_k1: &DisparityMap,
    o_k0: &ConfidenceMap,
    o_k1: &ConfidenceMap,
    k: f64,
) -> Result<(ViewImage, InferenceDiagnostics)> {
    check_k(k)?;
    let (w, h, ch) = (l0.width(), l0.height(), l0.channels());
    o_k0.ensure_size(w, h, "O_k0")?;
    o_k1.ensure_size(w, h, "O_k1")?;
    let (w0, w1) = warped_pair(l0, l1, a_k0, a_k1)?;
    let mut data = vec![0.0; w * h * ch];
    let mut diag = InferenceDiagnostics::default();
    for p in 0..w * h {
        let a = (1.0 - k) * o_k0.data()[p];
        let b = k * o_k1.data()[p];
        let phi = a + b;
        for c in 0..ch {
            let i = p * ch + c;
            let (s0, s1) = (w0.data()[i], w1.data()[i]);
            let v = if phi < PHI_EPS {
                (1.0 - k) * s0 + k * s1
            } else {
                (a * s0 + b * s1) / phi
            };
            data[i] = within(v, s0, s1);
        }
        if phi < PHI_EPS {
            diag.fallback_pixels += 1;
        }
    }
    Ok((ViewImage::from_raw(w, h, ch, data), diag))
}

/// Parameters for [`reconstruct_dense`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructConfig {
    pub estimator: Estimator,
    /// `false` replaces every confidence map with a uniform 0.5.
    pub use_wcm: bool,
    pub wcm: WcmParams,
    /// Search range of the classical estimator, in pixels.
    pub max_disp: usize,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Classical,
            use_wcm: true,
            wcm: WcmParams::default(),
            max_disp: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconstructStats {
    pub synthesized_views: usize,
    pub fallback_pixels: usize,
}

/// Everything needed to synthesize views between two boundary views.
struct PairSynth<'a> {
    l0: &'a ViewImage,
    l1: &'a ViewImage,
    axis: AngularAxis,
    /// `(A_{1<-0}, A_{0<-1})` for the classical estimator.
    boundary: Option<(DisparityMap, DisparityMap)>,
    scene: Option<&'a Scene>,
    config: ReconstructConfig,
}

impl<'a> PairSynth<'a> {
    fn new(
        l0: &'a ViewImage,
        l1: &'a ViewImage,
        axis: AngularAxis,
        scene: Option<&'a Scene>,
        config: ReconstructConfig,
    ) -> Result<Self> {
        let boundary = match config.estimator {
            Estimator::Classical => {
                Some(estimate_boundary_adm_along(l0, l1, config.max_disp, axis)?)
            }
            Estimator::Oracle => None,
        };
        Ok(Self {
            l0,
            l1,
            axis,
            boundary,
            scene,
            config,
        })
    }

    /// Synthesizes the view at `target`; `k` is its position along the axis.
    fn synthesize(&self, target: (f64, f64)) -> Result<(ViewImage, InferenceDiagnostics)> {
        let k = self.axis.factor(target);
        let (w, h) = (self.l0.width(), self.l0.height());
        let (a_k0, a_k1, confidences) = match (&self.boundary, self.scene) {
            (Some((a_10, a_01)), _) => {
                let (a_k0, a_k1) = intermediate_adm_from_source(k, a_10, a_01)?;
                let conf = if self.config.use_wcm {
                    Some(estimate_wcm_photometric(
                        self.l0,
                        self.l1,
                        &a_k0,
                        &a_k1,
                        a_10,
                        a_01,
                        k,
                        self.config.wcm,
                    )?)
                } else {
                    None
                };
                (a_k0, a_k1, conf)
            }
            (None, Some(scene)) => {
                let (b0, b1) = self.axis.boundaries(target);
                let a_k0 = scene.oracle_adm(target, b0)?;
                let a_k1 = scene.oracle_adm(target, b1)?;
                let conf = if self.config.use_wcm {
                    Some(scene.oracle_wcm(target, self.axis)?)
                } else {
                    None
                };
                (a_k0, a_k1, conf)
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "the oracle estimator needs a scene description".into(),
                ))
            }
        };
        let (o0, o1) = match confidences {
            Some(pair) => pair,
            None => (
                ConfidenceMap::uniform(w, h, 0.5)?,
                ConfidenceMap::uniform(w, h, 0.5)?,
            ),
        };
        infer_occlusion_aware(self.l0, self.l1, &a_k0, &a_k1, &o0, &o1, k)
    }
}

/// Reconstructs a dense light field on `target_grid` from a 2x2 corner light
/// field. Views along `u` are synthesized first on the top and bottom rows,
/// then every column is filled along `v` from those. Corners pass through
/// unchanged.
pub fn reconstruct_dense(
    corner_lf: &LightField,
    target_grid: AngularGrid,
    scene: Option<&Scene>,
    config: ReconstructConfig,
) -> Result<(LightField, ReconstructStats)> {
    let g = corner_lf.grid();
    if g.rows() != 2 || g.cols() != 2 {
        return Err(Error::InvalidArgument(format!(
            "reconstruction input must be a 2x2 light field, got {g}"
        )));
    }
    let (rows, cols) = (target_grid.rows(), target_grid.cols());
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument(format!(
            "target grid must be at least 2x2, got {target_grid}"
        )));
    }
    if config.estimator == Estimator::Oracle {
        let s = scene.ok_or_else(|| {
            Error::InvalidArgument("the oracle estimator needs a scene description".into())
        })?;
        if s.width() != corner_lf.width() || s.height() != corner_lf.height() {
            return Err(Error::mismatch(format!(
                "scene is {}x{}, light field is {}x{}",
                s.width(),
                s.height(),
                corner_lf.width(),
                corner_lf.height()
            )));
        }
    }
    let views = corner_lf.views();
    let (c00, c01, c10, c11) = (&views[0], &views[1], &views[2], &views[3]);
    let mut stats = ReconstructStats::default();

    // u pass on the top (v = 0) and bottom (v = 1) rows
    let top = PairSynth::new(c00, c01, AngularAxis::U, scene, config)?;
    let bottom = PairSynth::new(c10, c11, AngularAxis::U, scene, config)?;
    let edge_rows: Vec<(Vec<ViewImage>, usize)> = [(&top, 0.0, c00, c01), (&bottom, 1.0, c10, c11)]
        .par_iter()
        .map(|&(pair, v, first, last)| {
            let mut row = Vec::with_capacity(cols);
            let mut fallback = 0;
            row.push(first.clone());
            for j in 1..cols - 1 {
                let (view, d) = pair.synthesize((target_grid.u(j), v))?;
                fallback += d.fallback_pixels;
                row.push(view);
            }
            row.push(last.clone());
            Ok((row, fallback))
        })
        .collect::<Result<_>>()?;
    let (top_row, f_top) = &edge_rows[0];
    let (bottom_row, f_bottom) = &edge_rows[1];
    stats.fallback_pixels += f_top + f_bottom;
    stats.synthesized_views += 2 * (cols - 2);

    // v pass per column
    let columns: Vec<(Vec<ViewImage>, usize)> = (0..cols)
        .into_par_iter()
        .map(|j| {
            let (t, b) = (&top_row[j], &bottom_row[j]);
            let mut col = Vec::with_capacity(rows);
            let mut fallback = 0;
            col.push(t.clone());
            if rows > 2 {
                let pair = PairSynth::new(t, b, AngularAxis::V, scene, config)?;
                for i in 1..rows - 1 {
                    let (view, d) = pair.synthesize((target_grid.u(j), target_grid.v(i)))?;
                    fallback += d.fallback_pixels;
                    col.push(view);
                }
            }
            col.push(b.clone());
            Ok((col, fallback))
        })
        .collect::<Result<_>>()?;
    stats.synthesized_views += cols * (rows - 2);

    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for (col, _) in &columns {
            out.push(col[i].clone());
        }
    }
    stats.fallback_pixels += columns.iter().map(|(_, f)| f).sum::<usize>();
    Ok((LightField::new(target_grid, out)?, stats))
}

/// A 3x3 filter tap set, indexed `[row][col]` with the center at `[1][1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel3(pub [[f64; 3]; 3]);

impl Kernel3 {
    pub fn delta() -> Self {
        let mut k = [[0.0; 3]; 3];
        k[1][1] = 1.0;
        Kernel3(k)
    }

    pub fn box_mean() -> Self {
        Kernel3([[1.0 / 9.0; 3]; 3])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
            return Err(Error::mismatch(format!(
                "kernel must be 3x3, got {} rows of lengths {:?}",
                rows.len(),
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("kernel taps must be finite".into()));
        }
        let mut k = [[0.0; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            k[r].copy_from_slice(row);
        }
        Ok(Kernel3(k))
    }
}

/// Loadable weights for the separable refinement filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineKernels {
    pub spatial: Vec<Vec<f64>>,
    pub angular: Vec<Vec<f64>>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl RefineKernels {
    pub fn kernels(&self) -> Result<(Kernel3, Kernel3, f64)> {
        if !self.scale.is_finite() {
            return Err(Error::InvalidValue("scale must be finite".into()));
        }
        Ok((
            Kernel3::from_rows(&self.spatial)?,
            Kernel3::from_rows(&self.angular)?,
            self.scale,
        ))
    }
}

/// Alternating separable 4D filter: a 3x3 spatial pass inside every view,
/// then a 3x3 angular pass across views at every pixel, then a scalar
/// scale. Both passes use replicate padding; the result is clamped to
/// `[0, 1]`.
pub fn separable_conv4d(
    lf: &LightField,
    spatial: &Kernel3,
    angular: &Kernel3,
    scale: f64,
) -> Result<LightField> {
    let grid = lf.grid();
    let (w, h, ch) = (lf.width(), lf.height(), lf.channels());
    let spatial_pass: Vec<Vec<f64>> = lf
        .views()
        .par_iter()
        .map(|v| {
            let src = v.data();
            let mut out = vec![0.0; w * h * ch];
            for y in 0..h {
                for x in 0..w {
                    for c in 0..ch {
                        let mut s = 0.0;
                        for (r, row) in spatial.0.iter().enumerate() {
                            let yy = clamp_offset(y, r, h);
                            for (q, tap) in row.iter().enumerate() {
                                let xx = clamp_offset(x, q, w);
                                s += tap * src[(yy * w + xx) * ch + c];
                            }
                        }
                        out[(y * w + x) * ch + c] = s;
                    }
                }
            }
            out
        })
        .collect();

    let (rows, cols) = (grid.rows(), grid.cols());
    let views = grid
        .cells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, j)| {
            let mut out = vec![0.0; w * h * ch];
            for (r, row) in angular.0.iter().enumerate() {
                let ii = clamp_offset(i, r, rows);
                for (q, tap) in row.iter().enumerate() {
                    if *tap == 0.0 {
                        continue;
                    }
                    let jj = clamp_offset(j, q, cols);
                    let src = &spatial_pass[ii * cols + jj];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += tap * s;
                    }
                }
            }
            for o in &mut out {
                *o = (scale * *o).clamp(0.0, 1.0);
            }
            ViewImage::new(w, h, ch, out)
        })
        .collect::<Result<Vec<_>>>()?;
    LightField::new(grid, views)
}

#[inline]
fn clamp_offset(center: usize, tap: usize, extent: usize) -> usize {
    (center as i64 + tap as i64 - 1).clamp(0, extent as i64 - 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(seed: usize) -> ViewImage {
        ViewImage::from_fn(10, 8, 3, |x, y, c| {
            ((x * 7 + y * 3 + c * 5 + seed) % 13) as f64 / 12.0
        })
        .unwrap()
    }

    #[test]
    fn endpoints_return_boundary_views() {
        let (a, b) = (img(0), img(4));
        let z = DisparityMap::zeros(10, 8);
        assert_eq!(infer_free_space(&a, &b, &z, &z, 0.0).unwrap(), a);
        assert_eq!(infer_free_space(&a, &b, &z, &z, 1.0).unwrap(), b);
    }

    #[test]
    fn uniform_confidence_matches_free_space() {
        let (a, b) = (img(1), img(6));
        let m0 =
            DisparityMap::from_fn(10, 8, |x, y| (0.3 * x as f64 - 1.1, 0.2 * y as f64)).unwrap();
        let m1 = m0.scale(-0.7);
        let half = ConfidenceMap::uniform(10, 8, 0.5).unwrap();
        for k in [0.0, 0.1, 1.0 / 7.0, 0.3, 0.5, 2.0 / 3.0, 0.9, 1.0] {
            let free = infer_free_space(&a, &b, &m0, &m1, k).unwrap();
            let (aware, d) = infer_occlusion_aware(&a, &b, &m0, &m1, &half, &half, k).unwrap();
            assert_eq!(free, aware, "k = {k}");
            assert_eq!(d.fallback_pixels, 0);
        }
    }

    #[test]
    fn one_sided_confidence_takes_other_view() {
        let (a, b) = (img(2), img(9));
        let z = DisparityMap::zeros(10, 8);
        let zero = ConfidenceMap::uniform(10, 8, 0.0).unwrap();
        let one = ConfidenceMap::uniform(10, 8, 1.0).unwrap();
        for k in [0.2, 0.5, 0.8] {
            let (out, _) = infer_occlusion_aware(&a, &b, &z, &z, &zero, &one, k).unwrap();
            assert_eq!(out, b);
            let (out, _) = infer_occlusion_aware(&a, &b, &z, &z, &one, &zero, k).unwrap();
            assert_eq!(out, a);
        }
    }

    #[test]
    fn vanishing_phi_falls_back() {
        let (a, b) = (img(2), img(9));
        let z = DisparityMap::zeros(10, 8);
        let zero = ConfidenceMap::uniform(10, 8, 0.0).unwrap();
        let (out, d) = infer_occlusion_aware(&a, &b, &z, &z, &zero, &zero, 0.25).unwrap();
        assert_eq!(d.fallback_pixels, 80);
        assert_eq!(out, infer_free_space(&a, &b, &z, &z, 0.25).unwrap());
    }

    #[test]
    fn mismatches_rejected() {
        let (a, b) = (img(0), img(1));
        let z = DisparityMap::zeros(10, 8);
        let bad = DisparityMap::zeros(9, 8);
        assert!(infer_free_space(&a, &b, &bad, &z, 0.5).is_err());
        assert!(infer_free_space(&a, &b, &z, &z, -0.5).is_err());
        let half = ConfidenceMap::uniform(10, 7, 0.5).unwrap();
        assert!(infer_occlusion_aware(&a, &b, &z, &z, &half, &half, 0.5).is_err());
    }

    #[test]
    fn kernel_shape_checked() {
        assert!(Kernel3::from_rows(&[vec![0.0; 3], vec![0.0; 3]]).is_err());
        assert!(Kernel3::from_rows(&[vec![0.0; 3], vec![0.0; 2], vec![0.0; 3]]).is_err());
        assert_eq!(
            Kernel3::from_rows(&[vec![0.0; 3], vec![0.0, 1.0, 0.0], vec![0.0; 3]]).unwrap(),
            Kernel3::delta()
        );
    }

    #[test]
    fn delta_kernels_are_identity() {
        let grid = AngularGrid::new(3, 4).unwrap();
        let views = (0..12).map(img).collect();
        let lf = LightField::new(grid, views).unwrap();
        let out = separable_conv4d(&lf, &Kernel3::delta(), &Kernel3::delta(), 1.0).unwrap();
        assert_eq!(out, lf);
    }

    #[test]
    fn reconstruct_rejects_bad_inputs() {
        let grid = AngularGrid::new(2, 2).unwrap();
        let lf = LightField::new(grid, (0..4).map(img).collect()).unwrap();
        let cfg = ReconstructConfig {
            estimator: Estimator::Oracle,
            ..Default::default()
        };
        assert!(reconstruct_dense(&lf, AngularGrid::new(4, 4).unwrap(), None, cfg).is_err());
        assert!(reconstruct_dense(
            &lf,
            AngularGrid::new(1, 4).unwrap(),
            None,
            ReconstructConfig::default()
        )
        .is_err());
        let big =
            LightField::new(AngularGrid::new(1, 4).unwrap(), (0..4).map(img).collect()).unwrap();
        assert!(reconstruct_dense(&big, grid, None, ReconstructConfig::default()).is_err());
    }

    #[test]
    fn two_by_two_target_passes_through() {
        let grid = AngularGrid::new(2, 2).unwrap();
        let lf = LightField::new(grid, (0..4).map(img).collect()).unwrap();
        let cfg = ReconstructConfig {
            max_disp: 3,
            ..Default::default()
        };
        let (out, stats) = reconstruct_dense(&lf, grid, None, cfg).unwrap();
        assert_eq!(out, lf);
        assert_eq!(stats.synthesized_views, 0);
    }
}
