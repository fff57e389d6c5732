//! Warping confidence maps.
//!
//! A pair `(O_{k<-0}, O_{k<-1})` weights how much each boundary view
//! contributes to a synthesized pixel. The pair sums to one everywhere;
//! pixels hidden in one boundary view take their value from the other.

use crate::error::{Error, Result};
use crate::lightfield::ViewImage;
use crate::warp::{warp, warp_disparity, BorderMode, DisparityMap};

/// Default photometric scale in normalized radiance.
pub const DEFAULT_SIGMA: f64 = 0.05;
/// Default forward-backward disparity scale in pixels.
pub const DEFAULT_SIGMA_D: f64 = 1.0;
/// Additive guard in [`normalize_pair`].
pub const NORMALIZE_EPS: f64 = 1e-8;

/// Per-pixel confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ConfidenceMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::mismatch(format!(
                "{width}x{height} confidence map needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!(
                "confidence {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub(crate) fn ensure_size(&self, width: usize, height: usize, what: &str) -> Result<()> {
        if self.width == width && self.height == height {
            Ok(())
        } else {
            Err(Error::mismatch(format!(
                "{what}: {}x{} vs {width}x{height}",
                self.width, self.height
            )))
        }
    }
}

/// Rescales a pair of non-negative raw confidences so they sum to one.
///
/// Each side becomes `(o + eps/2) / (o0 + o1 + eps)`, so pixels where both
/// raw values vanish fall back to an even split.
pub fn normalize_pair(
    o0: &[f64],
    o1: &[f64],
    width: usize,
    height: usize,
    eps: f64,
) -> Result<(ConfidenceMap, ConfidenceMap)> {
    if o0.len() != width * height || o1.len() != width * height {
        return Err(Error::mismatch(format!(
            "confidence pair must be {width}x{height}, got {} and {} values",
            o0.len(),
            o1.len()
        )));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let mut n0 = Vec::with_capacity(o0.len());
    let mut n1 = Vec::with_capacity(o1.len());
    for (&a, &b) in o0.iter().zip(o1) {
        if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidValue(format!(
                "raw confidences must be finite and non-negative, got ({a}, {b})"
            )));
        }
        let denom = a + b + eps;
        let half = 0.5 * eps;
        n0.push(((a + half) / denom).min(1.0));
        n1.push(((b + half) / denom).min(1.0));
    }
    Ok((
        ConfidenceMap::new(width, height, n0)?,
        ConfidenceMap::new(width, height, n1)?,
    ))
}

/// Convenience wrapper over [`normalize_pair`] for two maps.
pub fn normalize_maps(
    o0: &ConfidenceMap,
    o1: &ConfidenceMap,
    eps: f64,
) -> Result<(ConfidenceMap, ConfidenceMap)> {
    o0.ensure_size(o1.width, o1.height, "normalize_pair")?;
    normalize_pair(&o0.data, &o1.data, o0.width, o0.height, eps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WcmParams {
    pub sigma: f64,
    pub sigma_d: f64,
}

impl Default for WcmParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            sigma_d: DEFAULT_SIGMA_D,
        }
    }
}

/// Heuristic confidence estimate from photometric agreement and
/// forward-backward disparity consistency.
///
/// `a_10` and `a_01` are the boundary maps `A_{1<-0}` and `A_{0<-1}`; scaled
/// by the linear model they give the return maps `A_{0<-k} = k A_{0<-1}` and
/// `A_{1<-k} = (1 - k) A_{1<-0}` used for the round-trip check. Where the
/// two warped views agree photometrically the pair tends to an even split;
/// where they disagree, each side is weighted by how well its disparity
/// round trip closes.
#[allow(clippy::too_many_arguments)]
pub fn estimate_wcm_photometric(
    l0: &ViewImage,
    l1: &ViewImage,
    a_k0: &DisparityMap,
    a_k1: &DisparityMap,
    a_10: &DisparityMap,
    a_01: &DisparityMap,
    k: f64,
    params: WcmParams,
) -> Result<(ConfidenceMap, ConfidenceMap)> {
    l0.ensure_same_shape(l1, "estimate_wcm_photometric views")?;
    let (w, h, ch) = (l0.width(), l0.height(), l0.channels());
    for (m, what) in [
        (a_k0, "A_k0"),
        (a_k1, "A_k1"),
        (a_10, "A_10"),
        (a_01, "A_01"),
    ] {
        m.ensure_matches(l0, what)?;
    }
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "k must lie in [0, 1], got {k}"
        )));
    }
    if !(params.sigma > 0.0 && params.sigma_d > 0.0) {
        return Err(Error::InvalidArgument(
            "sigma and sigma_d must be positive".into(),
        ));
    }

    let w0 = warp(l0, a_k0, BorderMode::Clamp)?;
    let w1 = warp(l1, a_k1, BorderMode::Clamp)?;
    let back0 = warp_disparity(&a_01.scale(k), a_k0)?;
    let back1 = warp_disparity(&a_10.scale(1.0 - k), a_k1)?;

    let inv_s2 = 1.0 / (params.sigma * params.sigma);
    let inv_sd2 = 1.0 / (params.sigma_d * params.sigma_d);
    let mut raw0 = Vec::with_capacity(w * h);
    let mut raw1 = Vec::with_capacity(w * h);
    for p in 0..w * h {
        let e: f64 = (0..ch)
            .map(|c| (w0.data()[p * ch + c] - w1.data()[p * ch + c]).abs())
            .sum::<f64>()
            / ch as f64;
        let agree = (-e * e * inv_s2).exp();
        let r0 = (a_k0.dx()[p] + back0.dx()[p]).powi(2) + (a_k0.dy()[p] + back0.dy()[p]).powi(2);
        let r1 = (a_k1.dx()[p] + back1.dx()[p]).powi(2) + (a_k1.dy()[p] + back1.dy()[p]).powi(2);
        let g0 = (-r0 * inv_sd2).exp();
        let g1 = (-r1 * inv_sd2).exp();
        raw0.push(agree + (1.0 - agree) * g0);
        raw1.push(agree + (1.0 - agree) * g1);
    }
    normalize_pair(&raw0, &raw1, w, h, NORMALIZE_EPS)
}
