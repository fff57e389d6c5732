//! Image quality metrics, loss-term evaluators and regression statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightfield::ViewImage;
use crate::warp::{mean_abs_diff, warp, BorderMode, DisparityMap};

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Peak-1 PSNR in dB over all samples; `f64::INFINITY` for identical inputs.
pub fn psnr(a: &ViewImage, b: &ViewImage) -> Result<f64> {
    a.ensure_same_shape(b, "psnr")?;
    let mse = mse(a.data(), b.data());
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// [`psnr`] with infinite values replaced by [`PSNR_CAP_DB`].
pub fn psnr_capped(a: &ViewImage, b: &ViewImage) -> Result<f64> {
    psnr(a, b).map(|p| p.min(PSNR_CAP_DB))
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64
}

/// Normalized 1D Gaussian taps for the SSIM window.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Mean SSIM over all fully contained 11x11 windows (Gaussian sigma 1.5) of
/// the luma planes.
pub fn ssim(a: &ViewImage, b: &ViewImage) -> Result<f64> {
    a.ensure_same_shape(b, "ssim")?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let x = a.luma();
    let y = b.luma();
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);
    let n = mu_x.len();
    let mut total = 0.0;
    for i in 0..n {
        total += ssim_term(mu_x[i], mu_y[i], e_xx[i], e_yy[i], e_xy[i]);
    }
    Ok(total / n as f64)
}

#[inline]
pub(crate) fn ssim_term(mx: f64, my: f64, exx: f64, eyy: f64, exy: f64) -> f64 {
    let vx = exx - mx * mx;
    let vy = eyy - my * my;
    let cov = exy - mx * my;
    ((2.0 * (mx * my) + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2))
}

/// Separable "valid" filtering; output is `(w - n + 1) x (h - n + 1)`.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut s = 0.0;
            for (t, tap) in taps.iter().enumerate() {
                s += tap * src[y * w + x + t];
            }
            rows[y * ow + x] = s;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (t, tap) in taps.iter().enumerate() {
                s += tap * rows[(y + t) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    out
}

/// Mean over pairs of the per-pair mean absolute error.
pub fn loss_reconstruction(pred: &[ViewImage], gt: &[ViewImage]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::mismatch(format!(
            "{} predictions for {} references",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument(
            "loss_reconstruction needs at least one pair".into(),
        ));
    }
    let mut total = 0.0;
    for (p, g) in pred.iter().zip(gt) {
        p.ensure_same_shape(g, "loss_reconstruction")?;
        total += mean_abs_diff(p, g);
    }
    Ok(total / pred.len() as f64)
}

/// One intermediate view with its maps from both boundaries.
#[derive(Debug, Clone, Copy)]
pub struct IntermediateSample<'a> {
    pub view: &'a ViewImage,
    pub a_k0: &'a DisparityMap,
    pub a_k1: &'a DisparityMap,
}

/// Warping loss: boundary cross terms `|L0 - P(L1, A_{0<-1})|` and
/// `|L1 - P(L0, A_{1<-0})|` plus the mean over intermediates of
/// `|Lk - P(L1, A_{k<-1})|` and `|Lk - P(L0, A_{k<-0})|`, each as a mean
/// absolute error with clamped borders.
pub fn loss_warping(
    l0: &ViewImage,
    l1: &ViewImage,
    a_01: &DisparityMap,
    a_10: &DisparityMap,
    intermediates: &[IntermediateSample<'_>],
) -> Result<f64> {
    l0.ensure_same_shape(l1, "loss_warping")?;
    let term = |target: &ViewImage, src: &ViewImage, adm: &DisparityMap| -> Result<f64> {
        target.ensure_same_shape(src, "loss_warping")?;
        Ok(mean_abs_diff(target, &warp(src, adm, BorderMode::Clamp)?))
    };
    let mut total = term(l0, l1, a_01)? + term(l1, l0, a_10)?;
    if !intermediates.is_empty() {
        let n = intermediates.len() as f64;
        let mut from1 = 0.0;
        let mut from0 = 0.0;
        for s in intermediates {
            from1 += term(s.view, l1, s.a_k1)?;
            from0 += term(s.view, l0, s.a_k0)?;
        }
        total += from1 / n + from0 / n;
    }
    Ok(total)
}

/// Smoothness: for both maps, mean `|forward difference|` along x and along y,
/// summed over the two vector components.
pub fn loss_smoothness(a_01: &DisparityMap, a_10: &DisparityMap) -> Result<f64> {
    a_01.ensure_same_size(a_10.width(), a_10.height(), "loss_smoothness")?;
    Ok(gradient_l1(a_01) + gradient_l1(a_10))
}

fn gradient_l1(m: &DisparityMap) -> f64 {
    let (w, h) = (m.width(), m.height());
    let mut gx = 0.0;
    let mut gy = 0.0;
    for comp in [m.dx(), m.dy()] {
        for y in 0..h {
            for x in 0..w {
                let v = comp[y * w + x];
                if x + 1 < w {
                    gx += (comp[y * w + x + 1] - v).abs();
                }
                if y + 1 < h {
                    gy += (comp[(y + 1) * w + x] - v).abs();
                }
            }
        }
    }
    let nx = (w.saturating_sub(1) * h) as f64;
    let ny = (w * h.saturating_sub(1)) as f64;
    let mx = if nx > 0.0 { gx / nx } else { 0.0 };
    let my = if ny > 0.0 { gy / ny } else { 0.0 };
    mx + my
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub reconstruction: f64,
    /// Kept for reference; the perceptual term is not evaluated.
    pub perceptual: f64,
    pub warping: f64,
    pub smoothness: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            reconstruction: 200.0,
            perceptual: 1000.0,
            warping: 100.0,
            smoothness: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_r: f64,
    /// Always `"n/a"`: the perceptual term needs a pretrained feature network.
    pub l_c: String,
    pub l_w: f64,
    pub l_s: f64,
    pub l_total: f64,
    pub weights: LossWeights,
}

/// Weighted total of the available loss terms; the perceptual term
/// contributes nothing and is flagged as unavailable.
pub fn combined_loss_report(l_r: f64, l_w: f64, l_s: f64, weights: LossWeights) -> LossReport {
    LossReport {
        l_r,
        l_c: "n/a".into(),
        l_w,
        l_s,
        l_total: weights.reconstruction * l_r + weights.warping * l_w + weights.smoothness * l_s,
        weights,
    }
}

/// Ordinary least squares `y = intercept + slope * x` with fit statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub pcc: f64,
}

/// Simple linear regression. Needs at least three samples and spread in
/// `x`. When `y` is exactly constant the line fits perfectly and `r2`,
/// `adjusted_r2` and `pcc` are all reported as 1.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::mismatch(format!(
            "{} x values, {} y values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "regression with an intercept needs at least 3 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if syy == 0.0 {
        return Ok(LinearFit {
            slope,
            intercept,
            r2: 1.0,
            adjusted_r2: 1.0,
            pcc: 1.0,
        });
    }
    let pcc = sxy / (sxx * syy).sqrt();
    let r2 = pcc * pcc;
    let adjusted_r2 = 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - 2.0);
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        adjusted_r2,
        pcc,
    })
}
