//! Backward warping by a per-pixel displacement field.
//!
//! `warp(image, adm)(x) = image(x + adm(x))`, sampled bilinearly. The
//! displacement points from an output pixel to its source location in the
//! input image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::ViewImage;

/// A dense 2-vector displacement field in pixels (an aperture disparity map).
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if dx.len() != n || dy.len() != n {
            return Err(Error::mismatch(format!(
                "{width}x{height} disparity map needs {n} samples per component, got {} and {}",
                dx.len(),
                dy.len()
            )));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(
                "disparity components must be finite".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            dx,
            dy,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, 0.0, 0.0)
    }

    pub fn uniform(width: usize, height: usize, dx: f64, dy: f64) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            dx: vec![dx; n],
            dy: vec![dy; n],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Result<Self> {
        let n = width * height;
        let (mut dx, mut dy) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                dx.push(a);
                dy.push(b);
            }
        }
        Self::new(width, height, dx, dy)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.dx[i], self.dy[i])
    }

    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        let (a, b) = self.get(x, y);
        a.hypot(b)
    }

    /// `a * self + b * other`, pixelwise.
    pub fn combine(&self, a: f64, other: &DisparityMap, b: f64) -> Result<DisparityMap> {
        self.ensure_same_size(other.width, other.height, "disparity maps")?;
        let lin = |p: &[f64], q: &[f64]| -> Vec<f64> {
            p.iter().zip(q).map(|(p, q)| a * p + b * q).collect()
        };
        Ok(DisparityMap {
            width: self.width,
            height: self.height,
            dx: lin(&self.dx, &other.dx),
            dy: lin(&self.dy, &other.dy),
        })
    }

    pub fn scale(&self, s: f64) -> DisparityMap {
        DisparityMap {
            width: self.width,
            height: self.height,
            dx: self.dx.iter().map(|v| s * v).collect(),
            dy: self.dy.iter().map(|v| s * v).collect(),
        }
    }

    pub fn neg(&self) -> DisparityMap {
        DisparityMap {
            width: self.width,
            height: self.height,
            dx: self.dx.iter().map(|v| -v).collect(),
            dy: self.dy.iter().map(|v| -v).collect(),
        }
    }

    pub(crate) fn ensure_same_size(&self, width: usize, height: usize, what: &str) -> Result<()> {
        if self.width == width && self.height == height {
            Ok(())
        } else {
            Err(Error::mismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, width, height
            )))
        }
    }

    pub(crate) fn ensure_matches(&self, image: &ViewImage, what: &str) -> Result<()> {
        self.ensure_same_size(image.width(), image.height(), what)
    }
}

/// How samples outside the source image are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderMode {
    /// Replicate the nearest edge pixel.
    #[default]
    Clamp,
    /// Treat outside pixels as 0.
    Zero,
}

/// Bilinear sample of channel-interleaved `data` at continuous `(sx, sy)`,
/// writing `channels` values into `out`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn sample_bilinear(
    data: &[f64],
    width: usize,
    height: usize,
    channels: usize,
    sx: f64,
    sy: f64,
    border: BorderMode,
    out: &mut [f64],
) {
    let x0f = sx.floor();
    let y0f = sy.floor();
    let fx = sx - x0f;
    let fy = sy - y0f;
    let x0 = x0f as i64;
    let y0 = y0f as i64;
    let (w, h) = (width as i64, height as i64);

    let fetch = |x: i64, y: i64, c: usize| -> f64 {
        match border {
            BorderMode::Clamp => {
                let xc = x.clamp(0, w - 1) as usize;
                let yc = y.clamp(0, h - 1) as usize;
                data[(yc * width + xc) * channels + c]
            }
            BorderMode::Zero => {
                if x < 0 || y < 0 || x >= w || y >= h {
                    0.0
                } else {
                    data[(y as usize * width + x as usize) * channels + c]
                }
            }
        }
    };

    if fx == 0.0 && fy == 0.0 {
        for (c, o) in out.iter_mut().enumerate() {
            *o = fetch(x0, y0, c);
        }
        return;
    }
    for (c, o) in out.iter_mut().enumerate() {
        let p00 = fetch(x0, y0, c);
        let p10 = fetch(x0 + 1, y0, c);
        let p01 = fetch(x0, y0 + 1, c);
        let p11 = fetch(x0 + 1, y0 + 1, c);
        let top = lerp(p00, p10, fx);
        let bottom = lerp(p01, p11, fx);
        *o = lerp(top, bottom, fy);
    }
}

/// `(1 - t) a + t b`, kept inside `[min(a, b), max(a, b)]`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        return a;
    }
    let v = (1.0 - t) * a + t * b;
    v.clamp(a.min(b), a.max(b))
}

/// Backward-warps `image` by `adm`.
pub fn warp(image: &ViewImage, adm: &DisparityMap, border: BorderMode) -> Result<ViewImage> {
    adm.ensure_matches(image, "warp")?;
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let src = image.data();
    let mut out = vec![0.0; w * h * ch];
    out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let (dx, dy) = adm.get(x, y);
            sample_bilinear(
                src,
                w,
                h,
                ch,
                x as f64 + dx,
                y as f64 + dy,
                border,
                &mut row[x * ch..(x + 1) * ch],
            );
        }
    });
    Ok(ViewImage::from_raw(w, h, ch, out))
}

/// Warps a disparity map by another displacement field (bilinear, clamped).
pub fn warp_disparity(map: &DisparityMap, by: &DisparityMap) -> Result<DisparityMap> {
    map.ensure_same_size(by.width(), by.height(), "warp_disparity")?;
    let (w, h) = (map.width(), map.height());
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    let mut tmp = [0.0];
    for y in 0..h {
        for x in 0..w {
            let (ox, oy) = by.get(x, y);
            let (sx, sy) = (x as f64 + ox, y as f64 + oy);
            sample_bilinear(map.dx(), w, h, 1, sx, sy, BorderMode::Clamp, &mut tmp);
            dx[y * w + x] = tmp[0];
            sample_bilinear(map.dy(), w, h, 1, sx, sy, BorderMode::Clamp, &mut tmp);
            dy[y * w + x] = tmp[0];
        }
    }
    DisparityMap::new(w, h, dx, dy)
}

/// Mean over pixels and channels of `|target - warp(source, adm)|` with the
/// clamp border policy.
pub fn warp_residual(target: &ViewImage, source: &ViewImage, adm: &DisparityMap) -> Result<f64> {
    target.ensure_same_shape(source, "warp_residual")?;
    let warped = warp(source, adm, BorderMode::Clamp)?;
    Ok(mean_abs_diff(target, &warped))
}

pub(crate) fn mean_abs_diff(a: &ViewImage, b: &ViewImage) -> f64 {
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q).abs())
        .sum();
    sum / a.data().len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ViewImage {
        ViewImage::from_fn(w, h, 1, |x, y, _| (y * w + x) as f64 / (w * h) as f64).unwrap()
    }

    /// Index-shift oracle for integer displacements.
    fn shift_oracle(img: &ViewImage, dx: i64, dy: i64, border: BorderMode) -> Vec<f64> {
        let (w, h, ch) = (img.width() as i64, img.height() as i64, img.channels());
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let (sx, sy) = (x + dx, y + dy);
                    let v = match border {
                        BorderMode::Clamp => {
                            img.get(sx.clamp(0, w - 1) as usize, sy.clamp(0, h - 1) as usize, c)
                        }
                        BorderMode::Zero => {
                            if sx < 0 || sy < 0 || sx >= w || sy >= h {
                                0.0
                            } else {
                                img.get(sx as usize, sy as usize, c)
                            }
                        }
                    };
                    out.push(v);
                }
            }
        }
        out
    }

    #[test]
    fn zero_displacement_is_identity() {
        let img = ramp(7, 5);
        let out = warp(&img, &DisparityMap::zeros(7, 5), BorderMode::Clamp).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn unit_shift_on_ramp() {
        let img = ramp(4, 4);
        let out = warp(
            &img,
            &DisparityMap::uniform(4, 4, 1.0, 0.0),
            BorderMode::Clamp,
        )
        .unwrap();
        assert_eq!(out.data(), &shift_oracle(&img, 1, 0, BorderMode::Clamp)[..]);
        assert_eq!(out.get(3, 2, 0), img.get(3, 2, 0));
        assert_eq!(out.get(0, 2, 0), img.get(1, 2, 0));
    }

    #[test]
    fn integer_shifts_match_oracle() {
        let img = ViewImage::from_fn(6, 5, 3, |x, y, c| {
            ((x * 7 + y * 3 + c * 5) % 11) as f64 / 10.0
        })
        .unwrap();
        for border in [BorderMode::Clamp, BorderMode::Zero] {
            for dx in -7..=7 {
                for dy in -6..=6 {
                    let adm = DisparityMap::uniform(6, 5, dx as f64, dy as f64);
                    let out = warp(&img, &adm, border).unwrap();
                    assert_eq!(out.data(), &shift_oracle(&img, dx, dy, border)[..]);
                }
            }
        }
    }

    #[test]
    fn half_pixel_is_average() {
        let img = ViewImage::new(2, 1, 1, vec![0.2, 0.6]).unwrap();
        let out = warp(
            &img,
            &DisparityMap::uniform(2, 1, 0.5, 0.0),
            BorderMode::Clamp,
        )
        .unwrap();
        assert!((out.get(0, 0, 0) - 0.4).abs() < 1e-15);
        assert_eq!(out.get(1, 0, 0), 0.6);
    }

    #[test]
    fn dimension_mismatch() {
        let img = ramp(4, 4);
        assert!(warp(&img, &DisparityMap::zeros(4, 3), BorderMode::Clamp).is_err());
        assert!(warp_residual(&img, &ramp(3, 4), &DisparityMap::zeros(4, 4)).is_err());
    }

    #[test]
    fn residual_of_constants() {
        let a = ViewImage::filled(5, 5, 1, 0.7).unwrap();
        let b = ViewImage::filled(5, 5, 1, 0.2).unwrap();
        let adm =
            DisparityMap::from_fn(5, 5, |x, y| (x as f64 * 0.37 - 1.0, y as f64 * -0.6)).unwrap();
        assert!((warp_residual(&a, &b, &adm).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(
            warp_residual(&a, &a, &DisparityMap::zeros(5, 5)).unwrap(),
            0.0
        );
    }

    #[test]
    fn non_finite_maps_rejected() {
        assert!(DisparityMap::new(1, 1, vec![f64::NAN], vec![0.0]).is_err());
        assert!(DisparityMap::new(2, 1, vec![0.0], vec![0.0]).is_err());
    }
}
