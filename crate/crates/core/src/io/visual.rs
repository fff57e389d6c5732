//! Color-coded exports for inspection. Nothing here feeds back into
//! computation.

use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::lightfield::EpiImage;
use crate::warp::DisparityMap;
use crate::wcm::ConfidenceMap;

fn save(path: &Path, img: &RgbImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// EPI with the angular axis vertical, each angular row repeated
/// `angular_upscale` times.
pub fn epi_image(epi: &EpiImage, angular_upscale: usize) -> RgbImage {
    let up = angular_upscale.max(1);
    let (w, h) = (epi.spatial as u32, (epi.angular * up) as u32);
    ImageBuffer::from_fn(w, h, |x, y| {
        let a = y as usize / up;
        let px = |c: usize| to_u8(epi.get(a, x as usize, c.min(epi.channels - 1)));
        Rgb([px(0), px(1), px(2)])
    })
}

pub fn save_epi_png(path: &Path, epi: &EpiImage, angular_upscale: usize) -> Result<()> {
    save(path, &epi_image(epi, angular_upscale))
}

/// Diverging red/white/blue coding: 1 is red (the source contributes
/// more), 0.5 white, 0 blue.
pub fn wcm_color(o: f64) -> [u8; 3] {
    let t = 2.0 * (o.clamp(0.0, 1.0) - 0.5);
    if t >= 0.0 {
        [255, to_u8(1.0 - t), to_u8(1.0 - t)]
    } else {
        [to_u8(1.0 + t), to_u8(1.0 + t), 255]
    }
}

pub fn wcm_image(map: &ConfidenceMap) -> RgbImage {
    ImageBuffer::from_fn(map.width() as u32, map.height() as u32, |x, y| {
        Rgb(wcm_color(map.get(x as usize, y as usize)))
    })
}

pub fn wcm_gray_image(map: &ConfidenceMap) -> RgbImage {
    ImageBuffer::from_fn(map.width() as u32, map.height() as u32, |x, y| {
        let g = to_u8(map.get(x as usize, y as usize));
        Rgb([g, g, g])
    })
}

pub fn save_wcm_png(path: &Path, map: &ConfidenceMap, gray: bool) -> Result<()> {
    let img = if gray {
        wcm_gray_image(map)
    } else {
        wcm_image(map)
    };
    save(path, &img)
}

/// Hue encodes direction; saturation grows and lightness falls with
/// magnitude relative to `scale`, so a zero vector is white.
pub fn adm_color(dx: f64, dy: f64, scale: f64) -> [u8; 3] {
    let mag = dx.hypot(dy);
    let t = if scale > 0.0 {
        (mag / scale).min(1.0)
    } else {
        0.0
    };
    if t == 0.0 {
        return [255, 255, 255];
    }
    let hue = (dy.atan2(dx).to_degrees() + 360.0) % 360.0;
    let (r, g, b) = hsv_to_rgb(hue, t, 1.0 - 0.4 * t);
    [to_u8(r), to_u8(g), to_u8(b)]
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

/// `scale` defaults to the largest magnitude in the map.
pub fn adm_image(map: &DisparityMap, scale: Option<f64>) -> RgbImage {
    let scale = scale.unwrap_or_else(|| {
        (0..map.height())
            .flat_map(|y| (0..map.width()).map(move |x| (x, y)))
            .map(|(x, y)| map.magnitude(x, y))
            .fold(0.0, f64::max)
    });
    ImageBuffer::from_fn(map.width() as u32, map.height() as u32, |x, y| {
        let (dx, dy) = map.get(x as usize, y as usize);
        Rgb(adm_color(dx, dy, scale))
    })
}

pub fn save_adm_png(path: &Path, map: &DisparityMap, scale: Option<f64>) -> Result<()> {
    save(path, &adm_image(map, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wcm_endpoints() {
        assert_eq!(wcm_color(0.5), [255, 255, 255]);
        assert_eq!(wcm_color(1.0), [255, 0, 0]);
        assert_eq!(wcm_color(0.0), [0, 0, 255]);
    }

    #[test]
    fn zero_adm_is_white() {
        let img = adm_image(&DisparityMap::zeros(4, 3), None);
        assert!(img.pixels().all(|p| p.0 == [255, 255, 255]));
    }

    #[test]
    fn uniform_adm_is_uniform_hue() {
        let img = adm_image(&DisparityMap::uniform(4, 3, -2.0, 1.0), None);
        let first = *img.get_pixel(0, 0);
        assert_ne!(first.0, [255, 255, 255]);
        assert!(img.pixels().all(|p| *p == first));
    }

    #[test]
    fn larger_vectors_are_darker() {
        let small = adm_color(1.0, 0.0, 4.0);
        let large = adm_color(4.0, 0.0, 4.0);
        let sum = |c: [u8; 3]| c.iter().map(|&v| v as u32).sum::<u32>();
        assert!(sum(large) < sum(small));
    }
}
