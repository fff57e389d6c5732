//! Procedural layered Lambertian scenes with closed-form geometry.
//!
//! A scene is a stack of fronto-parallel opaque layers, listed back to front.
//! Layer `l` with depth ratio `alpha` moves by `(1 - 1/alpha) * baseline`
//! pixels per unit of normalized angular coordinate, so the view at `(u, v)`
//! shows layer content shifted by `shift_l * (u - 0.5, v - 0.5)` relative to
//! the reference composite at the grid center. Because every layer is a
//! rigid translate, disparity, occlusion and confidence ground truth follow
//! directly from the layer stack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightfield::{AngularAxis, AngularGrid, LightField, ViewImage};
use crate::warp::{sample_bilinear, BorderMode, DisparityMap};
use crate::wcm::ConfidenceMap;

/// Angular position of the reference (zero-shift) view.
pub const REFERENCE_COORD: f64 = 0.5;

/// Default pixel baseline for desk-scale scenes.
pub const DEFAULT_BASELINE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_channels")]
    pub channels: usize,
    /// Pixel scale of the normalized angular range.
    #[serde(default = "default_baseline")]
    pub baseline: f64,
    pub seed: u64,
    /// Back to front. The first layer must cover the whole frame.
    pub layers: Vec<LayerSpec>,
}

fn default_channels() -> usize {
    3
}

fn default_baseline() -> f64 {
    DEFAULT_BASELINE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    /// Depth ratio `Z / F`; must exceed 1.
    pub alpha: f64,
    #[serde(default)]
    pub texture: TextureSpec,
    #[serde(default)]
    pub mask: MaskShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TextureSpec {
    /// Band-limited sinusoidal noise plus Gaussian color blotches.
    Noise {
        /// Overrides the seed derived from the scene seed and layer index.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        /// Shortest sinusoid wavelength in pixels.
        #[serde(default = "default_wavelength")]
        min_wavelength: f64,
        #[serde(default = "default_blotches")]
        blotches: usize,
        /// Scales all variation around the base color.
        #[serde(default = "default_contrast")]
        contrast: f64,
    },
    Constant {
        value: Vec<f64>,
    },
}

fn default_wavelength() -> f64 {
    16.0
}

fn default_blotches() -> usize {
    6
}

fn default_contrast() -> f64 {
    1.0
}

impl Default for TextureSpec {
    fn default() -> Self {
        TextureSpec::Noise {
            seed: None,
            min_wavelength: default_wavelength(),
            blotches: default_blotches(),
            contrast: default_contrast(),
        }
    }
}

/// Layer opacity in the reference frame (pixel-center coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskShape {
    #[default]
    Full,
    /// Half-open box `[x0, x1) x [y0, y1)`.
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    Disc {
        cx: f64,
        cy: f64,
        radius: f64,
    },
}

impl MaskShape {
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            MaskShape::Full => true,
            MaskShape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            MaskShape::Disc { cx, cy, radius } => {
                let (dx, dy) = (x - cx, y - cy);
                dx * dx + dy * dy <= radius * radius
            }
        }
    }
}

impl SceneSpec {
    /// Per-layer shift in pixels per unit of angular coordinate.
    pub fn layer_shift(&self, layer: usize) -> f64 {
        (1.0 - 1.0 / self.layers[layer].alpha) * self.baseline
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be positive".into());
        }
        if self.channels != 1 && self.channels != 3 {
            return bad(format!("channels must be 1 or 3, got {}", self.channels));
        }
        if !(self.baseline.is_finite() && self.baseline >= 0.0) {
            return bad(format!("baseline must be >= 0, got {}", self.baseline));
        }
        if self.layers.is_empty() {
            return bad("at least one layer is required".into());
        }
        if self.layers[0].mask != MaskShape::Full {
            return bad("the backmost layer must be fully opaque".into());
        }
        for (n, layer) in self.layers.iter().enumerate() {
            if layer.alpha.is_nan() || layer.alpha <= 1.0 {
                return bad(format!(
                    "layer {n}: alpha must exceed 1, got {}",
                    layer.alpha
                ));
            }
            if let TextureSpec::Constant { value } = &layer.texture {
                if value.len() != self.channels {
                    return bad(format!(
                        "layer {n}: constant texture has {} values for {} channels",
                        value.len(),
                        self.channels
                    ));
                }
                if value.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad(format!("layer {n}: constant texture outside [0, 1]"));
                }
            }
            if let TextureSpec::Noise { min_wavelength, .. } = &layer.texture {
                if min_wavelength.is_nan() || *min_wavelength < 2.0 {
                    return bad(format!("layer {n}: min_wavelength must be >= 2 px"));
                }
            }
        }
        for n in 1..self.layers.len() {
            if self.layers[n].alpha <= self.layers[n - 1].alpha {
                return bad(format!(
                    "layers must be ordered back to front with strictly increasing shift; \
                     layer {n} (alpha {}) is not nearer than layer {} (alpha {})",
                    self.layers[n].alpha,
                    n - 1,
                    self.layers[n - 1].alpha
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidScene(format!("malformed scene document: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }
}

/// Per-pixel boolean map: `true` where the point visible in the target view
/// is hidden by a nearer layer in the source view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl OcclusionMask {
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &OcclusionMask) -> OcclusionMask {
        OcclusionMask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }
}

struct Layer {
    shift: f64,
    mask: MaskShape,
    margin: usize,
    raster_w: usize,
    raster_h: usize,
    texels: Vec<f64>,
}

/// A validated scene with its layer textures rasterized.
pub struct Scene {
    spec: SceneSpec,
    layers: Vec<Layer>,
}

impl Scene {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let layers = (0..spec.layers.len())
            .map(|n| build_layer(&spec, n))
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    pub fn layer_shift(&self, layer: usize) -> f64 {
        self.layers[layer].shift
    }

    /// Index of the frontmost layer covering continuous pixel `(x, y)` of
    /// the view at `(u, v)`.
    #[inline]
    pub fn visible_layer(&self, u: f64, v: f64, x: f64, y: f64) -> usize {
        let (du, dv) = (u - REFERENCE_COORD, v - REFERENCE_COORD);
        for (n, layer) in self.layers.iter().enumerate().rev() {
            if layer
                .mask
                .contains(x - layer.shift * du, y - layer.shift * dv)
            {
                return n;
            }
        }
        // the backmost layer is full
        0
    }

    /// Per-pixel index of the visible layer in the view at `coords`.
    pub fn layer_map(&self, coords: (f64, f64)) -> Vec<usize> {
        let (w, h) = (self.width(), self.height());
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                out.push(self.visible_layer(coords.0, coords.1, x as f64, y as f64));
            }
        }
        out
    }

    pub fn render_view(&self, u: f64, v: f64) -> Result<ViewImage> {
        check_coords((u, v))?;
        let (w, h, ch) = (self.width(), self.height(), self.spec.channels);
        let (du, dv) = (u - REFERENCE_COORD, v - REFERENCE_COORD);
        let mut data = vec![0.0; w * h * ch];
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let layer = &self.layers[self.visible_layer(u, v, xf, yf)];
                let m = layer.margin as f64;
                let sx = xf - layer.shift * du + m;
                let sy = yf - layer.shift * dv + m;
                let at = (y * w + x) * ch;
                sample_bilinear(
                    &layer.texels,
                    layer.raster_w,
                    layer.raster_h,
                    ch,
                    sx,
                    sy,
                    BorderMode::Clamp,
                    &mut data[at..at + ch],
                );
            }
        }
        ViewImage::new(w, h, ch, data)
    }

    pub fn render_lightfield(&self, grid: AngularGrid) -> Result<LightField> {
        let cells: Vec<_> = grid.cells().collect();
        let views = cells
            .par_iter()
            .map(|&(i, j)| {
                let (u, v) = grid.coords(i, j);
                self.render_view(u, v)
            })
            .collect::<Result<Vec<_>>>()?;
        LightField::new(grid, views)
    }

    /// Backward-warp displacement `A_{target <- source}`: for each pixel of
    /// the target view, the offset to the same scene point in the source
    /// view, taken from the layer visible at the target.
    pub fn oracle_adm(&self, target: (f64, f64), source: (f64, f64)) -> Result<DisparityMap> {
        check_coords(target)?;
        check_coords(source)?;
        let (du, dv) = (source.0 - target.0, source.1 - target.1);
        let (w, h) = (self.width(), self.height());
        DisparityMap::from_fn(w, h, |x, y| {
            let l = self.visible_layer(target.0, target.1, x as f64, y as f64);
            let s = self.layers[l].shift;
            (s * du, s * dv)
        })
    }

    /// `true` where the point seen at `target` is hidden at `source`.
    pub fn occlusion_mask(&self, target: (f64, f64), source: (f64, f64)) -> Result<OcclusionMask> {
        check_coords(target)?;
        check_coords(source)?;
        let (w, h) = (self.width(), self.height());
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(!self.point_visible(target, source, x as f64, y as f64));
            }
        }
        Ok(OcclusionMask {
            width: w,
            height: h,
            data,
        })
    }

    fn point_visible(&self, target: (f64, f64), source: (f64, f64), x: f64, y: f64) -> bool {
        let l = self.visible_layer(target.0, target.1, x, y);
        let s = self.layers[l].shift;
        let xs = x + s * (source.0 - target.0);
        let ys = y + s * (source.1 - target.1);
        self.visible_layer(source.0, source.1, xs, ys) == l
    }

    /// Ground-truth confidence pair `(O_{k<-0}, O_{k<-1})` for the view at
    /// `target`, against the two boundary views along `axis`. Pixels hidden
    /// in exactly one boundary view take all their weight from the other;
    /// every other pixel gets an even split.
    pub fn oracle_wcm(
        &self,
        target: (f64, f64),
        axis: AngularAxis,
    ) -> Result<(ConfidenceMap, ConfidenceMap)> {
        check_coords(target)?;
        let (b0, b1) = axis.boundaries(target);
        let (w, h) = (self.width(), self.height());
        let mut o0 = Vec::with_capacity(w * h);
        let mut o1 = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let seen0 = self.point_visible(target, b0, xf, yf);
                let seen1 = self.point_visible(target, b1, xf, yf);
                let (a, b) = match (seen0, seen1) {
                    (false, true) => (0.0, 1.0),
                    (true, false) => (1.0, 0.0),
                    _ => (0.5, 0.5),
                };
                o0.push(a);
                o1.push(b);
            }
        }
        Ok((ConfidenceMap::new(w, h, o0)?, ConfidenceMap::new(w, h, o1)?))
    }
}

pub fn render_view(spec: &SceneSpec, u: f64, v: f64) -> Result<ViewImage> {
    Scene::new(spec.clone())?.render_view(u, v)
}

pub fn render_lightfield(spec: &SceneSpec, grid: AngularGrid) -> Result<LightField> {
    Scene::new(spec.clone())?.render_lightfield(grid)
}

fn check_coords((u, v): (f64, f64)) -> Result<()> {
    if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "angular coordinates ({u}, {v}) outside [0, 1]^2"
        )))
    }
}

fn build_layer(spec: &SceneSpec, n: usize) -> Layer {
    let shift = spec.layer_shift(n);
    // a view at u in [0, 1] samples up to shift/2 beyond the frame
    let margin = (shift.abs() * 0.5).ceil() as usize + 2;
    let raster_w = spec.width + 2 * margin;
    let raster_h = spec.height + 2 * margin;
    let ch = spec.channels;
    let layer = &spec.layers[n];
    let texels = match &layer.texture {
        TextureSpec::Constant { value } => value
            .iter()
            .copied()
            .cycle()
            .take(raster_w * raster_h * ch)
            .collect(),
        TextureSpec::Noise {
            seed,
            min_wavelength,
            blotches,
            contrast,
        } => {
            let seed = seed.unwrap_or_else(|| layer_seed(spec.seed, n));
            noise_texture(
                raster_w,
                raster_h,
                ch,
                seed,
                *min_wavelength,
                *blotches,
                *contrast,
            )
        }
    };
    Layer {
        shift,
        mask: layer.mask,
        margin,
        raster_w,
        raster_h,
        texels,
    }
}

fn layer_seed(scene_seed: u64, layer: usize) -> u64 {
    // splitmix64 step
    let mut z = scene_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(layer as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: Vec<f64>,
}

struct Blotch {
    cx: f64,
    cy: f64,
    inv_two_var: f64,
    amp: Vec<f64>,
}

const WAVES: usize = 8;

fn noise_texture(
    w: usize,
    h: usize,
    ch: usize,
    seed: u64,
    min_wavelength: f64,
    blotches: usize,
    contrast: f64,
) -> Vec<f64> {
    use std::f64::consts::TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..ch).map(|_| rng.gen_range(0.3..0.7)).collect();
    let waves: Vec<Wave> = (0..WAVES)
        .map(|_| {
            let wavelength = rng.gen_range(min_wavelength..3.0 * min_wavelength);
            let theta = rng.gen_range(0.0..TAU);
            let k = TAU / wavelength;
            Wave {
                kx: k * theta.cos(),
                ky: k * theta.sin(),
                phase: rng.gen_range(0.0..TAU),
                amp: (0..ch)
                    .map(|_| contrast * rng.gen_range(0.02..0.05))
                    .collect(),
            }
        })
        .collect();
    let spots: Vec<Blotch> = (0..blotches)
        .map(|_| {
            let sigma = rng.gen_range(min_wavelength / 3.0..min_wavelength / 1.5);
            Blotch {
                cx: rng.gen_range(0.0..w as f64),
                cy: rng.gen_range(0.0..h as f64),
                inv_two_var: 1.0 / (2.0 * sigma * sigma),
                amp: (0..ch)
                    .map(|_| contrast * rng.gen_range(-0.25..0.25))
                    .collect(),
            }
        })
        .collect();

    let mut out = vec![0.0; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let at = (y * w + x) * ch;
            for c in 0..ch {
                let mut v = base[c];
                for wave in &waves {
                    v += wave.amp[c] * (wave.kx * xf + wave.ky * yf + wave.phase).sin();
                }
                for b in &spots {
                    let r2 = (xf - b.cx).powi(2) + (yf - b.cy).powi(2);
                    v += b.amp[c] * (-r2 * b.inv_two_var).exp();
                }
                out[at + c] = v.clamp(0.0, 1.0);
            }
        }
    }
    out
}

/// Handy scene constructors used by tests, benchmarks and the CLI.
pub mod presets {
    use super::*;

    pub fn single_layer(
        width: usize,
        height: usize,
        alpha: f64,
        baseline: f64,
        seed: u64,
    ) -> SceneSpec {
        SceneSpec {
            width,
            height,
            channels: 3,
            baseline,
            seed,
            layers: vec![LayerSpec {
                alpha,
                texture: TextureSpec::default(),
                mask: MaskShape::Full,
            }],
        }
    }

    /// Background plus a rectangular occluder spanning 30% to 70% of each
    /// dimension.
    pub fn two_layer(
        width: usize,
        height: usize,
        alphas: (f64, f64),
        baseline: f64,
        seed: u64,
    ) -> SceneSpec {
        let (w, h) = (width as f64, height as f64);
        SceneSpec {
            width,
            height,
            channels: 3,
            baseline,
            seed,
            layers: vec![
                LayerSpec {
                    alpha: alphas.0,
                    texture: TextureSpec::default(),
                    mask: MaskShape::Full,
                },
                LayerSpec {
                    alpha: alphas.1,
                    texture: TextureSpec::default(),
                    mask: MaskShape::Rect {
                        x0: (w * 0.3).round(),
                        y0: (h * 0.3).round(),
                        x1: (w * 0.7).round(),
                        y1: (h * 0.7).round(),
                    },
                },
            ],
        }
    }
}
