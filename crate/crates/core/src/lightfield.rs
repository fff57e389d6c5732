//! Light field containers and slicing.
//!
//! A [`LightField`] stores one [`ViewImage`] (sub-aperture image) per cell of a
//! regular [`AngularGrid`]. Grid index `(i, j)` addresses angular row `i`
//! (the `v` axis) and column `j` (the `u` axis). Normalized angular
//! coordinates pin the first and last grid positions at 0 and 1, so an
//! interior view at column `j` sits at interpolation factor `j / (cols - 1)`.

use crate::error::{Error, Result};

/// Regular angular sampling grid: `rows` samples along `v`, `cols` along `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularGrid {
    rows: usize,
    cols: usize,
}

impl AngularGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "angular grid must be at least 1x1, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Normalized `u` of grid column `j`; degenerate axes map to 0.
    pub fn u(&self, j: usize) -> f64 {
        normalized(j, self.cols)
    }

    /// Normalized `v` of grid row `i`; degenerate axes map to 0.
    pub fn v(&self, i: usize) -> f64 {
        normalized(i, self.rows)
    }

    /// `(u, v)` of grid cell `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.u(j), self.v(i))
    }

    pub fn index(&self, i: usize, j: usize) -> Result<usize> {
        check_index("angular row", i, self.rows)?;
        check_index("angular column", j, self.cols)?;
        Ok(i * self.cols + j)
    }

    /// Iterates `(i, j)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| (i, j)))
    }

    pub fn is_corner(&self, i: usize, j: usize) -> bool {
        (i == 0 || i + 1 == self.rows) && (j == 0 || j + 1 == self.cols)
    }
}

impl std::str::FromStr for AngularGrid {
    type Err = Error;

    /// Parses `RxC`, e.g. `8x8`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected grid as RxC, got '{s}'"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        AngularGrid::new(rows, cols)
    }
}

impl std::fmt::Display for AngularGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

fn normalized(index: usize, count: usize) -> f64 {
    if count > 1 {
        index as f64 / (count - 1) as f64
    } else {
        0.0
    }
}

pub(crate) fn check_index(axis: &'static str, index: usize, extent: usize) -> Result<()> {
    if index >= extent {
        return Err(Error::IndexOutOfRange {
            axis,
            index,
            extent,
        });
    }
    Ok(())
}

/// A single sub-aperture image with normalized radiance in `[0, 1]`.
///
/// Samples are row-major and channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ViewImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "views must have 1 or 3 channels, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("views must be non-empty".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::mismatch(format!(
                "{}x{}x{} view needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!(
                "radiance {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Builds a view from `f(x, y, c)`; values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(clamp_unit(f(x, y, c)));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Internal constructor for kernels whose outputs are convex
    /// combinations of validated inputs.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn same_shape(&self, other: &ViewImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn ensure_same_shape(&self, other: &ViewImage, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::mismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Luma (Rec. 601 weights) for color views, the samples themselves for
    /// grayscale.
    pub fn luma(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// One of the two angular axes of the camera plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngularAxis {
    U,
    V,
}

impl AngularAxis {
    /// The two boundary viewpoints (at 0 and 1 along this axis) that bracket
    /// `target`, holding the other coordinate fixed.
    pub fn boundaries(self, target: (f64, f64)) -> ((f64, f64), (f64, f64)) {
        match self {
            AngularAxis::U => ((0.0, target.1), (1.0, target.1)),
            AngularAxis::V => ((target.0, 0.0), (target.0, 1.0)),
        }
    }

    /// Position of `coords` along this axis.
    pub fn factor(self, coords: (f64, f64)) -> f64 {
        match self {
            AngularAxis::U => coords.0,
            AngularAxis::V => coords.1,
        }
    }
}

/// Orientation of an epipolar plane image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpiAxis {
    /// Fixed spatial row `y` and angular row `i`; varies `x` and `u`.
    Horizontal,
    /// Fixed spatial column `x` and angular column `j`; varies `y` and `v`.
    Vertical,
}

/// A 2D slice of the light field. Row `a` is the angular sample, column `s`
/// the spatial sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EpiImage {
    pub axis: EpiAxis,
    pub angular: usize,
    pub spatial: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl EpiImage {
    pub fn get(&self, a: usize, s: usize, c: usize) -> f64 {
        self.data[(a * self.spatial + s) * self.channels + c]
    }

    /// Views this slice as an image with the angular axis vertical.
    pub fn to_view(&self) -> ViewImage {
        ViewImage::from_raw(self.spatial, self.angular, self.channels, self.data.clone())
    }
}

/// Corner sub-aperture images of a light field with their `(u, v)`.
#[derive(Debug, Clone)]
pub struct CornerViews {
    /// Order: `(0,0)`, `(0,cols-1)`, `(rows-1,0)`, `(rows-1,cols-1)`.
    pub views: [ViewImage; 4],
    pub coords: [(f64, f64); 4],
}

/// A 4D light field `L(x, u)` sampled on a regular angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    grid: AngularGrid,
    views: Vec<ViewImage>,
}

impl LightField {
    pub fn new(grid: AngularGrid, views: Vec<ViewImage>) -> Result<Self> {
        if views.len() != grid.len() {
            return Err(Error::mismatch(format!(
                "grid {grid} needs {} views, got {}",
                grid.len(),
                views.len()
            )));
        }
        let first = &views[0];
        for (n, v) in views.iter().enumerate() {
            first.ensure_same_shape(v, &format!("view {n} differs from view 0"))?;
        }
        Ok(Self { grid, views })
    }

    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.views[0].width()
    }

    pub fn height(&self) -> usize {
        self.views[0].height()
    }

    pub fn channels(&self) -> usize {
        self.views[0].channels()
    }

    pub fn views(&self) -> &[ViewImage] {
        &self.views
    }

    pub fn into_views(self) -> Vec<ViewImage> {
        self.views
    }

    pub fn view_at(&self, i: usize, j: usize) -> Result<&ViewImage> {
        Ok(&self.views[self.grid.index(i, j)?])
    }

    /// Replaces the view at `(i, j)`; the new view must match the others.
    pub fn set_view(&mut self, i: usize, j: usize, view: ViewImage) -> Result<()> {
        let idx = self.grid.index(i, j)?;
        self.views[idx].ensure_same_shape(&view, "replacement view")?;
        self.views[idx] = view;
        Ok(())
    }

    pub fn corner_views(&self) -> Result<CornerViews> {
        let (r, c) = (self.grid.rows(), self.grid.cols());
        if r < 2 || c < 2 {
            return Err(Error::InvalidArgument(format!(
                "corner views need at least a 2x2 grid, got {}",
                self.grid
            )));
        }
        let at = |i: usize, j: usize| self.views[i * c + j].clone();
        Ok(CornerViews {
            views: [at(0, 0), at(0, c - 1), at(r - 1, 0), at(r - 1, c - 1)],
            coords: [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
        })
    }

    /// The 2x2 light field made of this field's corner views.
    pub fn corners(&self) -> Result<LightField> {
        let c = self.corner_views()?;
        LightField::new(AngularGrid::new(2, 2)?, c.views.to_vec())
    }

    /// Extracts an EPI. For [`EpiAxis::Horizontal`], `fixed_spatial` is the
    /// image row `y` and `fixed_angular` the grid row `i`; for
    /// [`EpiAxis::Vertical`] they are the image column `x` and grid column `j`.
    pub fn extract_epi(
        &self,
        axis: EpiAxis,
        fixed_spatial: usize,
        fixed_angular: usize,
    ) -> Result<EpiImage> {
        let ch = self.channels();
        match axis {
            EpiAxis::Horizontal => {
                check_index("spatial row", fixed_spatial, self.height())?;
                check_index("angular row", fixed_angular, self.grid.rows())?;
                let (angular, spatial) = (self.grid.cols(), self.width());
                let mut data = Vec::with_capacity(angular * spatial * ch);
                for a in 0..angular {
                    let view = &self.views[fixed_angular * self.grid.cols() + a];
                    let start = fixed_spatial * spatial * ch;
                    data.extend_from_slice(&view.data()[start..start + spatial * ch]);
                }
                Ok(EpiImage {
                    axis,
                    angular,
                    spatial,
                    channels: ch,
                    data,
                })
            }
            EpiAxis::Vertical => {
                check_index("spatial column", fixed_spatial, self.width())?;
                check_index("angular column", fixed_angular, self.grid.cols())?;
                let (angular, spatial) = (self.grid.rows(), self.height());
                let mut data = Vec::with_capacity(angular * spatial * ch);
                for a in 0..angular {
                    let view = &self.views[a * self.grid.cols() + fixed_angular];
                    for y in 0..spatial {
                        data.extend_from_slice(view.pixel(fixed_spatial, y));
                    }
                }
                Ok(EpiImage {
                    axis,
                    angular,
                    spatial,
                    channels: ch,
                    data,
                })
            }
        }
    }

    /// Reassembles a light field from the full set of horizontal EPIs, indexed
    /// `epis[i * height + y]`.
    pub fn from_horizontal_epis(
        grid: AngularGrid,
        height: usize,
        epis: &[EpiImage],
    ) -> Result<LightField> {
        if epis.len() != grid.rows() * height {
            return Err(Error::mismatch(format!(
                "need {} horizontal EPIs, got {}",
                grid.rows() * height,
                epis.len()
            )));
        }
        let first = &epis[0];
        let (width, ch) = (first.spatial, first.channels);
        if epis.iter().any(|e| {
            e.axis != EpiAxis::Horizontal
                || e.angular != grid.cols()
                || e.spatial != width
                || e.channels != ch
        }) {
            return Err(Error::mismatch("inconsistent EPI set".to_string()));
        }
        let mut views = Vec::with_capacity(grid.len());
        for i in 0..grid.rows() {
            for j in 0..grid.cols() {
                let mut data = Vec::with_capacity(width * height * ch);
                for y in 0..height {
                    let e = &epis[i * height + y];
                    let start = j * width * ch;
                    data.extend_from_slice(&e.data[start..start + width * ch]);
                }
                views.push(ViewImage::new(width, height, ch, data)?);
            }
        }
        LightField::new(grid, views)
    }
}
