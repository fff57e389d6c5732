//! Aperture disparity map algebra and estimation.
//!
//! Under the linear shift model a pixel's displacement grows linearly with
//! the angular interval, so every intermediate map follows from the two
//! boundary maps `A_{1<-0}` and `A_{0<-1}`:
//!
//! ```text
//! A_{k<-0} = (k + 1)/2 * A_{1<-0} + (1 - k)/2 * A_{0<-1}
//! A_{k<-1} = k/2 * A_{1<-0} + (1 - k/2) * A_{0<-1}
//! ```
//!
//! With exactly antisymmetric inputs (`A_{0<-1} = -A_{1<-0}`) these reduce
//! to `k * A_{1<-0}` and `(k - 1) * A_{1<-0}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightfield::{AngularAxis, ViewImage};
use crate::metrics::{linear_fit, LinearFit};
use crate::scene::Scene;
use crate::warp::DisparityMap;

/// Side length of the SAD matching window.
pub const SAD_WINDOW: usize = 7;

/// Intermediate maps `(A_{k<-0}, A_{k<-1})` from the boundary maps.
pub fn intermediate_adm_from_source(
    k: f64,
    a_10: &DisparityMap,
    a_01: &DisparityMap,
) -> Result<(DisparityMap, DisparityMap)> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "k must lie in [0, 1], got {k}"
        )));
    }
    let a_k0 = a_10.combine((k + 1.0) / 2.0, a_01, (1.0 - k) / 2.0)?;
    let a_k1 = a_10.combine(k / 2.0, a_01, 1.0 - k / 2.0)?;
    Ok((a_k0, a_k1))
}

/// Windowed SAD search along `axis` with parabolic sub-pixel refinement.
///
/// Returns `(A_{1<-0}, A_{0<-1})` in the backward-warp convention:
/// `l1(x) ~ l0(x + A_{1<-0}(x))`. The two directions are estimated
/// independently.
pub fn estimate_boundary_adm_along(
    l0: &ViewImage,
    l1: &ViewImage,
    max_disp: usize,
    axis: AngularAxis,
) -> Result<(DisparityMap, DisparityMap)> {
    l0.ensure_same_shape(l1, "estimate_boundary_adm")?;
    let extent = match axis {
        AngularAxis::U => l0.width(),
        AngularAxis::V => l0.height(),
    };
    if max_disp == 0 {
        return Err(Error::InvalidArgument("max_disp must be at least 1".into()));
    }
    if max_disp >= extent {
        return Err(Error::InvalidArgument(format!(
            "max_disp {max_disp} must be smaller than the image extent {extent} along the search axis"
        )));
    }
    let a_10 = sad_search(l1, l0, max_disp as i64, axis);
    let a_01 = sad_search(l0, l1, max_disp as i64, axis);
    Ok((a_10, a_01))
}

/// Horizontal-pair form of [`estimate_boundary_adm_along`].
pub fn estimate_boundary_adm(
    left: &ViewImage,
    right: &ViewImage,
    max_disp: usize,
) -> Result<(DisparityMap, DisparityMap)> {
    estimate_boundary_adm_along(left, right, max_disp, AngularAxis::U)
}

/// For each pixel of `target`, finds `d` minimizing
/// `sum_window |target(x) - source(x + d e)|`.
fn sad_search(
    target: &ViewImage,
    source: &ViewImage,
    max_disp: i64,
    axis: AngularAxis,
) -> DisparityMap {
    let (w, h, ch) = (target.width(), target.height(), target.channels());
    let candidates: Vec<i64> = (-max_disp..=max_disp).collect();
    let costs: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|&d| {
            let (ox, oy) = match axis {
                AngularAxis::U => (d, 0),
                AngularAxis::V => (0, d),
            };
            let mut diff = vec![0.0; w * h];
            for y in 0..h {
                let sy = (y as i64 + oy).clamp(0, h as i64 - 1) as usize;
                for x in 0..w {
                    let sx = (x as i64 + ox).clamp(0, w as i64 - 1) as usize;
                    let t = target.pixel(x, y);
                    let s = source.pixel(sx, sy);
                    diff[y * w + x] = (0..ch).map(|c| (t[c] - s[c]).abs()).sum();
                }
            }
            box_sum(&diff, w, h, SAD_WINDOW / 2)
        })
        .collect();

    // zero first, then increasing |d|, so ties keep the smallest shift
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&n| (candidates[n].abs(), candidates[n]));

    let mut disp = vec![0.0; w * h];
    for (p, out) in disp.iter_mut().enumerate() {
        let mut best = order[0];
        for &n in &order[1..] {
            if costs[n][p] < costs[best][p] {
                best = n;
            }
        }
        let mut d = candidates[best] as f64;
        if best > 0 && best + 1 < candidates.len() {
            let (cm, c0, cp) = (costs[best - 1][p], costs[best][p], costs[best + 1][p]);
            let denom = cm - 2.0 * c0 + cp;
            // an exact match needs no subpixel correction
            if denom > 0.0 && c0 > 0.0 {
                d += (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5);
            }
        }
        *out = d;
    }
    let zeros = vec![0.0; w * h];
    let (dx, dy) = match axis {
        AngularAxis::U => (disp, zeros),
        AngularAxis::V => (zeros, disp),
    };
    DisparityMap::new(w, h, dx, dy).expect("finite search output")
}

/// Box sum over a `(2r+1)^2` window with replicated borders.
fn box_sum(src: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let r = r as i64;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = 0.0;
            for o in -r..=r {
                s += row[(x as i64 + o).clamp(0, w as i64 - 1) as usize];
            }
            tmp[y * w + x] = s;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for o in -r..=r {
                s += tmp[(y as i64 + o).clamp(0, h as i64 - 1) as usize * w + x];
            }
            out[y * w + x] = s;
        }
    }
    out
}

/// Line fit of one tracked point's shift magnitude against interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLinearity {
    pub x: usize,
    pub y: usize,
    pub shifts: Vec<f64>,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub intervals: Vec<f64>,
    pub points: Vec<PointLinearity>,
    pub mean_r2: f64,
    pub mean_adjusted_r2: f64,
    pub mean_pcc: f64,
}

/// Fits shift magnitude against aperture interval at each tracked point.
///
/// `adm_sequence[n]` is the map for `intervals[n]`.
pub fn check_linearity(
    adm_sequence: &[DisparityMap],
    intervals: &[f64],
    points: &[(usize, usize)],
) -> Result<LinearityReport> {
    if adm_sequence.len() != intervals.len() {
        return Err(Error::mismatch(format!(
            "{} maps for {} intervals",
            adm_sequence.len(),
            intervals.len()
        )));
    }
    if intervals.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "linearity check needs at least 3 intervals, got {}",
            intervals.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to track".into()));
    }
    let first = &adm_sequence[0];
    for m in adm_sequence {
        m.ensure_same_size(first.width(), first.height(), "ADM sequence")?;
    }
    let mut per_point = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if x >= first.width() || y >= first.height() {
            return Err(Error::IndexOutOfRange {
                axis: if x >= first.width() {
                    "point x"
                } else {
                    "point y"
                },
                index: if x >= first.width() { x } else { y },
                extent: if x >= first.width() {
                    first.width()
                } else {
                    first.height()
                },
            });
        }
        let shifts: Vec<f64> = adm_sequence.iter().map(|m| m.magnitude(x, y)).collect();
        let fit = linear_fit(intervals, &shifts)?;
        per_point.push(PointLinearity { x, y, shifts, fit });
    }
    let n = per_point.len() as f64;
    let mean = |f: fn(&LinearFit) -> f64| per_point.iter().map(|p| f(&p.fit)).sum::<f64>() / n;
    Ok(LinearityReport {
        intervals: intervals.to_vec(),
        mean_r2: mean(|f| f.r2),
        mean_adjusted_r2: mean(|f| f.adjusted_r2),
        mean_pcc: mean(|f| f.pcc),
        points: per_point,
    })
}

/// Shi-Tomasi corner response (smallest structure-tensor eigenvalue) on luma,
/// top `count` points with greedy non-maximum suppression.
pub fn select_feature_points(
    view: &ViewImage,
    count: usize,
    min_distance: usize,
    border: usize,
) -> Vec<(usize, usize)> {
    let (w, h) = (view.width(), view.height());
    let luma = view.luma();
    let at = |x: usize, y: usize| luma[y * w + x];
    let mut gxx = vec![0.0; w * h];
    let mut gyy = vec![0.0; w * h];
    let mut gxy = vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            gxx[y * w + x] = gx * gx;
            gyy[y * w + x] = gy * gy;
            gxy[y * w + x] = gx * gy;
        }
    }
    let sxx = box_sum(&gxx, w, h, 2);
    let syy = box_sum(&gyy, w, h, 2);
    let sxy = box_sum(&gxy, w, h, 2);
    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for y in border..h.saturating_sub(border) {
        for x in border..w.saturating_sub(border) {
            let p = y * w + x;
            let tr = sxx[p] + syy[p];
            let det_term = ((sxx[p] - syy[p]).powi(2) + 4.0 * sxy[p] * sxy[p]).sqrt();
            scored.push((0.5 * (tr - det_term), x, y));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.2, a.1).cmp(&(b.2, b.1))));
    let mut picked: Vec<(usize, usize)> = Vec::with_capacity(count);
    let min_d2 = (min_distance * min_distance) as i64;
    for (_, x, y) in scored {
        if picked.len() == count {
            break;
        }
        let far = picked.iter().all(|&(px, py)| {
            let (dx, dy) = (px as i64 - x as i64, py as i64 - y as i64);
            dx * dx + dy * dy >= min_d2
        });
        if far {
            picked.push((x, y));
        }
    }
    picked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Ground-truth geometry from the scene description.
    Oracle,
    /// Windowed SAD search.
    Classical,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Estimator::Oracle),
            "classical" => Ok(Estimator::Classical),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator '{other}' (expected oracle or classical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityConfig {
    /// Number of aperture intervals; views are rendered at `u = n / intervals`.
    pub intervals: usize,
    pub points: usize,
    pub estimator: Estimator,
    /// Search range for the classical estimator.
    pub max_disp: usize,
    pub min_distance: usize,
}

/// Renders a horizontal sweep at `v = 0.5`, estimates `A_{0<-n}` between the
/// first view and each later one, and fits shift against interval at corner
/// points of the first view. Intervals are in grid steps.
pub fn run_linearity_experiment(scene: &Scene, config: LinearityConfig) -> Result<LinearityReport> {
    if config.intervals < 3 {
        return Err(Error::InvalidArgument(format!(
            "linearity experiment needs at least 3 intervals, got {}",
            config.intervals
        )));
    }
    let n = config.intervals;
    let coord = |i: usize| (i as f64 / n as f64, 0.5);
    let base = scene.render_view(0.0, 0.5)?;
    let border = SAD_WINDOW / 2 + config.max_disp.max(1) + 1;
    let points = select_feature_points(&base, config.points, config.min_distance, border);
    if points.len() < config.points {
        return Err(Error::InvalidArgument(format!(
            "only {} feature points available, {} requested",
            points.len(),
            config.points
        )));
    }
    let maps = (1..=n)
        .into_par_iter()
        .map(|i| match config.estimator {
            Estimator::Oracle => scene.oracle_adm(coord(0), coord(i)),
            Estimator::Classical => {
                let other = scene.render_view(coord(i).0, coord(i).1)?;
                let (_, a_0i) =
                    estimate_boundary_adm_along(&base, &other, config.max_disp, AngularAxis::U)?;
                Ok(a_0i)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let intervals: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    check_linearity(&maps, &intervals, &points)
}
