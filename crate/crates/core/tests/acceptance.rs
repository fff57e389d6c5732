//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; exits non-zero if any
//! criterion fails.

use std::time::{Duration, Instant};

use lfsynth::adm::{run_linearity_experiment, LinearityConfig};
use lfsynth::io::{
    decode_pfm, encode_pfm, load_lightfield, read_pfm, save_lightfield, write_pfm, FloatMap,
    Source, METADATA_FILE,
};
use lfsynth::metrics::{
    combined_loss_report, linear_fit, loss_reconstruction, loss_smoothness, loss_warping, psnr,
    ssim, LossWeights, SSIM_C1, SSIM_C2,
};
use lfsynth::scene::{presets, LayerSpec, MaskShape, TextureSpec};
use lfsynth::synth::{separable_conv4d, Kernel3};
use lfsynth::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn budget(name: &str, elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(elapsed < limit, || {
        format!("{name} took {elapsed:.2?}, budget {limit:.2?}")
    })
}

fn e(err: lfsynth::Error) -> String {
    err.to_string()
}

// ---------------------------------------------------------------------------
// scenes

const SIZE: usize = 128;
const BASELINE: f64 = 8.0;

fn single_layer() -> Scene {
    Scene::new(presets::single_layer(SIZE, SIZE, 2.0, BASELINE, 7)).unwrap()
}

fn two_layer() -> Scene {
    Scene::new(presets::two_layer(SIZE, SIZE, (2.0, 8.0), BASELINE, 7)).unwrap()
}

fn three_layer() -> Scene {
    let mut spec = presets::two_layer(96, 80, (1.5, 4.0), BASELINE, 21);
    spec.layers.push(LayerSpec {
        alpha: 20.0,
        texture: TextureSpec::Noise {
            seed: Some(99),
            min_wavelength: 12.0,
            blotches: 3,
            contrast: 1.0,
        },
        mask: MaskShape::Disc {
            cx: 30.0,
            cy: 52.0,
            radius: 14.0,
        },
    });
    Scene::new(spec).unwrap()
}

fn test_scenes() -> Vec<(&'static str, Scene)> {
    vec![
        ("single", single_layer()),
        ("two-layer", two_layer()),
        ("three-layer", three_layer()),
    ]
}

fn random_view(rng: &mut ChaCha8Rng, w: usize, h: usize, ch: usize) -> ViewImage {
    let data = (0..w * h * ch).map(|_| rng.gen::<f64>()).collect();
    ViewImage::new(w, h, ch, data).unwrap()
}

// ---------------------------------------------------------------------------
// 1. warp oracle equivalence

fn index_shift_oracle(img: &ViewImage, dx: &[i64], dy: &[i64], border: BorderMode) -> Vec<f64> {
    let (w, h, ch) = (img.width() as i64, img.height() as i64, img.channels());
    let mut out = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let p = (y * w + x) as usize;
            let (sx, sy) = (x + dx[p], y + dy[p]);
            let inside = (0..w).contains(&sx) && (0..h).contains(&sy);
            for c in 0..ch {
                out.push(match border {
                    BorderMode::Clamp => {
                        img.get(sx.clamp(0, w - 1) as usize, sy.clamp(0, h - 1) as usize, c)
                    }
                    BorderMode::Zero if inside => img.get(sx as usize, sy as usize, c),
                    BorderMode::Zero => 0.0,
                });
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..100 {
        let ch = if trial % 2 == 0 { 3 } else { 1 };
        let img = random_view(&mut rng, 8, 8, ch);
        let dx: Vec<i64> = (0..64).map(|_| rng.gen_range(-10..=10)).collect();
        let dy: Vec<i64> = (0..64).map(|_| rng.gen_range(-10..=10)).collect();
        let map = DisparityMap::new(
            8,
            8,
            dx.iter().map(|&v| v as f64).collect(),
            dy.iter().map(|&v| v as f64).collect(),
        )
        .map_err(e)?;
        for border in [BorderMode::Clamp, BorderMode::Zero] {
            let got = warp(&img, &map, border).map_err(e)?;
            let want = index_shift_oracle(&img, &dx, &dy, border);
            ensure(got.data() == want.as_slice(), || {
                format!("trial {trial} ({border:?}) differs from the index-shift oracle")
            })?;
        }
        let id = warp(&img, &DisparityMap::zeros(8, 8), BorderMode::Clamp).map_err(e)?;
        ensure(id == img, || {
            format!("trial {trial}: zero warp is not the identity")
        })?;
    }
    budget("criterion 1", start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "100 random 8x8 images, both borders, {:.0?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// 2. ADM algebra

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (w, h) = (16, 12);
    let mut worst = 0.0f64;
    let max_err = |a: &DisparityMap, b: &DisparityMap| {
        a.dx()
            .iter()
            .zip(b.dx())
            .chain(a.dy().iter().zip(b.dy()))
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    for _ in 0..50 {
        let a10 = DisparityMap::from_fn(w, h, |_, _| {
            (rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0))
        })
        .map_err(e)?;
        let a01 = a10.neg();
        // A(x, 0) = 0
        let (a00, _) = intermediate_adm_from_source(0.0, &a10, &a01).map_err(e)?;
        worst = worst.max(max_err(&a00, &DisparityMap::zeros(w, h)));
        // boundary cases reproduce the inputs
        let (a10_again, a11) = intermediate_adm_from_source(1.0, &a10, &a01).map_err(e)?;
        worst = worst.max(max_err(&a10_again, &a10));
        worst = worst.max(max_err(&a11, &DisparityMap::zeros(w, h)));
        for step in 0..=20 {
            let k = step as f64 / 20.0;
            let (ak0, ak1) = intermediate_adm_from_source(k, &a10, &a01).map_err(e)?;
            // blend formulas written out pixelwise
            for p in 0..w * h {
                for (comp_k0, comp_k1, c10, c01) in [
                    (ak0.dx()[p], ak1.dx()[p], a10.dx()[p], a01.dx()[p]),
                    (ak0.dy()[p], ak1.dy()[p], a10.dy()[p], a01.dy()[p]),
                ] {
                    let want_k0 = (k + 1.0) / 2.0 * c10 + (1.0 - k) / 2.0 * c01;
                    let want_k1 = k / 2.0 * c10 + (1.0 - k / 2.0) * c01;
                    worst = worst.max((comp_k0 - want_k0).abs());
                    worst = worst.max((comp_k1 - want_k1).abs());
                }
            }
            // linear model: A_{k<-0} = k A_{1<-0}, A_{1<-k} = (1 - k) A_{1<-0}
            let a1k = a10.scale(1.0 - k);
            worst = worst.max(max_err(&ak0, &a10.scale(k)));
            // antisymmetry: A_{k<-1} = -A_{1<-k}
            worst = worst.max(max_err(&ak1, &a1k.neg()));
            // composition: A_{1<-k} + A_{k<-0} = A_{1<-0}
            let composed = a1k.combine(1.0, &ak0, 1.0).map_err(e)?;
            worst = worst.max(max_err(&composed, &a10));
        }
    }
    ensure(worst <= 1e-12, || {
        format!("max deviation {worst:e} > 1e-12")
    })?;
    budget("criterion 2", start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "max deviation {worst:.1e}, {:.0?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// 3. WCM sum constraint

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let params = WcmParams::default();
    for (_, scene) in test_scenes() {
        for axis in [AngularAxis::U, AngularAxis::V] {
            let (b0, b1) = axis.boundaries((0.5, 0.5));
            let l0 = scene.render_view(b0.0, b0.1).map_err(e)?;
            let l1 = scene.render_view(b1.0, b1.1).map_err(e)?;
            let (a10, a01) = estimate_boundary_adm_along(&l0, &l1, 8, axis).map_err(e)?;
            for step in 1..8 {
                let k = step as f64 / 8.0;
                let target = match axis {
                    AngularAxis::U => (k, 0.5),
                    AngularAxis::V => (0.5, k),
                };
                let (o0, o1) = scene.oracle_wcm(target, axis).map_err(e)?;
                let (ak0, ak1) = intermediate_adm_from_source(k, &a10, &a01).map_err(e)?;
                let (p0, p1) =
                    estimate_wcm_photometric(&l0, &l1, &ak0, &ak1, &a10, &a01, k, params)
                        .map_err(e)?;
                for (m0, m1) in [(&o0, &o1), (&p0, &p1)] {
                    for (a, b) in m0.data().iter().zip(m1.data()) {
                        worst = worst.max((a + b - 1.0).abs());
                    }
                    checked += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max |O0 + O1 - 1| = {worst:e}"))?;
    Ok(format!(
        "{checked} map pairs over 3 scenes, max |O0+O1-1| = {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 4. uniform confidences reduce to free-space inference

fn criterion_4() -> Outcome {
    let mut pixels = 0usize;
    for (name, scene) in test_scenes() {
        let (w, h) = (scene.width(), scene.height());
        let half = ConfidenceMap::uniform(w, h, 0.5).map_err(e)?;
        let l0 = scene.render_view(0.0, 0.0).map_err(e)?;
        let l1 = scene.render_view(1.0, 0.0).map_err(e)?;
        let (a10, a01) = estimate_boundary_adm(&l0, &l1, 8).map_err(e)?;
        for step in 0..=16 {
            let k = step as f64 / 16.0;
            let oracle = (
                scene.oracle_adm((k, 0.0), (0.0, 0.0)).map_err(e)?,
                scene.oracle_adm((k, 0.0), (1.0, 0.0)).map_err(e)?,
            );
            let classical = intermediate_adm_from_source(k, &a10, &a01).map_err(e)?;
            for (ak0, ak1) in [&oracle, &classical] {
                let free = infer_free_space(&l0, &l1, ak0, ak1, k).map_err(e)?;
                let (aware, _) =
                    infer_occlusion_aware(&l0, &l1, ak0, ak1, &half, &half, k).map_err(e)?;
                let same = free
                    .data()
                    .iter()
                    .zip(aware.data())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                ensure(same, || format!("{name}, k = {k}: outputs differ"))?;
                pixels += free.data().len();
            }
        }
    }
    Ok(format!("bit-identical over {pixels} samples"))
}

// ---------------------------------------------------------------------------
// 5. linearity experiment

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let scene = Scene::new(presets::two_layer(SIZE, SIZE, (2.0, 8.0), 12.0, 7)).unwrap();
    let config = LinearityConfig {
        intervals: 6,
        points: 9,
        estimator: Estimator::Classical,
        max_disp: 14,
        min_distance: 8,
    };
    let classical = run_linearity_experiment(&scene, config).map_err(e)?;
    let oracle = run_linearity_experiment(
        &scene,
        LinearityConfig {
            estimator: Estimator::Oracle,
            ..config
        },
    )
    .map_err(e)?;
    let elapsed = start.elapsed();
    let (r2, ar2, pcc) = (
        classical.mean_r2,
        classical.mean_adjusted_r2,
        classical.mean_pcc,
    );
    ensure(r2 >= 0.99 && ar2 >= 0.99 && pcc >= 0.99, || {
        format!("classical averages R2 {r2:.4}, adj {ar2:.4}, PCC {pcc:.4}")
    })?;
    for (label, v) in [
        ("R2", oracle.mean_r2),
        ("adjusted R2", oracle.mean_adjusted_r2),
        ("PCC", oracle.mean_pcc),
    ] {
        ensure((v - 1.0).abs() <= 1e-9, || format!("oracle {label} = {v}"))?;
    }
    budget("criterion 5", elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "classical R2 {r2:.4} / adj {ar2:.4} / PCC {pcc:.4}; oracle 1.0; {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------------------
// 6. WCM ablation

/// Pixels of `target` hidden in any corner or in either boundary view of
/// the pass that produced it.
fn reconstruction_occlusion(scene: &Scene, target: (f64, f64), first_row: bool) -> Vec<bool> {
    let mut sources = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
    if !first_row {
        sources.push((target.0, 0.0));
        sources.push((target.0, 1.0));
    }
    let mut mask = vec![false; scene.width() * scene.height()];
    for s in sources {
        let m = scene.occlusion_mask(target, s).unwrap();
        for (dst, src) in mask.iter_mut().zip(&m.data) {
            *dst |= *src;
        }
    }
    mask
}

fn pixel_errors(pred: &ViewImage, gt: &ViewImage) -> Vec<f64> {
    let ch = pred.channels();
    pred.data()
        .chunks(ch)
        .zip(gt.data().chunks(ch))
        .map(|(p, g)| p.iter().zip(g).map(|(a, b)| (a - b).abs()).sum::<f64>() / ch as f64)
        .collect()
}

fn criterion_6() -> Outcome {
    let scene = two_layer();
    let grid = AngularGrid::new(8, 8).unwrap();
    let gt = scene.render_lightfield(grid).map_err(e)?;
    let corners = gt.corners().map_err(e)?;
    let run = |use_wcm| {
        let config = ReconstructConfig {
            estimator: Estimator::Oracle,
            use_wcm,
            ..Default::default()
        };
        reconstruct_dense(&corners, grid, Some(&scene), config).map(|(lf, _)| lf)
    };
    let free = run(false).map_err(e)?;
    let aware = run(true).map_err(e)?;
    let (mut p_free, mut p_aware, mut n) = (0.0, 0.0, 0.0);
    let (mut gain_on_mask, mut gain_total) = (0.0, 0.0);
    for (i, j) in grid.cells() {
        if grid.is_corner(i, j) {
            continue;
        }
        let truth = gt.view_at(i, j).map_err(e)?;
        let (f, a) = (
            free.view_at(i, j).map_err(e)?,
            aware.view_at(i, j).map_err(e)?,
        );
        p_free += psnr(f, truth).map_err(e)?.min(100.0);
        p_aware += psnr(a, truth).map_err(e)?.min(100.0);
        n += 1.0;
        let mask = reconstruction_occlusion(&scene, grid.coords(i, j), i == 0 || i == 7);
        for ((ef, ea), m) in pixel_errors(f, truth)
            .iter()
            .zip(pixel_errors(a, truth))
            .zip(mask)
        {
            let gain = (ef - ea).max(0.0);
            gain_total += gain;
            if m {
                gain_on_mask += gain;
            }
        }
    }
    let (p_free, p_aware) = (p_free / n, p_aware / n);
    let share = if gain_total > 0.0 {
        gain_on_mask / gain_total
    } else {
        0.0
    };
    ensure(p_aware - p_free >= 1.0, || {
        format!("occlusion-aware {p_aware:.2} dB vs free-space {p_free:.2} dB")
    })?;
    ensure(share >= 0.8, || {
        format!(
            "only {:.1}% of the error reduction lies on the occlusion mask",
            share * 100.0
        )
    })?;
    Ok(format!(
        "free-space {p_free:.2} dB -> occlusion-aware {p_aware:.2} dB (+{:.2}); {:.1}% of reduction on mask",
        p_aware - p_free,
        share * 100.0
    ))
}

// ---------------------------------------------------------------------------
// 7. free-space fidelity

fn criterion_7() -> Outcome {
    let scene = single_layer();
    let grid = AngularGrid::new(8, 8).unwrap();
    let gt = scene.render_lightfield(grid).map_err(e)?;
    let corners = gt.corners().map_err(e)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|err| err.to_string())?;
    let config = ReconstructConfig {
        estimator: Estimator::Oracle,
        ..Default::default()
    };
    let start = Instant::now();
    let (rec, _) = pool
        .install(|| reconstruct_dense(&corners, grid, Some(&scene), config))
        .map_err(e)?;
    let elapsed = start.elapsed();
    let (mut p, mut s, mut n) = (0.0, 0.0, 0.0);
    for (i, j) in grid.cells() {
        if grid.is_corner(i, j) {
            continue;
        }
        let (pred, truth) = (rec.view_at(i, j).map_err(e)?, gt.view_at(i, j).map_err(e)?);
        p += psnr(pred, truth).map_err(e)?.min(100.0);
        s += ssim(pred, truth).map_err(e)?;
        n += 1.0;
    }
    let (p, s) = (p / n, s / n);
    ensure(p > 45.0, || format!("mean PSNR {p:.2} dB"))?;
    ensure(s > 0.99, || format!("mean SSIM {s:.5}"))?;
    budget("criterion 7", elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "mean PSNR {p:.2} dB, SSIM {s:.5}, {elapsed:.2?} on one thread"
    ))
}

// ---------------------------------------------------------------------------
// 8. separable 4D filter

fn brute_conv4d(lf: &LightField, spatial: &Kernel3, angular: &Kernel3, scale: f64) -> Vec<f64> {
    let g = lf.grid();
    let (rows, cols) = (g.rows() as i64, g.cols() as i64);
    let (w, h, ch) = (lf.width() as i64, lf.height() as i64, lf.channels());
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            for y in 0..h {
                for x in 0..w {
                    for c in 0..ch {
                        let mut s = 0.0;
                        for di in 0..3 {
                            for dj in 0..3 {
                                for dy in 0..3 {
                                    for dx in 0..3 {
                                        let tap = angular.0[di][dj] * spatial.0[dy][dx];
                                        let ii = (i + di as i64 - 1).clamp(0, rows - 1) as usize;
                                        let jj = (j + dj as i64 - 1).clamp(0, cols - 1) as usize;
                                        let yy = (y + dy as i64 - 1).clamp(0, h - 1) as usize;
                                        let xx = (x + dx as i64 - 1).clamp(0, w - 1) as usize;
                                        s += tap * lf.view_at(ii, jj).unwrap().get(xx, yy, c);
                                    }
                                }
                            }
                        }
                        out.push((scale * s).clamp(0.0, 1.0));
                    }
                }
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = AngularGrid::new(5, 5).unwrap();
    let lf = LightField::new(
        grid,
        (0..25).map(|_| random_view(&mut rng, 16, 16, 3)).collect(),
    )
    .map_err(e)?;
    let mut kernel = || {
        let mut k = [[0.0; 3]; 3];
        for row in &mut k {
            for v in row.iter_mut() {
                *v = rng.gen_range(-0.2..0.6);
            }
        }
        Kernel3(k)
    };
    let (spatial, angular) = (kernel(), kernel());
    let mut worst = 0.0f64;
    for scale in [1.0, 0.3] {
        let fast = separable_conv4d(&lf, &spatial, &angular, scale).map_err(e)?;
        let slow = brute_conv4d(&lf, &spatial, &angular, scale);
        let fast: Vec<f64> = fast
            .views()
            .iter()
            .flat_map(|v| v.data().to_vec())
            .collect();
        worst = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    let id = separable_conv4d(&lf, &Kernel3::delta(), &Kernel3::delta(), 1.0).map_err(e)?;
    ensure(id == lf, || "delta kernels changed the light field".into())?;
    Ok(format!(
        "max deviation from brute force {worst:.1e}; delta identity exact"
    ))
}

// ---------------------------------------------------------------------------
// 9. metrics

/// Direct per-window SSIM with an explicitly built 2D Gaussian window.
fn reference_ssim(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let n = 11usize;
    let sigma = 1.5f64;
    let mut win = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let (dr, dc) = (r as f64 - 5.0, c as f64 - 5.0);
            win[r * n + c] = (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= total);
    let mut acc = 0.0;
    let mut count = 0.0;
    for oy in 0..=h - n {
        for ox in 0..=w - n {
            let (mut mx, mut my) = (0.0, 0.0);
            for r in 0..n {
                for c in 0..n {
                    let p = (oy + r) * w + ox + c;
                    mx += win[r * n + c] * a[p];
                    my += win[r * n + c] * b[p];
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for r in 0..n {
                for c in 0..n {
                    let p = (oy + r) * w + ox + c;
                    let (da, db) = (a[p] - mx, b[p] - my);
                    vx += win[r * n + c] * da * da;
                    vy += win[r * n + c] * db * db;
                    cov += win[r * n + c] * da * db;
                }
            }
            acc += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
            count += 1.0;
        }
    }
    acc / count
}

fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> ViewImage {
    ViewImage::from_fn(w, h, 1, |x, y, _| f(x, y)).unwrap()
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    // SSIM
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = random_view(&mut rng, 24, 20, 3);
    let s = ssim(&noise, &noise).map_err(e)?;
    ensure(s == 1.0, || format!("ssim(a, a) = {s:e}"))?;
    let checker = |shift: usize| {
        gray(32, 32, move |x, y| {
            if ((x + shift) / 2 + y / 2).is_multiple_of(2) {
                0.9
            } else {
                0.1
            }
        })
    };
    let (a, b) = (checker(0), checker(1));
    let got = ssim(&a, &b).map_err(e)?;
    let want = reference_ssim(a.data(), b.data(), 32, 32);
    ensure((got - want).abs() <= 1e-6, || {
        format!("ssim {got} vs reference {want}")
    })?;
    notes.push(format!("checkerboard SSIM {got:.6}"));

    // PSNR closed forms
    let base = gray(4, 4, |_, _| 0.5);
    let off = gray(4, 4, |_, _| 0.6);
    let p = psnr(&base, &off).map_err(e)?;
    ensure((p - 20.0).abs() < 1e-9, || {
        format!("PSNR for MSE 0.01 = {p}")
    })?;
    let inf = psnr(&base, &base).map_err(e)?;
    ensure(inf.is_infinite(), || {
        format!("PSNR of identical images = {inf}")
    })?;

    // losses on 2x2 fixtures
    let pred = gray(2, 2, |x, y| [[0.2, 0.4], [0.6, 0.8]][y][x]);
    let truth = gray(2, 2, |x, y| [[0.1, 0.4], [0.9, 0.8]][y][x]);
    let lr = loss_reconstruction(std::slice::from_ref(&pred), std::slice::from_ref(&truth))
        .map_err(e)?;
    ensure((lr - 0.1).abs() <= 1e-12, || format!("l_r = {lr}"))?;
    let lr0 =
        loss_reconstruction(std::slice::from_ref(&pred), std::slice::from_ref(&pred)).map_err(e)?;
    ensure(lr0 == 0.0, || format!("l_r at fixed point = {lr0}"))?;

    let ramp = DisparityMap::new(2, 2, vec![0.0, 1.0, 3.0, 7.0], vec![0.0; 4]).map_err(e)?;
    let zero = DisparityMap::zeros(2, 2);
    // x: (|1-0| + |7-3|)/2 = 2.5; y: (|3-0| + |7-1|)/2 = 4.5
    let ls = loss_smoothness(&ramp, &zero).map_err(e)?;
    ensure((ls - 7.0).abs() <= 1e-12, || format!("l_s = {ls}"))?;
    let flat = DisparityMap::uniform(2, 2, 1.5, -2.0);
    let ls0 = loss_smoothness(&flat, &flat).map_err(e)?;
    ensure(ls0 == 0.0, || format!("l_s at fixed point = {ls0}"))?;

    // both cross terms are MAE(pred, truth) = 0.1 under zero maps
    let lw = loss_warping(&pred, &truth, &zero, &zero, &[]).map_err(e)?;
    ensure((lw - 0.2).abs() <= 1e-12, || format!("l_w = {lw}"))?;
    let lw0 = loss_warping(&pred, &pred, &zero, &zero, &[]).map_err(e)?;
    ensure(lw0 == 0.0, || format!("l_w at fixed point = {lw0}"))?;

    let report = combined_loss_report(lr, lw, ls, LossWeights::default());
    let want = 200.0 * 0.1 + 100.0 * 0.2 + 7.0;
    ensure((report.l_total - want).abs() <= 1e-12, || {
        format!("weighted total {} vs {want}", report.l_total)
    })?;

    // regression statistics: PCC^2 = R^2
    let fit = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[1.1, 1.9, 3.2, 3.9]).map_err(e)?;
    ensure((fit.pcc * fit.pcc - fit.r2).abs() <= 1e-12, || {
        "PCC^2 != R^2".into()
    })?;
    notes.push("PSNR/loss fixtures exact".into());
    Ok(notes.join("; "))
}

// ---------------------------------------------------------------------------
// 10. I/O round trips

const GOLDEN_METADATA: &str = r#"{
  "rows": 3,
  "cols": 2,
  "width": 5,
  "height": 4,
  "channels": 3,
  "bit_depth": 16,
  "baseline_px": 4.0,
  "source": "synthetic"
}
"#;

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|err| err.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    // PFM: bitwise lossless, including awkward values
    let mut data: Vec<f32> = (0..7 * 5).map(|_| rng.gen_range(-1e6f32..1e6)).collect();
    data[0] = -0.0;
    data[1] = f32::MIN_POSITIVE / 8.0;
    data[2] = f32::MAX;
    let map = FloatMap::gray(7, 5, data);
    let path = dir.path().join("map.pfm");
    write_pfm(&path, &map).map_err(e)?;
    let back = read_pfm(&path).map_err(e)?;
    let bits = |m: &FloatMap| m.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(bits(&back) == bits(&map), || "PFM values changed".into())?;
    let rgb = FloatMap {
        width: 3,
        height: 2,
        channels: 3,
        data: (0..18).map(|i| i as f32 * 0.25 - 2.0).collect(),
    };
    let rgb_back = decode_pfm(&encode_pfm(&rgb), &path).map_err(e)?;
    ensure(rgb_back == rgb, || "three-channel PFM changed".into())?;

    // PNG light field at 16 bits
    let grid = AngularGrid::new(3, 2).unwrap();
    let lf = LightField::new(
        grid,
        (0..6).map(|_| random_view(&mut rng, 5, 4, 3)).collect(),
    )
    .map_err(e)?;
    let lf_dir = dir.path().join("lf");
    save_lightfield(&lf_dir, &lf, 16, Some(4.0), Source::Synthetic).map_err(e)?;
    let (loaded, _) = load_lightfield(&lf_dir).map_err(e)?;
    let worst = lf
        .views()
        .iter()
        .zip(loaded.views())
        .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    ensure(worst <= 2f64.powi(-16), || {
        format!("16-bit round trip error {worst:e}")
    })?;

    let text = std::fs::read_to_string(lf_dir.join(METADATA_FILE)).map_err(|e| e.to_string())?;
    ensure(text == GOLDEN_METADATA, || {
        format!("metadata drifted:\n{text}")
    })?;
    Ok(format!(
        "PFM bit-exact; 16-bit PNG max error {worst:.2e}; metadata golden"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("warp oracle equivalence", criterion_1),
        ("ADM algebra", criterion_2),
        ("WCM sum constraint", criterion_3),
        ("uniform-confidence reduction", criterion_4),
        ("linearity experiment", criterion_5),
        ("WCM ablation", criterion_6),
        ("free-space fidelity", criterion_7),
        ("separable 4D filter", criterion_8),
        ("metric correctness", criterion_9),
        ("I/O round trips", criterion_10),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
