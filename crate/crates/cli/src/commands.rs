use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use lfsynth::adm::{run_linearity_experiment, LinearityConfig, LinearityReport};
use lfsynth::io::{self, MetricReport, Source, ViewScore};
use lfsynth::metrics::{
    combined_loss_report, loss_reconstruction, loss_smoothness, loss_warping, psnr_capped, ssim,
    IntermediateSample, LossWeights,
};
use lfsynth::synth::RefineKernels;
use lfsynth::{
    estimate_boundary_adm_along, estimate_wcm_photometric, intermediate_adm_from_source,
    reconstruct_dense, separable_conv4d, AngularAxis, AngularGrid, ConfidenceMap, DisparityMap,
    EpiAxis, Estimator, LightField, ReconstructConfig, Scene, ViewImage, WcmParams,
};

use crate::{AxisArg, EpiAxisArg, ViewArgs};

fn suffixed(stem: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", stem.display()))
}

fn load_scene(path: &Path) -> Result<Scene> {
    let spec = io::load_scene(path)?;
    Scene::new(spec).with_context(|| format!("invalid scene {}", path.display()))
}

pub fn generate(
    spec_path: &Path,
    grid: AngularGrid,
    out: &Path,
    oracle_out: Option<&Path>,
    bit_depth: u8,
) -> Result<()> {
    let spec = io::load_scene(spec_path)?;
    let baseline = spec.baseline;
    let scene =
        Scene::new(spec).with_context(|| format!("invalid scene {}", spec_path.display()))?;
    let lf = scene.render_lightfield(grid)?;
    io::save_lightfield(out, &lf, bit_depth, Some(baseline), Source::Synthetic)?;
    println!(
        "wrote {} views ({grid}) to {}",
        lf.views().len(),
        out.display()
    );

    if let Some(dir) = oracle_out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        for (i, j) in grid.cells() {
            let target = grid.coords(i, j);
            let stem = dir.join(format!("{i:02}_{j:02}"));
            io::save_disparity(
                &suffixed(&stem, "_adm"),
                &scene.oracle_adm(target, (0.0, 0.0))?,
            )?;
            let (o0, o1) = scene.oracle_wcm(target, AngularAxis::U)?;
            io::save_confidence(&suffixed(&stem, "_wcm_0.pfm"), &o0)?;
            io::save_confidence(&suffixed(&stem, "_wcm_1.pfm"), &o1)?;
            let mut hidden = vec![0.0; scene.width() * scene.height()];
            for c in corners {
                for (h, &m) in hidden
                    .iter_mut()
                    .zip(&scene.occlusion_mask(target, c)?.data)
                {
                    if m {
                        *h = 1.0;
                    }
                }
            }
            let mask = ViewImage::new(scene.width(), scene.height(), 1, hidden)?;
            io::save_view_png(&suffixed(&stem, "_occlusion.png"), &mask, 8)?;
        }
        println!("wrote oracle maps to {}", dir.display());
    }
    Ok(())
}

fn axis_of(a: AxisArg) -> AngularAxis {
    match a {
        AxisArg::U => AngularAxis::U,
        AxisArg::V => AngularAxis::V,
    }
}

pub fn estimate(
    left: &Path,
    right: &Path,
    axis: AxisArg,
    max_disp: usize,
    out: &Path,
) -> Result<()> {
    let (l0, _) = io::load_view_png(left)?;
    let (l1, _) = io::load_view_png(right)?;
    let (a10, a01) = estimate_boundary_adm_along(&l0, &l1, max_disp, axis_of(axis))?;
    io::save_disparity(&suffixed(out, "_10"), &a10)?;
    io::save_disparity(&suffixed(out, "_01"), &a01)?;
    Ok(())
}

pub struct ReconstructArgs {
    pub input: PathBuf,
    pub target: AngularGrid,
    pub estimator: Estimator,
    pub scene: Option<PathBuf>,
    pub no_wcm: bool,
    pub refine: Option<PathBuf>,
    pub out: PathBuf,
    pub gt: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub max_disp: usize,
    pub sigma: f64,
    pub sigma_d: f64,
}

pub fn reconstruct(args: ReconstructArgs) -> Result<()> {
    ensure!(
        args.sigma > 0.0 && args.sigma_d > 0.0,
        "--sigma and --sigma-d must be positive"
    );
    let (input, meta) = io::load_lightfield(&args.input)?;
    let g = input.grid();
    let corners = if g.rows() == 2 && g.cols() == 2 {
        input
    } else {
        input.corners()?
    };
    let scene = args.scene.as_deref().map(load_scene).transpose()?;
    if args.estimator == Estimator::Oracle && scene.is_none() {
        bail!("--estimator oracle needs --scene");
    }
    let config = ReconstructConfig {
        estimator: args.estimator,
        use_wcm: !args.no_wcm,
        wcm: WcmParams {
            sigma: args.sigma,
            sigma_d: args.sigma_d,
        },
        max_disp: args.max_disp,
    };
    let (mut dense, stats) = reconstruct_dense(&corners, args.target, scene.as_ref(), config)?;
    if let Some(path) = &args.refine {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let kernels: RefineKernels = serde_json::from_str(&text)
            .with_context(|| format!("parsing kernel file {}", path.display()))?;
        let (spatial, angular, scale) = kernels.kernels()?;
        dense = separable_conv4d(&dense, &spatial, &angular, scale)?;
    }
    io::save_lightfield(
        &args.out,
        &dense,
        meta.bit_depth,
        meta.baseline_px,
        meta.source,
    )?;
    println!(
        "reconstructed {} from 2x2: {} synthesized views, {} fallback pixels",
        args.target, stats.synthesized_views, stats.fallback_pixels
    );
    if let (Some(gt_dir), Some(report_path)) = (&args.gt, &args.report) {
        let (gt, _) = io::load_lightfield(gt_dir)?;
        let report = score(&dense, &gt, false)?;
        print_scores(&report);
        report.write(report_path)?;
    }
    Ok(())
}

/// PSNR and SSIM per view plus their means; corners are skipped unless
/// `include_corners` is set.
fn score(pred: &LightField, gt: &LightField, include_corners: bool) -> Result<MetricReport> {
    ensure!(
        pred.grid() == gt.grid(),
        "prediction grid {} does not match ground truth grid {}",
        pred.grid(),
        gt.grid()
    );
    let grid = gt.grid();
    let mut per_view = Vec::new();
    for (i, j) in grid.cells() {
        if grid.is_corner(i, j) && !include_corners {
            continue;
        }
        let (p, t) = (pred.view_at(i, j)?, gt.view_at(i, j)?);
        per_view.push(ViewScore {
            row: i,
            col: j,
            psnr_db: psnr_capped(p, t)?,
            ssim: ssim(p, t)?,
        });
    }
    ensure!(
        !per_view.is_empty(),
        "no synthesized views to score; pass --include-corners to score input views"
    );
    let n = per_view.len() as f64;
    Ok(MetricReport {
        psnr_db: per_view.iter().map(|v| v.psnr_db).sum::<f64>() / n,
        ssim: per_view.iter().map(|v| v.ssim).sum::<f64>() / n,
        l_r: None,
        l_w: None,
        l_s: None,
        l_total: None,
        perceptual: "n/a".into(),
        per_view,
    })
}

fn print_scores(report: &MetricReport) {
    for v in &report.per_view {
        println!(
            "view {:02}_{:02}  PSNR {:8.3} dB  SSIM {:.5}",
            v.row, v.col, v.psnr_db, v.ssim
        );
    }
    println!(
        "mean        PSNR {:8.3} dB  SSIM {:.5}",
        report.psnr_db, report.ssim
    );
}

pub fn evaluate(
    pred_dir: &Path,
    gt_dir: &Path,
    losses: bool,
    include_corners: bool,
    max_disp: usize,
    report_path: &Path,
) -> Result<()> {
    let (pred, _) = io::load_lightfield(pred_dir)?;
    let (gt, _) = io::load_lightfield(gt_dir)?;
    let mut report = score(&pred, &gt, include_corners)?;
    if losses {
        let grid = gt.grid();
        let selected: Vec<(usize, usize)> =
            report.per_view.iter().map(|v| (v.row, v.col)).collect();
        let pick = |lf: &LightField| -> Result<Vec<ViewImage>> {
            selected
                .iter()
                .map(|&(i, j)| Ok(lf.view_at(i, j)?.clone()))
                .collect()
        };
        let l_r = loss_reconstruction(&pick(&pred)?, &pick(&gt)?)?;

        // warping and smoothness terms along the top row of the ground truth
        let last = grid.cols() - 1;
        let (l0, l1) = (gt.view_at(0, 0)?, gt.view_at(0, last)?);
        let (a10, a01) = estimate_boundary_adm_along(l0, l1, max_disp, AngularAxis::U)?;
        let maps = (1..last)
            .map(|j| intermediate_adm_from_source(grid.u(j), &a10, &a01))
            .collect::<lfsynth::Result<Vec<_>>>()?;
        let samples: Vec<IntermediateSample<'_>> = (1..last)
            .zip(&maps)
            .map(|(j, (a_k0, a_k1))| IntermediateSample {
                view: gt.view_at(0, j).expect("column in range"),
                a_k0,
                a_k1,
            })
            .collect();
        let l_w = loss_warping(l0, l1, &a01, &a10, &samples)?;
        let l_s = loss_smoothness(&a01, &a10)?;
        let combined = combined_loss_report(l_r, l_w, l_s, LossWeights::default());
        report.l_r = Some(combined.l_r);
        report.l_w = Some(combined.l_w);
        report.l_s = Some(combined.l_s);
        report.l_total = Some(combined.l_total);
    }
    print_scores(&report);
    if let (Some(r), Some(w), Some(s), Some(t)) =
        (report.l_r, report.l_w, report.l_s, report.l_total)
    {
        println!("losses      l_r {r:.6}  l_w {w:.6}  l_s {s:.6}  total {t:.6}  (perceptual n/a)");
    }
    report.write(report_path)?;
    Ok(())
}

pub fn linearity(
    scene_path: &Path,
    intervals: usize,
    points: usize,
    estimator: Estimator,
    max_disp: Option<usize>,
    min_distance: usize,
    report_path: &Path,
) -> Result<()> {
    let scene = load_scene(scene_path)?;
    let max_disp = max_disp.unwrap_or_else(|| {
        let widest = (0..scene.spec().layers.len())
            .map(|n| scene.layer_shift(n).abs())
            .fold(0.0, f64::max);
        widest.ceil() as usize + 2
    });
    let report = run_linearity_experiment(
        &scene,
        LinearityConfig {
            intervals,
            points,
            estimator,
            max_disp,
            min_distance,
        },
    )?;
    print_linearity(&report);
    let text = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(report_path, text)
        .with_context(|| format!("writing {}", report_path.display()))?;
    Ok(())
}

fn print_linearity(report: &LinearityReport) {
    println!(
        "{:>5} {:>5}  {:>8} {:>8} {:>8}",
        "x", "y", "R2", "adj R2", "PCC"
    );
    for p in &report.points {
        println!(
            "{:>5} {:>5}  {:>8.4} {:>8.4} {:>8.4}",
            p.x, p.y, p.fit.r2, p.fit.adjusted_r2, p.fit.pcc
        );
    }
    println!(
        "{:>11}  {:>8.4} {:>8.4} {:>8.4}",
        "average", report.mean_r2, report.mean_adjusted_r2, report.mean_pcc
    );
}

pub fn epi(
    input: &Path,
    axis: EpiAxisArg,
    row: usize,
    view_row: usize,
    upscale: usize,
    out: &Path,
) -> Result<()> {
    let (lf, _) = io::load_lightfield(input)?;
    let axis = match axis {
        EpiAxisArg::Horizontal => EpiAxis::Horizontal,
        EpiAxisArg::Vertical => EpiAxis::Vertical,
    };
    let slice = lf.extract_epi(axis, row, view_row)?;
    io::save_epi_png(out, &slice, upscale)?;
    Ok(())
}

struct IntermediateMaps {
    a_k0: DisparityMap,
    a_k1: DisparityMap,
    o0: ConfidenceMap,
    o1: ConfidenceMap,
}

fn intermediate_maps(args: &ViewArgs) -> Result<IntermediateMaps> {
    ensure!(
        (0.0..=1.0).contains(&args.k),
        "--k must lie in [0, 1], got {}",
        args.k
    );
    let axis = axis_of(args.axis);
    let (target, b1) = match axis {
        AngularAxis::U => ((args.k, 0.0), (1.0, 0.0)),
        AngularAxis::V => ((0.0, args.k), (0.0, 1.0)),
    };
    if let Some(path) = &args.scene {
        let scene = load_scene(path)?;
        let (o0, o1) = scene.oracle_wcm(target, axis)?;
        return Ok(IntermediateMaps {
            a_k0: scene.oracle_adm(target, (0.0, 0.0))?,
            a_k1: scene.oracle_adm(target, b1)?,
            o0,
            o1,
        });
    }
    let dir = args.input.as_ref().expect("clap requires --scene or --in");
    let (lf, _) = io::load_lightfield(dir)?;
    let c = lf.corner_views()?;
    let (l0, l1) = match axis {
        AngularAxis::U => (&c.views[0], &c.views[1]),
        AngularAxis::V => (&c.views[0], &c.views[2]),
    };
    let (a10, a01) = estimate_boundary_adm_along(l0, l1, args.max_disp, axis)?;
    let (a_k0, a_k1) = intermediate_adm_from_source(args.k, &a10, &a01)?;
    let (o0, o1) = estimate_wcm_photometric(
        l0,
        l1,
        &a_k0,
        &a_k1,
        &a10,
        &a01,
        args.k,
        WcmParams::default(),
    )?;
    Ok(IntermediateMaps { a_k0, a_k1, o0, o1 })
}

pub fn wcm_export(args: &ViewArgs, gray: bool) -> Result<()> {
    let maps = intermediate_maps(args)?;
    for (suffix, map) in [("_0", &maps.o0), ("_1", &maps.o1)] {
        let stem = suffixed(&args.out, suffix);
        io::save_wcm_png(&suffixed(&stem, ".png"), map, gray)?;
        io::save_confidence(&suffixed(&stem, ".pfm"), map)?;
    }
    Ok(())
}

pub fn adm_export(args: &ViewArgs, scale: Option<f64>) -> Result<()> {
    let maps = intermediate_maps(args)?;
    for (suffix, map) in [("_0", &maps.a_k0), ("_1", &maps.a_k1)] {
        let stem = suffixed(&args.out, suffix);
        io::save_adm_png(&suffixed(&stem, ".png"), map, scale)?;
        io::save_disparity(&stem, map)?;
    }
    Ok(())
}
