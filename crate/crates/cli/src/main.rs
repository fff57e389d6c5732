use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lfsynth::{AngularGrid, Estimator};

mod commands;

/// Occlusion-aware light field view synthesis.
#[derive(Parser)]
#[command(name = "lfsynth", version, about)]
struct Cli {
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, env = "LFSYNTH_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum EstimatorArg {
    Oracle,
    Classical,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Oracle => Estimator::Oracle,
            EstimatorArg::Classical => Estimator::Classical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AxisArg {
    U,
    V,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum EpiAxisArg {
    Horizontal,
    Vertical,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic light field from a scene description.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "8x8")]
        grid: AngularGrid,
        #[arg(long)]
        out: PathBuf,
        /// Also write ground-truth maps and occlusion masks here.
        #[arg(long)]
        oracle_out: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        bit_depth: u8,
    },
    /// Estimate boundary disparity maps between two views.
    Estimate {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, value_enum, default_value = "u")]
        axis: AxisArg,
        #[arg(long, default_value_t = 8)]
        max_disp: usize,
        /// Output stem; writes `<stem>_10_{dx,dy}.pfm` and `<stem>_01_{dx,dy}.pfm`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a dense light field from its corner views.
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        target: AngularGrid,
        #[arg(long, value_enum, default_value = "classical")]
        estimator: EstimatorArg,
        /// Scene description; required by the oracle estimator.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Blend with uniform confidences instead of estimated ones.
        #[arg(long)]
        no_wcm: bool,
        /// JSON kernel file for the separable refinement filter.
        #[arg(long)]
        refine: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Ground truth light field for a per-view quality report.
        #[arg(long, requires = "report")]
        gt: Option<PathBuf>,
        #[arg(long, requires = "gt")]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        max_disp: usize,
        #[arg(long, default_value_t = lfsynth::wcm::DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long, default_value_t = lfsynth::wcm::DEFAULT_SIGMA_D)]
        sigma_d: f64,
    },
    /// Compare a light field against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Also compute the reconstruction, warping and smoothness losses.
        #[arg(long)]
        losses: bool,
        /// Score corner views too (they are input views, so excluded by default).
        #[arg(long)]
        include_corners: bool,
        #[arg(long, default_value_t = 8)]
        max_disp: usize,
        #[arg(long)]
        report: PathBuf,
    },
    /// Measure how linearly disparity grows with the aperture interval.
    Linearity {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 6)]
        intervals: usize,
        #[arg(long, default_value_t = 9)]
        points: usize,
        #[arg(long, value_enum, default_value = "classical")]
        estimator: EstimatorArg,
        /// Search range; defaults to the largest layer shift plus two pixels.
        #[arg(long)]
        max_disp: Option<usize>,
        #[arg(long, default_value_t = 8)]
        min_distance: usize,
        #[arg(long)]
        report: PathBuf,
    },
    /// Export an epipolar plane image.
    Epi {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "horizontal")]
        axis: EpiAxisArg,
        /// Spatial row (horizontal) or column (vertical) to slice.
        #[arg(long)]
        row: usize,
        /// Angular row (horizontal) or column (vertical) to hold fixed.
        #[arg(long)]
        view_row: usize,
        #[arg(long, default_value_t = 8)]
        upscale: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the confidence maps of an intermediate view.
    WcmExport {
        #[command(flatten)]
        view: ViewArgs,
        /// Write grayscale instead of the red/blue coding.
        #[arg(long)]
        gray: bool,
    },
    /// Export the disparity maps of an intermediate view.
    AdmExport {
        #[command(flatten)]
        view: ViewArgs,
        /// Magnitude shown at full saturation; defaults to the map maximum.
        #[arg(long)]
        scale: Option<f64>,
    },
}

/// An intermediate view between two boundary views of a 2x2 aperture.
#[derive(clap::Args)]
pub struct ViewArgs {
    /// Position between the boundaries, in [0, 1].
    #[arg(long)]
    k: f64,
    /// `u` interpolates along the top row, `v` down the left column.
    #[arg(long, value_enum, default_value = "u")]
    axis: AxisArg,
    /// Scene description (oracle maps).
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    scene: Option<PathBuf>,
    /// Light field whose corners give the boundary views (estimated maps).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    max_disp: usize,
    /// Output stem; `_0` and `_1` suffixes name the two boundaries.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error: cannot configure worker threads: {err}");
        return ExitCode::FAILURE;
    }
    let result = match cli.command {
        Command::Generate {
            spec,
            grid,
            out,
            oracle_out,
            bit_depth,
        } => commands::generate(&spec, grid, &out, oracle_out.as_deref(), bit_depth),
        Command::Estimate {
            left,
            right,
            axis,
            max_disp,
            out,
        } => commands::estimate(&left, &right, axis, max_disp, &out),
        Command::Reconstruct {
            input,
            target,
            estimator,
            scene,
            no_wcm,
            refine,
            out,
            gt,
            report,
            max_disp,
            sigma,
            sigma_d,
        } => commands::reconstruct(commands::ReconstructArgs {
            input,
            target,
            estimator: estimator.into(),
            scene,
            no_wcm,
            refine,
            out,
            gt,
            report,
            max_disp,
            sigma,
            sigma_d,
        }),
        Command::Evaluate {
            pred,
            gt,
            losses,
            include_corners,
            max_disp,
            report,
        } => commands::evaluate(&pred, &gt, losses, include_corners, max_disp, &report),
        Command::Linearity {
            scene,
            intervals,
            points,
            estimator,
            max_disp,
            min_distance,
            report,
        } => commands::linearity(
            &scene,
            intervals,
            points,
            estimator.into(),
            max_disp,
            min_distance,
            &report,
        ),
        Command::Epi {
            input,
            axis,
            row,
            view_row,
            upscale,
            out,
        } => commands::epi(&input, axis, row, view_row, upscale, &out),
        Command::WcmExport { view, gray } => commands::wcm_export(&view, gray),
        Command::AdmExport { view, scale } => commands::adm_export(&view, scale),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
