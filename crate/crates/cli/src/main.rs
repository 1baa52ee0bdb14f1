use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mvpc_core::fitter::{self, FitConfig, InitMode, Optimizer};
use mvpc_core::geoloss::{GeoLoss, LossBreakdown, LossWeights};
use mvpc_core::gradcheck::{self, GradCheckConfig};
use mvpc_core::io::{mvpc_file_size, read_mvpc, read_obj, write_mvpc, write_obj_mesh};
use mvpc_core::metrics::{self, DEFAULT_VOXEL_RESOLUTION};
use mvpc_core::mesh::merge_mvpc_to_mesh;
use mvpc_core::sampler::{normalize_mesh, sample_mvpc};
use mvpc_core::{make_rig, Mvpc, TriangleMesh, VISIBILITY_THRESHOLD};

/// Multi-view point cloud sampling, fitting and evaluation.
#[derive(Parser)]
#[command(name = "mvpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a ground-truth MVPC from an OBJ mesh.
    Sample {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 6, value_parser = parse_views)]
        views: usize,
        #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(2..))]
        res: u32,
        #[arg(long)]
        out: PathBuf,
        /// Surface samples used for the coverage estimate.
        #[arg(long, default_value_t = 100_000)]
        coverage_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit an initial MVPC to a ground truth by gradient descent.
    Fit {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = Init::NoisyGt)]
        init: Init,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 100.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long = "vis-weight", default_value_t = 1.0)]
        vis_weight: f64,
        #[arg(long, default_value_t = 100)]
        warmup: usize,
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        iters: u64,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        #[arg(long, value_enum, default_value_t = Opt::Adam)]
        optimizer: Opt,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Line-delimited `iter ptd vol mv vis total` records.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Report every loss term of a prediction against a ground truth.
    Loss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long = "vis-weight", default_value_t = 1.0)]
        vis_weight: f64,
        /// Divide each term by the total pixel count.
        #[arg(long)]
        per_pixel: bool,
    },
    /// Triangulate the visible pixels of every view into one OBJ.
    Mesh {
        #[arg(long)]
        mvpc: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxel IoU, Chamfer distance and (with a mesh) viewpoint coverage.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Ground-truth mesh for coverage; normalized like `sample` does.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_VOXEL_RESOLUTION)]
        voxel_res: usize,
        #[arg(long, default_value_t = 100_000)]
        coverage_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-difference check of every loss gradient on random instances.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        instances: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    NoisyGt,
    Sphere,
    Far,
}

#[derive(Clone, Copy, ValueEnum)]
enum Opt {
    Adam,
    Plain,
}

fn parse_views(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n @ (4 | 6 | 8)) => Ok(n),
        _ => Err(format!("views must be 4, 6 or 8, got {s}")),
    }
}

fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let mesh = read_obj(path).with_context(|| format!("reading mesh {}", path.display()))?;
    normalize_mesh(&mesh).with_context(|| format!("normalizing mesh {}", path.display()))
}

fn load_mvpc(path: &Path) -> Result<Mvpc> {
    read_mvpc(path).with_context(|| format!("reading MVPC {}", path.display()))
}

fn print_loss(l: &LossBreakdown) {
    println!("ptd={}", l.ptd);
    println!("vol={}", l.vol);
    println!("mv={}", l.mv);
    println!("vis_ce={}", l.vis_ce);
    println!("total={}", l.total);
}

fn visible_chamfer(a: &Mvpc, b: &Mvpc) -> Result<f64> {
    let pa = metrics::mvpc_to_points(a, VISIBILITY_THRESHOLD);
    let pb = metrics::mvpc_to_points(b, VISIBILITY_THRESHOLD);
    metrics::chamfer(&pa, &pb).context("chamfer distance needs visible points in both MVPCs")
}

fn cmd_sample(mesh: &Path, views: usize, res: u32, out: &Path, samples: usize, seed: u64) -> Result<()> {
    let mesh = load_mesh(mesh)?;
    let rig = make_rig(views, res as usize, res as usize)?;
    let gt = sample_mvpc(&mesh, &rig)?;
    write_mvpc(&gt, out).with_context(|| format!("writing {}", out.display()))?;
    println!("views={views}");
    println!("height={res}");
    println!("width={res}");
    for (k, view) in gt.views.iter().enumerate() {
        println!("visible_{k}={}", view.visible_count());
    }
    println!("coverage={}", metrics::coverage(&mesh, &rig, samples, seed)?);
    println!("file_size={}", mvpc_file_size(views, res as usize, res as usize));
    println!("out={}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    gt: &Path,
    init: Init,
    sigma: f64,
    weights: LossWeights,
    warmup: usize,
    iters: usize,
    step: f64,
    optimizer: Opt,
    seed: u64,
    out: &Path,
    trace: Option<&Path>,
) -> Result<()> {
    let gt = load_mvpc(gt)?;
    let init_mode = match init {
        Init::NoisyGt => InitMode::NoisyGt(sigma),
        Init::Sphere => InitMode::Sphere,
        Init::Far => InitMode::FarPlane,
    };
    let config = FitConfig {
        iterations: iters,
        step_size: step,
        warmup_steps: warmup,
        weights,
        optimizer: match optimizer {
            Opt::Adam => Optimizer::adam(),
            Opt::Plain => Optimizer::Plain,
        },
        init_mode,
        seed,
    };
    config.validate()?;
    let start = fitter::init_mvpc(&gt, init_mode, seed)?;

    let mut trace_out = match trace {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("creating trace {}", p.display()))?,
        )),
        None => None,
    };
    let mut trace_err = None;
    let result = fitter::fit_with_observer(&start, &gt, &config, |i, l| {
        if let Some(w) = trace_out.as_mut() {
            if let Err(e) = fitter::write_trace_line(w, i, l) {
                trace_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(mut w) = trace_out {
        if let Some(e) = trace_err {
            return Err(e).context("writing trace");
        }
        w.flush().context("writing trace")?;
    }
    write_mvpc(&result.result, out).with_context(|| format!("writing {}", out.display()))?;

    print_loss(&result.final_loss);
    println!("cd_before={}", visible_chamfer(&start, &gt)?);
    println!("cd_after={}", visible_chamfer(&result.result, &gt)?);
    println!("iterations={iters}");
    println!("wall_time_s={:.3}", result.wall_time.as_secs_f64());
    println!("out={}", out.display());
    Ok(())
}

fn cmd_loss(pred: &Path, gt: &Path, weights: LossWeights, per_pixel: bool) -> Result<()> {
    let (pred, gt) = (load_mvpc(pred)?, load_mvpc(gt)?);
    let loss = GeoLoss::with_default_masks(&gt)?;
    let (mut b, _) = loss.evaluate(&pred, &weights)?;
    if per_pixel {
        b = b.per_pixel(gt.view_count() * gt.height() * gt.width());
    }
    print_loss(&b);
    Ok(())
}

fn cmd_mesh(mvpc: &Path, out: &Path) -> Result<()> {
    let m = load_mvpc(mvpc)?;
    let mesh = merge_mvpc_to_mesh(&m)?;
    write_obj_mesh(&mesh, out).with_context(|| format!("writing {}", out.display()))?;
    println!("vertices={}", mesh.vertices.len());
    println!("triangles={}", mesh.triangles.len());
    println!("out={}", out.display());
    Ok(())
}

fn cmd_eval(pred: &Path, gt: &Path, mesh: Option<&Path>, voxel_res: usize, samples: usize, seed: u64) -> Result<()> {
    if voxel_res == 0 {
        bail!("voxel resolution must be positive");
    }
    let (pred, gt) = (load_mvpc(pred)?, load_mvpc(gt)?);
    gt.check_compatible(&pred)?;
    let pp = metrics::mvpc_to_points(&pred, VISIBILITY_THRESHOLD);
    let gp = metrics::mvpc_to_points(&gt, VISIBILITY_THRESHOLD);
    let iou = metrics::voxel_iou(&metrics::voxelize(&pp, voxel_res), &metrics::voxelize(&gp, voxel_res))?;
    println!("iou={iou}");
    println!("chamfer={}", metrics::chamfer(&pp, &gp).context("chamfer distance needs visible points")?);
    match mesh {
        Some(path) => println!("coverage={}", metrics::coverage(&load_mesh(path)?, &gt.rig, samples, seed)?),
        None => println!("coverage=none"),
    }
    Ok(())
}

fn cmd_gradcheck(seed: u64, instances: usize, tolerance: f64) -> Result<()> {
    let reports = gradcheck::run_suite(seed, instances, &GradCheckConfig::default())?;
    let mut ok = true;
    for r in &reports {
        println!("{}_max_rel={:e}", r.term.name(), r.max_rel_error);
        println!("{}_checked={}", r.term.name(), r.checked);
        ok &= r.max_rel_error < tolerance && r.checked > 0;
    }
    println!("pass={ok}");
    if !ok {
        bail!("gradient check exceeded relative tolerance {tolerance:e}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample {
            mesh,
            views,
            res,
            out,
            coverage_samples,
            seed,
        } => cmd_sample(&mesh, views, res, &out, coverage_samples, seed),
        Command::Fit {
            gt,
            init,
            sigma,
            alpha,
            beta,
            vis_weight,
            warmup,
            iters,
            step,
            optimizer,
            seed,
            out,
            trace,
        } => cmd_fit(
            &gt,
            init,
            sigma,
            LossWeights::new(alpha, beta, vis_weight)?,
            warmup,
            iters as usize,
            step,
            optimizer,
            seed,
            &out,
            trace.as_deref(),
        ),
        Command::Loss {
            pred,
            gt,
            alpha,
            beta,
            vis_weight,
            per_pixel,
        } => cmd_loss(&pred, &gt, LossWeights::new(alpha, beta, vis_weight)?, per_pixel),
        Command::Mesh { mvpc, out } => cmd_mesh(&mvpc, &out),
        Command::Eval {
            pred,
            gt,
            mesh,
            voxel_res,
            coverage_samples,
            seed,
        } => cmd_eval(&pred, &gt, mesh.as_deref(), voxel_res, coverage_samples, seed),
        Command::Gradcheck {
            seed,
            instances,
            tolerance,
        } => cmd_gradcheck(seed, instances as usize, tolerance),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
