//! Command-line front end: tensor-ring decomposition of images and tensors,
//! color-image inpainting by low-rank completion, observation masks, and
//! quality metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand};
use quatring::augment::{auto_target_dims, AugmentPlan};
use quatring::completion::{write_history_csv, WeightMode, WnnSide};
use quatring::imaging::{load_image, psnr, save_image, ssim, Mask};
use quatring::pipeline::{inpaint, PipelineParams};
use quatring::qtensor::QuaternionTensor;
use quatring::ring::ring_svd;
use quatring::{Error, Result};

#[derive(Parser)]
#[command(name = "quatring", version, about = "Quaternion tensor-ring toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a tensor (.qtns) or image into tensor-ring cores.
    Decompose {
        /// Input file: .qtns tensor, or an image to lift first.
        #[arg(long)]
        input: PathBuf,
        /// Relative reconstruction error budget in (0, 1).
        #[arg(long)]
        eps: f64,
        /// Output directory for the cores and manifests.
        #[arg(long)]
        out: PathBuf,
        /// Tensor shape to lift an image into, e.g. 4,4,4,4 (images only;
        /// default picks a per-axis halving chain).
        #[arg(long)]
        dims: Option<Dims>,
    },
    /// Recover missing pixels of a color image.
    #[command(group(ArgGroup::new("observation").required(true).args(["sr", "mask"])))]
    Inpaint {
        /// Ground-truth image; unobserved pixels are dropped and recovered.
        #[arg(long)]
        image: PathBuf,
        /// Fraction of pixels to keep, sampled with --seed.
        #[arg(long)]
        sr: Option<f64>,
        /// Seed for the random mask (with --sr).
        #[arg(long, default_value_t = 0, conflicts_with = "mask")]
        seed: u64,
        /// Mask image: non-black pixels mark observed positions.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// key=value solver configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for recovered.png, observed.png, history.csv.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's target shape, e.g. 4,4,4,4.
        #[arg(long)]
        dims: Option<Dims>,
        /// Override the config's iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Override the config's stop tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print PSNR and SSIM between two images.
    Metrics {
        /// Reference image.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Image under test.
        #[arg(long)]
        test: PathBuf,
    },
    /// Generate a random observation mask image.
    Mask {
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        /// Fraction of pixels marked observed.
        #[arg(long)]
        sr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output image path (white = observed, black = missing).
        #[arg(long)]
        out: PathBuf,
    },
}

/// Comma-separated tensor shape, e.g. `4,4,4,4`. A wrapper type so clap
/// treats the whole list as one argument value.
#[derive(Clone, Debug)]
struct Dims(Vec<usize>);

impl std::str::FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let dims: std::result::Result<Vec<usize>, _> =
            s.split(',').map(|v| v.trim().parse::<usize>()).collect();
        match dims {
            Ok(d) if !d.is_empty() && d.iter().all(|&x| x > 0) => Ok(Dims(d)),
            _ => Err(format!(
                "expected a comma-separated list of positive integers, got '{s}'"
            )),
        }
    }
}

fn parse_f64_list(value: &str, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("config key {key}: bad number '{v}'")))
        })
        .collect()
}

fn parse_weight_mode(value: &str) -> Result<WeightMode> {
    match value {
        "alpha" => Ok(WeightMode::Alpha),
        "alpha_over_mu" => Ok(WeightMode::AlphaOverMu),
        "constant" => Ok(WeightMode::Constant),
        other => Err(Error::Format(format!(
            "weight_mode must be alpha, alpha_over_mu, or constant, got '{other}'"
        ))),
    }
}

fn parse_wnn_side(value: &str) -> Result<WnnSide> {
    match value {
        "unfolding" => Ok(WnnSide::Unfolding),
        "transpose" => Ok(WnnSide::Transpose),
        other => Err(Error::Format(format!(
            "wnn_side must be unfolding or transpose, got '{other}'"
        ))),
    }
}

/// Reads a flat key=value config file into pipeline parameters. Blank lines
/// and lines starting with '#' are skipped; unknown keys are rejected.
fn read_config(path: &Path, params: &mut PipelineParams) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("malformed config line: {line}")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |k: &str| Error::Format(format!("config key {k}: bad value '{value}'"));
        match key {
            "dims" => {
                let dims: Dims = value.parse().map_err(Error::Format)?;
                params.target_dims = Some(dims.0);
            }
            "wnn_epsilon" => params.wnn_epsilon = value.parse().map_err(|_| bad(key))?,
            "wnn_c" => params.wnn_c = value.parse().map_err(|_| bad(key))?,
            "weight_mode" => params.weight_mode = parse_weight_mode(value)?,
            "wnn_side" => params.wnn_side = parse_wnn_side(value)?,
            "rho" => params.rho = value.parse().map_err(|_| bad(key))?,
            "mu_max" => params.mu_max = value.parse().map_err(|_| bad(key))?,
            "tol" => params.tol = value.parse().map_err(|_| bad(key))?,
            "max_iters" => params.max_iters = value.parse().map_err(|_| bad(key))?,
            "alpha" => params.alpha = Some(parse_f64_list(value, key)?),
            "mu0" => params.mu0 = Some(parse_f64_list(value, key)?),
            other => return Err(Error::Format(format!("unknown config key: {other}"))),
        }
    }
    Ok(())
}

fn is_qtns(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("qtns")
}

fn cmd_decompose(input: &Path, eps: f64, out: &Path, dims: Option<Vec<usize>>) -> Result<()> {
    let tensor = if is_qtns(input) {
        if dims.is_some() {
            return Err(Error::Argument(
                "--dims applies only to image inputs; a .qtns file fixes its own shape".into(),
            ));
        }
        QuaternionTensor::load(input)?
    } else {
        let img = load_image(input)?;
        let dims = dims.unwrap_or_else(|| auto_target_dims(img.rows(), img.cols()));
        let plan = AugmentPlan::new(img.rows(), img.cols(), &dims)?;
        std::fs::create_dir_all(out)?;
        plan.write_manifest(&out.join("augment.txt"))?;
        plan.forward(&img.to_quaternion())?
    };

    let ring = ring_svd(&tensor, eps)?;
    ring.save(out)?;

    let error = if tensor.frobenius_norm() == 0.0 {
        0.0
    } else {
        ring.relative_error(&tensor)?
    };
    let stored: usize = ring.cores().iter().map(|c| c.len()).sum();
    let ratio = stored as f64 / tensor.len() as f64;
    let ranks = ring.ranks();
    let mut rank_str = String::new();
    for (i, r) in ranks.iter().enumerate() {
        if i > 0 {
            rank_str.push(',');
        }
        let _ = write!(rank_str, "{r}");
    }
    println!("ranks=[{rank_str}] relative_error={error:.6e} storage_ratio={ratio:.6}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_inpaint(
    image: &Path,
    sr: Option<f64>,
    seed: u64,
    mask_path: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
    dims: Option<Vec<usize>>,
    max_iters: Option<usize>,
    tol: Option<f64>,
) -> Result<()> {
    let mut params = PipelineParams::default();
    if let Some(path) = config {
        read_config(path, &mut params)?;
    }
    if dims.is_some() {
        params.target_dims = dims;
    }
    if let Some(n) = max_iters {
        params.max_iters = n;
    }
    if let Some(t) = tol {
        params.tol = t;
    }

    let img = load_image(image)?;
    let (mask, seed_note) = match (sr, mask_path) {
        (Some(sr), None) => (
            Mask::random(img.rows(), img.cols(), sr, seed)?,
            seed.to_string(),
        ),
        (None, Some(path)) => {
            let m = Mask::structural(&load_image(path)?);
            if m.rows() != img.rows() || m.cols() != img.cols() {
                return Err(Error::Shape(format!(
                    "mask is {}x{} but the image is {}x{}",
                    m.rows(),
                    m.cols(),
                    img.rows(),
                    img.cols()
                )));
            }
            (m, "none (mask file)".to_string())
        }
        _ => return Err(Error::Argument("give exactly one of --sr or --mask".into())),
    };

    let start = Instant::now();
    let outcome = inpaint(&img, &mask, &params)?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(out)?;
    save_image(&outcome.recovered, &out.join("recovered.png"))?;
    save_image(&outcome.observed, &out.join("observed.png"))?;
    write_history_csv(&out.join("history.csv"), &outcome.history)?;

    let p = psnr(&img, &outcome.recovered)?;
    let s = ssim(&img, &outcome.recovered)?;
    println!(
        "PSNR={p:.4} SSIM={s:.6} iterations={} converged={} wall_time_s={wall:.2} seed={seed_note}",
        outcome.iterations, outcome.converged
    );
    Ok(())
}

fn cmd_metrics(reference: &Path, test: &Path) -> Result<()> {
    let a = load_image(reference)?;
    let b = load_image(test)?;
    println!("PSNR={:.4} SSIM={:.6}", psnr(&a, &b)?, ssim(&a, &b)?);
    Ok(())
}

fn cmd_mask(height: usize, width: usize, sr: f64, seed: u64, out: &Path) -> Result<()> {
    let mask = Mask::random(height, width, sr, seed)?;
    save_image(&mask.to_image(), out)?;
    println!(
        "observed={} of {} rate={:.6} seed={seed}",
        mask.observed_count(),
        height * width,
        mask.sampling_rate()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose {
            input,
            eps,
            out,
            dims,
        } => cmd_decompose(&input, eps, &out, dims.map(|d| d.0)),
        Command::Inpaint {
            image,
            sr,
            seed,
            mask,
            config,
            out,
            dims,
            max_iters,
            tol,
        } => cmd_inpaint(
            &image,
            sr,
            seed,
            mask.as_deref(),
            config.as_deref(),
            &out,
            dims.map(|d| d.0),
            max_iters,
            tol,
        ),
        Command::Metrics { reference, test } => cmd_metrics(&reference, &test),
        Command::Mask {
            height,
            width,
            sr,
            seed,
            out,
        } => cmd_mask(height, width, sr, seed, &out),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Argument(_) | Error::Shape(_) | Error::Domain(_) | Error::Planning(_) => 2,
        Error::Io(_) | Error::Format(_) => 3,
        Error::Numerical(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
