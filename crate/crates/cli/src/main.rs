use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use forge_core::lat::{warp_frame, CameraModel, RgbaImage, Sampling, ValidityClass, WarpOptions};
use forge_core::mesh::{load_mesh, load_mesh_with_labels, save_labels, save_mesh, synth};
use forge_core::solver::{Anchors, Caricaturizer};
use forge_core::{error_curve, BlendPair, ConstraintSet, Mesh, DEFAULT_GAMMA_F};
use forge_service::ServiceConfig;
use tracing_subscriber::EnvFilter;

/// Regions masked by `warp` when `--fragile` is not given, if the labels define them.
const DEFAULT_FRAGILE: [&str; 3] = ["hair", "eyelid", "ear"];

#[derive(Parser)]
#[command(name = "forge", version, about = "Curvature-driven mesh caricatures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exaggerate a mesh at level γ with weights |K|^γ.
    Deform {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA_F)]
        gamma_f: f64,
        /// Only these labelled regions move (repeatable).
        #[arg(long)]
        region: Vec<String>,
        /// Extra targets: {"indices": [..], "targets": [[x, y, z], ..]}.
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// Label sidecar; defaults to `<mesh>.labels.json` when present.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vertex-wise blend between a rest mesh and its γ_f exaggeration.
    Blend {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA_F)]
        gamma_f: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measured blend error against exact solves, with the analytic bound.
    ErrorCurve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAMMA_F)]
        gamma_f: f64,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        /// Poincaré constant for the bound.
        #[arg(long, default_value_t = 1.0)]
        c_p: f64,
        /// Estimate the Poincaré constant from the mesh instead of `--c-p`.
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Warp a frame rendered with `--src` into the pose of `--dst`.
    Warp {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Regions masked regardless of visibility (repeatable); defaults to hair, eyelid
        /// and ear where labelled.
        #[arg(long)]
        fragile: Vec<String>,
        /// Disable fragile-region masking.
        #[arg(long, conflicts_with = "fragile")]
        no_fragile: bool,
        #[arg(long, value_enum, default_value_t = SamplingArg::Bilinear)]
        sampling: SamplingArg,
    },
    /// Run the HTTP session service.
    Serve {
        #[command(flatten)]
        config: ServiceConfig,
    },
    /// Write a procedural test surface (OBJ plus label sidecar).
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Grid resolution or subdivision level.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Bilinear,
    Nearest,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Face,
    Icosphere,
    BumpySphere,
    WavySheet,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Deform {
            mesh,
            gamma,
            gamma_f,
            region,
            constraints,
            labels,
            epsilon,
            out,
        } => deform(&mesh, gamma, gamma_f, &region, constraints.as_deref(), labels.as_deref(), epsilon, &out),
        Command::Blend {
            base,
            target,
            gamma,
            gamma_f,
            out,
        } => {
            let pair = BlendPair::new(read_mesh(&base)?, read_mesh(&target)?, gamma_f)?;
            save_mesh(&pair.blend(gamma)?, &out)?;
            Ok(())
        }
        Command::ErrorCurve {
            mesh,
            gamma_f,
            samples,
            c_p,
            calibrate,
            epsilon,
            out,
        } => {
            let engine = Caricaturizer::new(read_mesh(&mesh)?, epsilon)?;
            let report = error_curve(&engine, gamma_f, samples, c_p, calibrate)?;
            // Errors are already relative to the bounding-box diagonal.
            let peak = report.err_linf.iter().cloned().fold(0.0, f64::max);
            tracing::info!(peak_linf = peak, argmax_gamma = report.argmax_gamma, "error curve");
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Warp {
            image,
            src,
            dst,
            camera,
            labels,
            out,
            mask,
            fragile,
            no_fragile,
            sampling,
        } => {
            let src = load_mesh_with_labels(&src, labels.as_deref())?;
            let dst = read_mesh(&dst)?;
            let cam = CameraModel::load(&camera)?;
            let img = RgbaImage::load_png(&image)?;
            let fragile_regions = if no_fragile {
                Vec::new()
            } else if fragile.is_empty() {
                DEFAULT_FRAGILE
                    .iter()
                    .filter(|r| src.labels.get(r).is_some())
                    .map(|r| r.to_string())
                    .collect()
            } else {
                fragile
            };
            let opts = WarpOptions {
                sampling: match sampling {
                    SamplingArg::Bilinear => Sampling::Bilinear,
                    SamplingArg::Nearest => Sampling::Nearest,
                },
                fragile_regions,
            };
            let gt = warp_frame(&img, &src, &dst, &cam, &opts)?;
            gt.image.save_png(&out)?;
            if let Some(m) = mask {
                gt.mask.save_png(&m)?;
            }
            let counts: Vec<String> = ValidityClass::ALL
                .iter()
                .map(|c| format!("{}={}", c.name(), gt.mask.count(*c)))
                .collect();
            tracing::info!(fragile = ?opts.fragile_regions, "mask {}", counts.join(" "));
            Ok(())
        }
        Command::Serve { config } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(forge_service::serve(config))?;
            Ok(())
        }
        Command::Synth { kind, n, out } => {
            let mesh = match kind {
                SynthKind::Face => synth::face_like(n.unwrap_or(71)),
                SynthKind::Icosphere => synth::icosphere(n.unwrap_or(3) as u32),
                SynthKind::BumpySphere => synth::bumpy_sphere(n.unwrap_or(4) as u32),
                SynthKind::WavySheet => synth::wavy_sheet(n.unwrap_or(60)),
            };
            save_mesh(&mesh, &out)?;
            if !mesh.labels.is_empty() {
                save_labels(&mesh.labels, &out.with_extension("labels.json"))?;
            }
            tracing::info!(vertices = mesh.vertex_count(), faces = mesh.face_count(), "wrote {}", out.display());
            Ok(())
        }
    }
}

fn read_mesh(path: &Path) -> Result<Mesh> {
    load_mesh(path, None).with_context(|| format!("loading {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn deform(
    mesh: &Path,
    gamma: f64,
    gamma_f: f64,
    region: &[String],
    constraints: Option<&Path>,
    labels: Option<&Path>,
    epsilon: Option<f64>,
    out: &Path,
) -> Result<()> {
    if gamma_f.is_nan() || gamma_f <= 0.0 {
        bail!("--gamma-f must be positive, got {gamma_f}");
    }
    if !(0.0..=gamma_f).contains(&gamma) {
        bail!("--gamma {gamma} outside [0, {gamma_f}]");
    }
    let mesh = load_mesh_with_labels(mesh, labels)?;
    let engine = if region.is_empty() {
        Caricaturizer::new(mesh, epsilon)?
    } else {
        Caricaturizer::localized(mesh, epsilon, region)?
    };
    let engine = match constraints {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let extra: ConstraintSet = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let anchors: Anchors = engine.anchors.with_overrides(&extra)?;
            engine.with_anchors(anchors)?
        }
        None => engine,
    };
    let sol = engine.solve(gamma)?;
    eprintln!(
        "residual {:.3e}, constraint violation {:.3e}",
        sol.residual_norm, sol.constraint_violation
    );
    save_mesh(&sol.mesh, out)?;
    Ok(())
}
