//! The `tps-align` command line.
//!
//! Exit codes: 0 on success, 2 for unreadable or malformed inputs, 3 when
//! the landmark geometry cannot produce a warp.

pub mod bench;
pub mod image_io;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::field::WarpField;
use crate::landmarks::{load_landmarks, LandmarkSet};
use crate::losses::embedding_cosine_distance;
use crate::pipeline::{align_pair, build_warp, solve_warp, PipelineError, WarpConfig, WarpMode};
use crate::sampler::{warp_image, BorderMode};
use crate::tensor_io::Tensor;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Geometry(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Geometry(_) => EXIT_GEOMETRY,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Geometry(m) => m,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Landmark(_) | PipelineError::DimensionMismatch { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Geometry(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tps-align", version, about = "Thin-plate-spline landmark alignment tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Grouped,
    Global,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BorderArg {
    Clamp,
    Zeros,
}

#[derive(clap::Args, Debug)]
struct WarpOpts {
    /// How landmark groups combine into one warp.
    #[arg(long, value_enum, default_value = "grouped")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "clamp")]
    border: BorderArg,
    /// Worker threads for rasterization and sampling (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl WarpOpts {
    fn config(&self) -> WarpConfig {
        WarpConfig {
            mode: match self.mode {
                ModeArg::Grouped => WarpMode::Grouped,
                ModeArg::Global => WarpMode::Global,
            },
            border: match self.border {
                BorderArg::Clamp => BorderMode::Clamp,
                BorderArg::Zeros => BorderMode::Zeros,
            },
            ..WarpConfig::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Warp an image from one landmark set onto another.
    Warp {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        from_landmarks: PathBuf,
        #[arg(long)]
        to_landmarks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: WarpOpts,
    },
    /// Align a portrait/style pair in both directions.
    AlignPair {
        #[arg(long)]
        portrait: PathBuf,
        #[arg(long)]
        style: PathBuf,
        #[arg(long)]
        portrait_landmarks: PathBuf,
        #[arg(long)]
        style_landmarks: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        opts: WarpOpts,
    },
    /// Export the sampling field of a warp as a TPSF file.
    Field {
        #[arg(long)]
        from_landmarks: PathBuf,
        #[arg(long)]
        to_landmarks: PathBuf,
        /// Output height (default: the target landmark image height).
        #[arg(long)]
        height: Option<usize>,
        /// Output width (default: the target landmark image width).
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: WarpOpts,
    },
    /// Print the solved spline coefficients as JSON.
    Solve {
        #[arg(long)]
        from_landmarks: PathBuf,
        #[arg(long)]
        to_landmarks: PathBuf,
        #[arg(long, value_enum, default_value = "grouped")]
        mode: ModeArg,
    },
    /// Mean pairwise cosine distance between two embedding tensors.
    EvalDist {
        #[arg(long)]
        embeddings_a: PathBuf,
        #[arg(long)]
        embeddings_b: PathBuf,
    },
    /// Time field rasterization plus image warping.
    Bench {
        #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(32..))]
        size: u32,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(10..))]
        iters: u32,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn landmarks(path: &Path) -> Result<LandmarkSet, CliError> {
    load_landmarks(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn write_field(field: &WarpField, path: &Path) -> Result<(), CliError> {
    let io_err = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(|e| io_err(&e))?;
    let mut out = BufWriter::new(file);
    field.write_tpsf(&mut out).map_err(|e| io_err(&e))?;
    out.flush().map_err(|e| io_err(&e))
}

fn embeddings(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    Tensor::read_file(path)
        .and_then(|t| t.to_rows())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Warp {
            image,
            from_landmarks,
            to_landmarks,
            out: out_path,
            opts,
        } => {
            let img = image_io::load_png(&image).map_err(CliError::Input)?;
            let from = landmarks(&from_landmarks)?;
            let to = landmarks(&to_landmarks)?;
            let cfg = opts.config();
            if (img.height(), img.width()) != (from.height() as usize, from.width() as usize) {
                return Err(CliError::Input(format!(
                    "{}: image is {}x{} but {} describes a {}x{} image",
                    image.display(),
                    img.width(),
                    img.height(),
                    from_landmarks.display(),
                    from.width(),
                    from.height()
                )));
            }
            let warped = with_threads(opts.threads, || {
                let field = build_warp(&from, &to, to.height() as usize, to.width() as usize, &cfg)?;
                Ok(warp_image(&img, &field, cfg.border))
            })?;
            image_io::save_png(&warped, &out_path).map_err(CliError::Input)
        }
        Command::AlignPair {
            portrait,
            style,
            portrait_landmarks,
            style_landmarks,
            out_dir,
            opts,
        } => {
            let portrait_img = image_io::load_png(&portrait).map_err(CliError::Input)?;
            let style_img = image_io::load_png(&style).map_err(CliError::Input)?;
            let portrait_lm = landmarks(&portrait_landmarks)?;
            let style_lm = landmarks(&style_landmarks)?;
            let cfg = opts.config();
            let (style_warped, portrait_warped) = with_threads(opts.threads, || {
                let s = align_pair(&portrait_img, &portrait_lm, &style_img, &style_lm, &cfg)?;
                let p = align_pair(&style_img, &style_lm, &portrait_img, &portrait_lm, &cfg)?;
                Ok((s, p))
            })?;
            fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
            image_io::save_png(style_warped.warped_image(), &out_dir.join("style_warped.png"))
                .map_err(CliError::Input)?;
            image_io::save_png(portrait_warped.warped_image(), &out_dir.join("portrait_warped.png"))
                .map_err(CliError::Input)?;
            write_field(style_warped.field(), &out_dir.join("style_to_portrait.tpsf"))?;
            write_field(portrait_warped.field(), &out_dir.join("portrait_to_style.tpsf"))
        }
        Command::Field {
            from_landmarks,
            to_landmarks,
            height,
            width,
            out: out_path,
            opts,
        } => {
            let from = landmarks(&from_landmarks)?;
            let to = landmarks(&to_landmarks)?;
            let h = height.unwrap_or(to.height() as usize);
            let w = width.unwrap_or(to.width() as usize);
            let cfg = opts.config();
            let field = with_threads(opts.threads, || Ok(build_warp(&from, &to, h, w, &cfg)?))?;
            write_field(&field, &out_path)
        }
        Command::Solve {
            from_landmarks,
            to_landmarks,
            mode,
        } => {
            let from = landmarks(&from_landmarks)?;
            let to = landmarks(&to_landmarks)?;
            let cfg = WarpOpts {
                mode,
                border: BorderArg::Clamp,
                threads: None,
            }
            .config();
            let splines = solve_warp(&from, &to, &cfg)?;
            let doc: Vec<_> = splines
                .iter()
                .map(|(name, t)| json!({"group": name, "transform": t}))
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))
                .map_err(|e| CliError::Input(e.to_string()))
        }
        Command::EvalDist {
            embeddings_a,
            embeddings_b,
        } => {
            let a = embeddings(&embeddings_a)?;
            let b = embeddings(&embeddings_b)?;
            let d = embedding_cosine_distance(&a, &b).map_err(|e| {
                CliError::Input(format!(
                    "{} / {}: {e}",
                    embeddings_a.display(),
                    embeddings_b.display()
                ))
            })?;
            writeln!(out, "{}", json!({ "mean_cosine_distance": d }))
                .map_err(|e| CliError::Input(e.to_string()))
        }
        Command::Bench {
            size,
            iters,
            threads,
            seed,
        } => {
            let report = bench::run_bench(size as usize, iters as usize, threads, seed);
            writeln!(out, "{}", serde_json::to_string(&report).expect("serializable"))
                .map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
