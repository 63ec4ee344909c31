//! Scenario runner and artifact writer behind the `expose-lab` binary.

pub mod error;
pub mod ops;
pub mod render;
pub mod scenario;

use clap::{Parser, Subcommand};
use error::{CliError, CliResult};
use expose_core::convexify::GridSpec;
use ops::{Operation, PeakChoice};
use std::path::PathBuf;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "EXPOSE_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "expose-lab", version, about = "Experiments on exposing boundary points of pseudoconvex domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every operation of a scenario file.
    Run { scenario: PathBuf },
    /// Random sweep of the disk-automorphism dichotomy.
    MobiusFuzz {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify a convexifying map at a boundary point.
    Convexify {
        #[arg(long)]
        domain: PathBuf,
        /// Coordinates as `re,im;re,im;...`.
        #[arg(long)]
        zeta: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value = "levi")]
        peak: PeakArg,
        #[arg(long, default_value_t = 40)]
        grid: usize,
        #[arg(long, default_value_t = 0.2)]
        grid_radius: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the dumbbell pair for the region around `[a, b]`.
    Dumbbell {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify ball exposers over a list of fidelities.
    BallExpose {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        nu_list: Vec<u32>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        per_axis: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum-principle sweep behind the hull obstruction.
    HullDemo {
        #[arg(long)]
        rho0: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        degree: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a curve table as SVG.
    Render {
        data: PathBuf,
        /// Output file; defaults to the input with an `.svg` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fixed pixels per unit.
        #[arg(long)]
        scale: Option<f64>,
        /// Fit the axes separately instead of keeping the aspect ratio.
        #[arg(long)]
        stretch: bool,
        /// Data point at the canvas centre, as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Point to mark, as `re,im`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        mark: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum PeakArg {
    Levi,
    Convex,
}

/// Parses `re,im`.
pub fn parse_pair(s: &str) -> CliResult<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::input(format!("expected re,im but got {s:?}")));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|e| CliError::input(format!("{t:?}: {e}")));
    Ok([num(parts[0])?, num(parts[1])?])
}

/// Parses `re,im;re,im;...`.
pub fn parse_point(s: &str) -> CliResult<Vec<[f64; 2]>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_pair).collect()
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::input(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Run { scenario } => {
            let summary = scenario::run_scenario(&scenario)?;
            scenario::report_failures(&summary.failures);
            println!("{}", summary.output_dir.join("manifest.json").display());
            Ok(summary.exit_code())
        }
        Command::MobiusFuzz { samples, seed, out } => {
            scenario::run_single(Operation::MobiusFuzz { samples, seed }, "mobius-fuzz", out)
        }
        Command::Convexify { domain, zeta, eps, peak, grid, grid_radius, seed, out } => {
            let op = Operation::Convexify {
                domain,
                zeta: parse_point(&zeta)?,
                eps,
                peak: match peak {
                    PeakArg::Levi => PeakChoice::Levi,
                    PeakArg::Convex => PeakChoice::Convex,
                },
                grid: GridSpec { per_axis: grid, radius: grid_radius, seed },
            };
            if !op.inputs()[0].is_file() {
                return Err(CliError::input(format!("domain file {} does not exist", op.inputs()[0].display())));
            }
            scenario::run_single(op, "convexify", out)
        }
        Command::Dumbbell { a, b, delta, out } => scenario::run_single(Operation::Dumbbell { a, b, delta }, "dumbbell", out),
        Command::BallExpose { r, s, nu_list, n, per_axis, seed, out } => {
            let defaults = expose_core::ballexpose::BallDumbbellConfig::default();
            let op = Operation::BallExpose {
                r,
                s,
                nu_list,
                eps: defaults.eps,
                tube_c: defaults.tube_c,
                n,
                per_axis,
                ball_per_axis: expose_core::ballexpose::ExposerGrid::default().ball_per_axis,
                seed,
                rays: 8,
            };
            scenario::run_single(op, "ball-expose", out)
        }
        Command::HullDemo { rho0, count, degree, seed, out } => {
            scenario::run_single(Operation::HullDemo { rho0, count, degree, seed }, "hull-demo", out)
        }
        Command::Render { data, out, scale, stretch, center, mark } => {
            let text = std::fs::read_to_string(&data)
                .map_err(|e| CliError::input(format!("cannot read data file {}: {e}", data.display())))?;
            let curves = render::parse_curves(&text)?;
            let opts = render::RenderOptions {
                scale,
                stretch,
                center: center.as_deref().map(parse_pair).transpose()?.map(|p| (p[0], p[1])),
                marks: mark.iter().map(|m| parse_pair(m).map(|p| (p[0], p[1]))).collect::<CliResult<_>>()?,
                source: data.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            };
            let svg = render::render_svg(&curves, &opts)?;
            let target = out.unwrap_or_else(|| data.with_extension("svg"));
            std::fs::write(&target, svg).map_err(|e| CliError::input(format!("cannot write {}: {e}", target.display())))?;
            println!("{}", target.display());
            Ok(0)
        }
    }
}

/// Parses arguments, sizes the worker pool and runs the command; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = thread_cap().and_then(|cap| {
        if let Some(n) = cap {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
        }
        dispatch(cli.command)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("expose-lab: {e}");
            e.exit_code()
        }
    }
}
