//! Command-line front end: argument parsing, run configuration, result files
//! and figures.

pub mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use semitoric::models::ModelDescriptor;
use semitoric::singularities::BaseBox;

use commands::Outputs;
use config::{Command, RunConfig};

/// Output directory used when neither `--out` nor a config file sets one.
pub const OUT_ENV: &str = "SEMITORIC_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        source: semitoric::Error,
    },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core {
                source: semitoric::Error::Parse(_),
                ..
            } => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "semitoric", version, about = "Invariants of integrable systems and their joint spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo sampling [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// spherical_pendulum, spin_oscillator, coupled_angular_momenta,
    /// toric_product or local_model_Q.
    #[arg(long)]
    pub model: String,
    /// Model parameter, e.g. `--param t=0.5`.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Critical values and rank-one curves (CSV, JSON, SVG).
    Bifurcation {
        #[command(flatten)]
        model: ModelArgs,
        /// Base window `a_lo,a_hi,b_lo,b_hi`.
        #[arg(long)]
        window: Option<Window>,
        /// Grid columns.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Classical monodromy around a square loop.
    Monodromy {
        #[command(flatten)]
        model: ModelArgs,
        /// Focus value `a,b`; defaults to the first one found.
        #[arg(long, value_parser = parse_pair)]
        center: Option<[f64; 2]>,
        /// Half side of the square loop.
        #[arg(long, default_value_t = 0.4)]
        half_width: f64,
        /// Integrator tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Taylor series of the regularized action at a focus-focus value.
    Taylor {
        #[command(flatten)]
        model: ModelArgs,
        /// Focus value `a,b`; defaults to the first one found.
        #[arg(long, value_parser = parse_pair)]
        center: Option<[f64; 2]>,
        /// Disk radius around the focus value.
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Taylor degree.
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// Cut direction, `+` or `-`.
        #[arg(long, default_value = "+", value_parser = parse_sign, allow_hyphen_values = true)]
        cut_sign: i8,
    },
    /// Semi-toric polygon (JSON, SVG).
    Polygon {
        #[command(flatten)]
        model: ModelArgs,
        /// Cut signs, e.g. `+`, `-` or `+,-`.
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<Signs>,
        /// Base window `a_lo,a_hi,b_lo,b_hi`.
        #[arg(long)]
        window: Option<Window>,
        /// Grid columns.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Duistermaat–Heckman function (CSV x,rho).
    Dh {
        #[command(flatten)]
        model: ModelArgs,
        /// J-range `lo,hi`; defaults to the image of J.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        x_range: Option<[f64; 2]>,
        /// Grid columns.
        #[arg(long)]
        resolution: Option<usize>,
        /// Monte Carlo samples for the cross-check.
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
    },
    /// Joint spectrum (CSV, SVG).
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        /// Planck constant, in (0, 1].
        #[arg(long)]
        hbar: f64,
        /// Largest angular momentum for the pendulum.
        #[arg(long = "L")]
        l_max: Option<usize>,
        /// Oscillator cutoff for the spin-oscillator.
        #[arg(long)]
        n_max: Option<usize>,
        /// Base window `a_lo,a_hi,b_lo,b_hi`.
        #[arg(long)]
        window: Option<Window>,
    },
    /// Classical invariants read off a spectrum CSV (JSON report).
    Invert {
        /// Spectrum CSV with columns hbar,mu,lambda,multiplicity[,trusted].
        #[arg(long)]
        input: PathBuf,
    },
    /// Hausdorff distance of spectrum and image hulls over several ħ.
    Converge {
        #[command(flatten)]
        model: ModelArgs,
        /// At least three values.
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
        hbar: Vec<f64>,
        /// Base window `a_lo,a_hi,b_lo,b_hi`.
        #[arg(long)]
        window: Option<Window>,
    },
    /// Classical and quantum pendulum and the Jaynes–Cummings spectrum.
    ReproduceFigures,
    /// Runs a JSON run configuration.
    Run {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

/// `a_lo,a_hi,b_lo,b_hi`.
#[derive(Clone, Copy, Debug)]
pub struct Window(pub BaseBox);

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_floats(s)?;
        match v[..] {
            [a_lo, a_hi, b_lo, b_hi] => Ok(Window(BaseBox { a_lo, a_hi, b_lo, b_hi })),
            _ => Err(format!("expected a_lo,a_hi,b_lo,b_hi (got `{s}`)")),
        }
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    match parse_floats(s)?[..] {
        [a, b] => Ok([a, b]),
        _ => Err(format!("expected two comma-separated numbers (got `{s}`)")),
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value (got `{s}`)"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_sign(s: &str) -> Result<i8, String> {
    match s.trim() {
        "+" | "+1" | "1" => Ok(1),
        "-" | "-1" => Ok(-1),
        other => Err(format!("expected + or - (got `{other}`)")),
    }
}

/// Comma-separated cut signs.
#[derive(Clone, Debug)]
pub struct Signs(pub Vec<i8>);

impl std::str::FromStr for Signs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',').map(parse_sign).collect::<Result<_, _>>().map(Signs)
    }
}

fn descriptor(m: ModelArgs) -> ModelDescriptor {
    ModelDescriptor {
        model: m.model,
        params: m.params.into_iter().collect(),
    }
}

impl Sub {
    /// The run configuration a subcommand stands for, or a config file.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let cfg = match self {
            Sub::Run { config } => {
                let text = std::fs::read_to_string(&config).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", config.display()))
                })?;
                return RunConfig::from_json(&text);
            }
            Sub::Bifurcation { model, window, resolution } => RunConfig {
                model: Some(descriptor(model)),
                window: window.map(|w| w.0),
                resolution,
                ..RunConfig::new(Command::Bifurcation)
            },
            Sub::Monodromy { model, center, half_width, tol } => RunConfig {
                model: Some(descriptor(model)),
                center,
                half_width,
                tol,
                ..RunConfig::new(Command::Monodromy)
            },
            Sub::Taylor { model, center, radius, degree, cut_sign } => RunConfig {
                model: Some(descriptor(model)),
                center,
                radius,
                degree,
                cut_sign,
                ..RunConfig::new(Command::Taylor)
            },
            Sub::Polygon { model, eps, window, resolution } => RunConfig {
                model: Some(descriptor(model)),
                eps: eps.map(|e| e.0).unwrap_or_default(),
                window: window.map(|w| w.0),
                resolution,
                ..RunConfig::new(Command::Polygon)
            },
            Sub::Dh { model, x_range, resolution, mc_samples } => RunConfig {
                model: Some(descriptor(model)),
                x_range,
                resolution,
                mc_samples,
                ..RunConfig::new(Command::Dh)
            },
            Sub::Spectrum { model, hbar, l_max, n_max, window } => RunConfig {
                model: Some(descriptor(model)),
                hbar: vec![hbar],
                l_max,
                n_max,
                window: window.map(|w| w.0),
                ..RunConfig::new(Command::Spectrum)
            },
            Sub::Invert { input } => RunConfig {
                input: Some(input),
                ..RunConfig::new(Command::Invert)
            },
            Sub::Converge { model, hbar, window } => RunConfig {
                model: Some(descriptor(model)),
                hbar,
                window: window.map(|w| w.0),
                ..RunConfig::new(Command::Converge)
            },
            Sub::ReproduceFigures => RunConfig::new(Command::ReproduceFigures),
        };
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct Versions {
    semitoric: &'static str,
    semitoric_cli: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    versions: Versions,
    seed: u64,
    jobs: usize,
    wall_time_s: f64,
    outputs: &'a [String],
    summary: &'a str,
}

/// Validates `cfg`, runs it into `out` and writes `manifest.json` there.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut outputs = Outputs::new(out)?;
    let summary = commands::execute(cfg, &mut outputs)?;
    let manifest = Manifest {
        command: cfg.command.name(),
        config: cfg,
        versions: Versions {
            semitoric: semitoric::VERSION,
            semitoric_cli: env!("CARGO_PKG_VERSION"),
        },
        seed: cfg.seed,
        jobs: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: &outputs.files.clone(),
        summary: &summary,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    outputs.write("manifest.json", &(text + "\n"))?;
    Ok(summary)
}

fn resolve(cli: Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let from_file = matches!(cli.command, Sub::Run { .. });
    let mut cfg = cli.command.into_config()?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let env = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let out = match (cli.out, env) {
        (Some(dir), _) => dir,
        (None, Some(dir)) => dir,
        (None, None) if from_file => cfg.out.clone(),
        (None, None) => PathBuf::from("semitoric-out"),
    };
    cfg.out = out.clone();
    Ok((cfg, out))
}

/// Parses `args`, runs the command and maps the outcome to an exit code:
/// 0 success, 2 usage or configuration error, 3 numerical failure.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("config error: jobs: must be positive");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = resolve(cli).and_then(|(cfg, out)| run(&cfg, &out).map(|s| (s, out)));
    match result {
        Ok((summary, out)) => {
            println!("{summary}");
            println!("results in {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
