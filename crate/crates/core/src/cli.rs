//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::data::{load_csv, read_matrix_csv, Scenario};
use crate::diagnostics::design_diagnostics;
use crate::error::{invalid, Error, Result};
use crate::experiments::{parse_methods, run_scenario, write_metrics_csv, RunConfig};
use crate::inference::CredibleRegion;
use crate::model::{fit, IsvbConfig, ModelFile, NoiseMode, DEFAULT_SAMPLES};
use crate::rng::seeded;
use crate::target::GPrior;

#[derive(Debug, Parser)]
#[command(name = "isvb", version, about = "Debiased spike-and-slab variational Bayes for low-dimensional targets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GKind {
    Improper,
    Gaussian,
    Laplace,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit I-SVB to a design and response and write the model as JSON.
    Fit {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// CSV files start with a header row.
        #[arg(long)]
        header: bool,
        /// 1-based target columns, comma separated.
        #[arg(long)]
        targets: String,
        #[arg(long, value_enum, default_value = "improper")]
        g: GKind,
        /// Scale of the Gaussian or Laplace target prior.
        #[arg(long)]
        sigma_n: Option<f64>,
        /// Use this noise variance instead of the cross-validated estimate.
        #[arg(long)]
        noise_var: Option<f64>,
        /// Prior inclusion probability; defaults to one over the nuisance dimension.
        #[arg(long)]
        inclusion: Option<f64>,
        /// Draw with the nuisance block fixed at its variational mean.
        #[arg(long)]
        vb_mean: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw target samples from a fitted model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Credible interval (one column) or ellipsoid from a samples CSV.
    Region {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo coverage study for a scenario file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "isvb,mf,zz,oracle")]
        methods: String,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n_samples: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Worker threads; falls back to ISVB_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Write zeros in the time columns.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mutual coherence and bias-ratio check for a design.
    Diagnose {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        targets: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// 1-based comma-separated indices to 0-based.
pub fn parse_targets(s: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match t.trim().parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(invalid(format!("'{t}' is not a 1-based column index"))),
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(invalid("no targets given"));
    }
    Ok(out)
}

fn g_prior(kind: GKind, sigma_n: Option<f64>) -> Result<GPrior> {
    let need = || sigma_n.ok_or_else(|| invalid("--sigma-n is required for gaussian and laplace priors"));
    let g = match kind {
        GKind::Improper => GPrior::Improper,
        GKind::Gaussian => GPrior::Gaussian { sigma_n: need()? },
        GKind::Laplace => GPrior::Laplace { sigma_n: need()? },
    };
    g.validate()?;
    Ok(g)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_samples(draws: &DMatrix<f64>, labels: &[usize], path: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(output(path)?);
    let io_err = |e: csv::Error| Error::Io(io::Error::other(e.to_string()));
    w.write_record(labels.iter().map(|t| format!("beta_{}", t + 1))).map_err(io_err)?;
    for row in draws.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { x, y, header, targets, g, sigma_n, noise_var, inclusion, vb_mean, seed, out } => {
            let d = load_csv(&x, &y, header)?;
            let targets = parse_targets(&targets)?;
            let cfg = IsvbConfig {
                g: g_prior(g, sigma_n)?,
                inclusion,
                use_vb_mean: vb_mean,
                noise: noise_var.map_or(NoiseMode::Estimate, |s| NoiseMode::Fixed { sigma2: s }),
                ..IsvbConfig::default()
            };
            let model = fit(&d, &targets, &cfg, &mut seeded(seed))?;
            for w in &model.warnings {
                eprintln!("warning: {w}");
            }
            write_json(&model.to_file(), out.as_deref())
        }
        Command::Sample { model, n_samples, seed, out } => {
            if n_samples == 0 {
                return Err(invalid("--n-samples must be positive"));
            }
            let file: ModelFile = serde_json::from_reader(io::BufReader::new(File::open(&model)?))?;
            let sampler = file.into_sampler()?;
            let draws = sampler.draw(n_samples, &mut seeded(seed))?;
            write_samples(&draws, &sampler.targets, out.as_deref())
        }
        Command::Region { samples, level, out } => {
            let draws = read_matrix_csv(&samples, true)?;
            let region = CredibleRegion::from_samples(&draws, level)?;
            write_json(&region, out.as_deref())
        }
        Command::Simulate { scenario, methods, reps, seed, n_samples, level, threads, no_timing, out } => {
            let s = Scenario::from_json_file(&scenario)?;
            let mut cfg = RunConfig::new(s, parse_methods(&methods)?, reps, seed);
            cfg.n_samples = n_samples;
            cfg.level = level;
            cfg.threads = threads;
            cfg.timing = !no_timing;
            let report = run_scenario(&cfg)?;
            for f in &report.failures {
                eprintln!("rep {} {}: {}", f.rep, f.method, f.message);
            }
            write_metrics_csv(&report.rows, output(out.as_deref())?)
        }
        Command::Diagnose { x, header, targets, out } => {
            let x = read_matrix_csv(&x, header)?;
            let d = design_diagnostics(&x, &parse_targets(&targets)?)?;
            if d.bound_ok == Some(false) {
                eprintln!("warning: bias ratio {} exceeds the coherence bound", d.bias_ratio);
            }
            write_json(&d, out.as_deref())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
