//! Command-line front end. Every subcommand reads one TOML configuration
//! and writes CSV or text artifacts.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 model assumption failure, 4 insufficient excitation, 5 parameters not
//! identifiable from the data.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::error::Error;
use crate::estimation::{self, EstimateResult};
use crate::experiments::{self, DlseOptions};
use crate::model::ParameterVector;
use crate::response::{simulate_samples, SampleSet};

#[derive(Debug, Parser)]
#[command(name = "lft-ident", version, about = "Two-step parameter identification for LFT descriptor systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file describing plant, generator and experiment.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (simulate) or directory (other subcommands).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measurement noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Relative tolerance for every numerical rank decision.
    #[arg(long = "tol-rank")]
    pub tol_rank: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate noisy non-uniform samples of the plant output.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Start sampling at t = 0 instead of at the settling time.
        #[arg(long)]
        keep_transient: bool,
    },
    /// Estimate the parameters from a sample file.
    Identify {
        #[command(flatten)]
        common: Common,
        /// CSV sample file as written by `simulate`.
        #[arg(long)]
        samples: PathBuf,
        /// Use samples taken before the settling time as well.
        #[arg(long)]
        keep_transient: bool,
    },
    /// Report the excitation and identifiability rank conditions.
    Excitation {
        #[command(flatten)]
        common: Common,
        /// Sample file; simulated from the configuration when omitted.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Run the Monte-Carlo sweep of the `[montecarlo]` table.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        /// Override the number of trials per cell.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Fit the direct output-error baseline from random initial guesses.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Sample file; simulated from the configuration when omitted.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Number of random initial guesses.
        #[arg(long, default_value_t = 5)]
        starts: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Model { context: String, source: Error },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. } | ConfigError::Parse(_) | ConfigError::Invalid(_)) => 2,
            CliError::Config(ConfigError::Model(e)) => model_code(e),
            CliError::Usage(_) => 2,
            CliError::Model { source, .. } => model_code(source),
            CliError::Io(_) => 1,
        }
    }
}

fn model_code(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch(_) | Error::InvalidInput(_) | Error::ZeroTrueParameter { .. } => 2,
        Error::NotPersistentlyExciting { .. } => 4,
        Error::NotIdentifiableFromData { .. } => 5,
        _ => 3,
    }
}

fn model_err(context: &str) -> impl Fn(Error) -> CliError + '_ {
    move |source| CliError::Model {
        context: context.to_string(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` and runs the command, writing reports to `out`.
/// Returns the process exit code.
pub fn run<I, T, W>(args: I, out: &mut W, err: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(if code == 0 { &mut *out } else { &mut *err }, "{e}");
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> Result<Config, CliError> {
    let mut cfg = Config::from_path(&common.config)?;
    if let Some(r) = common.tol_rank {
        if !(r > 0.0 && r < 1.0) {
            return Err(CliError::Usage(format!("--tol-rank {r} must lie in (0, 1)")));
        }
        cfg = cfg.with_rank_rtol(r);
    }
    if let Some(s) = common.sigma {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!("--sigma {s} must be non-negative")));
        }
        cfg.experiment.sigma = s;
    }
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn require_theta(cfg: &Config) -> Result<ParameterVector, CliError> {
    cfg.theta_true()
        .ok_or_else(|| CliError::Usage("[experiment] theta_true is required for simulation".into()))
}

fn nominal_theta(cfg: &Config) -> ParameterVector {
    cfg.theta_true().unwrap_or_else(|| ParameterVector::zeros(cfg.plant.n_params()))
}

/// Checks regularity, well-posedness and stability with messages naming
/// the violated condition.
fn check_plant(cfg: &Config, theta: &ParameterVector) -> Result<(), CliError> {
    let rep = cfg.plant.check_assumptions(theta);
    let fail = |what: &str, source| {
        Err(CliError::Model {
            context: format!("assumption violated ({what})"),
            source,
        })
    };
    if !rep.well_posed {
        return fail(
            "well-posedness of the LFT",
            Error::WellPosednessViolated {
                sigma_min: rep.well_posed_sigma_min,
            },
        );
    }
    if !rep.regular {
        return fail("regularity of the pencil", Error::IrregularPencil);
    }
    if !rep.stable {
        let max_real = rep.finite_eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        return fail("stability", Error::Unstable { max_real });
    }
    Ok(())
}

fn simulate_from_config(cfg: &Config, n: usize, keep_transient: bool) -> Result<SampleSet, CliError> {
    let theta = require_theta(cfg)?;
    check_plant(cfg, &theta)?;
    let t_start = if keep_transient {
        0.0
    } else {
        cfg.settle_time(&theta).map_err(model_err("settling time"))?
    };
    let times = experiments::generate_times(&cfg.gap_law(), n, t_start, cfg.experiment.seed);
    let x0 = cfg.x0(&theta).map_err(model_err("initial state"))?;
    simulate_samples(
        &cfg.plant,
        &theta,
        &x0,
        &cfg.generator,
        &times,
        cfg.experiment.sigma,
        cfg.experiment.seed.wrapping_add(1),
    )
    .map_err(|e| match e {
        Error::SharedEigenvalue { .. } => CliError::Model {
            context: "generator and plant share an eigenvalue, so the steady-state equations have no unique solution"
                .into(),
            source: e,
        },
        e => CliError::Model {
            context: "simulation".into(),
            source: e,
        },
    })
}

fn read_samples(path: &Path) -> Result<SampleSet, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    SampleSet::read_csv(BufReader::new(f)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn samples_or_simulate(cfg: &Config, path: Option<&Path>) -> Result<SampleSet, CliError> {
    match path {
        Some(p) => read_samples(p),
        None => simulate_from_config(cfg, cfg.experiment.samples, false),
    }
}

fn out_dir(common: &Common) -> Result<Option<PathBuf>, CliError> {
    match &common.out {
        None => Ok(None),
        Some(d) => {
            fs::create_dir_all(d).map_err(io_err(d))?;
            Ok(Some(d.clone()))
        }
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_err(&path))
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn fmt_vec(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.10e}")).collect();
    format!("[{}]", cells.join(", "))
}

fn identify_report(cfg: &Config, est: &EstimateResult) -> String {
    let mut s = String::new();
    s.push_str(&format!("theta_hat = {}\n", fmt_vec(est.theta.as_slice())));
    if let Some(t) = cfg.theta_true() {
        s.push_str(&format!("theta_true = {}\n", fmt_vec(t.as_slice())));
        let abs = (est.theta.values() - t.values()).norm();
        s.push_str(&format!("abs_error = {abs:.6e}\n"));
        if let Ok(e) = experiments::relative_error(&t, &est.theta) {
            s.push_str(&format!("relative_error = {e:.6e}\n"));
        }
    }
    s.push_str(&format!("residual_norm = {:.6e}\n", est.residual_norm));
    s.push_str(&format!("psi_sigma_min = {:.6e}\n", est.psi_sigma_min));
    s.push_str(&est.excitation.to_key_values());
    s
}

fn execute<W: Write>(command: Command, out: &mut W) -> Result<(), CliError> {
    let say = |out: &mut W, text: &str| out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()));
    match command {
        Command::Simulate {
            common,
            samples,
            keep_transient,
        } => {
            let cfg = load(&common)?;
            let n = samples.unwrap_or(cfg.experiment.samples);
            if n == 0 {
                return Err(CliError::Usage("--samples must be positive".into()));
            }
            let set = simulate_from_config(&cfg, n, keep_transient)?;
            let mut buf = Vec::new();
            set.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            match &common.out {
                Some(p) => {
                    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                        fs::create_dir_all(parent).map_err(io_err(parent))?;
                    }
                    fs::write(p, &buf).map_err(io_err(p))?;
                    say(out, &format!("wrote {} samples to {}\n", set.len(), p.display()))
                }
                None => out.write_all(&buf).map_err(|e| CliError::Io(e.to_string())),
            }
        }
        Command::Identify {
            common,
            samples,
            keep_transient,
        } => {
            let cfg = load(&common)?;
            let all = read_samples(&samples)?;
            let set = if keep_transient {
                all
            } else {
                let ts = cfg.settle_time(&nominal_theta(&cfg)).map_err(model_err("settling time"))?;
                all.from_time(ts)
            };
            let theta = cfg.theta_true();
            let est = estimation::identify(&cfg.plant, &cfg.generator, &set, theta.as_ref())
                .map_err(model_err("identification"))?;
            let report = identify_report(&cfg, &est);
            if let Some(dir) = out_dir(&common)? {
                write_file(&dir, "report.txt", &report)?;
                write_file(&dir, "theta.csv", &matrix_csv(&DMatrix::from_row_slice(1, est.theta.len(), est.theta.as_slice())))?;
                write_file(&dir, "hbar.csv", &matrix_csv(&est.tfm.hbar))?;
                write_file(&dir, "excitation.txt", &est.excitation.to_key_values())?;
            }
            say(out, &report)
        }
        Command::Excitation { common, samples } => {
            let cfg = load(&common)?;
            let set = samples_or_simulate(&cfg, samples.as_deref())?;
            let ts = cfg.settle_time(&nominal_theta(&cfg)).map_err(model_err("settling time"))?;
            let set = if samples.is_some() { set.from_time(ts) } else { set };
            let spec = cfg.generator.decompose().map_err(model_err("generator"))?;
            let reg = estimation::build_regression_with(&cfg.plant, &cfg.generator, &spec, &set)
                .map_err(model_err("regression"))?;
            let ps = match estimation::estimate_tfm(&reg) {
                Ok(tfm) => {
                    let theta = cfg.theta_true();
                    estimation::build_parametric(&cfg.plant, &spec, &tfm, theta.as_ref()).ok()
                }
                Err(_) => None,
            };
            let rep = estimation::check_excitation(&cfg.plant, &spec, &reg, ps.as_ref())
                .map_err(model_err("excitation check"))?;
            let text = rep.to_key_values();
            if let Some(dir) = out_dir(&common)? {
                write_file(&dir, "excitation.txt", &text)?;
            }
            say(out, &text)
        }
        Command::Montecarlo { common, trials } => {
            let cfg = load(&common)?;
            let ts = cfg.settle_time(&nominal_theta(&cfg)).map_err(model_err("settling time"))?;
            let mut mc = cfg.montecarlo_config(cfg.experiment.seed, ts)?;
            if let Some(t) = trials {
                if t == 0 {
                    return Err(CliError::Usage("--trials must be positive".into()));
                }
                mc.trials = t;
            }
            if let Some(s) = common.sigma {
                mc.sigmas = vec![s];
            }
            let result = experiments::monte_carlo(&cfg.plant, &cfg.generator, &mc);
            let summary = result.summary_csv();
            if let Some(dir) = out_dir(&common)? {
                write_file(&dir, "summary.csv", &summary)?;
                write_file(&dir, "trials.csv", &result.trials_csv())?;
            }
            say(out, &format!("config_hash = {}\n{summary}", result.config_hash))
        }
        Command::Baseline {
            common,
            samples,
            starts,
        } => {
            let cfg = load(&common)?;
            let set = samples_or_simulate_full(&cfg, samples.as_deref())?;
            let ts = cfg.settle_time(&nominal_theta(&cfg)).map_err(model_err("settling time"))?;
            let proposed = estimation::identify(&cfg.plant, &cfg.generator, &set.from_time(ts), None);
            let truth = cfg.theta_true();
            let mut csv = String::from("start,status,iterations,cost");
            for i in 1..=cfg.plant.n_params() {
                csv.push_str(&format!(",theta_{i}"));
            }
            csv.push_str(",Ere\n");
            let mut fails = 0;
            for k in 0..starts {
                let r = experiments::dlse_fit_random(
                    &cfg.plant,
                    &cfg.generator,
                    &set,
                    cfg.experiment.seed.wrapping_add(k as u64),
                    &DlseOptions::default(),
                );
                if r.status != experiments::DlseStatus::Converged {
                    fails += 1;
                }
                let ere = truth.as_ref().and_then(|t| experiments::relative_error(t, &r.theta).ok());
                csv.push_str(&format!("{k},{},{},{:.6e}", r.status.as_str(), r.iterations, r.cost));
                for v in r.theta.as_slice() {
                    csv.push_str(&format!(",{v:.10e}"));
                }
                csv.push_str(&format!(",{}\n", ere.map_or(String::new(), |e| format!("{e:.6e}"))));
            }
            let mut text = csv.clone();
            match &proposed {
                Ok(est) => {
                    text.push_str(&format!("proposed theta = {}\n", fmt_vec(est.theta.as_slice())));
                    if let Some(e) = truth.as_ref().and_then(|t| experiments::relative_error(t, &est.theta).ok()) {
                        text.push_str(&format!("proposed Ere = {e:.6e}\n"));
                    }
                }
                Err(e) => text.push_str(&format!("proposed failed: {e}\n")),
            }
            text.push_str(&format!("dlse_fail_count = {fails}\n"));
            if let Some(dir) = out_dir(&common)? {
                write_file(&dir, "baseline.csv", &csv)?;
            }
            say(out, &text)
        }
    }
}

/// The baseline uses the transient as well, so simulated data start at 0.
fn samples_or_simulate_full(cfg: &Config, path: Option<&Path>) -> Result<SampleSet, CliError> {
    match path {
        Some(p) => read_samples(p),
        None => simulate_from_config(cfg, cfg.experiment.samples, true),
    }
}
