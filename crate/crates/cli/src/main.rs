//! `shotcox`: exact and asymptotic distributional quantities for a Cox
//! process with Poisson shot-noise intensity.

mod output;
mod validate;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shotcox::asymptotics::{
    mdp_expansion, mdp_gaussian, mdp_saddle, pld_point, pld_tail, DeviationEstimate,
};
use shotcox::cgf::Cgf;
use shotcox::config::parse_model;
use shotcox::exactdist::{pmf_auto, pmf_exact, tail_exact};
use shotcox::model::ModelParams;
use shotcox::rate::solve_saddle;
use shotcox::sim::{sample_counts, sample_paths, SimConfig, SimMode};
use shotcox::stats::ls_slope;

use output::{csv_row, fmt_f64, JsonObject};
use validate::threshold_index;

// Exit statuses: 0 ok, 64 usage, 65 domain/precondition, 66 numerical
// quality (including failed validation), 70 internal.
const EXIT_USAGE: u8 = 64;
const EXIT_DOMAIN: u8 = 65;
const EXIT_QUALITY: u8 = 66;
const EXIT_INTERNAL: u8 = 70;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(shotcox::Error),
    Quality(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Quality(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl From<shotcox::Error> for CliError {
    fn from(e: shotcox::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => {
                if e.is_domain() {
                    EXIT_DOMAIN
                } else {
                    EXIT_QUALITY
                }
            }
            CliError::Quality(_) => EXIT_QUALITY,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "shotcox",
    version,
    about = "Exact and asymptotic distributions of a shot-noise Cox process",
    after_help = "Model config file: `key = value` lines with keys nu, rho, kernel.type \
                  (exponential|powerlaw|boxcar|tabulated|zero) and the kernel parameters \
                  kernel.a/kernel.b, kernel.c/kernel.p, kernel.h/kernel.w, or kernel.knots."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Counts,
    Paths,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AsymptoteKind {
    Point,
    Tail,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModerateForm {
    Gaussian,
    Saddle,
    Expansion,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate eta, its derivatives, psi, and the mod-phi gap as CSV.
    Cgf {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated theta values.
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
        /// Comma-separated horizons for the gap diagnostic.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
    },
    /// Saddle points and the rate function as CSV rows (x, theta*, I, I'').
    Rate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Exact pmf of N_t: (k, prob) CSV plus a JSON metadata block.
    Pmf {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        /// Transform size (power of two); chosen automatically if absent.
        #[arg(long)]
        m: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the JSON metadata here (stderr if absent).
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Monte Carlo simulation; summary JSON to stdout.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        n_paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "counts")]
        mode: ModeArg,
        /// Optionally stream raw per-path counts to a CSV file.
        #[arg(long)]
        counts_out: Option<PathBuf>,
    },
    /// Sharp large-deviation estimates (point and tail forms).
    Asymptote {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, value_enum)]
        kind: AsymptoteKind,
        /// Also evaluate the exact transform oracle and report the ratio.
        #[arg(long)]
        oracle: bool,
    },
    /// Moderate-deviation estimates (gaussian, saddle, expansion forms).
    Moderate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, value_enum)]
        form: ModerateForm,
        /// Expansion truncation (expansion form only).
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        oracle: bool,
    },
    /// Mod-phi convergence speed: gap per horizon and the log-log slope.
    Speed {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, value_delimiter = ',')]
        t_grid: Vec<f64>,
    },
    /// Run the full validation pipeline and write the pass/fail report.
    Validate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the report here in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status.
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(EXIT_USAGE);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_model(path: &PathBuf) -> Result<ModelParams, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    Ok(parse_model(&text)?)
}

fn write_artifact(path: &PathBuf, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Cgf { config, theta, t } => {
            if theta.is_empty() {
                return Err(CliError::Usage("--theta needs at least one value".into()));
            }
            if t.is_empty() {
                return Err(CliError::Usage("--t needs at least one value".into()));
            }
            let cgf = Cgf::new(load_model(&config)?);
            let mut out = String::from("theta,t,eta,eta_d1,eta_d2,psi,modphi_gap\n");
            for &theta in &theta {
                for &t in &t {
                    out.push_str(&csv_row(&[
                        fmt_f64(theta),
                        fmt_f64(t),
                        fmt_f64(cgf.eta(theta)),
                        fmt_f64(cgf.eta_deriv(theta, 1)?),
                        fmt_f64(cgf.eta_deriv(theta, 2)?),
                        fmt_f64(cgf.psi(theta)?),
                        fmt_f64(cgf.modphi_gap(t, theta)?),
                    ]));
                }
            }
            print!("{out}");
            Ok(())
        }
        Command::Rate { config, x } => {
            if x.is_empty() {
                return Err(CliError::Usage("--x needs at least one value".into()));
            }
            let cgf = Cgf::new(load_model(&config)?);
            let mut out = String::from("x,theta_star,rate,rate_d2\n");
            for &x in &x {
                let s = solve_saddle(&cgf, x)?;
                out.push_str(&csv_row(&[
                    fmt_f64(x),
                    fmt_f64(s.theta_star),
                    fmt_f64(s.rate),
                    fmt_f64(s.rate_d2()),
                ]));
            }
            print!("{out}");
            Ok(())
        }
        Command::Pmf { config, t, m, out, meta } => {
            let cgf = Cgf::new(load_model(&config)?);
            let table = match m {
                Some(m) => pmf_exact(&cgf, t, m)?,
                None => pmf_auto(&cgf, t, 1e-12)?,
            };
            let mut csv = String::from("k,prob\n");
            for (k, &p) in table.probs.iter().enumerate() {
                csv.push_str(&csv_row(&[k.to_string(), fmt_f64(p)]));
            }
            let metadata = JsonObject::new()
                .number("t", table.t)
                .integer("m", table.m as u64)
                .number("aliasing_bound", table.aliasing_bound)
                .number("mean", table.mean)
                .number("variance", table.variance)
                .number("clamped_negative", table.clamped_negative)
                .render();
            match out {
                Some(path) => write_artifact(&path, &csv)?,
                None => print!("{csv}"),
            }
            match meta {
                Some(path) => write_artifact(&path, &metadata)?,
                None => eprint!("{metadata}"),
            }
            Ok(())
        }
        Command::Simulate { config, t, n_paths, seed, mode, counts_out } => {
            let params = load_model(&config)?;
            let mode_name = match mode {
                ModeArg::Counts => "counts",
                ModeArg::Paths => "paths",
            };
            let cfg = SimConfig::new(
                t,
                n_paths,
                seed,
                match mode {
                    ModeArg::Counts => SimMode::Counts,
                    ModeArg::Paths => SimMode::Paths,
                },
            )?;
            let batch = match mode {
                ModeArg::Counts => sample_counts(&params, &cfg)?,
                ModeArg::Paths => sample_paths(&params, &cfg)?,
            };
            if let Some(path) = counts_out {
                let mut csv = String::from("path,count\n");
                for (i, &c) in batch.counts.iter().enumerate() {
                    csv.push_str(&csv_row(&[i.to_string(), c.to_string()]));
                }
                write_artifact(&path, &csv)?;
            }
            let summary = JsonObject::new()
                .number("t", t)
                .integer("n_paths", n_paths as u64)
                .integer("seed", seed)
                .string("mode", mode_name)
                .number("mean", batch.summary.mean)
                .number("variance", batch.summary.variance)
                .integer("min", batch.summary.min)
                .integer("max", batch.summary.max)
                .render();
            print!("{summary}");
            Ok(())
        }
        Command::Asymptote { config, t, x, kind, oracle } => {
            let cgf = Cgf::new(load_model(&config)?);
            let est = match kind {
                AsymptoteKind::Point => pld_point(&cgf, t, x)?,
                AsymptoteKind::Tail => pld_tail(&cgf, t, x)?,
            };
            let exact = if oracle {
                let k = threshold_index(t * x);
                Some(match kind {
                    AsymptoteKind::Point => {
                        let table = pmf_auto(&cgf, t, 1e-12)?;
                        let p = table.probs.get(k).copied().unwrap_or(0.0);
                        quality_check(p, "exact pmf entry")?
                    }
                    AsymptoteKind::Tail => {
                        let tail = tail_exact(&cgf, t, k)?;
                        if tail.at_noise_floor {
                            return Err(CliError::Quality(format!(
                                "exact tail {} is at the double-precision noise floor",
                                tail.value
                            )));
                        }
                        tail.value
                    }
                })
            } else {
                None
            };
            print_estimate_csv(&est, exact);
            Ok(())
        }
        Command::Moderate { config, t, y, form, m, oracle } => {
            let cgf = Cgf::new(load_model(&config)?);
            let est = match form {
                ModerateForm::Gaussian => mdp_gaussian(&cgf, t, y)?,
                ModerateForm::Saddle => mdp_saddle(&cgf, t, y)?,
                ModerateForm::Expansion => mdp_expansion(&cgf, t, y, m)?,
            };
            let exact = if oracle {
                let k = threshold_index(est.threshold.unwrap_or(t * y));
                let tail = tail_exact(&cgf, t, k)?;
                if tail.at_noise_floor {
                    return Err(CliError::Quality(format!(
                        "exact tail {} is at the double-precision noise floor",
                        tail.value
                    )));
                }
                Some(tail.value)
            } else {
                None
            };
            print_estimate_csv(&est, exact);
            Ok(())
        }
        Command::Speed { config, theta, t_grid } => {
            if t_grid.len() < 2 {
                return Err(CliError::Usage("--t-grid needs at least two horizons".into()));
            }
            let cgf = Cgf::new(load_model(&config)?);
            let mut gaps = Vec::new();
            for &t in &t_grid {
                gaps.push(cgf.modphi_gap(t, theta)?);
            }
            if gaps.iter().any(|&g| g <= 0.0) {
                return Err(CliError::Quality(
                    "gap is exactly zero on the grid; no slope to fit (compactly supported kernel?)"
                        .into(),
                ));
            }
            let pts: Vec<(f64, f64)> =
                t_grid.iter().zip(&gaps).map(|(&t, &g)| (t.ln(), g.ln())).collect();
            let slope = ls_slope(&pts);
            let mut out = String::from("t,gap,slope\n");
            for (&t, &gap) in t_grid.iter().zip(&gaps) {
                out.push_str(&csv_row(&[fmt_f64(t), fmt_f64(gap), fmt_f64(slope)]));
            }
            print!("{out}");
            Ok(())
        }
        Command::Validate { seed, out } => {
            let report = validate::run(seed)?;
            let text = report.render();
            print!("{text}");
            if let Some(path) = out {
                write_artifact(&path, &text)?;
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Quality(format!(
                    "{} of {} validation criteria failed",
                    report.failed, report.total
                )))
            }
        }
    }
}

fn quality_check(value: f64, what: &str) -> Result<f64, CliError> {
    if value <= shotcox::exactdist::NOISE_FLOOR {
        return Err(CliError::Quality(format!(
            "{what} {value} is at the double-precision noise floor"
        )));
    }
    Ok(value)
}

fn print_estimate_csv(est: &DeviationEstimate, exact: Option<f64>) {
    let mut header = String::from("t,arg,estimate,log_estimate,theta_star,rate");
    let saddle = est.saddle.as_ref();
    let mut fields = vec![
        fmt_f64(est.t),
        fmt_f64(est.arg),
        fmt_f64(est.value),
        fmt_f64(est.log_value),
        saddle.map(|s| fmt_f64(s.theta_star)).unwrap_or_default(),
        saddle.map(|s| fmt_f64(s.rate)).unwrap_or_default(),
    ];
    if let Some(exact) = exact {
        header.push_str(",exact,ratio");
        fields.push(fmt_f64(exact));
        fields.push(fmt_f64((est.log_value - exact.ln()).exp()));
    }
    print!("{header}\n{}", csv_row(&fields));
}
