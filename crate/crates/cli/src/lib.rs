//! Argument handling for the `aavf` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use aavf_core::harness::{
    self, exit_code, parse_config, parse_sweep, resonance_params, run_experiment,
    semi_discrete_check, trend_test_file, ConfigOverrides, InitialCondition, ResonanceOptions,
    RunConfig,
};
use aavf_core::integrator::Quadrature;
use aavf_core::resonance::resonance_report;
use aavf_core::Error;
use clap::error::ErrorKind;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "aavf",
    version,
    about = "Long-time integration of the periodic semilinear wave equation with the AAVF method"
)]
pub struct Cli {
    /// Mass parameter rho > 0
    #[arg(long)]
    pub rho: Option<f64>,
    /// Coefficients of u^2, u^3, ... in g(u), comma separated
    #[arg(long = "g-poly", allow_hyphen_values = true)]
    pub g_poly: Option<String>,
    /// Number of grid points (even)
    #[arg(long = "two-m")]
    pub two_m: Option<usize>,
    /// Stepsize
    #[arg(long = "h")]
    pub h: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Sobolev index for the action weights
    #[arg(long = "s")]
    pub s: Option<f64>,
    /// exact, midpoint or gauss:<n>
    #[arg(long)]
    pub quadrature: Option<Quadrature>,
    /// Fixed-point tolerance
    #[arg(long = "fp-tol")]
    pub fp_tol: Option<f64>,
    #[arg(long = "fp-max-iters")]
    pub fp_max_iters: Option<usize>,
    #[arg(long = "sample-every")]
    pub sample_every: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial data: preset or file:<path>
    #[arg(long)]
    pub ic: Option<InitialCondition>,
    /// End of the early window for the trend test
    #[arg(long = "trend-split")]
    pub trend_split: Option<f64>,
    /// Run the trend test on an existing CSV instead of integrating
    #[arg(long = "trend-csv", requires = "trend_split")]
    pub trend_csv: Option<PathBuf>,
    /// Also rerun with h/16 and test the drift of the unmodified columns
    #[arg(long = "semi-discrete-check")]
    pub semi_discrete_check: bool,
    /// Print the non-resonance report for the configuration instead of integrating
    #[arg(long = "resonance-report")]
    pub resonance_report: bool,
    /// Smallness parameter for the report (default: size of the initial data)
    #[arg(long = "res-epsilon")]
    pub res_epsilon: Option<f64>,
    /// Truncation number N for the report
    #[arg(long = "res-n")]
    pub res_n: Option<usize>,
    /// Highest mode included in the report
    #[arg(long = "res-m")]
    pub res_m: Option<usize>,
    #[arg(long = "res-sigma")]
    pub res_sigma: Option<f64>,
    #[arg(long = "res-c0")]
    pub res_c0: Option<f64>,
    /// File with one run per line as `key=value` tokens over the base configuration
    #[arg(long)]
    pub sweep: Option<PathBuf>,
}

impl Cli {
    pub fn overrides(&self) -> Result<ConfigOverrides, Error> {
        Ok(ConfigOverrides {
            rho: self.rho,
            g_coeffs: self.g_poly.as_deref().map(harness::config::parse_poly).transpose()?,
            two_m: self.two_m,
            h: self.h,
            t_end: self.t_end,
            s: self.s,
            quadrature: self.quadrature,
            fp_tol: self.fp_tol,
            fp_max_iters: self.fp_max_iters,
            sample_every: self.sample_every,
            output_path: self.out.clone(),
            ic: self.ic.clone(),
            trend_split: self.trend_split,
        })
    }

    fn resonance_options(&self) -> ResonanceOptions {
        ResonanceOptions {
            epsilon: self.res_epsilon,
            n: self.res_n,
            m: self.res_m,
            sigma: self.res_sigma,
            c0: self.res_c0,
        }
    }
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig, Error> {
    let file = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    parse_config(&cli.overrides()?, file.as_deref())
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    if let Some(csv) = &cli.trend_csv {
        let split = cli.trend_split.expect("clap enforces --trend-split");
        let report = trend_test_file(csv, split)?;
        write!(out, "{}", report.to_text())?;
        return Ok(0);
    }

    let cfg = base_config(cli)?;

    if cli.resonance_report {
        let (params, freqs) = resonance_params(&cfg, &cli.resonance_options())?;
        write!(out, "{}", resonance_report(&freqs, &params)?.to_text())?;
        return Ok(0);
    }

    if let Some(path) = &cli.sweep {
        return run_sweep(&cfg, &std::fs::read_to_string(path)?, out, err);
    }

    run_one(&cfg, cli.semi_discrete_check, out, err)
}

fn run_one(
    cfg: &RunConfig,
    semi_discrete: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let summary = run_experiment(cfg)?;
    if !summary.modified_valid {
        writeln!(
            err,
            "warning: stepsize h = {} is resonant for some mode; modified columns are NaN",
            cfg.h
        )?;
    }
    writeln!(out, "{summary}")?;
    if let Some(split) = cfg.trend_split {
        write!(out, "{}", trend_test_file(&cfg.output_path, split)?.to_text())?;
    }
    if semi_discrete {
        let split = cfg.trend_split.unwrap_or(0.25 * cfg.t_end);
        let (fine, report) = semi_discrete_check(cfg, split)?;
        writeln!(out, "{fine}")?;
        write!(out, "{}", report.to_text())?;
    }
    Ok(0)
}

/// Runs every sweep line concurrently; the exit status is the largest one.
fn run_sweep(
    base: &RunConfig,
    text: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let mut configs = Vec::new();
    for overrides in parse_sweep(text)? {
        let mut cfg = base.clone();
        overrides.apply(&mut cfg);
        cfg.validate()?;
        configs.push(cfg);
    }
    let mut outputs: Vec<_> = configs.iter().map(|c| &c.output_path).collect();
    outputs.sort();
    outputs.dedup();
    if outputs.len() != configs.len() {
        return Err(Error::InvalidParameter(
            "sweep runs must write to distinct output paths".into(),
        ));
    }

    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_experiment(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut status = 0;
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(summary) => {
                if !summary.modified_valid {
                    writeln!(err, "warning: run {}: resonant stepsize, modified columns are NaN", i + 1)?;
                }
                writeln!(out, "run {}: {summary}", i + 1)?;
            }
            Err(e) => {
                writeln!(err, "error: run {}: {e}", i + 1)?;
                status = status.max(exit_code(&e));
            }
        }
    }
    Ok(status)
}
