//! Experiment driver: builds the problem from a [`RunConfig`], integrates,
//! writes the diagnostic time series and evaluates drift trends.

pub mod config;
pub mod csv;
pub mod trend;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_sweep, ConfigOverrides, InitialCondition, RunConfig};
pub use csv::{emit_csv, format_csv, parse_csv, read_csv, HEADER};
pub use trend::{trend_test, trend_test_file, ColumnTrend, TrendReport};

use crate::error::{Error, Result};
use crate::integrator::{integrate, DiagnosticRow, IntegrateOptions, Stepper, StepperConfig};
use crate::resonance::ResonanceParams;
use crate::spectral::{build_frequencies, FrequencyTable, Grid, NodalField};
use crate::system::{epsilon_estimate, initial_state, State, SystemSpec};

/// Divisor of `h` for the semi-discrete proxy run.
pub const SEMI_DISCRETE_REFINEMENT: usize = 16;

/// Process exit status for an error: 1 usage, 2 solver failure, 3 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        Error::NonConvergence { .. } | Error::SymmetryViolation { .. } | Error::ResonantStepsize { .. } => 2,
        Error::InvalidInput(_) | Error::InvalidParameter(_) | Error::TooLarge(_) | Error::Parse(_) => 1,
    }
}

/// Everything needed to integrate one configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: SystemSpec,
    pub grid: Grid,
    pub freqs: FrequencyTable,
    pub initial: State,
}

impl Problem {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Grid::with_len(cfg.two_m)?;
        let freqs = build_frequencies(cfg.rho, grid.m())?;
        let spec = SystemSpec::polynomial(cfg.rho, cfg.g_coeffs.clone())?;
        let initial = match &cfg.ic {
            InitialCondition::Preset => initial_state(&grid)?,
            InitialCondition::File(path) => read_initial_file(path, &grid)?,
        };
        Ok(Self {
            spec,
            grid,
            freqs,
            initial,
        })
    }

    pub fn stepper(&self, cfg: &RunConfig) -> Result<Stepper> {
        let mut sc = StepperConfig::new(cfg.h, cfg.quadrature);
        sc.fp_tol = cfg.fp_tol;
        sc.fp_max_iters = cfg.fp_max_iters;
        Stepper::new(&self.spec, &self.freqs, &self.grid, sc)
    }
}

/// Reads nodal `u v` pairs (whitespace or comma separated, `#` comments),
/// one line per node `x_k = k pi / M`, `k = -M, ..., M-1`.
pub fn read_initial_file(path: &Path, grid: &Grid) -> Result<State> {
    let text = std::fs::read_to_string(path)?;
    parse_initial(&text, grid)
}

pub fn parse_initial(text: &str, grid: &Grid) -> Result<State> {
    let mut u = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len());
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let [a, b] = fields[..] else {
            return Err(Error::Parse(format!(
                "initial data line {}: expected two values",
                i + 1
            )));
        };
        let parse = |f: &str| {
            f.parse::<f64>()
                .map_err(|_| Error::Parse(format!("initial data line {}: bad number '{f}'", i + 1)))
        };
        u.push(parse(a)?);
        v.push(parse(b)?);
    }
    if u.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "initial data has {} nodes, grid has {}",
            u.len(),
            grid.len()
        )));
    }
    State::from_nodal(grid, &NodalField::new(u), &NodalField::new(v))
}

/// Integrates `cfg` and returns all sampled rows.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<DiagnosticRow>> {
    let problem = Problem::new(cfg)?;
    let stepper = problem.stepper(cfg)?;
    let mut rows = Vec::with_capacity(cfg.expected_rows());
    let opts = IntegrateOptions {
        n_steps: cfg.n_steps(),
        sample_every: cfg.sample_every,
        s: cfg.s,
    };
    integrate(&problem.initial, &stepper, opts, |r| rows.push(*r))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: usize,
    pub max_abs_dh_rel: f64,
    pub max_err_mi: f64,
    pub max_err_mk: f64,
    /// False when `h` is resonant for some mode; modified columns are then NaN.
    pub modified_valid: bool,
    pub output: PathBuf,
}

impl RunSummary {
    pub fn from_rows(rows: &[DiagnosticRow], output: PathBuf) -> Self {
        let max = |get: fn(&DiagnosticRow) -> f64| rows.iter().map(get).fold(0.0, f64::max);
        Self {
            rows: rows.len(),
            max_abs_dh_rel: max(|r| r.dh_rel.abs()),
            max_err_mi: max(|r| r.err_mi),
            max_err_mk: max(|r| r.err_mk),
            modified_valid: rows.iter().all(|r| !r.err_mi.is_nan() && !r.err_mk.is_nan()),
            output,
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let modified = |v: f64| {
            if self.modified_valid {
                format!("{v:.3e}")
            } else {
                "NaN".to_string()
            }
        };
        write!(
            f,
            "rows={} max|dH_rel|={:.3e} max errMI={} max errMK={} out={}",
            self.rows,
            self.max_abs_dh_rel,
            modified(self.max_err_mi),
            modified(self.max_err_mk),
            self.output.display()
        )
    }
}

/// Runs `cfg` and writes its CSV to `cfg.output_path`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    let rows = simulate(cfg)?;
    emit_csv(&rows, &cfg.output_path)?;
    Ok(RunSummary::from_rows(&rows, cfg.output_path.clone()))
}

/// Output path of the semi-discrete proxy run next to `out`.
pub fn semi_discrete_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}_semi_discrete.csv"))
}

/// Reruns `cfg` with `h / 16` (sampling the same times) as a stand-in for the
/// exact semi-discrete flow and applies the trend test to its drift columns.
pub fn semi_discrete_check(cfg: &RunConfig, split: f64) -> Result<(RunSummary, TrendReport)> {
    let fine = RunConfig {
        h: cfg.h / SEMI_DISCRETE_REFINEMENT as f64,
        sample_every: cfg.sample_every * SEMI_DISCRETE_REFINEMENT,
        output_path: semi_discrete_path(&cfg.output_path),
        ..cfg.clone()
    };
    let rows = simulate(&fine)?;
    emit_csv(&rows, &fine.output_path)?;
    let mut report = trend_test(&rows, split)?;
    report.note = Some(format!(
        "semi-discrete proxy: h/{} = {}; check applies to errI and errK: {}",
        SEMI_DISCRETE_REFINEMENT,
        fine.h,
        if report.unmodified_bounded() { "PASS" } else { "FAIL" }
    ));
    Ok((RunSummary::from_rows(&rows, fine.output_path), report))
}

/// Optional resonance-report settings; unset fields get data-driven defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResonanceOptions {
    pub epsilon: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub sigma: Option<f64>,
    pub c0: Option<f64>,
}

/// Fills in [`ResonanceParams`] for `cfg`: `epsilon` defaults to the size of the
/// initial data, `N` to 1, `M` to the largest value within the enumeration
/// limit, `sigma` to `s - 1` (at least 0) and `C0` to 1.
pub fn resonance_params(
    cfg: &RunConfig,
    opts: &ResonanceOptions,
) -> Result<(ResonanceParams, FrequencyTable)> {
    let problem = Problem::new(cfg)?;
    let epsilon = match opts.epsilon {
        Some(e) => e,
        None => epsilon_estimate(&problem.initial, &problem.freqs, cfg.s)?,
    };
    let n = opts.n.unwrap_or(1).max(1);
    let m = opts.m.unwrap_or_else(|| {
        (crate::resonance::ENUMERATION_LIMIT / n)
            .saturating_sub(1)
            .min(problem.freqs.m())
    });
    let params = ResonanceParams {
        epsilon,
        h: cfg.h,
        n,
        m,
        sigma: opts.sigma.unwrap_or((cfg.s - 1.0).max(0.0)),
        c0: opts.c0.unwrap_or(1.0),
    };
    params.validate(&problem.freqs)?;
    Ok((params, problem.freqs))
}
