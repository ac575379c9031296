//! Run configuration: defaults, `key = value` files and layered overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrator::{Quadrature, DEFAULT_FP_MAX_ITERS, DEFAULT_FP_TOL};

/// Source of the initial data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialCondition {
    /// The built-in smooth displacement/velocity pair.
    Preset,
    /// Nodal samples `u v` per line, one line per grid node from `x = -pi` on.
    File(PathBuf),
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Preset => f.write_str("preset"),
            InitialCondition::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "preset" {
            return Ok(InitialCondition::Preset);
        }
        match s.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(InitialCondition::File(PathBuf::from(path))),
            _ => Err(Error::Parse(format!(
                "unknown initial condition '{s}' (expected preset or file:<path>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho: f64,
    /// Coefficients of `u^2, u^3, ...` in `g`.
    pub g_coeffs: Vec<f64>,
    pub two_m: usize,
    pub h: f64,
    pub t_end: f64,
    pub s: f64,
    pub quadrature: Quadrature,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub sample_every: usize,
    pub output_path: PathBuf,
    pub ic: InitialCondition,
    /// Early-window end for the trend test, if one should run after the experiment.
    pub trend_split: Option<f64>,
}

impl Default for RunConfig {
    /// `rho = 0.5`, `g(u) = -u^2`, `2M = 128`, `h = 0.05` on `[0, 10000]`,
    /// `s = 2`, midpoint quadrature.
    fn default() -> Self {
        Self {
            rho: 0.5,
            g_coeffs: vec![-1.0],
            two_m: 128,
            h: 0.05,
            t_end: 10000.0,
            s: 2.0,
            quadrature: Quadrature::Midpoint,
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iters: DEFAULT_FP_MAX_ITERS,
            sample_every: 20,
            output_path: PathBuf::from("run.csv"),
            ic: InitialCondition::Preset,
            trend_split: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if self.g_coeffs.iter().any(|c| !c.is_finite()) {
            return bad("g coefficients must be finite".into());
        }
        if self.two_m < 4 || self.two_m % 2 != 0 {
            return bad(format!(
                "two_m must be an even integer >= 4, got {}",
                self.two_m
            ));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.s >= 0.0) {
            return bad(format!("s must be nonnegative, got {}", self.s));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be positive".into());
        }
        if let Some(t) = self.trend_split {
            if !(t > 0.0 && t < self.t_end) {
                return bad(format!(
                    "trend split must lie in (0, t_end = {}), got {t}",
                    self.t_end
                ));
            }
        }
        Ok(())
    }

    /// Steps needed to reach `t_end`, tolerating rounding in `t_end / h`.
    pub fn n_steps(&self) -> usize {
        let ratio = self.t_end / self.h;
        (ratio * (1.0 + 1e-12)).floor() as usize
    }

    pub fn expected_rows(&self) -> usize {
        self.n_steps() / self.sample_every + 1
    }
}

/// Optional settings layered over a [`RunConfig`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub rho: Option<f64>,
    pub g_coeffs: Option<Vec<f64>>,
    pub two_m: Option<usize>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub s: Option<f64>,
    pub quadrature: Option<Quadrature>,
    pub fp_tol: Option<f64>,
    pub fp_max_iters: Option<usize>,
    pub sample_every: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub ic: Option<InitialCondition>,
    pub trend_split: Option<f64>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(rho, g_coeffs, two_m, h, t_end, s, quadrature, fp_tol, fp_max_iters, sample_every, output_path, ic);
        if self.trend_split.is_some() {
            cfg.trend_split = self.trend_split;
        }
    }

    /// Sets one entry by name; `-` and `_` are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "rho" => self.rho = Some(number(key, value)?),
            "g_poly" | "g_coeffs" => self.g_coeffs = Some(parse_poly(value)?),
            "two_m" => self.two_m = Some(number(key, value)?),
            "h" => self.h = Some(number(key, value)?),
            "t_end" => self.t_end = Some(number(key, value)?),
            "s" => self.s = Some(number(key, value)?),
            "quadrature" => self.quadrature = Some(value.parse()?),
            "fp_tol" => self.fp_tol = Some(number(key, value)?),
            "fp_max_iters" => self.fp_max_iters = Some(number(key, value)?),
            "sample_every" => self.sample_every = Some(number(key, value)?),
            "out" | "output_path" => self.output_path = Some(PathBuf::from(value)),
            "ic" => self.ic = Some(value.parse()?),
            "trend_split" => self.trend_split = Some(number(key, value)?),
            other => return Err(Error::Parse(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            out.set(key, value)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(out)
    }

    /// `key=value` tokens separated by whitespace.
    pub fn from_tokens(line: &str) -> Result<Self> {
        let mut out = Self::default();
        for token in line.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{token}'")))?;
            out.set(key, value)?;
        }
        Ok(out)
    }
}

/// Defaults, then the config file, then command-line overrides.
pub fn parse_config(flags: &ConfigOverrides, file: Option<&str>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(text) = file {
        ConfigOverrides::from_text(text)?.apply(&mut cfg);
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// One run per non-empty line of `key=value` tokens; `#` starts a comment.
pub fn parse_sweep(text: &str) -> Result<Vec<ConfigOverrides>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then(|| {
                ConfigOverrides::from_tokens(line)
                    .map_err(|e| Error::Parse(format!("sweep line {}: {e}", i + 1)))
            })
        })
        .collect()
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("malformed value '{value}' for '{key}'")))
}

/// Comma-separated coefficients of `u^2, u^3, ...`; empty means `g = 0`.
pub fn parse_poly(value: &str) -> Result<Vec<f64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|c| number("g_poly", c.trim())).collect()
}
