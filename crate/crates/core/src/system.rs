//! The spectrally semi-discretized wave equation `q'' + Omega^2 q = f(q)`:
//! nonlinearity, energy, momentum, actions, their step-size-modified
//! counterparts, and the relative drift functionals used for the long-time
//! conservation plots.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{check_len, sobolev_norm, FrequencyTable, Grid, ModeVector, NodalField};

pub use crate::spectral::build_frequencies;

/// Tolerance on the imaginary part of momentum-type sums, relative to the
/// sum of term magnitudes.
pub const MOMENTUM_IMAG_TOLERANCE: f64 = 1e-12;

/// Below this `|sinc(h*omega/2)|` the modification factor is undefined.
pub const RESONANT_SINC_THRESHOLD: f64 = 1e-8;

/// Below this `|K(ref)|` the momentum drift is reported as an absolute error.
pub const MOMENTUM_REF_FLOOR: f64 = 1e-30;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The nonlinearity `g` with `g(0) = g'(0) = 0` and its potential `U`, `U' = g`, `U(0) = 0`.
#[derive(Clone)]
pub enum Nonlinearity {
    /// `g(u) = sum_m coeffs[m - 2] u^m` for `m >= 2`.
    Polynomial(Vec<f64>),
    /// Arbitrary smooth `g` with user-supplied potential. Exact AVF
    /// quadrature is unavailable for this variant.
    Callable { g: ScalarFn, potential: ScalarFn },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Nonlinearity::Callable { .. } => f.write_str("Callable"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    rho: f64,
    nonlinearity: Nonlinearity,
}

impl SystemSpec {
    /// Polynomial nonlinearity; `g_coeffs[i]` multiplies `u^(i+2)`.
    pub fn polynomial(rho: f64, g_coeffs: Vec<f64>) -> Result<Self> {
        check_rho(rho)?;
        if g_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "nonlinearity coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            rho,
            nonlinearity: Nonlinearity::Polynomial(g_coeffs),
        })
    }

    pub fn callable<G, U>(rho: f64, g: G, potential: U) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        U: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_rho(rho)?;
        Ok(Self {
            rho,
            nonlinearity: Nonlinearity::Callable {
                g: Arc::new(g),
                potential: Arc::new(potential),
            },
        })
    }

    /// `rho = 0.5`, `g(u) = -u^2`.
    pub fn quadratic_preset() -> Self {
        Self {
            rho: 0.5,
            nonlinearity: Nonlinearity::Polynomial(vec![-1.0]),
        }
    }

    /// The linear wave equation (`g = 0`).
    pub fn linear(rho: f64) -> Result<Self> {
        Self::polynomial(rho, Vec::new())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// Coefficients of `g` starting at `u^2`, if polynomial.
    pub fn g_coeffs(&self) -> Option<&[f64]> {
        match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => Some(c),
            Nonlinearity::Callable { .. } => None,
        }
    }

    /// Coefficients of `U` starting at `u^3`, if polynomial.
    pub fn potential_coeffs(&self) -> Option<Vec<f64>> {
        self.g_coeffs().map(|c| {
            c.iter()
                .enumerate()
                .map(|(i, g)| g / (i + 3) as f64)
                .collect()
        })
    }

    /// Polynomial degree of `g` (0 for `g = 0`), if polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.g_coeffs().map(|c| {
            c.iter()
                .rposition(|&x| x != 0.0)
                .map_or(0, |i| i + 2)
        })
    }

    pub fn g(&self, u: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => u * u * horner(c, u),
            Nonlinearity::Callable { g, .. } => g(u),
        }
    }

    pub fn potential(&self, u: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => {
                let mut acc = 0.0;
                for (i, g) in c.iter().enumerate().rev() {
                    acc = acc * u + g / (i + 3) as f64;
                }
                u * u * u * acc
            }
            Nonlinearity::Callable { potential, .. } => potential(u),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rho must be positive and finite, got {rho}"
        )))
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

/// Positions and velocities in frequency space at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: ModeVector,
    pub p: ModeVector,
    pub t: f64,
}

impl State {
    pub fn new(q: ModeVector, p: ModeVector, t: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "q has length {}, p has length {}",
                q.len(),
                p.len()
            )));
        }
        Ok(Self { q, p, t })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            q: ModeVector::zeros(len),
            p: ModeVector::zeros(len),
            t: 0.0,
        }
    }

    /// Builds a state from nodal displacement and velocity samples.
    pub fn from_nodal(grid: &Grid, u: &NodalField, v: &NodalField) -> Result<Self> {
        Ok(Self {
            q: grid.dft(u)?,
            p: grid.dft(v)?,
            t: 0.0,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            q: self.q.scaled(factor),
            p: self.p.scaled(factor),
            t: self.t,
        }
    }

    /// Max-norm distance over both components.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.q.max_abs_diff(&other.q).max(self.p.max_abs_diff(&other.p))
    }

    pub fn max_abs(&self) -> f64 {
        self.q.max_abs().max(self.p.max_abs())
    }
}

/// `f(q) = -F(g(F^-1 q))`, with `g` applied pointwise on the grid.
pub fn apply_nonlinearity(q: &ModeVector, spec: &SystemSpec, grid: &Grid) -> Result<ModeVector> {
    let mut nodal = grid.idft(q)?;
    for v in nodal.values.iter_mut() {
        *v = -spec.g(*v);
    }
    grid.dft(&nodal)
}

/// `V(q) = 1/(2M) sum_k U((F^-1 q)_k)`.
pub fn potential_energy(q: &ModeVector, spec: &SystemSpec, grid: &Grid) -> Result<f64> {
    let nodal = grid.idft(q)?;
    let sum: f64 = nodal.values.iter().map(|&u| spec.potential(u)).sum();
    Ok(sum / nodal.len() as f64)
}

/// `H_M = 1/2 sum'_j (|p_j|^2 + omega_j^2 |q_j|^2) + V(q)`.
pub fn energy(
    state: &State,
    spec: &SystemSpec,
    freqs: &FrequencyTable,
    grid: &Grid,
) -> Result<f64> {
    check_len(&state.q, freqs)?;
    let omegas = freqs.per_slot();
    let quadratic: f64 = state
        .q
        .coeffs()
        .iter()
        .zip(state.p.coeffs())
        .zip(&omegas)
        .map(|((q, p), w)| p.norm_sqr() + w * w * q.norm_sqr())
        .sum();
    Ok(0.5 * quadratic + potential_energy(&state.q, spec, grid)?)
}

/// `-sum''_j i j w_j q_{-j} p_j` for per-mode weights `w_j = weight(|j|)`.
///
/// The merged `+-M` boundary entry contributes nothing: its two quarter-weighted
/// terms cancel for real data.
fn weighted_momentum<W: Fn(usize) -> f64>(state: &State, weight: W) -> Result<f64> {
    let q = &state.q;
    let p = &state.p;
    let m = q.m();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for idx in 0..q.len() {
        if idx == m {
            continue;
        }
        let j = q.wavenumber(idx);
        let term = Complex64::new(0.0, -(j as f64)) * q.get(-j) * p.coeffs()[idx]
            * weight(j.unsigned_abs() as usize);
        scale += term.norm();
        sum += term;
    }
    if sum.im.abs() > MOMENTUM_IMAG_TOLERANCE * scale {
        return Err(Error::SymmetryViolation {
            residual: sum.im.abs(),
            scale,
        });
    }
    Ok(sum.re)
}

/// `K = -sum''_j i j q_{-j} p_j`.
pub fn momentum(state: &State) -> Result<f64> {
    if state.q.len() != state.p.len() {
        return Err(Error::InvalidInput("q and p lengths differ".into()));
    }
    weighted_momentum(state, |_| 1.0)
}

/// Actions `I_l = omega_l/2 |q_l|^2 + 1/(2 omega_l) |p_l|^2` for `l = 0..=M`.
pub fn actions(state: &State, freqs: &FrequencyTable) -> Result<Vec<f64>> {
    check_len(&state.q, freqs)?;
    Ok((0..=freqs.m())
        .map(|l| {
            let j = l as i64;
            let w = freqs.omega(j);
            0.5 * w * state.q.get(j).norm_sqr() + 0.5 / w * state.p.get(j).norm_sqr()
        })
        .collect())
}

/// `cos(h omega/2) / sinc(h omega/2)`, equal to 1 at `h = 0`.
pub fn modification_factor(h: f64, omega: f64) -> Result<f64> {
    let x = 0.5 * h * omega;
    if x == 0.0 {
        return Ok(1.0);
    }
    let sinc = x.sin() / x;
    if sinc.abs() < RESONANT_SINC_THRESHOLD {
        return Err(Error::ResonantStepsize { h, omega });
    }
    Ok(x.cos() / sinc)
}

fn modification_factors(freqs: &FrequencyTable, h: f64) -> Result<Vec<f64>> {
    freqs
        .omegas()
        .iter()
        .map(|&w| modification_factor(h, w))
        .collect()
}

/// `I^_l = cos(h omega_l/2)/sinc(h omega_l/2) * I_l`.
pub fn modified_actions(state: &State, freqs: &FrequencyTable, h: f64) -> Result<Vec<f64>> {
    let factors = modification_factors(freqs, h)?;
    Ok(actions(state, freqs)?
        .into_iter()
        .zip(factors)
        .map(|(i, f)| f * i)
        .collect())
}

/// `K^ = -sum''_j i j cos(h omega_j/2)/sinc(h omega_j/2) q_{-j} p_j`.
pub fn modified_momentum(state: &State, freqs: &FrequencyTable, h: f64) -> Result<f64> {
    check_len(&state.q, freqs)?;
    let factors = modification_factors(freqs, h)?;
    weighted_momentum(state, |l| factors[l])
}

/// Samples `u(x,0) = 0.1 (x/pi - 1)^3 (x/pi + 1)^2` and
/// `u_t(x,0) = 0.01 (x/pi) (x/pi - 1) (x/pi + 1)^2` on the grid.
pub fn initial_state(grid: &Grid) -> Result<State> {
    let u = grid.sample(initial_displacement);
    let v = grid.sample(initial_velocity);
    State::from_nodal(grid, &u, &v)
}

pub fn initial_displacement(x: f64) -> f64 {
    let y = x / std::f64::consts::PI;
    0.1 * (y - 1.0).powi(3) * (y + 1.0).powi(2)
}

pub fn initial_velocity(x: f64) -> f64 {
    let y = x / std::f64::consts::PI;
    0.01 * y * (y - 1.0) * (y + 1.0).powi(2)
}

/// `(||q||_{s+1}^2 + ||p||_s^2)^(1/2)`, the size of the data in the
/// smallness assumption.
pub fn epsilon_estimate(state: &State, freqs: &FrequencyTable, s: f64) -> Result<f64> {
    let nq = sobolev_norm(&state.q, freqs, s + 1.0)?;
    let np = sobolev_norm(&state.p, freqs, s)?;
    Ok(nq.hypot(np))
}

/// Relative drifts of momentum, modified momentum, actions and modified
/// actions against a reference state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftFunctionals {
    pub err_k: f64,
    pub err_mk: f64,
    pub err_i: f64,
    pub err_mi: f64,
    /// `|K(ref)|` (or `|K^(ref)|`) fell below [`MOMENTUM_REF_FLOOR`]; the
    /// momentum columns are absolute errors.
    pub momentum_absolute: bool,
    /// `false` when the step size is resonant for some mode; `err_mk` and
    /// `err_mi` are NaN.
    pub modified_valid: bool,
}

/// Precomputed reference values for repeated drift evaluation along a trajectory.
#[derive(Debug, Clone)]
pub struct DriftReference {
    k: f64,
    k_mod: Option<f64>,
    actions: Vec<f64>,
    actions_mod: Option<Vec<f64>>,
    weights: Vec<f64>,
    h: f64,
}

impl DriftReference {
    /// `s` selects the action weights `omega_l^(2s+1)`.
    pub fn new(reference: &State, freqs: &FrequencyTable, h: f64, s: f64) -> Result<Self> {
        let k = momentum(reference)?;
        let k_mod = optional_modified(modified_momentum(reference, freqs, h))?;
        let actions = actions(reference, freqs)?;
        let actions_mod = optional_modified(modified_actions(reference, freqs, h))?;
        let weights = freqs
            .omegas()
            .iter()
            .map(|w| w.powf(2.0 * s + 1.0))
            .collect();
        Ok(Self {
            k,
            k_mod,
            actions,
            actions_mod,
            weights,
            h,
        })
    }

    pub fn momentum(&self) -> f64 {
        self.k
    }

    pub fn modified_momentum(&self) -> Option<f64> {
        self.k_mod
    }

    pub fn evaluate(&self, state: &State, freqs: &FrequencyTable) -> Result<DriftFunctionals> {
        let mut absolute = false;
        let mut rel = |value: f64, reference: f64| {
            let diff = (value - reference).abs();
            if reference.abs() < MOMENTUM_REF_FLOOR {
                absolute = true;
                diff
            } else {
                diff / reference.abs()
            }
        };
        let err_k = rel(momentum(state)?, self.k);
        let err_i = weighted_relative(&self.weights, &actions(state, freqs)?, &self.actions);

        let (err_mk, err_mi, modified_valid) = match (&self.k_mod, &self.actions_mod) {
            (Some(k_ref), Some(i_ref)) => {
                let k_hat = modified_momentum(state, freqs, self.h)?;
                let i_hat = modified_actions(state, freqs, self.h)?;
                (
                    rel(k_hat, *k_ref),
                    weighted_relative(&self.weights, &i_hat, i_ref),
                    true,
                )
            }
            _ => (f64::NAN, f64::NAN, false),
        };
        Ok(DriftFunctionals {
            err_k,
            err_mk,
            err_i,
            err_mi,
            momentum_absolute: absolute,
            modified_valid,
        })
    }
}

fn optional_modified<T>(value: Result<T>) -> Result<Option<T>> {
    match value {
        Ok(v) => Ok(Some(v)),
        Err(Error::ResonantStepsize { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn weighted_relative(weights: &[f64], values: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = weights
        .iter()
        .zip(values.iter().zip(reference))
        .map(|(w, (v, r))| w * (v - r).abs())
        .sum();
    let den: f64 = weights
        .iter()
        .zip(reference)
        .map(|(w, r)| w * r.abs())
        .sum();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// errK, errMK, errI, errMI of `state` against the initial state `reference`.
pub fn drift_functionals(
    state: &State,
    reference: &State,
    freqs: &FrequencyTable,
    h: f64,
    s: f64,
) -> Result<DriftFunctionals> {
    DriftReference::new(reference, freqs, h, s)?.evaluate(state, freqs)
}
