//! Periodic collocation grid and the discrete Fourier transform pair between
//! nodal samples and Fourier coefficients.
//!
//! Nodes are `x_k = k*pi/M` for `k = -M..M-1`. Coefficients are stored for
//! `j = -M..M-1` in FFT order (position `j mod 2M`); the single `j = -M` entry
//! stands for the merged `+-M` boundary pair. Under that convention the
//! prime-weighted sums carry weight 1 on every stored entry and the
//! double-prime sums carry weight 1/2 on the merged boundary entry only.
//!
//! The forward transform carries the `1/2M` factor, the inverse none.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Imaginary residual (relative to the largest nodal value) above which the
/// inverse transform reports a symmetry violation.
pub const IDFT_IMAG_TOLERANCE: f64 = 1e-8;

/// Equidistant periodic grid on `[-pi, pi)` with `2M` nodes.
#[derive(Clone)]
pub struct Grid {
    half: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("half", &self.half).finish()
    }
}

impl Grid {
    /// Grid with half mode count `m` (vector length `2m`). Requires `2m >= 4`.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs 2M >= 4, got 2M = {}",
                2 * m
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            half: m,
            forward: planner.plan_fft_forward(2 * m),
            inverse: planner.plan_fft_inverse(2 * m),
        })
    }

    /// Grid from the full vector length `2M`, which must be even.
    pub fn with_len(two_m: usize) -> Result<Self> {
        if two_m % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "vector length must be even, got {two_m}"
            )));
        }
        Self::new(two_m / 2)
    }

    /// Half mode count `M`.
    pub fn m(&self) -> usize {
        self.half
    }

    /// Vector length `2M`.
    pub fn len(&self) -> usize {
        2 * self.half
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node `x_k = k*pi/M` for `k = -M..M-1`, in increasing order.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.half as f64;
        (0..self.len())
            .map(|i| (i as f64 - m) * std::f64::consts::PI / m)
            .collect()
    }

    /// Samples `func` at the grid nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, func: F) -> NodalField {
        NodalField {
            values: self.nodes().into_iter().map(func).collect(),
        }
    }

    /// Forward transform: `coeff(j) = 1/(2M) sum_k w_k exp(-i j x_k)`.
    ///
    /// The result is symmetrized so that it is exactly Hermitian.
    pub fn dft(&self, field: &NodalField) -> Result<ModeVector> {
        let n = self.len();
        if field.values.len() != n {
            return Err(Error::InvalidInput(format!(
                "nodal field has length {}, grid expects {n}",
                field.values.len()
            )));
        }
        let mut buf: Vec<Complex64> = field
            .values
            .iter()
            .map(|&w| Complex64::new(w, 0.0))
            .collect();
        self.forward.process(&mut buf);
        // Node index i corresponds to k = i - M, so exp(-i j x_k) picks up a
        // factor (-1)^j relative to the plain FFT.
        let scale = 1.0 / n as f64;
        for (idx, c) in buf.iter_mut().enumerate() {
            let sign = if idx % 2 == 0 { scale } else { -scale };
            *c *= sign;
        }
        let mut modes = ModeVector { coeffs: buf };
        modes.symmetrize();
        Ok(modes)
    }

    /// Inverse transform: `w_k = sum'_j coeff(j) exp(i j x_k)`.
    ///
    /// Fails with [`Error::SymmetryViolation`] when the synthesized field has
    /// an imaginary part above `1e-8` of its largest value.
    pub fn idft(&self, modes: &ModeVector) -> Result<NodalField> {
        let n = self.len();
        if modes.coeffs.len() != n {
            return Err(Error::InvalidInput(format!(
                "mode vector has length {}, grid expects {n}",
                modes.coeffs.len()
            )));
        }
        let mut buf: Vec<Complex64> = modes
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| if idx % 2 == 0 { c } else { -c })
            .collect();
        self.inverse.process(&mut buf);
        let scale = buf.iter().fold(0.0_f64, |acc, c| acc.max(c.re.abs()));
        let residual = buf.iter().fold(0.0_f64, |acc, c| acc.max(c.im.abs()));
        if residual > IDFT_IMAG_TOLERANCE * scale && residual > f64::MIN_POSITIVE {
            return Err(Error::SymmetryViolation { residual, scale });
        }
        Ok(NodalField {
            values: buf.into_iter().map(|c| c.re).collect(),
        })
    }
}

/// Real samples of a field at the `2M` grid nodes, ordered `k = -M..M-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Fourier coefficients `q_j`, `j = -M..M-1`, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    coeffs: Vec<Complex64>,
}

impl ModeVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Wraps raw coefficients given in FFT order.
    pub fn from_fft_order(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Half mode count `M`.
    pub fn m(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Storage position of wavenumber `j`; `j = M` aliases to `j = -M`.
    pub fn slot(&self, j: i64) -> usize {
        j.rem_euclid(self.coeffs.len() as i64) as usize
    }

    /// Signed wavenumber held at storage position `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let m = self.m();
        if idx < m {
            idx as i64
        } else {
            idx as i64 - self.coeffs.len() as i64
        }
    }

    pub fn get(&self, j: i64) -> Complex64 {
        self.coeffs[self.slot(j)]
    }

    pub fn set(&mut self, j: i64, value: Complex64) {
        let idx = self.slot(j);
        self.coeffs[idx] = value;
    }

    /// Sets `coeff(j) = value` and `coeff(-j) = conj(value)`.
    pub fn set_pair(&mut self, j: i64, value: Complex64) {
        self.set(j, value);
        self.set(-j, value.conj());
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.norm()))
    }

    /// Largest deviation from `coeff(-j) = conj(coeff(j))`, including the
    /// imaginary parts of the self-conjugate entries `j = 0` and `j = -M`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.coeffs.len();
        (0..n)
            .map(|idx| (self.coeffs[idx] - self.coeffs[(n - idx) % n].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Projects onto the Hermitian-symmetric subspace.
    pub fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        for idx in 0..=n / 2 {
            let mirror = (n - idx) % n;
            let avg = 0.5 * (self.coeffs[idx] + self.coeffs[mirror].conj());
            self.coeffs[idx] = avg;
            self.coeffs[mirror] = avg.conj();
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &ModeVector, factor: f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
        }
    }

    /// Max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &ModeVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Prime-weighted inner product `Re sum'_j conj(a_j) b_j`.
    pub fn inner(&self, other: &ModeVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Double-prime weight of storage position `idx`.
    pub fn double_prime_weight(&self, idx: usize) -> f64 {
        if idx == self.m() {
            0.5
        } else {
            1.0
        }
    }
}

/// `omega_j = sqrt(rho + j^2)` for `|j| <= M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    omega: Vec<f64>,
    rho: f64,
    m: usize,
}

impl FrequencyTable {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `omega_j`; depends only on `|j|`.
    pub fn omega(&self, j: i64) -> f64 {
        self.omega[j.unsigned_abs() as usize]
    }

    /// `omega_l` for `l = 0..=M`.
    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    /// Frequencies laid out in the storage order of a length-`2M` [`ModeVector`].
    pub fn per_slot(&self) -> Vec<f64> {
        let n = 2 * self.m;
        (0..n)
            .map(|idx| {
                let j = if idx < self.m { idx } else { n - idx };
                self.omega[j]
            })
            .collect()
    }
}

pub fn build_frequencies(rho: f64, m: usize) -> Result<FrequencyTable> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rho must be positive and finite, got {rho}"
        )));
    }
    let omega = (0..=m).map(|j| (rho + (j * j) as f64).sqrt()).collect();
    Ok(FrequencyTable { omega, rho, m })
}

/// Weighted Sobolev norm `(sum''_j omega_j^(2s) |q_j|^2)^(1/2)`.
pub fn sobolev_norm(modes: &ModeVector, freqs: &FrequencyTable, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Sobolev index must be nonnegative, got {s}"
        )));
    }
    check_len(modes, freqs)?;
    let omegas = freqs.per_slot();
    let sum: f64 = modes
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| modes.double_prime_weight(idx) * omegas[idx].powf(2.0 * s) * c.norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

pub(crate) fn check_len(modes: &ModeVector, freqs: &FrequencyTable) -> Result<()> {
    if modes.len() != 2 * freqs.m() {
        return Err(Error::InvalidInput(format!(
            "mode vector has length {}, frequency table is for 2M = {}",
            modes.len(),
            2 * freqs.m()
        )));
    }
    Ok(())
}
