//! Non-resonance conditions for a given stepsize and the set of near-resonant
//! index pairs `(j, k)`.
//!
//! Multi-indices `k = (k_0, ..., k_M)` act on the frequency vector
//! `omega = (omega_0, ..., omega_M)`; `<j>` is the unit vector at position `|j|`.
//! Everything here is a desk-scale diagnostic: enumeration grows exponentially
//! and is refused beyond [`ENUMERATION_LIMIT`].

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::integrator::phi::phi;
use crate::spectral::FrequencyTable;

/// Largest accepted `(M + 1) * N` for enumeration.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceParams {
    pub epsilon: f64,
    pub h: f64,
    /// Truncation number; `k` is enumerated up to `||k|| <= 2N`.
    pub n: usize,
    /// Highest mode index taken into account; at most the table's `M`.
    pub m: usize,
    pub sigma: f64,
    pub c0: f64,
}

impl ResonanceParams {
    pub fn validate(&self, freqs: &FrequencyTable) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if self.n == 0 {
            return bad("truncation number N must be at least 1".into());
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(self.c0 > 0.0) {
            return bad(format!("C0 must be positive, got {}", self.c0));
        }
        if self.m > freqs.m() {
            return bad(format!(
                "M = {} exceeds the frequency table's M = {}",
                self.m,
                freqs.m()
            ));
        }
        Ok(())
    }
}

/// Integer multi-index with cached `||k||` and `k . omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    k: Vec<i32>,
    norm: u32,
    dot: f64,
}

impl KVector {
    /// `k` indexed by `l = 0..k.len()`; needs `k.len() <= M + 1` of `freqs`.
    pub fn new(k: Vec<i32>, freqs: &FrequencyTable) -> Result<Self> {
        if k.len() > freqs.omegas().len() {
            return Err(Error::InvalidInput(format!(
                "k has {} entries, frequency table only {}",
                k.len(),
                freqs.omegas().len()
            )));
        }
        let norm = k.iter().map(|v| v.unsigned_abs()).sum();
        let dot = k
            .iter()
            .zip(freqs.omegas())
            .map(|(&v, w)| v as f64 * w)
            .sum();
        Ok(Self { k, norm, dot })
    }

    /// `sign * <j>` in a multi-index of length `len`.
    pub fn unit(j: i64, sign: i32, len: usize, freqs: &FrequencyTable) -> Result<Self> {
        let pos = j.unsigned_abs() as usize;
        if pos >= len {
            return Err(Error::InvalidInput(format!(
                "|j| = {pos} outside a k-vector of length {len}"
            )));
        }
        let mut k = vec![0; len];
        k[pos] = sign;
        Self::new(k, freqs)
    }

    pub fn entries(&self) -> &[i32] {
        &self.k
    }

    /// `sum_l |k_l|`
    pub fn norm(&self) -> u32 {
        self.norm
    }

    /// `sum_l k_l omega_l`
    pub fn dot(&self) -> f64 {
        self.dot
    }

    /// `prod_l omega_l^(sigma |k_l|)`
    pub fn weight(&self, freqs: &FrequencyTable, sigma: f64) -> f64 {
        self.k
            .iter()
            .zip(freqs.omegas())
            .map(|(&v, w)| w.powf(sigma * v.unsigned_abs() as f64))
            .product()
    }

    fn is_unit_of(&self, j: i64) -> bool {
        let pos = j.unsigned_abs() as usize;
        self.norm == 1 && self.k.get(pos).is_some_and(|v| v.abs() == 1)
    }
}

fn check_mode(j: i64, freqs: &FrequencyTable) -> Result<f64> {
    if j.unsigned_abs() as usize > freqs.m() {
        return Err(Error::InvalidInput(format!(
            "|j| = {} exceeds M = {}",
            j.unsigned_abs(),
            freqs.m()
        )));
    }
    Ok(freqs.omega(j))
}

/// `|sin(h/2 (omega_j - k.omega)) sin(h/2 (omega_j + k.omega))|`
fn sine_product(h: f64, omega_j: f64, dot: f64) -> f64 {
    ((0.5 * h * (omega_j - dot)).sin() * (0.5 * h * (omega_j + dot)).sin()).abs()
}

/// Whether `(j, k)` satisfies the non-resonance inequality
/// `|sin(h/2 (w_j - k.w)) sin(h/2 (w_j + k.w))| >= eps^(1/2) h^2 (w_j + |k.w|)`.
pub fn check_pair_nonres(
    j: i64,
    k: &KVector,
    freqs: &FrequencyTable,
    params: &ResonanceParams,
) -> Result<bool> {
    let w = check_mode(j, freqs)?;
    let h = params.h;
    let rhs = params.epsilon.sqrt() * h * h * (w + k.dot.abs());
    Ok(sine_product(h, w, k.dot) >= rhs)
}

/// Calls `visit` on every `k` of length `len` with `||k|| <= max_norm`,
/// in lexicographic order.
fn for_each_k(len: usize, max_norm: u32, visit: &mut dyn FnMut(&[i32])) {
    fn rec(k: &mut Vec<i32>, len: usize, rem: i32, visit: &mut dyn FnMut(&[i32])) {
        if k.len() == len {
            visit(k);
            return;
        }
        for v in -rem..=rem {
            k.push(v);
            rec(k, len, rem - v.abs(), visit);
            k.pop();
        }
    }
    rec(&mut Vec::with_capacity(len), len, max_norm as i32, visit);
}

fn check_enumeration_size(params: &ResonanceParams) -> Result<()> {
    let size = (params.m + 1) * params.n;
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "(M + 1) * N = {size} exceeds the limit {ENUMERATION_LIMIT}"
        )));
    }
    Ok(())
}

/// All `(j, k)` with `|j| <= M`, `||k|| <= 2N`, `k != +-<j>` that violate the
/// non-resonance inequality, sorted by `j`, then lexicographically by `k`.
pub fn near_resonant_set(
    freqs: &FrequencyTable,
    params: &ResonanceParams,
) -> Result<Vec<(i64, KVector)>> {
    params.validate(freqs)?;
    check_enumeration_size(params)?;
    let len = params.m + 1;
    let mut candidates = Vec::new();
    for_each_k(len, 2 * params.n as u32, &mut |k| candidates.push(k.to_vec()));
    let candidates = candidates
        .into_iter()
        .map(|k| KVector::new(k, freqs))
        .collect::<Result<Vec<_>>>()?;

    let m = params.m as i64;
    let mut set = Vec::new();
    for j in -m..=m {
        for k in &candidates {
            if k.is_unit_of(j) {
                continue;
            }
            if !check_pair_nonres(j, k, freqs, params)? {
                set.push((j, k.clone()));
            }
        }
    }
    Ok(set)
}

/// `|sin(h omega_l)| >= h eps^(1/2)` for `l = 0..=M`.
pub fn check_numerical_nonres(freqs: &FrequencyTable, params: &ResonanceParams) -> Vec<bool> {
    let threshold = params.h * params.epsilon.sqrt();
    freqs.omegas()[..=params.m.min(freqs.m())]
        .iter()
        .map(|w| (params.h * w).sin().abs() >= threshold)
        .collect()
}

/// The two-mode condition for `j = j1 + j2`, `k = s1 <j1> + s2 <j2>`:
/// `|sin(h/2 (w_j - k.w)) sin(h/2 (w_j + k.w))| >= c h^2 |2 phi_2(h^2 w_j^2)|`.
pub fn check_two_mode_nonres(
    j1: i64,
    j2: i64,
    signs: (i32, i32),
    freqs: &FrequencyTable,
    params: &ResonanceParams,
    c: f64,
) -> Result<bool> {
    if signs.0.abs() != 1 || signs.1.abs() != 1 {
        return Err(Error::InvalidParameter(format!(
            "signs must be +-1, got {signs:?}"
        )));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c must be nonnegative, got {c}"
        )));
    }
    let w = check_mode(j1 + j2, freqs)?;
    check_mode(j1, freqs)?;
    check_mode(j2, freqs)?;
    let dot = signs.0 as f64 * freqs.omega(j1) + signs.1 as f64 * freqs.omega(j2);
    let h = params.h;
    let rhs = c * h * h * (2.0 * phi(2, h * h * w * w)?).abs();
    Ok(sine_product(h, w, dot) >= rhs)
}

#[derive(Debug, Clone)]
pub struct ResonanceReport {
    pub params: ResonanceParams,
    pub near_resonant: Vec<(i64, KVector)>,
    /// Numerical non-resonance flag per mode `l = 0..=M`.
    pub numerical_nonres: Vec<bool>,
    /// `sup over the near-resonant set of omega_j^sigma / omega^(sigma|k|) eps^(||k||/2)`;
    /// 0 for an empty set.
    pub sup: f64,
    /// `C0 eps^N`
    pub threshold: f64,
}

impl ResonanceReport {
    pub fn passes(&self) -> bool {
        self.sup <= self.threshold
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let _ = writeln!(out, "epsilon: {:e}", p.epsilon);
        let _ = writeln!(out, "h: {}", p.h);
        let _ = writeln!(out, "N: {}", p.n);
        let _ = writeln!(out, "M: {}", p.m);
        let _ = writeln!(out, "sigma: {}", p.sigma);
        let _ = writeln!(out, "C0: {}", p.c0);
        let _ = writeln!(out, "near_resonant_count: {}", self.near_resonant.len());
        for (j, k) in &self.near_resonant {
            let _ = writeln!(out, "near_resonant: j={j} k={:?}", k.entries());
        }
        for (l, ok) in self.numerical_nonres.iter().enumerate() {
            let _ = writeln!(out, "numerical_nonres_{l}: {}", verdict(*ok));
        }
        let _ = writeln!(out, "sup_weighted: {:.16e}", self.sup);
        let _ = writeln!(out, "threshold: {:.16e}", self.threshold);
        let _ = writeln!(out, "verdict: {}", verdict(self.passes()));
        out
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// `omega_j^sigma / omega^(sigma|k|) eps^(||k||/2)` for one pair.
pub fn pair_weight(j: i64, k: &KVector, freqs: &FrequencyTable, params: &ResonanceParams) -> f64 {
    freqs.omega(j).powf(params.sigma) / k.weight(freqs, params.sigma)
        * params.epsilon.powf(0.5 * k.norm() as f64)
}

/// Largest [`pair_weight`] over `pairs`; 0 when empty.
pub fn sup_weight(pairs: &[(i64, KVector)], freqs: &FrequencyTable, params: &ResonanceParams) -> f64 {
    pairs
        .iter()
        .map(|(j, k)| pair_weight(*j, k, freqs, params))
        .fold(0.0, f64::max)
}

pub fn resonance_report(freqs: &FrequencyTable, params: &ResonanceParams) -> Result<ResonanceReport> {
    let near_resonant = near_resonant_set(freqs, params)?;
    let sup = sup_weight(&near_resonant, freqs, params);
    Ok(ResonanceReport {
        params: params.clone(),
        numerical_nonres: check_numerical_nonres(freqs, params),
        threshold: params.c0 * params.epsilon.powi(params.n as i32),
        near_resonant,
        sup,
    })
}
