//! The adapted average vector field (AAVF) time stepper
//!
//! ```text
//! q1 = phi0 q0 + h phi1 p0 + h^2 phi2 I
//! p1 = -h Omega^2 phi1 q0 + phi0 p0 + h phi1 I,   I = int_0^1 f((1-s) q0 + s q1) ds
//! ```
//!
//! with `phi_l = phi_l(h^2 Omega^2)`. The implicit `q`-equation is solved by
//! fixed-point iteration; the `p`-update reuses the integral from the last
//! iteration so both lines see the same quadrature value.

pub mod phi;
pub mod quadrature;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{check_len, FrequencyTable, Grid, ModeVector, NodalField};
use crate::system::{energy, DriftReference, State, SystemSpec};

pub use phi::phi;
pub use quadrature::{avf_integral, gauss_legendre, Quadrature};

use quadrature::NodalRule;

pub const DEFAULT_FP_TOL: f64 = 1e-13;
pub const DEFAULT_FP_MAX_ITERS: usize = 100;

/// Threshold on `|cos(h omega/2)|` below which `tan(h omega/2)` is treated as infinite.
pub const RESONANT_COS_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Step size; negative values integrate backwards.
    pub h: f64,
    pub quadrature: Quadrature,
    /// Fixed-point increment tolerance relative to `max(|q_n|, |q_{n+1}|)`.
    pub fp_tol: f64,
    pub fp_max_iters: usize,
}

impl StepperConfig {
    pub fn new(h: f64, quadrature: Quadrature) -> Self {
        Self {
            h,
            quadrature,
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iters: DEFAULT_FP_MAX_ITERS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be finite and nonzero, got {}",
                self.h
            )));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol < 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "fixed-point tolerance must lie in (0, 1e-6), got {}",
                self.fp_tol
            )));
        }
        if self.fp_max_iters == 0 {
            return Err(Error::InvalidParameter(
                "fixed-point iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-mode `phi_0, phi_1, phi_2` at `v = (h omega_l)^2` and `tan(h omega_l/2)/omega_l`, `l = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    pub h: f64,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    /// `None` where `|cos(h omega/2)| < RESONANT_COS_THRESHOLD`.
    pub tan_half_over_omega: Vec<Option<f64>>,
}

impl PhiTable {
    pub fn new(freqs: &FrequencyTable, h: f64) -> Self {
        let mut table = PhiTable {
            h,
            phi0: Vec::with_capacity(freqs.m() + 1),
            phi1: Vec::with_capacity(freqs.m() + 1),
            phi2: Vec::with_capacity(freqs.m() + 1),
            tan_half_over_omega: Vec::with_capacity(freqs.m() + 1),
        };
        for &w in freqs.omegas() {
            let v = (h * w) * (h * w);
            let eval = |l| phi::phi(l, v).expect("index and argument are valid");
            table.phi0.push(eval(0));
            table.phi1.push(eval(1));
            table.phi2.push(eval(2));
            let half = 0.5 * h * w;
            table.tan_half_over_omega.push(if half.cos().abs() < RESONANT_COS_THRESHOLD {
                None
            } else {
                Some(half.tan() / w)
            });
        }
        table
    }
}

/// Per-slot coefficients of the two update lines in increment form:
///
/// ```text
/// q1 - q0 = a q0 + c1 p0 + c2 I
/// p1 - p0 = pq q0 + a p0 + c1 I
/// ```
#[derive(Debug, Clone)]
struct UpdateCoefficients {
    /// phi0 - 1 = -(h omega)^2 phi2
    a: Vec<f64>,
    /// h phi1
    c1: Vec<f64>,
    /// h^2 phi2
    c2: Vec<f64>,
    /// -h omega^2 phi1
    pq: Vec<f64>,
}

impl UpdateCoefficients {
    fn new(table: &PhiTable, freqs: &FrequencyTable) -> Self {
        let h = table.h;
        let m = freqs.m();
        let n = 2 * m;
        let level = |idx: usize| if idx <= m { idx } else { n - idx };
        let blocks: Vec<[f64; 3]> = (0..=m)
            .map(|l| {
                let w = freqs.omegas()[l];
                let hw = h * w;
                unimodular_block(
                    -(hw * hw) * table.phi2[l],
                    h * table.phi1[l],
                    -h * w * w * table.phi1[l],
                )
            })
            .collect();
        let mut c = UpdateCoefficients {
            a: Vec::with_capacity(n),
            c1: Vec::with_capacity(n),
            c2: Vec::with_capacity(n),
            pq: Vec::with_capacity(n),
        };
        for idx in 0..n {
            let l = level(idx);
            let [a, c1, pq] = blocks[l];
            c.a.push(a);
            c.c1.push(c1);
            c.c2.push(h * h * table.phi2[l]);
            c.pq.push(pq);
        }
        c
    }
}

/// Ulp offsets tried for `a` and `c1` in [`unimodular_block`].
const UNIMODULAR_SEARCH_A: i32 = 24;
const UNIMODULAR_SEARCH_C1: i32 = 48;
/// `pq` may move at most this many ulps.
const UNIMODULAR_MAX_PQ_ULPS: f64 = 256.0;

/// Nudges the rounded linear block `[[1 + a, c1], [pq, 1 + a]]` by a few ulps
/// so that its determinant is as close to 1 as the floating-point lattice allows.
///
/// A determinant off by `d` makes every linear invariant drift by `~n*d`
/// over `n` steps; with plain rounding `d` is of order 1e-16.
fn unimodular_block(a: f64, c1: f64, pq: f64) -> [f64; 3] {
    let mut best = [a, c1, pq];
    let mut best_err = det_minus_one(a, c1, pq).abs();
    let pq_ulp = (pq.next_up() - pq).abs();
    for ka in -UNIMODULAR_SEARCH_A..=UNIMODULAR_SEARCH_A {
        let x = ulp_offset(a, ka);
        for k1 in -UNIMODULAR_SEARCH_C1..=UNIMODULAR_SEARCH_C1 {
            let y = ulp_offset(c1, k1);
            if y == 0.0 {
                continue;
            }
            // pq solving det = 1 for these (x, y), then its neighbours
            let target = pq + det_minus_one(x, y, pq) / y;
            if !((target - pq).abs() <= UNIMODULAR_MAX_PQ_ULPS * pq_ulp) {
                continue;
            }
            for k2 in -2..=2 {
                let z = ulp_offset(target, k2);
                let err = det_minus_one(x, y, z).abs();
                if err < best_err {
                    best = [x, y, z];
                    best_err = err;
                }
            }
        }
    }
    best
}

fn ulp_offset(x: f64, k: i32) -> f64 {
    let mut y = x;
    for _ in 0..k.unsigned_abs() {
        y = if k > 0 { y.next_up() } else { y.next_down() };
    }
    y
}

/// `(1 + a)^2 - c1*pq - 1 = 2a + a^2 - c1*pq` evaluated with error-free transformations.
fn det_minus_one(a: f64, c1: f64, pq: f64) -> f64 {
    let (p1, e1) = two_prod(a, a);
    let (p2, e2) = two_prod(c1, pq);
    let (s1, t1) = two_sum(2.0 * a, p1);
    let (s2, t2) = two_sum(s1, -p2);
    s2 + (t2 + t1 + (e1 - e2))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Changes of `q` and `p` over one step.
#[derive(Debug, Clone)]
pub struct Increment {
    pub dq: ModeVector,
    pub dp: ModeVector,
    pub iterations: usize,
    /// Final fixed-point increment relative to `max(|q_n|, |q_{n+1}|)`.
    pub residual: f64,
}

/// Outcome of one step with solver statistics.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: State,
    pub iterations: usize,
    /// Final fixed-point increment relative to `max(|q_n|, |q_{n+1}|)`.
    pub residual: f64,
}

/// AAVF stepper bound to one system, grid and configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: SystemSpec,
    freqs: FrequencyTable,
    grid: Grid,
    cfg: StepperConfig,
    table: PhiTable,
    coeffs: UpdateCoefficients,
    rule: NodalRule,
}

impl Stepper {
    pub fn new(
        spec: &SystemSpec,
        freqs: &FrequencyTable,
        grid: &Grid,
        cfg: StepperConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if freqs.m() != grid.m() {
            return Err(Error::InvalidInput(format!(
                "frequency table has M = {}, grid has M = {}",
                freqs.m(),
                grid.m()
            )));
        }
        let table = PhiTable::new(freqs, cfg.h);
        let coeffs = UpdateCoefficients::new(&table, freqs);
        Ok(Self {
            rule: NodalRule::new(cfg.quadrature, spec)?,
            spec: spec.clone(),
            freqs: freqs.clone(),
            grid: grid.clone(),
            cfg,
            table,
            coeffs,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn phi_table(&self) -> &PhiTable {
        &self.table
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn freqs(&self) -> &FrequencyTable {
        &self.freqs
    }

    /// `a q + c1 p`, the linear part of the `q`-increment.
    fn linear_dq(&self, state: &State) -> ModeVector {
        let c = &self.coeffs;
        ModeVector::from_fft_order(
            state
                .q
                .coeffs()
                .iter()
                .zip(state.p.coeffs())
                .enumerate()
                .map(|(i, (q, p))| q * c.a[i] + p * c.c1[i])
                .collect(),
        )
    }

    fn dq_update(&self, linear: &ModeVector, integral: &ModeVector) -> ModeVector {
        let c2 = &self.coeffs.c2;
        ModeVector::from_fft_order(
            linear
                .coeffs()
                .iter()
                .zip(integral.coeffs())
                .enumerate()
                .map(|(i, (s, f))| s + f * c2[i])
                .collect(),
        )
    }

    fn dp_update(&self, state: &State, integral: &ModeVector) -> ModeVector {
        let c = &self.coeffs;
        ModeVector::from_fft_order(
            state
                .q
                .coeffs()
                .iter()
                .zip(state.p.coeffs())
                .zip(integral.coeffs())
                .enumerate()
                .map(|(i, ((q, p), f))| q * c.pq[i] + p * c.a[i] + f * c.c1[i])
                .collect(),
        )
    }

    fn integral(&self, start: &NodalField, end: &ModeVector) -> Result<ModeVector> {
        let end = self.grid.idft(end)?;
        self.rule.integral(&self.spec, &self.grid, start, &end)
    }

    fn check_state(&self, state: &State) -> Result<()> {
        check_len(&state.q, &self.freqs)?;
        check_len(&state.p, &self.freqs)
    }

    /// Solves the implicit `q`-equation and returns the increments of one step.
    pub fn increment(&self, state: &State) -> Result<Increment> {
        self.check_state(state)?;
        let start = self.grid.idft(&state.q)?;
        let linear = self.linear_dq(state);
        let q_norm = state.q.max_abs();

        let mut dq = linear.clone();
        let mut residual = f64::INFINITY;
        for iteration in 1..=self.cfg.fp_max_iters {
            let end = state.q.add_scaled(&dq, 1.0);
            let integral = self.integral(&start, &end)?;
            let next = self.dq_update(&linear, &integral);
            let change = next.max_abs_diff(&dq);
            let scale = q_norm.max(state.q.add_scaled(&next, 1.0).max_abs());
            residual = if scale > 0.0 { change / scale } else { 0.0 };
            if change <= self.cfg.fp_tol * scale {
                return Ok(Increment {
                    dq: next,
                    dp: self.dp_update(state, &integral),
                    iterations: iteration,
                    residual,
                });
            }
            dq = next;
        }
        Err(Error::NonConvergence {
            iterations: self.cfg.fp_max_iters,
            residual,
            step: None,
        })
    }

    /// One AAVF step with solver statistics.
    pub fn step_report(&self, state: &State) -> Result<StepReport> {
        let inc = self.increment(state)?;
        Ok(StepReport {
            state: State {
                q: state.q.add_scaled(&inc.dq, 1.0),
                p: state.p.add_scaled(&inc.dp, 1.0),
                t: state.t + self.cfg.h,
            },
            iterations: inc.iterations,
            residual: inc.residual,
        })
    }

    pub fn step(&self, state: &State) -> Result<State> {
        self.step_report(state).map(|r| r.state)
    }

    /// A step cut off after exactly `iterations` fixed-point sweeps, with the
    /// `p`-update taking the integral re-evaluated at the returned `q`.
    ///
    /// Intended as a negative control for the structural residual checks.
    pub fn step_truncated(&self, state: &State, iterations: usize) -> Result<State> {
        self.check_state(state)?;
        let start = self.grid.idft(&state.q)?;
        let linear = self.linear_dq(state);
        let mut dq = linear.clone();
        for _ in 0..iterations {
            let integral = self.integral(&start, &state.q.add_scaled(&dq, 1.0))?;
            dq = self.dq_update(&linear, &integral);
        }
        let q = state.q.add_scaled(&dq, 1.0);
        let integral = self.integral(&start, &q)?;
        let dp = self.dp_update(state, &integral);
        Ok(State {
            q,
            p: state.p.add_scaled(&dp, 1.0),
            t: state.t + self.cfg.h,
        })
    }
}

/// Repeated stepping with compensated (Kahan) accumulation of the increments,
/// which keeps round-off in the invariants growing like a random walk rather
/// than linearly in the number of steps.
#[derive(Debug, Clone)]
pub struct Evolution<'a> {
    stepper: &'a Stepper,
    state: State,
    q_carry: Vec<Complex64>,
    p_carry: Vec<Complex64>,
    t0: f64,
    steps: usize,
}

impl<'a> Evolution<'a> {
    pub fn new(stepper: &'a Stepper, initial: State) -> Self {
        let n = initial.q.len();
        Self {
            stepper,
            t0: initial.t,
            state: initial,
            q_carry: vec![Complex64::new(0.0, 0.0); n],
            p_carry: vec![Complex64::new(0.0, 0.0); n],
            steps: 0,
        }
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn into_state(self) -> State {
        self.state
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Takes one step; errors carry the (1-based) index of the failing step.
    pub fn advance(&mut self) -> Result<&State> {
        let inc = self
            .stepper
            .increment(&self.state)
            .map_err(|e| e.at_step(self.steps + 1))?;
        kahan_add(self.state.q.coeffs_mut(), &mut self.q_carry, inc.dq.coeffs());
        kahan_add(self.state.p.coeffs_mut(), &mut self.p_carry, inc.dp.coeffs());
        self.steps += 1;
        // avoid accumulating roundoff in t
        self.state.t = self.t0 + self.steps as f64 * self.stepper.config().h;
        Ok(&self.state)
    }
}

fn kahan_add(sum: &mut [Complex64], carry: &mut [Complex64], delta: &[Complex64]) {
    fn add(x: &mut f64, c: &mut f64, d: f64) {
        let y = d - *c;
        let t = *x + y;
        *c = (t - *x) - y;
        *x = t;
    }
    for ((s, c), d) in sum.iter_mut().zip(carry.iter_mut()).zip(delta) {
        add(&mut s.re, &mut c.re, d.re);
        add(&mut s.im, &mut c.im, d.im);
    }
}

/// One AAVF step of size `cfg.h`.
pub fn aavf_step(
    state: &State,
    spec: &SystemSpec,
    freqs: &FrequencyTable,
    grid: &Grid,
    cfg: StepperConfig,
) -> Result<State> {
    Stepper::new(spec, freqs, grid, cfg)?.step(state)
}

/// Exact flow of `q'' + Omega^2 q = 0` over time `h`.
pub fn exact_linear_step(state: &State, freqs: &FrequencyTable, h: f64) -> Result<State> {
    check_len(&state.q, freqs)?;
    check_len(&state.p, freqs)?;
    let omegas = freqs.per_slot();
    let mut q = ModeVector::zeros(state.q.len());
    let mut p = ModeVector::zeros(state.q.len());
    for (idx, &w) in omegas.iter().enumerate() {
        let (s, c) = (h * w).sin_cos();
        let q0 = state.q.coeffs()[idx];
        let p0 = state.p.coeffs()[idx];
        q.coeffs_mut()[idx] = q0 * c + p0 * (s / w);
        p.coeffs_mut()[idx] = q0 * (-w * s) + p0 * c;
    }
    Ok(State {
        q,
        p,
        t: state.t + h,
    })
}

/// Max-norm of `q1 - q0 - Omega^-1 tan(h Omega/2)(p1 + p0)` relative to
/// `max(|q0|, |q1|)` (absolute when both vanish).
pub fn qp_relation_residual(
    prev: &State,
    next: &State,
    freqs: &FrequencyTable,
    h: f64,
) -> Result<f64> {
    check_len(&prev.q, freqs)?;
    check_len(&next.q, freqs)?;
    let mut tan_factor = Vec::with_capacity(2 * freqs.m());
    for &w in &freqs.per_slot() {
        let half = 0.5 * h * w;
        if half.cos().abs() < RESONANT_COS_THRESHOLD {
            return Err(Error::ResonantStepsize { h, omega: w });
        }
        tan_factor.push(half.tan() / w);
    }
    let residual = (0..prev.q.len())
        .map(|i| {
            let dq = next.q.coeffs()[i] - prev.q.coeffs()[i];
            let sp = next.p.coeffs()[i] + prev.p.coeffs()[i];
            (dq - sp * tan_factor[i]).norm()
        })
        .fold(0.0, f64::max);
    let scale = prev.q.max_abs().max(next.q.max_abs());
    Ok(if scale > 0.0 { residual / scale } else { residual })
}

/// One sampled time along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub energy: f64,
    /// `(H(t) - H(0)) / max(1, |H(0)|)`
    pub dh_rel: f64,
    pub momentum: f64,
    /// NaN at resonant step sizes.
    pub modified_momentum: f64,
    pub err_k: f64,
    pub err_mk: f64,
    pub err_i: f64,
    pub err_mi: f64,
}

/// Builds [`DiagnosticRow`]s relative to a fixed initial state.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecorder {
    spec: SystemSpec,
    freqs: FrequencyTable,
    grid: Grid,
    h: f64,
    h0: f64,
    reference: DriftReference,
}

impl DiagnosticsRecorder {
    /// `s` sets the action weights `omega^(2s+1)` in errI and errMI.
    pub fn new(
        initial: &State,
        spec: &SystemSpec,
        freqs: &FrequencyTable,
        grid: &Grid,
        h: f64,
        s: f64,
    ) -> Result<Self> {
        Ok(Self {
            spec: spec.clone(),
            freqs: freqs.clone(),
            grid: grid.clone(),
            h,
            h0: energy(initial, spec, freqs, grid)?,
            reference: DriftReference::new(initial, freqs, h, s)?,
        })
    }

    pub fn initial_energy(&self) -> f64 {
        self.h0
    }

    pub fn row(&self, state: &State) -> Result<DiagnosticRow> {
        let e = energy(state, &self.spec, &self.freqs, &self.grid)?;
        let drift = self.reference.evaluate(state, &self.freqs)?;
        let modified_momentum = if drift.modified_valid {
            crate::system::modified_momentum(state, &self.freqs, self.h)?
        } else {
            f64::NAN
        };
        Ok(DiagnosticRow {
            t: state.t,
            energy: e,
            dh_rel: (e - self.h0) / self.h0.abs().max(1.0),
            momentum: crate::system::momentum(state)?,
            modified_momentum,
            err_k: drift.err_k,
            err_mk: drift.err_mk,
            err_i: drift.err_i,
            err_mi: drift.err_mi,
        })
    }
}

/// Sampling options for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub n_steps: usize,
    /// Emit a row every `sample_every` steps (and at step 0).
    pub sample_every: usize,
    /// Sobolev index for the action weights.
    pub s: f64,
}

pub fn integrate<F>(
    initial: &State,
    stepper: &Stepper,
    opts: IntegrateOptions,
    mut observer: F,
) -> Result<State>
where
    F: FnMut(&DiagnosticRow),
{
    if opts.sample_every == 0 {
        return Err(Error::InvalidParameter("sample_every must be positive".into()));
    }
    let recorder = DiagnosticsRecorder::new(
        initial,
        stepper.spec(),
        stepper.freqs(),
        stepper.grid(),
        stepper.config().h,
        opts.s,
    )?;
    observer(&recorder.row(initial)?);
    let mut evolution = Evolution::new(stepper, initial.clone());
    for n in 1..=opts.n_steps {
        let state = evolution.advance()?;
        if n % opts.sample_every == 0 {
            observer(&recorder.row(state)?);
        }
    }
    Ok(evolution.into_state())
}
