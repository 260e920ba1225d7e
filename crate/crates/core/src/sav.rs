//! Crank-Nicolson scalar auxiliary variable time stepping.
//!
//! The unknowns are stacked as `Z = (P, Q)`. With `J = [[0, D2], [-D2, 0]]`,
//! `B = (-G1, G2)` and the pairing `<G, Z> = <G2, P> + <G1, Q>` the scheme reads
//!
//! ```text
//! (Z+ - Z) / tau = -J Z_half - r_half B
//! r+ - r         = 1/2 <G, Z+ - Z>
//! ```
//!
//! where `G` is extrapolated to the half step. Two equivalent linear solves
//! are provided (`Algorithm::Alg1` via a rank-one update of `I + tau/2 J`,
//! `Algorithm::Alg2` via the decomposition `Z_half = Z1 + r_half Z2`).
//! All linear solves with `(2/tau) I + J` reduce to a 2x2 block per
//! wavenumber after a Fourier transform.

use std::str::FromStr;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SavError};
use crate::model::{self, NlsProblem, SavState};
use crate::spectral::{dense_d2, ComplexField, Grid1D, RealField};
use crate::splitting::{split_step_parts, SplitOrder};

/// Denominators closer to zero than this abort the step.
pub const DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Alg1,
    Alg2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearSolver {
    FourierDiagonal,
    /// Dense LU on the nodal matrices; slow, intended as a cross-check on small grids.
    DenseReference,
}

/// How the half-step value of `g` is obtained on the very first step,
/// before two past evaluations exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bootstrap {
    /// Evaluate `g` after a Strang half step of size `tau/2`.
    Predictor,
    /// Use `g(Z^0)`; locally first order.
    Frozen,
}

impl FromStr for Bootstrap {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "predictor" => Ok(Bootstrap::Predictor),
            "frozen" => Ok(Bootstrap::Frozen),
            other => Err(SavError::Config(format!("unknown bootstrap '{other}'"))),
        }
    }
}

impl FromStr for Algorithm {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alg1" | "1" | "sav1" => Ok(Algorithm::Alg1),
            "alg2" | "2" | "sav2" => Ok(Algorithm::Alg2),
            other => Err(SavError::Config(format!("unknown SAV algorithm '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub tau: f64,
    pub algorithm: Algorithm,
    pub solver: LinearSolver,
    pub bootstrap: Bootstrap,
    /// Relative residual accepted from the dense solver.
    pub dense_residual_tol: f64,
}

impl StepperConfig {
    pub fn new(tau: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            algorithm: Algorithm::Alg2,
            solver: LinearSolver::FourierDiagonal,
            bootstrap: Bootstrap::Predictor,
            dense_residual_tol: 1e-9,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_bootstrap(mut self, bootstrap: Bootstrap) -> Self {
        self.bootstrap = bootstrap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(SavError::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        if !(self.dense_residual_tol > 0.0) {
            return Err(SavError::InvalidParameter("dense residual tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Per-step diagnostics. The SAV-only entries are `None` for splitting runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservationReport {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub hamiltonian: f64,
    pub modified_hamiltonian: Option<f64>,
    pub r: Option<f64>,
}

impl ConservationReport {
    pub fn of_state(step: usize, state: &SavState, problem: &NlsProblem) -> Result<Self> {
        Ok(Self {
            step,
            time: state.time,
            mass: model::mass(&state.p, &state.q),
            hamiltonian: model::hamiltonian(&state.p, &state.q, problem)?,
            modified_hamiltonian: Some(model::modified_hamiltonian(state)),
            r: Some(state.r),
        })
    }
}

#[derive(Clone, Debug)]
struct GSample {
    time: f64,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

/// The last two evaluations of `(G1, G2)`.
#[derive(Clone, Debug, Default)]
pub struct GHistory {
    previous: Option<GSample>,
    current: Option<GSample>,
}

impl GHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, g1: &RealField, g2: &RealField) {
        self.push_raw(time, g1.values().to_vec(), g2.values().to_vec());
    }

    fn push_raw(&mut self, time: f64, g1: Vec<f64>, g2: Vec<f64>) {
        self.previous = self.current.take();
        self.current = Some(GSample { time, g1, g2 });
    }

    pub fn len(&self) -> usize {
        self.current.is_some() as usize + self.previous.is_some() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_none()
    }

    /// True while fewer than two evaluations are stored.
    pub fn is_bootstrapping(&self) -> bool {
        self.previous.is_none()
    }

    pub fn clear(&mut self) {
        self.previous = None;
        self.current = None;
    }

    /// Time spacing between the two stored samples.
    pub fn spacing(&self) -> Option<f64> {
        Some(self.current.as_ref()?.time - self.previous.as_ref()?.time)
    }
}

/// Second-order extrapolation `3/2 G^k - 1/2 G^(k-1)` to `t^k + tau/2`.
/// With only one stored sample that sample is returned; the stepper decides
/// whether this frozen value or a predictor is used on the first step.
pub fn extrapolate_g(history: &GHistory, grid: &std::sync::Arc<Grid1D>) -> Result<(RealField, RealField)> {
    let (g1, g2) = extrapolate_raw(history)?;
    Ok((RealField::new(grid, g1)?, RealField::new(grid, g2)?))
}

fn extrapolate_raw(history: &GHistory) -> Result<(Vec<f64>, Vec<f64>)> {
    let cur = history.current.as_ref().ok_or(SavError::EmptyHistory)?;
    match &history.previous {
        None => Ok((cur.g1.clone(), cur.g2.clone())),
        Some(prev) => {
            let ab2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| 1.5 * x - 0.5 * y).collect();
            Ok((ab2(&cur.g1, &prev.g1), ab2(&cur.g2, &prev.g2)))
        }
    }
}

/// Initial SAV state `P = Re u0`, `Q = Im u0`, `r = sqrt(E1 + E_c)`.
/// Raises the energy shift first when the problem allows it.
pub fn init_state(u0: &ComplexField, problem: &mut NlsProblem) -> Result<SavState> {
    if !u0.grid().same_as(problem.grid()) {
        return Err(SavError::GridMismatch);
    }
    let (p, q) = (u0.re(), u0.im());
    let e1 = model::e1(&p, &q, problem)?;
    problem.adapt_shift_for(e1)?;
    let r = (e1 + problem.energy_shift()).sqrt();
    Ok(SavState { p, q, r, time: 0.0 })
}

// ---------------------------------------------------------------------------
// linear solves

/// Solves `((2/tau) I + J) z = b` mode by mode. With `w = z1 + i z2` the
/// block system becomes the scalar equation `(2/tau + i k^2) w^ = b^`.
fn shifted_fourier(grid: &Grid1D, b1: &[f64], b2: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>) {
    let a = 2.0 / tau;
    let packed: Vec<Complex64> = b1.iter().zip(b2).map(|(&x, &y)| Complex64::new(x, y)).collect();
    let mut c = grid.transform(&packed);
    for (ci, &k) in c.iter_mut().zip(grid.wavenumbers()) {
        *ci /= Complex64::new(a, k * k);
    }
    grid.synthesize(&c).into_iter().map(|z| (z.re, z.im)).unzip()
}

/// Dense `s I + t J` as a `2N x 2N` matrix.
fn dense_operator(grid: &Grid1D, s: f64, t: f64) -> DMatrix<f64> {
    let n = grid.len();
    let d2 = dense_d2(grid);
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        m[(i, i)] = s;
    }
    for j in 0..n {
        for l in 0..n {
            m[(j, n + l)] = t * d2[(j, l)];
            m[(n + j, l)] = -t * d2[(j, l)];
        }
    }
    m
}

fn dense_solve(m: &DMatrix<f64>, b1: &[f64], b2: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b1.len();
    let rhs = DVector::from_iterator(2 * n, b1.iter().chain(b2).copied());
    let z = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SavError::StepFailure { step: 0, reason: "dense operator is singular".into() })?;
    let residual = (m * &z - &rhs).amax();
    let scale = rhs.amax().max(f64::MIN_POSITIVE);
    if residual > tol * scale {
        return Err(SavError::StepFailure {
            step: 0,
            reason: format!("dense solve residual {residual:e} above {:e}", tol * scale),
        });
    }
    Ok((z.as_slice()[..n].to_vec(), z.as_slice()[n..].to_vec()))
}

/// `((2/tau) I + J)^{-1} b` with the Fourier-diagonal solver.
/// `tau` may be negative (used to run the map backwards).
pub fn solve_shifted(rhs: (&RealField, &RealField), tau: f64) -> Result<(RealField, RealField)> {
    let grid = rhs.0.grid();
    if !grid.same_as(rhs.1.grid()) {
        return Err(SavError::GridMismatch);
    }
    if !(tau.is_finite() && tau != 0.0) {
        return Err(SavError::InvalidParameter(format!("time step must be nonzero, got {tau}")));
    }
    let (z1, z2) = shifted_fourier(grid, rhs.0.values(), rhs.1.values(), tau);
    Ok((RealField::new(grid, z1)?, RealField::new(grid, z2)?))
}

/// Same system solved by dense LU on the nodal second-derivative matrix.
pub fn solve_shifted_dense(
    rhs: (&RealField, &RealField),
    tau: f64,
    residual_tol: f64,
) -> Result<(RealField, RealField)> {
    let grid = rhs.0.grid();
    if !grid.same_as(rhs.1.grid()) {
        return Err(SavError::GridMismatch);
    }
    let m = dense_operator(grid, 2.0 / tau, 1.0);
    let (z1, z2) = dense_solve(&m, rhs.0.values(), rhs.1.values(), residual_tol)?;
    Ok((RealField::new(grid, z1)?, RealField::new(grid, z2)?))
}

/// Applies `s I + t J` (used for right-hand sides and residual checks).
pub fn apply_operator(z: (&RealField, &RealField), s: f64, t: f64) -> Result<(RealField, RealField)> {
    let grid = z.0.grid();
    if !grid.same_as(z.1.grid()) {
        return Err(SavError::GridMismatch);
    }
    let (a, b) = apply_raw(grid, z.0.values(), z.1.values(), s, t);
    Ok((RealField::new(grid, a)?, RealField::new(grid, b)?))
}

fn apply_raw(grid: &Grid1D, p: &[f64], q: &[f64], s: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    // s Z + t J Z = (s P + t D2 Q, s Q - t D2 P)
    let packed: Vec<Complex64> = p.iter().zip(q).map(|(&x, &y)| Complex64::new(x, y)).collect();
    let mut c = grid.transform(&packed);
    for (ci, &k) in c.iter_mut().zip(grid.wavenumbers()) {
        *ci *= Complex64::new(s, t * k * k);
    }
    grid.synthesize(&c).into_iter().map(|z| (z.re, z.im)).unzip()
}

/// The linear algebra a step needs, bound to one solver choice.
struct Solver<'a> {
    grid: &'a Grid1D,
    tau: f64,
    dense: Option<(DMatrix<f64>, DMatrix<f64>, f64)>,
}

impl<'a> Solver<'a> {
    fn new(grid: &'a Grid1D, tau: f64, config: &StepperConfig) -> Self {
        let dense = match config.solver {
            LinearSolver::FourierDiagonal => None,
            LinearSolver::DenseReference => Some((
                dense_operator(grid, 2.0 / tau, 1.0),
                dense_operator(grid, 1.0, 0.5 * tau),
                config.dense_residual_tol,
            )),
        };
        Self { grid, tau, dense }
    }

    /// `((2/tau) I + J)^{-1} b`
    fn shifted(&self, b1: &[f64], b2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.dense {
            None => Ok(shifted_fourier(self.grid, b1, b2, self.tau)),
            Some((s, _, tol)) => dense_solve(s, b1, b2, *tol),
        }
    }

    /// `(I + tau/2 J)^{-1} b`, i.e. `(2/tau)` times the shifted solve.
    fn a_inverse(&self, b1: &[f64], b2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.dense {
            None => {
                let (x, y) = shifted_fourier(self.grid, b1, b2, self.tau);
                let s = 2.0 / self.tau;
                Ok((x.iter().map(|v| s * v).collect(), y.iter().map(|v| s * v).collect()))
            }
            Some((_, a, tol)) => dense_solve(a, b1, b2, *tol),
        }
    }
}

// ---------------------------------------------------------------------------
// steps

fn pairing(grid: &Grid1D, g1: &[f64], g2: &[f64], p: &[f64], q: &[f64]) -> f64 {
    grid.dot(g2, p) + grid.dot(g1, q)
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

fn step_index(state: &SavState, tau: f64) -> usize {
    (state.time / tau).abs().round() as usize + 1
}

fn finish(state: &SavState, p: Vec<f64>, q: Vec<f64>, r: f64, tau: f64) -> Result<SavState> {
    let grid = state.grid();
    let fail = |what: &str| SavError::StepFailure {
        step: step_index(state, tau),
        reason: format!("non-finite {what} after the step"),
    };
    if !r.is_finite() {
        return Err(fail("r"));
    }
    let p = RealField::new(grid, p).map_err(|_| fail("P"))?;
    let q = RealField::new(grid, q).map_err(|_| fail("Q"))?;
    Ok(SavState { p, q, r, time: state.time + tau })
}

fn core_alg1(state: &SavState, g1: &[f64], g2: &[f64], solver: &Solver) -> Result<SavState> {
    let grid = state.grid();
    let tau = solver.tau;
    let (p, q) = (state.p.values(), state.q.values());
    let g_z = pairing(grid, g1, g2, p, q);
    // B = (-G1, G2)
    let b1: Vec<f64> = g1.iter().map(|v| -v).collect();
    let b2: Vec<f64> = g2.to_vec();
    // C = (I - tau/2 J) Z - tau r B + tau/4 <G, Z> B
    let (c1, c2) = apply_raw(grid, p, q, 1.0, -0.5 * tau);
    let coef = -tau * state.r + 0.25 * tau * g_z;
    let c1 = axpy(coef, &b1, &c1);
    let c2 = axpy(coef, &b2, &c2);
    let (w1p, w1q) = solver.a_inverse(&c1, &c2)?;
    let (w2p, w2q) = solver.a_inverse(&b1, &b2)?;
    let denom = 1.0 + 0.25 * tau * pairing(grid, g1, g2, &w2p, &w2q);
    if denom.abs() < DENOMINATOR_TOL {
        return Err(SavError::StepFailure {
            step: step_index(state, tau),
            reason: format!("rank-one denominator {denom:e} is numerically zero"),
        });
    }
    let s = pairing(grid, g1, g2, &w1p, &w1q) / denom;
    let p_new = axpy(-0.25 * tau * s, &w2p, &w1p);
    let q_new = axpy(-0.25 * tau * s, &w2q, &w1q);
    let r_new = state.r + 0.5 * (s - g_z);
    finish(state, p_new, q_new, r_new, tau)
}

fn core_alg2(state: &SavState, g1: &[f64], g2: &[f64], solver: &Solver) -> Result<SavState> {
    let grid = state.grid();
    let tau = solver.tau;
    let (p, q) = (state.p.values(), state.q.values());
    let a = 2.0 / tau;
    let rhs_p: Vec<f64> = p.iter().map(|v| a * v).collect();
    let rhs_q: Vec<f64> = q.iter().map(|v| a * v).collect();
    let (z1p, z1q) = solver.shifted(&rhs_p, &rhs_q)?;
    // Z2 solves with -B = (G1, -G2)
    let mg2: Vec<f64> = g2.iter().map(|v| -v).collect();
    let (z2p, z2q) = solver.shifted(g1, &mg2)?;
    let dp: Vec<f64> = z1p.iter().zip(p).map(|(x, y)| x - y).collect();
    let dq: Vec<f64> = z1q.iter().zip(q).map(|(x, y)| x - y).collect();
    let denom = 2.0 - pairing(grid, g1, g2, &z2p, &z2q);
    if denom.abs() < DENOMINATOR_TOL {
        return Err(SavError::StepFailure {
            step: step_index(state, tau),
            reason: format!("auxiliary denominator {denom:e} is numerically zero"),
        });
    }
    let r_half = (2.0 * state.r + pairing(grid, g1, g2, &dp, &dq)) / denom;
    let p_new: Vec<f64> = z1p.iter().zip(&z2p).zip(p).map(|((x, y), z)| 2.0 * (x + r_half * y) - z).collect();
    let q_new: Vec<f64> = z1q.iter().zip(&z2q).zip(q).map(|((x, y), z)| 2.0 * (x + r_half * y) - z).collect();
    finish(state, p_new, q_new, 2.0 * r_half - state.r, tau)
}

fn core_step(
    state: &SavState,
    g1: &[f64],
    g2: &[f64],
    tau: f64,
    config: &StepperConfig,
) -> Result<SavState> {
    let solver = Solver::new(state.grid(), tau, config);
    match config.algorithm {
        Algorithm::Alg1 => core_alg1(state, g1, g2, &solver),
        Algorithm::Alg2 => core_alg2(state, g1, g2, &solver),
    }
}

/// One Crank-Nicolson SAV step of size `tau` with a prescribed half-step `G`.
/// `tau` may be negative; with the same `G` a step forward followed by a step
/// backward is the identity.
pub fn step_with_g(
    state: &SavState,
    g_half: (&RealField, &RealField),
    tau: f64,
    problem: &NlsProblem,
    config: &StepperConfig,
) -> Result<SavState> {
    for f in [&state.p, &state.q, g_half.0, g_half.1] {
        if !f.grid().same_as(problem.grid()) {
            return Err(SavError::GridMismatch);
        }
    }
    if !(tau.is_finite() && tau != 0.0) {
        return Err(SavError::InvalidParameter(format!("time step must be nonzero, got {tau}")));
    }
    core_step(state, g_half.0.values(), g_half.1.values(), tau, config)
}

/// `G` at the half step: AB2 extrapolation once two samples exist, otherwise
/// according to the bootstrap policy.
fn half_step_g(
    state: &SavState,
    history: &GHistory,
    problem: &NlsProblem,
    config: &StepperConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !history.is_bootstrapping() || config.bootstrap == Bootstrap::Frozen {
        return extrapolate_raw(history);
    }
    if history.is_empty() {
        return Err(SavError::EmptyHistory);
    }
    let (p, q) = split_step_parts(&state.p, &state.q, SplitOrder::Strang, 0.5 * config.tau, problem)?;
    problem.g_pair_raw(p.values(), q.values())
}

/// One step of the `Alg1` variant (rank-one update of `I + tau/2 J`).
/// `history` must hold `G` evaluated at `state`.
pub fn step_alg1(
    state: &SavState,
    history: &GHistory,
    problem: &NlsProblem,
    config: &StepperConfig,
) -> Result<SavState> {
    let (g1, g2) = half_step_g(state, history, problem, config)?;
    let solver = Solver::new(state.grid(), config.tau, config);
    core_alg1(state, &g1, &g2, &solver)
}

/// One step of the `Alg2` variant (decomposition into two shifted solves).
/// `history` must hold `G` evaluated at `state`.
pub fn step_alg2(
    state: &SavState,
    history: &GHistory,
    problem: &NlsProblem,
    config: &StepperConfig,
) -> Result<SavState> {
    let (g1, g2) = half_step_g(state, history, problem, config)?;
    let solver = Solver::new(state.grid(), config.tau, config);
    core_alg2(state, &g1, &g2, &solver)
}

/// Stateful driver that owns the `G` history.
#[derive(Clone, Debug)]
pub struct SavStepper {
    config: StepperConfig,
    history: GHistory,
    steps: usize,
}

impl SavStepper {
    pub fn new(config: StepperConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, history: GHistory::new(), steps: 0 })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn history(&self) -> &GHistory {
        &self.history
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Advances `state` by one step; the first call records `G` at `state`.
    pub fn step(&mut self, state: &SavState, problem: &NlsProblem) -> Result<SavState> {
        if !state.grid().same_as(problem.grid()) {
            return Err(SavError::GridMismatch);
        }
        if self.history.is_empty() {
            let (g1, g2) = problem.g_pair_raw(state.p.values(), state.q.values())?;
            self.history.push_raw(state.time, g1, g2);
        }
        let index = self.steps + 1;
        let tag = |e: SavError| match e {
            SavError::StepFailure { reason, .. } => SavError::StepFailure { step: index, reason },
            other => SavError::StepFailure { step: index, reason: other.to_string() },
        };
        let next = match self.config.algorithm {
            Algorithm::Alg1 => step_alg1(state, &self.history, problem, &self.config),
            Algorithm::Alg2 => step_alg2(state, &self.history, problem, &self.config),
        }
        .map_err(tag)?;
        let (g1, g2) = problem.g_pair_raw(next.p.values(), next.q.values()).map_err(tag)?;
        self.history.push_raw(next.time, g1, g2);
        self.steps += 1;
        Ok(next)
    }
}

/// Number of steps `K = round(t_end / tau)` and the step `t_end / K` that
/// lands exactly on `t_end`.
pub fn steps_for(t_end: f64, tau: f64) -> Result<(usize, f64)> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(SavError::InvalidParameter(format!("final time must be >= 0, got {t_end}")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(SavError::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    let k = (t_end / tau).round();
    if k < 1.0 {
        if t_end > 0.0 {
            warn!("final time {t_end} is shorter than half a step {tau}; no step taken");
        }
        return Ok((0, tau));
    }
    let adjusted = t_end / k;
    if (adjusted - tau).abs() > 1e-12 * tau {
        info!("time step adjusted from {tau} to {adjusted} so that {k} steps reach t = {t_end}");
    }
    Ok((k as usize, adjusted))
}

/// Advances `state` to `t_end`. The observer is called for the initial state
/// and after every step; the reports are also returned.
pub fn run(
    state: &SavState,
    problem: &NlsProblem,
    config: &StepperConfig,
    t_end: f64,
    mut observer: impl FnMut(&ConservationReport, &SavState),
) -> Result<(SavState, Vec<ConservationReport>)> {
    config.validate()?;
    let (steps, tau) = steps_for(t_end, config.tau)?;
    let mut cfg = *config;
    cfg.tau = tau;
    let mut stepper = SavStepper::new(cfg)?;
    let mut current = state.clone();
    let mut reports = Vec::with_capacity(steps + 1);
    let first = ConservationReport::of_state(0, &current, problem)?;
    observer(&first, &current);
    reports.push(first);
    let t0 = state.time;
    for k in 1..=steps {
        let mut next = stepper.step(&current, problem)?;
        // avoid drift of the clock from repeated addition
        next.time = t0 + k as f64 * tau;
        let rep = ConservationReport::of_state(k, &next, problem)
            .map_err(|e| SavError::StepFailure { step: k, reason: e.to_string() })?;
        observer(&rep, &next);
        reports.push(rep);
        current = next;
    }
    Ok((current, reports))
}
