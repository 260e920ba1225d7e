//! Ground states of `E(phi) = int 1/2 |phi_x|^2 + 1/2 beta phi^4 + V phi^2`
//! on the unit L2 sphere, by a SAV discretization of the gradient flow
//! `phi_t = 1/2 phi_xx - (V phi + beta phi^3)` followed by a projection
//! (normalization) after every step.
//!
//! With `E1 = int 1/2 beta phi^4 + V phi^2` and
//! `G = (V phi + beta phi^3) / sqrt(E1 + E_c)` one step reads
//!
//! ```text
//! (phi+ - phi) / tau = 1/2 D2 phi_half - r_half G~
//! r+ - r             = <G~, phi+ - phi>
//! phi_next           = phi+ / ||phi+||
//! ```
//!
//! which dissipates `1/2 |phi|_1^2 + r^2` before the projection. The scalar
//! `r_half` is eliminated as in the dynamic solver, leaving two solves with
//! the symmetric positive definite multiplier `2/tau + k^2/2`.

use std::str::FromStr;
use std::sync::Arc;

use log::{debug, warn};

use crate::error::{Result, SavError};
use crate::sav::Bootstrap;
use crate::spectral::{Grid1D, RealField};

/// Allowed per-step energy increase before the trace is flagged non-monotone.
pub const MONOTONE_TOL: f64 = 1e-10;

/// What happens to the auxiliary variable after normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RMode {
    /// `r = sqrt(E1(phi_next) + E_c)`.
    Reset,
    /// `r = r+ / ||phi+||`, scaled along with `phi`.
    Carry,
}

impl FromStr for RMode {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reset" => Ok(RMode::Reset),
            "carry" => Ok(RMode::Carry),
            other => Err(SavError::Config(format!("unknown r mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateProblem {
    pub potential: RealField,
    pub beta: f64,
    pub energy_shift: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub r_mode: RMode,
    pub bootstrap: Bootstrap,
}

impl GroundStateProblem {
    pub const DEFAULT_TAU: f64 = 5e-4;
    pub const DEFAULT_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_STEPS: usize = 400_000;

    pub fn new(potential: RealField, beta: f64) -> Result<Self> {
        let p = Self {
            potential,
            beta,
            energy_shift: 1.0,
            tau: Self::DEFAULT_TAU,
            tol: Self::DEFAULT_TOL,
            max_steps: Self::DEFAULT_MAX_STEPS,
            r_mode: RMode::Reset,
            bootstrap: Bootstrap::Predictor,
        };
        p.validate()?;
        Ok(p)
    }

    /// Harmonic trap `V = x^2 / 2`.
    pub fn harmonic(grid: &Arc<Grid1D>, beta: f64) -> Result<Self> {
        Self::new(RealField::from_fn(grid, |x| 0.5 * x * x)?, beta)
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.potential.grid()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SavError::InvalidParameter(m));
        if !self.beta.is_finite() {
            return bad(format!("beta must be finite, got {}", self.beta));
        }
        if !(self.energy_shift.is_finite() && self.energy_shift > 0.0) {
            return bad(format!("energy shift must be positive, got {}", self.energy_shift));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("time step must be positive, got {}", self.tau));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        Ok(())
    }

    fn check(&self, phi: &RealField) -> Result<()> {
        if phi.grid().same_as(self.grid()) {
            Ok(())
        } else {
            Err(SavError::GridMismatch)
        }
    }

    fn e1_raw(&self, phi: &[f64]) -> f64 {
        let h = self.grid().spacing();
        h * phi
            .iter()
            .zip(self.potential.values())
            .map(|(&p, &v)| {
                let p2 = p * p;
                0.5 * self.beta * p2 * p2 + v * p2
            })
            .sum::<f64>()
    }

    fn g_raw(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let e1 = self.e1_raw(phi);
        let denom = e1 + self.energy_shift;
        if !(denom > 0.0) {
            return Err(SavError::EnergyShiftTooSmall { e1, shift: self.energy_shift });
        }
        let inv = 1.0 / denom.sqrt();
        Ok(phi
            .iter()
            .zip(self.potential.values())
            .map(|(&p, &v)| (v * p + self.beta * p * p * p) * inv)
            .collect())
    }

    fn quartic_raw(&self, phi: &[f64]) -> f64 {
        self.grid().spacing() * phi.iter().map(|p| p.powi(4)).sum::<f64>()
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub phi: RealField,
    pub energy: f64,
    /// `1/2 |phi|_1^2 + r^2` with the final auxiliary variable.
    pub modified_energy: f64,
    pub chemical_potential: f64,
    pub r: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `E(phi^k)` for `k = 0..=iterations`.
    pub energy_trace: Vec<f64>,
    pub monotone: bool,
    pub max_energy_rise: f64,
}

/// Potential plus interaction part `int 1/2 beta phi^4 + V phi^2`.
pub fn gs_e1(phi: &RealField, problem: &GroundStateProblem) -> Result<f64> {
    problem.check(phi)?;
    Ok(problem.e1_raw(phi.values()))
}

pub fn gs_energy(phi: &RealField, problem: &GroundStateProblem) -> Result<f64> {
    problem.check(phi)?;
    let g = phi.grid();
    let e = 0.5 * g.h1_seminorm_sq(phi.values()) + problem.e1_raw(phi.values());
    if e.is_finite() {
        Ok(e)
    } else {
        Err(SavError::NonFinite("ground-state energy"))
    }
}

/// `mu = int 1/2 |phi_x|^2 + beta phi^4 + V phi^2 = E + 1/2 beta int phi^4`.
pub fn chemical_potential(phi: &RealField, problem: &GroundStateProblem) -> Result<f64> {
    Ok(gs_energy(phi, problem)? + 0.5 * problem.beta * problem.quartic_raw(phi.values()))
}

/// Normalized gradient `G = (V phi + beta phi^3) / sqrt(E1 + E_c)`.
pub fn gs_gradient(phi: &RealField, problem: &GroundStateProblem) -> Result<RealField> {
    problem.check(phi)?;
    RealField::new(phi.grid(), problem.g_raw(phi.values())?)
}

/// History of `G` for the second-order extrapolation.
#[derive(Clone, Debug, Default)]
pub struct GsHistory {
    previous: Option<Vec<f64>>,
    current: Option<Vec<f64>>,
}

impl GsHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, g: &RealField) {
        self.push_raw(g.values().to_vec());
    }

    fn push_raw(&mut self, g: Vec<f64>) {
        self.previous = self.current.take();
        self.current = Some(g);
    }

    pub fn is_bootstrapping(&self) -> bool {
        self.previous.is_none()
    }
}

fn normalize(values: Vec<f64>, grid: &Grid1D) -> Result<(Vec<f64>, f64)> {
    let norm = grid.dot(&values, &values).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(SavError::NonFinite("ground-state iterate norm"));
    }
    Ok((values.into_iter().map(|v| v / norm).collect(), norm))
}

/// SAV step with a given `G~`, before normalization: returns `(phi+, r+)`.
fn unnormalized_step(
    phi: &[f64],
    r: f64,
    g: &[f64],
    grid: &Grid1D,
    tau: f64,
) -> Result<(Vec<f64>, f64)> {
    let a = 2.0 / tau;
    let solve = |b: &[f64]| grid.real_multiplier(b, |k| 1.0 / (a + 0.5 * k * k));
    let rhs: Vec<f64> = phi.iter().map(|v| a * v).collect();
    let x1 = solve(&rhs);
    let x2: Vec<f64> = solve(g).into_iter().map(|v| -v).collect();
    let diff: Vec<f64> = x1.iter().zip(phi).map(|(x, p)| x - p).collect();
    let denom = 1.0 - grid.dot(g, &x2);
    if denom.abs() < crate::sav::DENOMINATOR_TOL {
        return Err(SavError::StepFailure {
            step: 0,
            reason: format!("auxiliary denominator {denom:e} is numerically zero"),
        });
    }
    let r_half = (r + grid.dot(g, &diff)) / denom;
    let plus = x1
        .iter()
        .zip(&x2)
        .zip(phi)
        .map(|((u, w), p)| 2.0 * (u + r_half * w) - p)
        .collect();
    Ok((plus, 2.0 * r_half - r))
}

fn finish_step(
    plus: Vec<f64>,
    r_plus: f64,
    problem: &GroundStateProblem,
) -> Result<(Vec<f64>, f64)> {
    let grid = problem.grid();
    let (next, norm) = normalize(plus, grid)?;
    let r = match problem.r_mode {
        RMode::Reset => (problem.e1_raw(&next) + problem.energy_shift).sqrt(),
        RMode::Carry => r_plus / norm,
    };
    if !r.is_finite() {
        return Err(SavError::NonFinite("auxiliary variable"));
    }
    Ok((next, r))
}

/// One normalized step with a prescribed `G~`.
pub fn gs_step_with_g(
    phi: &RealField,
    r: f64,
    g_half: &RealField,
    problem: &GroundStateProblem,
    tau: f64,
) -> Result<(RealField, f64)> {
    problem.check(phi)?;
    problem.check(g_half)?;
    let grid = phi.grid();
    let (plus, r_plus) = unnormalized_step(phi.values(), r, g_half.values(), grid, tau)?;
    let (next, r) = finish_step(plus, r_plus, problem)?;
    Ok((RealField::new(grid, next)?, r))
}

/// `G~` at the half step: AB2 when two samples exist, otherwise `G` at the
/// state reached by a frozen-`G` half step (predictor) or `G(phi)` itself.
fn half_step_g(phi: &[f64], r: f64, history: &GsHistory, problem: &GroundStateProblem, tau: f64) -> Result<Vec<f64>> {
    let cur = history.current.as_ref().ok_or(SavError::EmptyHistory)?;
    match (&history.previous, problem.bootstrap) {
        (Some(prev), _) => Ok(cur.iter().zip(prev).map(|(a, b)| 1.5 * a - 0.5 * b).collect()),
        (None, Bootstrap::Frozen) => Ok(cur.clone()),
        (None, Bootstrap::Predictor) => {
            let (plus, _) = unnormalized_step(phi, r, cur, problem.grid(), 0.5 * tau)?;
            let (half, _) = normalize(plus, problem.grid())?;
            problem.g_raw(&half)
        }
    }
}

/// One step of the normalized flow. `history` must hold `G(phi)` as its
/// latest sample; the caller pushes `G(phi_next)` afterwards.
pub fn gs_step(
    phi: &RealField,
    r: f64,
    history: &GsHistory,
    problem: &GroundStateProblem,
    tau: f64,
) -> Result<(RealField, f64)> {
    problem.check(phi)?;
    let g = half_step_g(phi.values(), r, history, problem, tau)?;
    gs_step_with_g(phi, r, &RealField::new(phi.grid(), g)?, problem, tau)
}

/// Iterates until `||phi^(k+1) - phi^k||_0 / tau < tol` or `max_steps`.
pub fn solve_ground_state(problem: &GroundStateProblem, phi0: &RealField) -> Result<GroundStateResult> {
    problem.validate()?;
    problem.check(phi0)?;
    let grid = phi0.grid().clone();
    let tau = problem.tau;
    let (mut phi, _) = normalize(phi0.values().to_vec(), &grid)?;
    let mut r = (problem.e1_raw(&phi) + problem.energy_shift).sqrt();
    if !r.is_finite() {
        return Err(SavError::EnergyShiftTooSmall { e1: problem.e1_raw(&phi), shift: problem.energy_shift });
    }
    let energy_of = |v: &[f64]| 0.5 * grid.h1_seminorm_sq(v) + problem.e1_raw(v);
    let mut history = GsHistory::new();
    history.push_raw(problem.g_raw(&phi)?);
    let mut trace = vec![energy_of(&phi)];
    let mut max_rise = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < problem.max_steps {
        let step = iterations + 1;
        let tag = |e: SavError| SavError::StepFailure { step, reason: e.to_string() };
        let g = half_step_g(&phi, r, &history, problem, tau).map_err(tag)?;
        let (plus, r_plus) = unnormalized_step(&phi, r, &g, &grid, tau).map_err(tag)?;
        let (next, r_next) = finish_step(plus, r_plus, problem).map_err(tag)?;
        let change = {
            let d: Vec<f64> = next.iter().zip(&phi).map(|(a, b)| a - b).collect();
            grid.dot(&d, &d).sqrt() / tau
        };
        let e = energy_of(&next);
        if !e.is_finite() {
            return Err(tag(SavError::NonFinite("ground-state energy")));
        }
        let rise = e - trace[trace.len() - 1];
        max_rise = max_rise.max(rise);
        if rise > MONOTONE_TOL {
            debug!("energy rose by {rise:e} at step {step}");
        }
        trace.push(e);
        history.push_raw(problem.g_raw(&next).map_err(tag)?);
        phi = next;
        r = r_next;
        iterations = step;
        if change < problem.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("ground-state iteration stopped after {iterations} steps without meeting tol {}", problem.tol);
    }
    let monotone = max_rise <= MONOTONE_TOL;
    if !monotone {
        warn!("energy trace is not monotone: largest rise {max_rise:e}");
    }
    let phi = RealField::new(&grid, phi)?;
    let energy = gs_energy(&phi, problem)?;
    Ok(GroundStateResult {
        modified_energy: 0.5 * grid.h1_seminorm_sq(phi.values()) + r * r,
        chemical_potential: chemical_potential(&phi, problem)?,
        energy,
        phi,
        r,
        iterations,
        converged,
        energy_trace: trace,
        monotone,
        max_energy_rise: if max_rise.is_finite() { max_rise } else { 0.0 },
    })
}

/// `exp(-x^2/2) / pi^(1/4)`, normalized on the grid.
pub fn gaussian_guess(grid: &Arc<Grid1D>) -> Result<RealField> {
    let phi = RealField::from_fn(grid, |x| (-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25))?;
    let norm = phi.l2_norm();
    phi.map(|v| v / norm)
}
