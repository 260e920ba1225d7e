//! Lie and Strang split-step Fourier integrators.
//!
//! Both sub-flows are solved exactly: the free Schrodinger flow is a Fourier
//! multiplier and the potential/nonlinear flow is a pointwise phase rotation
//! (it leaves `|u|` unchanged).

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Result, SavError};
use crate::model::NlsProblem;
use crate::sav::{steps_for, ConservationReport};
use crate::spectral::{ComplexField, RealField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitOrder {
    Lie,
    Strang,
}

impl FromStr for SplitOrder {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lie" => Ok(SplitOrder::Lie),
            "strang" => Ok(SplitOrder::Strang),
            other => Err(SavError::Config(format!("unknown splitting order '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitScheme {
    order: SplitOrder,
    tau: f64,
}

impl SplitScheme {
    pub fn new(order: SplitOrder, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(SavError::InvalidParameter(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { order, tau })
    }

    pub fn order(&self) -> SplitOrder {
        self.order
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Exact flow of `i u_t = -u_xx` over `dt`.
pub fn linear_flow(u: &ComplexField, dt: f64) -> ComplexField {
    let grid = u.grid();
    let mut c = grid.transform(u.values());
    for (ci, &k) in c.iter_mut().zip(grid.wavenumbers()) {
        *ci *= Complex64::from_polar(1.0, -k * k * dt);
    }
    ComplexField::from_raw(grid, grid.synthesize(&c))
}

/// Exact flow of `i u_t = (V + f(|u|^2)) u` over `dt`.
pub fn nonlinear_flow(u: &ComplexField, dt: f64, problem: &NlsProblem) -> Result<ComplexField> {
    if !u.grid().same_as(problem.grid()) {
        return Err(SavError::GridMismatch);
    }
    let nl = problem.nonlinearity();
    let values = u
        .values()
        .iter()
        .zip(problem.potential().values())
        .map(|(&z, &v)| z * Complex64::from_polar(1.0, -(v + nl.f(z.norm_sqr())) * dt))
        .collect();
    ComplexField::new(u.grid(), values)
}

/// One step of size `dt` (any sign).
pub fn split_step_with(
    u: &ComplexField,
    order: SplitOrder,
    dt: f64,
    problem: &NlsProblem,
) -> Result<ComplexField> {
    match order {
        SplitOrder::Lie => nonlinear_flow(&linear_flow(u, dt), dt, problem),
        SplitOrder::Strang => {
            let half = linear_flow(u, 0.5 * dt);
            Ok(linear_flow(&nonlinear_flow(&half, dt, problem)?, 0.5 * dt))
        }
    }
}

pub fn split_step(u: &ComplexField, scheme: &SplitScheme, problem: &NlsProblem) -> Result<ComplexField> {
    split_step_with(u, scheme.order, scheme.tau, problem)
}

/// Diagnostics of a splitting state. There is no auxiliary variable, so the
/// SAV-only fields are left empty.
pub fn split_report(step: usize, time: f64, u: &ComplexField, problem: &NlsProblem) -> Result<ConservationReport> {
    let (p, q) = (u.re(), u.im());
    Ok(ConservationReport {
        step,
        time,
        mass: crate::model::mass(&p, &q),
        hamiltonian: crate::model::hamiltonian(&p, &q, problem)?,
        modified_hamiltonian: None,
        r: None,
    })
}

/// Advances `u0` to `t_end`; the step is adjusted to divide `t_end` exactly.
/// The observer sees every report (including step 0) with the current field.
pub fn run_split(
    u0: &ComplexField,
    problem: &NlsProblem,
    scheme: &SplitScheme,
    t_end: f64,
    mut observer: impl FnMut(&ConservationReport, &ComplexField),
) -> Result<(ComplexField, Vec<ConservationReport>)> {
    let (steps, tau) = steps_for(t_end, scheme.tau)?;
    let mut u = u0.clone();
    let mut reports = Vec::with_capacity(steps + 1);
    let first = split_report(0, 0.0, &u, problem)?;
    observer(&first, &u);
    reports.push(first);
    for k in 1..=steps {
        u = split_step_with(&u, scheme.order, tau, problem)
            .map_err(|e| SavError::StepFailure { step: k, reason: e.to_string() })?;
        let rep = split_report(k, k as f64 * tau, &u, problem)?;
        observer(&rep, &u);
        reports.push(rep);
    }
    Ok((u, reports))
}

/// Real and imaginary parts after one step, for callers working with `(P, Q)`.
pub(crate) fn split_step_parts(
    p: &RealField,
    q: &RealField,
    order: SplitOrder,
    dt: f64,
    problem: &NlsProblem,
) -> Result<(RealField, RealField)> {
    let u = split_step_with(&ComplexField::from_parts(p, q)?, order, dt, problem)?;
    Ok((u.re(), u.im()))
}
