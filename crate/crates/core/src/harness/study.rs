use std::fmt;

use log::info;
use rayon::prelude::*;

use super::config::{RunConfig, Scheme, DEFAULT_TAU};
use super::metrics::{compute_errors_against, mean_order, modulus_error, observed_order, ErrorMetrics};
use crate::error::{Result, SavError};
use crate::initdata::InitialDataSpec;
use crate::model::{hamiltonian, NlsProblem};
use crate::sav::{self, Bootstrap, ConservationReport, StepperConfig};
use crate::spectral::ComplexField;
use crate::splitting::{run_split, SplitOrder, SplitScheme};

/// Outcome of one time integration.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub scheme: Scheme,
    pub field: ComplexField,
    /// One report per step, step 0 included.
    pub reports: Vec<ConservationReport>,
    /// Modulus error against the exact solution at each report, when known.
    pub e_u: Vec<Option<f64>>,
    /// The problem as used, after any adaptation of the energy shift.
    pub problem: NlsProblem,
    /// Step actually used (adjusted to land on the final time).
    pub tau: f64,
}

impl RunOutcome {
    pub fn final_report(&self) -> &ConservationReport {
        self.reports.last().expect("a run always has an initial report")
    }
}

/// Integrates `u0` with `scheme`. With `exact` set, `e_u` is filled at every step.
pub fn run_scheme(
    scheme: Scheme,
    u0: &ComplexField,
    mut problem: NlsProblem,
    tau: f64,
    t_end: f64,
    bootstrap: Bootstrap,
    exact: Option<&InitialDataSpec>,
) -> Result<RunOutcome> {
    let mut e_u = Vec::new();
    let mut first_err = None;
    let (field, reports, tau) = match scheme.algorithm() {
        Some(alg) => {
            let state = sav::init_state(u0, &mut problem)?;
            let cfg = StepperConfig::new(tau)?.with_algorithm(alg).with_bootstrap(bootstrap);
            let pr = &problem;
            let (end, reports) = sav::run(&state, pr, &cfg, t_end, |rep, st| {
                if let Some(spec) = exact {
                    track(spec, rep.time, &st.to_complex(), pr, &mut e_u, &mut first_err);
                }
            })?;
            let tau = sav::steps_for(t_end, tau)?.1;
            (end.to_complex(), reports, tau)
        }
        None => {
            let order = if scheme == Scheme::Lie { SplitOrder::Lie } else { SplitOrder::Strang };
            let split = SplitScheme::new(order, tau)?;
            let pr = &problem;
            let (end, reports) = run_split(u0, pr, &split, t_end, |rep, u| {
                if let Some(spec) = exact {
                    track(spec, rep.time, u, pr, &mut e_u, &mut first_err);
                }
            })?;
            (end, reports, sav::steps_for(t_end, tau)?.1)
        }
    };
    if let Some(e) = first_err {
        return Err(e);
    }
    if e_u.is_empty() {
        e_u = vec![None; reports.len()];
    }
    Ok(RunOutcome { scheme, field, reports, e_u, problem, tau })
}

fn track(
    spec: &InitialDataSpec,
    t: f64,
    u: &ComplexField,
    problem: &NlsProblem,
    out: &mut Vec<Option<f64>>,
    err: &mut Option<SavError>,
) {
    if err.is_some() {
        return;
    }
    let value = spec
        .exact(t, problem)
        .and_then(|ex| ex.map(|ex| modulus_error(u, &ex)).transpose());
    match value {
        Ok(v) => out.push(v),
        Err(e) => *err = Some(e),
    }
}

/// A single run described by `cfg`, with the per-step error when an exact
/// solution is known.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let grid = cfg.grid()?;
    let problem = cfg.problem(&grid)?;
    let u0 = cfg.initial_data(&grid)?;
    let spec = cfg.initial_spec();
    let exact = spec.exact(cfg.t_end, &problem)?.map(|_| &spec);
    run_scheme(cfg.scheme, &u0, problem, cfg.tau_or(DEFAULT_TAU), cfg.t_end, cfg.bootstrap, exact)
}

/// The per-step trace of a run; an alias of [`simulate`] kept for readability
/// at call sites that only care about conservation.
pub fn conservation_trace(cfg: &RunConfig) -> Result<RunOutcome> {
    simulate(cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceKind {
    Exact,
    /// Second SAV algorithm at the given step.
    SelfRef { tau: f64 },
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceKind::Exact => f.write_str("exact"),
            ReferenceKind::SelfRef { .. } => f.write_str("self"),
        }
    }
}

/// Reference field at the final time and the reference energy.
#[derive(Clone, Debug)]
pub struct Reference {
    pub field: ComplexField,
    pub hamiltonian: f64,
    pub kind: ReferenceKind,
}

/// Self-reference step as a fraction of the finest step of a family.
pub const SELF_REFERENCE_DIVISOR: f64 = 16.0;

/// Exact solution at `t_end` if known, otherwise a fine `sav2` run. In the
/// latter case the energy reference is `H(u0)`, which the flow conserves.
pub fn reference_for(cfg: &RunConfig, finest_tau: f64) -> Result<Reference> {
    let grid = cfg.grid()?;
    let problem = cfg.problem(&grid)?;
    if let Some(field) = cfg.initial_spec().exact(cfg.t_end, &problem)? {
        let hamiltonian = hamiltonian(&field.re(), &field.im(), &problem)?;
        return Ok(Reference { field, hamiltonian, kind: ReferenceKind::Exact });
    }
    let u0 = cfg.initial_data(&grid)?;
    let h0 = hamiltonian(&u0.re(), &u0.im(), &problem)?;
    let tau = finest_tau / SELF_REFERENCE_DIVISOR;
    info!("no exact solution known; computing a sav2 reference with tau = {tau}");
    let run = run_scheme(Scheme::Sav2, &u0, problem, tau, cfg.t_end, cfg.bootstrap, None)?;
    Ok(Reference { field: run.field, hamiltonian: h0, kind: ReferenceKind::SelfRef { tau: run.tau } })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    /// `tau` for temporal studies, `h` for spatial ones.
    pub param: f64,
    pub e_u: f64,
    pub e_h: f64,
    pub e_hmod: Option<f64>,
    pub order_u: Option<f64>,
    pub order_h: Option<f64>,
}

/// Builds rows with orders relative to the previous row. Parameters must be
/// strictly decreasing.
pub fn rows_from(params: &[f64], metrics: &[ErrorMetrics]) -> Result<Vec<ConvergenceRow>> {
    if params.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SavError::InvalidParameter("study parameters must be strictly decreasing".into()));
    }
    Ok(params
        .iter()
        .zip(metrics)
        .enumerate()
        .map(|(i, (&p, m))| {
            let prev = i.checked_sub(1).map(|j| (params[j], metrics[j]));
            ConvergenceRow {
                param: p,
                e_u: m.e_u,
                e_h: m.e_h,
                e_hmod: m.e_hmod,
                order_u: prev.and_then(|(pp, pm)| observed_order(pp, pm.e_u, p, m.e_u)),
                order_h: prev.and_then(|(pp, pm)| observed_order(pp, pm.e_h, p, m.e_h)),
            }
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub scheme: Scheme,
    pub rows: Vec<ConvergenceRow>,
    pub reference: ReferenceKind,
}

impl ConvergenceStudy {
    fn column(&self, pick: impl Fn(&ConvergenceRow) -> f64) -> (Vec<f64>, Vec<f64>) {
        (self.rows.iter().map(|r| r.param).collect(), self.rows.iter().map(pick).collect())
    }

    /// Mean slope of `e_u` in the asymptotic regime.
    pub fn mean_order_u(&self) -> Option<f64> {
        let (p, e) = self.column(|r| r.e_u);
        mean_order(&p, &e)
    }

    pub fn mean_order_h(&self) -> Option<f64> {
        let (p, e) = self.column(|r| r.e_h);
        mean_order(&p, &e)
    }

    pub fn mean_order_hmod(&self) -> Option<f64> {
        if self.rows.iter().any(|r| r.e_hmod.is_none()) {
            return None;
        }
        let (p, e) = self.column(|r| r.e_hmod.unwrap_or(0.0));
        mean_order(&p, &e)
    }
}

/// Runs every step of `taus` concurrently against a common reference.
pub fn study_with_reference(
    cfg: &RunConfig,
    scheme: Scheme,
    taus: &[f64],
    reference: &Reference,
) -> Result<ConvergenceStudy> {
    let grid = cfg.grid()?;
    let problem = cfg.problem(&grid)?;
    let u0 = cfg.initial_data(&grid)?;
    let metrics = taus
        .par_iter()
        .map(|&tau| {
            let run = run_scheme(scheme, &u0, problem.clone(), tau, cfg.t_end, cfg.bootstrap, None)?;
            let hmod = run.final_report().modified_hamiltonian;
            compute_errors_against(&run.field, &reference.field, reference.hamiltonian, &run.problem, hmod)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceStudy { scheme, rows: rows_from(taus, &metrics)?, reference: reference.kind })
}

/// Temporal convergence of `cfg.scheme` over `taus` (coarse to fine).
pub fn convergence_study(cfg: &RunConfig, taus: &[f64]) -> Result<ConvergenceStudy> {
    let finest = taus.last().copied().ok_or_else(|| SavError::Config("empty step family".into()))?;
    let reference = reference_for(cfg, finest)?;
    study_with_reference(cfg, cfg.scheme, taus, &reference)
}

/// The four schemes on one family and one reference.
pub fn compare_schemes(cfg: &RunConfig, taus: &[f64]) -> Result<Vec<ConvergenceStudy>> {
    let finest = taus.last().copied().ok_or_else(|| SavError::Config("empty step family".into()))?;
    let reference = reference_for(cfg, finest)?;
    Scheme::ALL
        .par_iter()
        .map(|&s| study_with_reference(cfg, s, taus, &reference))
        .collect()
}

/// Self-convergence in space at fixed `tau`: each `N` in `ns` is compared
/// with an `n_ref` run at the shared nodes. `param` is the mesh width.
pub fn spatial_study(cfg: &RunConfig, ns: &[usize], n_ref: usize) -> Result<Vec<ConvergenceRow>> {
    if ns.iter().any(|&n| n == 0 || !n_ref.is_multiple_of(n)) {
        return Err(SavError::InvalidParameter(format!("every N must divide the reference size {n_ref}")));
    }
    let at = |n: usize| -> Result<RunOutcome> {
        let mut c = cfg.clone();
        c.n = n;
        let grid = c.grid()?;
        let u0 = c.initial_data(&grid)?;
        run_scheme(c.scheme, &u0, c.problem(&grid)?, c.tau_or(DEFAULT_TAU), c.t_end, c.bootstrap, None)
    };
    let fine = at(n_ref)?;
    let h_ref = fine.final_report().hamiltonian;
    let runs = ns.par_iter().map(|&n| at(n)).collect::<Result<Vec<_>>>()?;
    let mut params = Vec::with_capacity(ns.len());
    let mut metrics = Vec::with_capacity(ns.len());
    for (run, &n) in runs.iter().zip(ns) {
        let stride = n_ref / n;
        let sub: Vec<_> = fine.field.values().iter().step_by(stride).copied().collect();
        let sub = ComplexField::new(run.field.grid(), sub)?;
        params.push(run.field.grid().spacing());
        metrics.push(ErrorMetrics {
            e_u: modulus_error(&run.field, &sub)?,
            e_h: (run.final_report().hamiltonian - h_ref).abs(),
            e_hmod: None,
        });
    }
    rows_from(&params, &metrics)
}

/// Largest pointwise change of the final density `|U|^2` when the potential
/// is shifted by the constant `c`.
pub fn potential_shift_defect(cfg: &RunConfig, c: f64) -> Result<f64> {
    let grid = cfg.grid()?;
    let problem = cfg.problem(&grid)?;
    let shifted = problem.with_potential_offset(c)?;
    let u0 = cfg.initial_data(&grid)?;
    let tau = cfg.tau_or(DEFAULT_TAU);
    let a = run_scheme(cfg.scheme, &u0, problem, tau, cfg.t_end, cfg.bootstrap, None)?;
    let b = run_scheme(cfg.scheme, &u0, shifted, tau, cfg.t_end, cfg.bootstrap, None)?;
    Ok(a.field
        .values()
        .iter()
        .zip(b.field.values())
        .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
        .fold(0.0, f64::max))
}
