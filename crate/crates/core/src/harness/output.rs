//! CSV emission. Every file starts with `#` lines echoing the resolved
//! configuration, followed by a header row and data rows. Reals are written
//! with 17 significant digits so that files from the same build compare
//! byte for byte.

use std::io::Write;

use super::config::RunConfig;
use super::study::{ConvergenceRow, ConvergenceStudy, ReferenceKind, RunOutcome};
use crate::error::Result;
use crate::groundstate::GroundStateResult;

pub const TRACE_HEADER: [&str; 7] = ["step", "t", "mass", "H", "H_mod", "r", "e_u"];
pub const CONVERGENCE_HEADER: [&str; 6] = ["param", "e_u", "e_H", "e_Hmod", "order_u", "order_H"];
pub const GROUND_STATE_HEADER: [&str; 2] = ["step", "E"];
pub const PROFILE_HEADER: [&str; 2] = ["x", "phi"];

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// Writes `# key = value` lines for the configuration and any extra entries.
pub fn write_metadata<W: Write>(
    w: &mut W,
    cfg: &RunConfig,
    default_tau: f64,
    extra: &[(&str, String)],
) -> Result<()> {
    for (k, v) in cfg.echo(default_tau) {
        writeln!(w, "# {k} = {v}")?;
    }
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

fn table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(mut w: W, cfg: &RunConfig, run: &RunOutcome) -> Result<()> {
    write_metadata(
        &mut w,
        cfg,
        run.tau,
        &[("energy-shift", fmt_real(run.problem.energy_shift())), ("steps", (run.reports.len() - 1).to_string())],
    )?;
    let rows = run.reports.iter().zip(&run.e_u).map(|(r, e)| {
        vec![
            r.step.to_string(),
            fmt_real(r.time),
            fmt_real(r.mass),
            fmt_real(r.hamiltonian),
            fmt_opt(r.modified_hamiltonian),
            fmt_opt(r.r),
            fmt_opt(*e),
        ]
    });
    table(w, &TRACE_HEADER, rows)
}

fn reference_meta(kind: ReferenceKind) -> Vec<(&'static str, String)> {
    let mut v = vec![("reference", kind.to_string())];
    if let ReferenceKind::SelfRef { tau } = kind {
        v.push(("reference-tau", fmt_real(tau)));
    }
    v
}

fn row_record(r: &ConvergenceRow) -> Vec<String> {
    vec![
        fmt_real(r.param),
        fmt_real(r.e_u),
        fmt_real(r.e_h),
        fmt_opt(r.e_hmod),
        fmt_opt(r.order_u),
        fmt_opt(r.order_h),
    ]
}

fn order_meta(study: &ConvergenceStudy) -> Vec<(&'static str, String)> {
    vec![
        ("mean-order-u", fmt_opt(study.mean_order_u())),
        ("mean-order-H", fmt_opt(study.mean_order_h())),
        ("mean-order-Hmod", fmt_opt(study.mean_order_hmod())),
    ]
}

pub fn write_convergence<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    default_tau: f64,
    study: &ConvergenceStudy,
) -> Result<()> {
    let mut meta = reference_meta(study.reference);
    meta.extend(order_meta(study));
    write_metadata(&mut w, cfg, default_tau, &meta)?;
    table(w, &CONVERGENCE_HEADER, study.rows.iter().map(row_record))
}

/// Rows of several studies, each prefixed by its scheme name.
pub fn write_comparison<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    default_tau: f64,
    studies: &[ConvergenceStudy],
) -> Result<()> {
    let mut meta = studies.first().map(|s| reference_meta(s.reference)).unwrap_or_default();
    let orders: Vec<(String, String)> = studies
        .iter()
        .map(|s| (format!("mean-order-u[{}]", s.scheme), fmt_opt(s.mean_order_u())))
        .chain(studies.iter().map(|s| (format!("mean-order-H[{}]", s.scheme), fmt_opt(s.mean_order_h()))))
        .collect();
    meta.extend(orders.iter().map(|(k, v)| (k.as_str(), v.clone())));
    write_metadata(&mut w, cfg, default_tau, &meta)?;
    let mut header = vec!["scheme"];
    header.extend(CONVERGENCE_HEADER);
    let rows = studies.iter().flat_map(|s| {
        s.rows.iter().map(move |r| {
            let mut rec = vec![s.scheme.to_string()];
            rec.extend(row_record(r));
            rec
        })
    });
    table(w, &header, rows)
}

fn ground_state_meta(res: &GroundStateResult) -> Vec<(&'static str, String)> {
    vec![
        ("energy", fmt_real(res.energy)),
        ("modified-energy", fmt_real(res.modified_energy)),
        ("chemical-potential", fmt_real(res.chemical_potential)),
        ("r", fmt_real(res.r)),
        ("iterations", res.iterations.to_string()),
        ("converged", res.converged.to_string()),
        ("monotone", res.monotone.to_string()),
        ("max-energy-rise", fmt_real(res.max_energy_rise)),
    ]
}

/// Energy per iteration.
pub fn write_ground_state<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    default_tau: f64,
    res: &GroundStateResult,
) -> Result<()> {
    write_metadata(&mut w, cfg, default_tau, &ground_state_meta(res))?;
    let rows = res.energy_trace.iter().enumerate().map(|(k, e)| vec![k.to_string(), fmt_real(*e)]);
    table(w, &GROUND_STATE_HEADER, rows)
}

/// Final profile `phi(x_j)`.
pub fn write_profile<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    default_tau: f64,
    res: &GroundStateResult,
) -> Result<()> {
    write_metadata(&mut w, cfg, default_tau, &ground_state_meta(res))?;
    let grid = res.phi.grid();
    let rows = grid.nodes().iter().zip(res.phi.values()).map(|(x, p)| vec![fmt_real(*x), fmt_real(*p)]);
    table(w, &PROFILE_HEADER, rows)
}
