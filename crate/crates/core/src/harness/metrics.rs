use crate::error::{Result, SavError};
use crate::model::{hamiltonian, NlsProblem};
use crate::spectral::ComplexField;

/// Errors of a numerical solution `U` against a reference `u` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMetrics {
    /// `|| |U| - |u| ||_{L^2}` (discrete, with weight `h`).
    pub e_u: f64,
    /// `|H(u) - H(U)|`
    pub e_h: f64,
    /// `|H(u) - (H~ - E_c)|`; SAV runs only.
    pub e_hmod: Option<f64>,
}

/// Discrete `L^2` distance between the moduli of two fields.
pub fn modulus_error(u: &ComplexField, reference: &ComplexField) -> Result<f64> {
    if !u.grid().same_as(reference.grid()) {
        return Err(SavError::GridMismatch);
    }
    let h = u.grid().spacing();
    let s: f64 = u
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a.norm() - b.norm()).powi(2))
        .sum();
    Ok((h * s).sqrt())
}

/// Errors with the reference energy taken from the reference field.
pub fn compute_errors(
    u: &ComplexField,
    reference: &ComplexField,
    problem: &NlsProblem,
    modified_hamiltonian: Option<f64>,
) -> Result<ErrorMetrics> {
    let h_ref = hamiltonian(&reference.re(), &reference.im(), problem)?;
    compute_errors_against(u, reference, h_ref, problem, modified_hamiltonian)
}

/// Errors with an explicitly supplied reference energy `h_ref`.
///
/// `modified_hamiltonian` is the raw `H~`; the energy shift of `problem` is
/// removed before comparing, so a consistent solution gives zero.
pub fn compute_errors_against(
    u: &ComplexField,
    reference: &ComplexField,
    h_ref: f64,
    problem: &NlsProblem,
    modified_hamiltonian: Option<f64>,
) -> Result<ErrorMetrics> {
    let e_u = modulus_error(u, reference)?;
    let h = hamiltonian(&u.re(), &u.im(), problem)?;
    let e_hmod = modified_hamiltonian.map(|m| (h_ref - (m - problem.energy_shift())).abs());
    let m = ErrorMetrics { e_u, e_h: (h_ref - h).abs(), e_hmod };
    if !m.e_u.is_finite() || !m.e_h.is_finite() {
        return Err(SavError::NonFinite("error metrics"));
    }
    Ok(m)
}

/// `log(e_prev / e) / log(p_prev / p)`; `None` if either error is zero.
pub fn observed_order(p_prev: f64, e_prev: f64, p: f64, e: f64) -> Option<f64> {
    if e_prev > 0.0 && e > 0.0 && p_prev != p {
        Some((e_prev / e).ln() / (p_prev / p).ln())
    } else {
        None
    }
}

/// Ratio below which two successive errors are considered a plateau.
pub const PLATEAU_RATIO: f64 = 1.25;

/// Multiple of the roundoff floor under which rows are left out of slopes.
pub const FLOOR_MARGIN: f64 = 10.0;

/// Roundoff floor of an error sequence ordered from coarse to fine.
///
/// When the two finest errors no longer decrease (ratio below
/// [`PLATEAU_RATIO`]) the smaller of them is taken as the floor; otherwise the
/// sequence is still in its asymptotic regime and the floor is zero.
pub fn roundoff_floor(errors: &[f64]) -> f64 {
    match errors {
        [.., a, b] if *b > 0.0 && *a / *b < PLATEAU_RATIO => a.min(*b),
        _ => 0.0,
    }
}

/// Mean of the successive observed orders, skipping pairs in which either
/// error is within [`FLOOR_MARGIN`] of the roundoff floor.
pub fn mean_order(params: &[f64], errors: &[f64]) -> Option<f64> {
    assert_eq!(params.len(), errors.len());
    let cutoff = FLOOR_MARGIN * roundoff_floor(errors);
    let orders: Vec<f64> = (1..errors.len())
        .filter(|&i| errors[i - 1] > cutoff && errors[i] > cutoff)
        .filter_map(|i| observed_order(params[i - 1], errors[i - 1], params[i], errors[i]))
        .collect();
    if orders.is_empty() {
        None
    } else {
        Some(orders.iter().sum::<f64>() / orders.len() as f64)
    }
}
