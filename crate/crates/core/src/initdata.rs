//! Initial data and closed-form solutions.
//!
//! Closed forms are written for `i u_t = -u_xx + V u + beta |u|^2 u`:
//!
//! * bright soliton (`beta < 0`):
//!   `a sqrt(2/-beta) sech(a (x - 2 v t)) exp(i (v x - (v^2 - a^2) t))`
//! * solitary wave (`beta = -1`): `sqrt(2) exp(i t) sech(x)`
//! * plane wave on constant `V = V0`: `A exp(i (k x - omega t))` with
//!   `omega = k^2 + V0 + f(A^2)`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SavError};
use crate::model::{NlsProblem, Nonlinearity};
use crate::spectral::{inverse, ComplexField, Grid1D, SpectralCoeffs};
use std::sync::Arc;

/// Boundary magnitude above which a localized profile is reported as truncated.
pub const TAIL_WARN: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialDataSpec {
    Soliton { a: f64, beta: f64, v: f64 },
    SolitaryWave,
    Plane { amplitude: f64, mode: i64 },
    Sine,
    HAlpha { alpha: f64, seed: u64 },
    File(PathBuf),
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialDataSpec::Soliton { a, beta, v } => {
                if !(beta < 0.0) {
                    return Err(SavError::InvalidParameter(format!(
                        "bright soliton needs beta < 0, got {beta}"
                    )));
                }
                if !(a.is_finite() && a > 0.0 && v.is_finite()) {
                    return Err(SavError::InvalidParameter(format!(
                        "bright soliton needs a > 0 and finite v, got a = {a}, v = {v}"
                    )));
                }
                Ok(())
            }
            InitialDataSpec::HAlpha { alpha, .. } if !(alpha.is_finite() && alpha > 0.0) => Err(
                SavError::InvalidParameter(format!("regularity alpha must be positive, got {alpha}")),
            ),
            InitialDataSpec::Plane { amplitude, .. } if !amplitude.is_finite() => {
                Err(SavError::InvalidParameter("plane wave amplitude must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Samples the data at `t = 0`.
    pub fn generate(&self, grid: &Arc<Grid1D>) -> Result<ComplexField> {
        self.validate()?;
        match self {
            InitialDataSpec::Soliton { a, beta, v } => bright_soliton(*a, *beta, *v, 0.0, grid),
            InitialDataSpec::SolitaryWave => solitary_wave(0.0, grid),
            InitialDataSpec::Plane { amplitude, mode } => plane_wave(*amplitude, *mode, grid),
            InitialDataSpec::Sine => sine(grid),
            InitialDataSpec::HAlpha { alpha, seed } => h_alpha_random(*alpha, *seed, grid),
            InitialDataSpec::File(path) => read_csv_field(path, grid),
        }
    }

    /// Exact solution at time `t`, when one is known for `problem`.
    pub fn exact(&self, t: f64, problem: &NlsProblem) -> Result<Option<ComplexField>> {
        self.validate()?;
        let grid = problem.grid();
        let zero_potential = problem.potential().max_abs() == 0.0;
        let cubic = match problem.nonlinearity() {
            Nonlinearity::Cubic { beta } => Some(*beta),
            _ => None,
        };
        match self {
            InitialDataSpec::Soliton { a, beta, v } => {
                if zero_potential && cubic == Some(*beta) {
                    bright_soliton(*a, *beta, *v, t, grid).map(Some)
                } else {
                    Ok(None)
                }
            }
            InitialDataSpec::SolitaryWave => {
                if zero_potential && cubic == Some(-1.0) {
                    solitary_wave(t, grid).map(Some)
                } else {
                    Ok(None)
                }
            }
            InitialDataSpec::Plane { amplitude, mode } => {
                let vals = problem.potential().values();
                let v0 = vals[0];
                if vals.iter().any(|&v| v != v0) {
                    return Ok(None);
                }
                plane_wave_exact(*amplitude, *mode, t, v0, problem.nonlinearity(), grid).map(Some)
            }
            _ => Ok(None),
        }
    }
}

impl fmt::Display for InitialDataSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDataSpec::Soliton { a, beta, v } => write!(f, "soliton:{a}:{beta}:{v}"),
            InitialDataSpec::SolitaryWave => write!(f, "solitary"),
            InitialDataSpec::Plane { amplitude, mode } => write!(f, "plane:{amplitude}:{mode}"),
            InitialDataSpec::Sine => write!(f, "sine"),
            InitialDataSpec::HAlpha { alpha, seed } => write!(f, "halpha:{alpha}:{seed}"),
            InitialDataSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str, spec: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| SavError::Config(format!("cannot read {what} from '{s}' in initial data '{spec}'")))
}

/// Parses a fraction like `2/3` or a plain number.
pub(crate) fn parse_ratio(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.trim().parse().ok(),
    }
}

impl FromStr for InitialDataSpec {
    type Err = SavError;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(path) = spec.strip_prefix("file:") {
            return Ok(InitialDataSpec::File(PathBuf::from(path)));
        }
        let parts: Vec<&str> = spec.split(':').collect();
        let arity = |n: usize| {
            if parts.len() == n {
                Ok(())
            } else {
                Err(SavError::Config(format!(
                    "initial data '{spec}' expects {} parameter(s)",
                    n - 1
                )))
            }
        };
        let parsed = match parts[0].to_ascii_lowercase().as_str() {
            "soliton" => {
                arity(4)?;
                InitialDataSpec::Soliton {
                    a: parse_num(parts[1], "a", spec)?,
                    beta: parse_num(parts[2], "beta", spec)?,
                    v: parse_num(parts[3], "v", spec)?,
                }
            }
            "solitary" => {
                arity(1)?;
                InitialDataSpec::SolitaryWave
            }
            "sine" | "sin" => {
                arity(1)?;
                InitialDataSpec::Sine
            }
            "plane" => {
                arity(3)?;
                InitialDataSpec::Plane {
                    amplitude: parse_num(parts[1], "amplitude", spec)?,
                    mode: parse_num(parts[2], "mode index", spec)?,
                }
            }
            "halpha" => {
                arity(3)?;
                InitialDataSpec::HAlpha {
                    alpha: parse_ratio(parts[1]).ok_or_else(|| {
                        SavError::Config(format!("cannot read alpha from '{}' in '{spec}'", parts[1]))
                    })?,
                    seed: parse_num(parts[2], "seed", spec)?,
                }
            }
            other => return Err(SavError::Config(format!("unknown initial data '{other}'"))),
        };
        parsed.validate().map_err(|e| SavError::Config(e.to_string()))?;
        Ok(parsed)
    }
}

fn wrap(x: f64, half_length: f64) -> f64 {
    let period = 2.0 * half_length;
    (x + half_length).rem_euclid(period) - half_length
}

fn warn_on_tail(u: &ComplexField, what: &str) {
    let tail = u.values()[0].norm();
    if tail > TAIL_WARN {
        warn!("{what} is truncated by the domain: |u(-L)| = {tail:e}");
    }
}

/// Bright soliton of the focusing cubic equation, centred at `2 v t`
/// (nearest periodic image).
pub fn bright_soliton(a: f64, beta: f64, v: f64, t: f64, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    InitialDataSpec::Soliton { a, beta, v }.validate()?;
    let amp = a * (2.0 / -beta).sqrt();
    let l = grid.half_length();
    let u = ComplexField::from_fn(grid, |x| {
        let xi = wrap(x - 2.0 * v * t, l);
        Complex64::from_polar(amp / (a * xi).cosh(), v * x - (v * v - a * a) * t)
    })?;
    if t == 0.0 {
        warn_on_tail(&u, "bright soliton");
    }
    Ok(u)
}

/// `sqrt(2) exp(i t) / cosh(x)`, a standing wave for `beta = -1`.
pub fn solitary_wave(t: f64, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    let u = ComplexField::from_fn(grid, |x| Complex64::from_polar(2f64.sqrt() / x.cosh(), t))?;
    if t == 0.0 {
        warn_on_tail(&u, "solitary wave");
    }
    Ok(u)
}

/// `A exp(i k x)` with `k = pi mode / L`.
pub fn plane_wave(amplitude: f64, mode: i64, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    let k = std::f64::consts::PI * mode as f64 / grid.half_length();
    ComplexField::from_fn(grid, |x| Complex64::from_polar(amplitude, k * x))
}

/// Frequency of a plane wave under constant potential `v0`.
pub fn plane_wave_frequency(amplitude: f64, mode: i64, v0: f64, nl: &Nonlinearity, half_length: f64) -> f64 {
    let k = std::f64::consts::PI * mode as f64 / half_length;
    k * k + v0 + nl.f(amplitude * amplitude)
}

pub fn plane_wave_exact(
    amplitude: f64,
    mode: i64,
    t: f64,
    v0: f64,
    nl: &Nonlinearity,
    grid: &Arc<Grid1D>,
) -> Result<ComplexField> {
    let omega = plane_wave_frequency(amplitude, mode, v0, nl, grid.half_length());
    let k = std::f64::consts::PI * mode as f64 / grid.half_length();
    ComplexField::from_fn(grid, |x| Complex64::from_polar(amplitude, k * x - omega * t))
}

/// Real `sin x`.
pub fn sine(grid: &Arc<Grid1D>) -> Result<ComplexField> {
    let periods = grid.half_length() / std::f64::consts::PI;
    if (periods - periods.round()).abs() > 1e-12 {
        warn!("sin x is not periodic on [-{0}, {0})", grid.half_length());
    }
    ComplexField::from_fn(grid, |x| Complex64::new(x.sin(), 0.0))
}

/// Random data with Sobolev regularity just below `alpha`.
///
/// Coefficients are `xi_p (1 + k_p^2)^(-alpha/2 - 1/4)` with `Re xi_p`,
/// `Im xi_p` uniform on `[-1, 1]`, drawn from ChaCha8 seeded with `seed` in
/// storage order (`p = 0, 1, ..., N/2 - 1, -N/2, ..., -1`, real part first).
/// The extra `1/4` makes the squared coefficients decay like
/// `|k|^(-2 alpha - 1)`, so the limit lies in `H^s` for every `s < alpha`.
/// The field is normalized to unit discrete L2 norm.
pub fn h_alpha_random(alpha: f64, seed: u64, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    InitialDataSpec::HAlpha { alpha, seed }.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exponent = -0.5 * alpha - 0.25;
    let coeffs: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| {
            let xi = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            xi * (1.0 + k * k).powf(exponent)
        })
        .collect();
    let u = inverse(&SpectralCoeffs::new(grid, coeffs)?);
    let norm = u.l2_norm();
    if !(norm > 0.0) {
        return Err(SavError::NonFinite("normalization of random data"));
    }
    Ok(u.scale(Complex64::new(1.0 / norm, 0.0)))
}

/// Reads `N` rows of `Re, Im` (comma separated, `#` comments, optional header).
pub fn read_csv_field(path: &Path, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    let values = read_csv_columns(path, 2)?
        .into_iter()
        .map(|row| Complex64::new(row[0], row[1]))
        .collect::<Vec<_>>();
    if values.len() != grid.len() {
        return Err(SavError::LengthMismatch { expected: grid.len(), actual: values.len() });
    }
    ComplexField::new(grid, values)
}

/// Numeric rows with `columns` entries each; a non-numeric first row is
/// treated as a header.
pub(crate) fn read_csv_columns(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().take(columns).map(|s| s.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == columns => rows.push(v),
            Err(_) if i == 0 => continue,
            _ => {
                return Err(SavError::Config(format!(
                    "{}: row {} does not hold {columns} numeric column(s)",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(rows)
}
