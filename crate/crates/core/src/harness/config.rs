use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Result, SavError};
use crate::groundstate::{GroundStateProblem, RMode};
use crate::initdata::{parse_ratio, read_csv_columns, InitialDataSpec};
use crate::model::{NlsProblem, Nonlinearity};
use crate::sav::{Algorithm, Bootstrap};
use crate::spectral::{ComplexField, Grid1D, RealField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Sav1,
    Sav2,
    Lie,
    Strang,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Sav1, Scheme::Sav2, Scheme::Lie, Scheme::Strang];

    pub fn is_sav(self) -> bool {
        matches!(self, Scheme::Sav1 | Scheme::Sav2)
    }

    pub fn algorithm(self) -> Option<Algorithm> {
        match self {
            Scheme::Sav1 => Some(Algorithm::Alg1),
            Scheme::Sav2 => Some(Algorithm::Alg2),
            _ => None,
        }
    }
}

impl FromStr for Scheme {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sav1" => Ok(Scheme::Sav1),
            "sav2" | "sav" => Ok(Scheme::Sav2),
            "lie" => Ok(Scheme::Lie),
            "strang" => Ok(Scheme::Strang),
            other => Err(SavError::Config(format!(
                "unknown scheme '{other}' (expected sav1, sav2, lie or strang)"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Sav1 => "sav1",
            Scheme::Sav2 => "sav2",
            Scheme::Lie => "lie",
            Scheme::Strang => "strang",
        })
    }
}

/// Textual nonlinearity: `none`, `cubic:BETA` or `power:BETA:GAMMA`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NonlinearitySpec {
    None,
    Cubic(f64),
    Power(f64, f64),
}

impl NonlinearitySpec {
    pub fn build(self) -> Nonlinearity {
        match self {
            NonlinearitySpec::None => Nonlinearity::None,
            NonlinearitySpec::Cubic(beta) => Nonlinearity::Cubic { beta },
            NonlinearitySpec::Power(beta, gamma) => Nonlinearity::Power { beta, gamma },
        }
    }

    /// Cubic coupling, if the nonlinearity is cubic (or absent, `beta = 0`).
    pub fn cubic_beta(self) -> Option<f64> {
        match self {
            NonlinearitySpec::None => Some(0.0),
            NonlinearitySpec::Cubic(b) => Some(b),
            NonlinearitySpec::Power(..) => None,
        }
    }
}

impl FromStr for NonlinearitySpec {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            parse_ratio(t).ok_or_else(|| SavError::Config(format!("cannot read a number from '{t}' in '{s}'")))
        };
        let spec = match (parts[0].to_ascii_lowercase().as_str(), parts.len()) {
            ("none", 1) => NonlinearitySpec::None,
            ("cubic", 2) => NonlinearitySpec::Cubic(num(parts[1])?),
            ("power", 3) => NonlinearitySpec::Power(num(parts[1])?, num(parts[2])?),
            _ => {
                return Err(SavError::Config(format!(
                    "unknown nonlinearity '{s}' (expected none, cubic:BETA or power:BETA:GAMMA)"
                )))
            }
        };
        spec.build().validate().map_err(|e| SavError::Config(e.to_string()))?;
        Ok(spec)
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonlinearitySpec::None => write!(f, "none"),
            NonlinearitySpec::Cubic(b) => write!(f, "cubic:{b}"),
            NonlinearitySpec::Power(b, g) => write!(f, "power:{b}:{g}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    None,
    /// `x^2 / 2`
    Harmonic,
    Constant(f64),
    /// One value per grid node, single CSV column.
    File(PathBuf),
}

impl PotentialSpec {
    pub fn build(&self, grid: &Arc<Grid1D>) -> Result<RealField> {
        match self {
            PotentialSpec::None => Ok(RealField::zeros(grid)),
            PotentialSpec::Harmonic => RealField::from_fn(grid, |x| 0.5 * x * x),
            PotentialSpec::Constant(v) => Ok(RealField::constant(grid, *v)),
            PotentialSpec::File(path) => read_potential(path, grid),
        }
    }
}

fn read_potential(path: &Path, grid: &Arc<Grid1D>) -> Result<RealField> {
    let values: Vec<f64> = read_csv_columns(path, 1)?.into_iter().map(|r| r[0]).collect();
    if values.len() != grid.len() {
        return Err(SavError::LengthMismatch { expected: grid.len(), actual: values.len() });
    }
    RealField::new(grid, values)
}

impl FromStr for PotentialSpec {
    type Err = SavError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(PotentialSpec::File(PathBuf::from(path)));
        }
        if let Some(v) = s.strip_prefix("constant:") {
            return v
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .map(PotentialSpec::Constant)
                .ok_or_else(|| SavError::Config(format!("cannot read a constant potential from '{s}'")));
        }
        match s.to_ascii_lowercase().as_str() {
            "none" | "zero" => Ok(PotentialSpec::None),
            "harmonic" => Ok(PotentialSpec::Harmonic),
            _ => Err(SavError::Config(format!(
                "unknown potential '{s}' (expected none, harmonic, constant:V0 or file:PATH)"
            ))),
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::None => write!(f, "none"),
            PotentialSpec::Harmonic => write!(f, "harmonic"),
            PotentialSpec::Constant(v) => write!(f, "constant:{v}"),
            PotentialSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Everything needed to reproduce one run or one family of runs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub half_length: f64,
    /// `None` selects the default of the command (dynamics or ground state).
    pub tau: Option<f64>,
    pub t_end: f64,
    pub nonlinearity: NonlinearitySpec,
    pub potential: PotentialSpec,
    pub ec: f64,
    pub adapt_shift: bool,
    pub ic: InitialDataSpec,
    pub bootstrap: Bootstrap,
    pub gs_r_mode: RMode,
    pub gs_tol: f64,
    pub gs_max_steps: usize,
    /// Number of time steps in a convergence family (`tau, tau/2, ...`).
    pub levels: usize,
    /// Replaces the seed of `halpha` initial data when set.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_TAU: f64 = 0.01;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Sav2,
            n: 256,
            half_length: std::f64::consts::PI,
            tau: None,
            t_end: 1.0,
            nonlinearity: NonlinearitySpec::Cubic(1.0),
            potential: PotentialSpec::None,
            ec: 1.0,
            adapt_shift: true,
            ic: InitialDataSpec::Sine,
            bootstrap: Bootstrap::Predictor,
            gs_r_mode: RMode::Reset,
            gs_tol: GroundStateProblem::DEFAULT_TOL,
            gs_max_steps: GroundStateProblem::DEFAULT_MAX_STEPS,
            levels: 6,
            seed: None,
            out: None,
        }
    }
}

/// Keys accepted by [`RunConfig::set`], in echo order.
pub const KEYS: [&str; 17] = [
    "scheme",
    "n",
    "domain-half-length",
    "tau",
    "t-end",
    "nonlinearity",
    "potential",
    "ec",
    "adapt-shift",
    "ic",
    "bootstrap",
    "gs-r-mode",
    "gs-tol",
    "gs-max-steps",
    "levels",
    "seed",
    "out",
];

fn bad(key: &str, value: &str, why: impl fmt::Display) -> SavError {
    SavError::Config(format!("invalid value '{value}' for {key}: {why}"))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(bad(key, value, "expected a positive number")),
    }
}

impl RunConfig {
    pub fn tau_or(&self, default: f64) -> f64 {
        self.tau.unwrap_or(default)
    }

    /// Sets one option; `key` is a flag name with or without leading dashes,
    /// `_` and `-` are interchangeable. Error messages name the flag.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let norm = key.trim().trim_start_matches('-').replace('_', "-").to_ascii_lowercase();
        let flag = format!("--{norm}");
        let v = value.trim();
        let wrap = |e: SavError| bad(&flag, v, e.to_string().trim_start_matches("configuration error: "));
        match norm.as_str() {
            "scheme" => self.scheme = v.parse().map_err(wrap)?,
            "n" => {
                self.n = match v.parse::<usize>() {
                    Ok(n) if n >= 4 && n % 2 == 0 => n,
                    _ => return Err(bad(&flag, v, "expected an even integer >= 4")),
                }
            }
            "domain-half-length" | "l" => self.half_length = positive(&flag, v)?,
            "tau" => self.tau = Some(positive(&flag, v)?),
            "t-end" => {
                self.t_end = match v.parse::<f64>() {
                    Ok(t) if t.is_finite() && t >= 0.0 => t,
                    _ => return Err(bad(&flag, v, "expected a non-negative number")),
                }
            }
            "nonlinearity" => self.nonlinearity = v.parse().map_err(wrap)?,
            "potential" => self.potential = v.parse().map_err(wrap)?,
            "ec" => self.ec = positive(&flag, v)?,
            "adapt-shift" => {
                self.adapt_shift = v.parse().map_err(|_| bad(&flag, v, "expected true or false"))?
            }
            "ic" => self.ic = v.parse().map_err(wrap)?,
            "bootstrap" => self.bootstrap = v.parse().map_err(wrap)?,
            "gs-r-mode" => self.gs_r_mode = v.parse().map_err(wrap)?,
            "gs-tol" => self.gs_tol = positive(&flag, v)?,
            "gs-max-steps" => {
                self.gs_max_steps = match v.parse::<usize>() {
                    Ok(k) if k > 0 => k,
                    _ => return Err(bad(&flag, v, "expected a positive integer")),
                }
            }
            "levels" => {
                self.levels = match v.parse::<usize>() {
                    Ok(k) if k > 0 => k,
                    _ => return Err(bad(&flag, v, "expected a positive integer")),
                }
            }
            "seed" if v.is_empty() => self.seed = None,
            "seed" => {
                self.seed = Some(v.parse().map_err(|_| bad(&flag, v, "expected a non-negative integer"))?)
            }
            "out" if v.is_empty() => self.out = None,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(SavError::Config(format!("unknown option '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SavError::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            self.set(k, v)
                .map_err(|e| SavError::Config(format!("config line {}: {}", i + 1, strip(&e))))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SavError::Config(format!("cannot read config {}: {e}", path.display())))?;
        text.parse()
    }

    /// `(key, value)` pairs of the resolved configuration.
    pub fn echo(&self, default_tau: f64) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "scheme" => self.scheme.to_string(),
                    "n" => self.n.to_string(),
                    "domain-half-length" => format!("{:.16e}", self.half_length),
                    "tau" => format!("{:.16e}", self.tau_or(default_tau)),
                    "t-end" => format!("{:.16e}", self.t_end),
                    "nonlinearity" => self.nonlinearity.to_string(),
                    "potential" => self.potential.to_string(),
                    "ec" => format!("{:.16e}", self.ec),
                    "adapt-shift" => self.adapt_shift.to_string(),
                    "ic" => self.ic.to_string(),
                    "bootstrap" => format!("{:?}", self.bootstrap).to_ascii_lowercase(),
                    "gs-r-mode" => format!("{:?}", self.gs_r_mode).to_ascii_lowercase(),
                    "gs-tol" => format!("{:e}", self.gs_tol),
                    "gs-max-steps" => self.gs_max_steps.to_string(),
                    "levels" => self.levels.to_string(),
                    "seed" => self.seed.map(|s| s.to_string()).unwrap_or_default(),
                    "out" => self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                    _ => unreachable!(),
                };
                (k, v)
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Arc<Grid1D>> {
        Grid1D::new(self.n, self.half_length).map_err(|e| SavError::Config(strip(&e)))
    }

    /// The dynamic problem on the configured grid (energy shift not yet adapted).
    pub fn problem(&self, grid: &Arc<Grid1D>) -> Result<NlsProblem> {
        let pot = self.potential.build(grid)?;
        Ok(NlsProblem::new(pot, self.nonlinearity.build())?
            .with_energy_shift(self.ec)?
            .with_adapt_shift(self.adapt_shift))
    }

    /// Initial data with the `seed` override applied.
    pub fn initial_spec(&self) -> InitialDataSpec {
        match (&self.ic, self.seed) {
            (InitialDataSpec::HAlpha { alpha, .. }, Some(seed)) => InitialDataSpec::HAlpha { alpha: *alpha, seed },
            (ic, _) => ic.clone(),
        }
    }

    pub fn initial_data(&self, grid: &Arc<Grid1D>) -> Result<ComplexField> {
        self.initial_spec().generate(grid)
    }

    /// `tau, tau/2, ..., tau/2^(levels-1)`.
    pub fn tau_family(&self, default_tau: f64) -> Vec<f64> {
        let tau = self.tau_or(default_tau);
        (0..self.levels).map(|j| tau / (1u64 << j) as f64).collect()
    }

    pub fn ground_state_problem(&self, grid: &Arc<Grid1D>) -> Result<GroundStateProblem> {
        let beta = self.nonlinearity.cubic_beta().ok_or_else(|| {
            SavError::Config("--nonlinearity: ground states need none or cubic:BETA".into())
        })?;
        let mut p = GroundStateProblem::new(self.potential.build(grid)?, beta)?;
        p.energy_shift = self.ec;
        p.tau = self.tau_or(GroundStateProblem::DEFAULT_TAU);
        p.tol = self.gs_tol;
        p.max_steps = self.gs_max_steps;
        p.r_mode = self.gs_r_mode;
        p.bootstrap = self.bootstrap;
        p.validate()?;
        Ok(p)
    }
}

fn strip(e: &SavError) -> String {
    e.to_string().trim_start_matches("configuration error: ").to_string()
}

impl FromStr for RunConfig {
    type Err = SavError;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_file_text(text)?;
        Ok(cfg)
    }
}
