//! The continuous problem `i u_t = -u_xx + V u + f(|u|^2) u` written for
//! `u = p + i q`, together with the energies the schemes track.

use std::fmt;
use std::sync::Arc;

use log::info;

use crate::error::{Result, SavError};
use crate::spectral::{Grid1D, RealField};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonlinearity `f(s)` with primitive `F(s)`, `F' = f`, `F(0) = 0`, evaluated at the density `s = |u|^2`.
#[derive(Clone)]
pub enum Nonlinearity {
    None,
    /// `f(s) = beta s`
    Cubic { beta: f64 },
    /// `f(s) = beta s^(2/gamma)`, i.e. `beta |u|^(4/gamma)`
    Power { beta: f64, gamma: f64 },
    Custom { f: ScalarFn, primitive: ScalarFn },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::None => write!(f, "None"),
            Nonlinearity::Cubic { beta } => write!(f, "Cubic {{ beta: {beta} }}"),
            Nonlinearity::Power { beta, gamma } => {
                write!(f, "Power {{ beta: {beta}, gamma: {gamma} }}")
            }
            Nonlinearity::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl Nonlinearity {
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        primitive: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Nonlinearity::Custom { f: Arc::new(f), primitive: Arc::new(primitive) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Cubic { beta } if !beta.is_finite() => {
                Err(SavError::InvalidParameter("cubic beta must be finite".into()))
            }
            Nonlinearity::Power { beta, gamma } if !(beta.is_finite() && gamma > 0.0) => {
                Err(SavError::InvalidParameter(format!(
                    "power nonlinearity needs finite beta and gamma > 0, got {beta}, {gamma}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// `f(s)`
    pub fn f(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::None => 0.0,
            Nonlinearity::Cubic { beta } => beta * s,
            Nonlinearity::Power { beta, gamma } => beta * s.powf(2.0 / gamma),
            Nonlinearity::Custom { f, .. } => f(s),
        }
    }

    /// `F(s)`
    pub fn primitive(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::None => 0.0,
            Nonlinearity::Cubic { beta } => 0.5 * beta * s * s,
            Nonlinearity::Power { beta, gamma } => {
                beta * gamma / (2.0 + gamma) * s.powf((2.0 + gamma) / gamma)
            }
            Nonlinearity::Custom { primitive, .. } => primitive(s),
        }
    }
}

pub const DEFAULT_ENERGY_SHIFT: f64 = 1.0;

/// Everything that defines the equation on a given grid.
#[derive(Clone, Debug)]
pub struct NlsProblem {
    grid: Arc<Grid1D>,
    potential: RealField,
    nonlinearity: Nonlinearity,
    energy_shift: f64,
    adapt_shift: bool,
}

impl NlsProblem {
    pub fn new(potential: RealField, nonlinearity: Nonlinearity) -> Result<Self> {
        nonlinearity.validate()?;
        Ok(Self {
            grid: potential.grid().clone(),
            potential,
            nonlinearity,
            energy_shift: DEFAULT_ENERGY_SHIFT,
            adapt_shift: false,
        })
    }

    /// Problem with `V = 0`.
    pub fn free(grid: &Arc<Grid1D>, nonlinearity: Nonlinearity) -> Result<Self> {
        Self::new(RealField::zeros(grid), nonlinearity)
    }

    pub fn with_energy_shift(mut self, shift: f64) -> Result<Self> {
        if !(shift.is_finite() && shift > 0.0) {
            return Err(SavError::InvalidParameter(format!(
                "energy shift must be positive, got {shift}"
            )));
        }
        self.energy_shift = shift;
        Ok(self)
    }

    pub fn with_adapt_shift(mut self, adapt: bool) -> Self {
        self.adapt_shift = adapt;
        self
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn potential(&self) -> &RealField {
        &self.potential
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn energy_shift(&self) -> f64 {
        self.energy_shift
    }

    pub fn adapt_shift(&self) -> bool {
        self.adapt_shift
    }

    /// Same problem with the potential shifted by a constant.
    pub fn with_potential_offset(&self, c: f64) -> Result<Self> {
        let mut out = self.clone();
        out.potential = self.potential.map(|v| v + c)?;
        Ok(out)
    }

    /// Raises `E_c` to `|E1| + 1` when `E1 + E_c <= 0` and adaptation is enabled.
    /// Only meant to be called once, before time stepping.
    pub(crate) fn adapt_shift_for(&mut self, e1_value: f64) -> Result<()> {
        if e1_value + self.energy_shift > 0.0 {
            return Ok(());
        }
        if !self.adapt_shift {
            return Err(SavError::EnergyShiftTooSmall { e1: e1_value, shift: self.energy_shift });
        }
        let raised = e1_value.abs() + 1.0;
        info!("energy shift raised from {} to {} (E1 = {})", self.energy_shift, raised, e1_value);
        self.energy_shift = raised;
        Ok(())
    }

    fn check(&self, field: &RealField) -> Result<()> {
        if field.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(SavError::GridMismatch)
        }
    }

    // slice-level kernels used by the steppers

    pub(crate) fn e1_raw(&self, p: &[f64], q: &[f64]) -> f64 {
        let v = self.potential.values();
        let sum: f64 = p
            .iter()
            .zip(q)
            .zip(v)
            .map(|((&a, &b), &vi)| {
                let s = a * a + b * b;
                vi * s + self.nonlinearity.primitive(s)
            })
            .sum();
        0.5 * self.grid.spacing() * sum
    }

    /// `(G1, G2)` on raw slices, with the normalization `sqrt(E1 + E_c)`.
    pub(crate) fn g_pair_raw(&self, p: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let e1_value = self.e1_raw(p, q);
        let denom = e1_value + self.energy_shift;
        if !(denom > 0.0) {
            return Err(SavError::EnergyShiftTooSmall { e1: e1_value, shift: self.energy_shift });
        }
        let inv = 1.0 / denom.sqrt();
        let v = self.potential.values();
        let mut g1 = Vec::with_capacity(p.len());
        let mut g2 = Vec::with_capacity(p.len());
        for ((&a, &b), &vi) in p.iter().zip(q).zip(v) {
            let w = (vi + self.nonlinearity.f(a * a + b * b)) * inv;
            g1.push(w * b);
            g2.push(w * a);
        }
        Ok((g1, g2))
    }

    pub(crate) fn hamiltonian_raw(&self, p: &[f64], q: &[f64]) -> f64 {
        0.5 * (self.grid.h1_seminorm_sq(p) + self.grid.h1_seminorm_sq(q)) + self.e1_raw(p, q)
    }
}

/// Discrete SAV unknowns `(P, Q, r)` at a time level.
#[derive(Clone, Debug)]
pub struct SavState {
    pub p: RealField,
    pub q: RealField,
    pub r: f64,
    pub time: f64,
}

impl SavState {
    pub fn grid(&self) -> &Arc<Grid1D> {
        self.p.grid()
    }

    pub fn to_complex(&self) -> crate::spectral::ComplexField {
        crate::spectral::ComplexField::from_parts(&self.p, &self.q).expect("P and Q share a grid")
    }
}

/// `E1 = 1/2 sum_a h [V (P^2 + Q^2) + F(P^2 + Q^2)]`.
pub fn e1(p: &RealField, q: &RealField, problem: &NlsProblem) -> Result<f64> {
    problem.check(p)?;
    problem.check(q)?;
    let value = problem.e1_raw(p.values(), q.values());
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SavError::NonFinite("E1"))
    }
}

/// Normalized variational derivatives
/// `G1 = (V + f) Q / sqrt(E1 + E_c)`, `G2 = (V + f) P / sqrt(E1 + E_c)`.
pub fn g_pair(p: &RealField, q: &RealField, problem: &NlsProblem) -> Result<(RealField, RealField)> {
    problem.check(p)?;
    problem.check(q)?;
    let (g1, g2) = problem.g_pair_raw(p.values(), q.values())?;
    Ok((RealField::new(p.grid(), g1)?, RealField::new(p.grid(), g2)?))
}

/// `H = 1/2 (|P|_1^2 + |Q|_1^2) + E1`, gradients taken spectrally.
pub fn hamiltonian(p: &RealField, q: &RealField, problem: &NlsProblem) -> Result<f64> {
    problem.check(p)?;
    problem.check(q)?;
    let value = problem.hamiltonian_raw(p.values(), q.values());
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SavError::NonFinite("Hamiltonian"))
    }
}

/// `H~ = 1/2 (|P|_1^2 + |Q|_1^2) + r^2`, the quantity the SAV scheme conserves.
pub fn modified_hamiltonian(state: &SavState) -> f64 {
    let g = state.grid();
    0.5 * (g.h1_seminorm_sq(state.p.values()) + g.h1_seminorm_sq(state.q.values()))
        + state.r * state.r
}

/// `||P||_0^2 + ||Q||_0^2`.
pub fn mass(p: &RealField, q: &RealField) -> f64 {
    let g = p.grid();
    g.dot(p.values(), p.values()) + g.dot(q.values(), q.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Arc<Grid1D> {
        Grid1D::new(n, l).unwrap()
    }

    #[test]
    fn primitive_derivative_matches_f() {
        let cases = [
            Nonlinearity::Cubic { beta: -1.3 },
            Nonlinearity::Power { beta: 1.0, gamma: 8.0 },
            Nonlinearity::Power { beta: -0.7, gamma: 8.0 / 3.0 },
            Nonlinearity::Power { beta: 2.0, gamma: 2.0 },
        ];
        for nl in &cases {
            for i in 1..=100 {
                let s = 0.1 * i as f64;
                let eps = 1e-5 * s;
                let fd = (nl.primitive(s + eps) - nl.primitive(s - eps)) / (2.0 * eps);
                let f = nl.f(s);
                assert!((fd - f).abs() <= 1e-6 * f.abs().max(1e-12), "{nl:?} s={s}: {fd} vs {f}");
            }
            assert_eq!(nl.primitive(0.0), 0.0);
        }
    }

    #[test]
    fn power_primitive_matches_hamiltonian_density() {
        // 1/2 F(|u|^2) = beta gamma / (4 + 2 gamma) |u|^(4/gamma + 2)
        let (beta, gamma) = (1.5, 8.0);
        let nl = Nonlinearity::Power { beta, gamma };
        let amp: f64 = 0.8;
        let want = beta * gamma / (4.0 + 2.0 * gamma) * amp.powf(4.0 / gamma + 2.0);
        assert!((0.5 * nl.primitive(amp * amp) - want).abs() < 1e-14);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Nonlinearity::Power { beta: 1.0, gamma: 0.0 }.validate().is_err());
        let g = grid(8, PI);
        let pr = NlsProblem::free(&g, Nonlinearity::None).unwrap();
        assert!(pr.clone().with_energy_shift(0.0).is_err());
        assert!(pr.with_energy_shift(-1.0).is_err());
    }

    #[test]
    fn e1_examples() {
        let g = grid(64, PI);
        let pr = NlsProblem::free(&g, Nonlinearity::Cubic { beta: 1.0 }).unwrap();
        let z = RealField::zeros(&g);
        assert_eq!(e1(&z, &z, &pr).unwrap(), 0.0);
        let one = RealField::constant(&g, 1.0);
        assert!((e1(&one, &z, &pr).unwrap() - PI / 2.0).abs() < 1e-13);

        // quadrature oracle: 1/2 int 1/2 sin^4 = 3 pi / 16
        let g = grid(256, PI);
        let pr = NlsProblem::free(&g, Nonlinearity::Cubic { beta: 1.0 }).unwrap();
        let s = RealField::from_fn(&g, f64::sin).unwrap();
        let z = RealField::zeros(&g);
        assert!((e1(&s, &z, &pr).unwrap() - 3.0 * PI / 16.0).abs() < 1e-10);
    }

    #[test]
    fn g_pair_examples() {
        let g = grid(32, PI);
        let pr = NlsProblem::free(&g, Nonlinearity::Cubic { beta: 1.0 }).unwrap();
        let z = RealField::zeros(&g);
        let (g1, g2) = g_pair(&z, &z, &pr).unwrap();
        assert_eq!(g1.max_abs(), 0.0);
        assert_eq!(g2.max_abs(), 0.0);

        let c: f64 = 0.9;
        let q = RealField::constant(&g, c);
        let (g1, g2) = g_pair(&z, &q, &pr).unwrap();
        let want = c.powi(3) / (1.0 + PI * c.powi(4) / 2.0).sqrt();
        for v in g1.values() {
            assert!((v - want).abs() < 1e-14);
        }
        assert_eq!(g2.max_abs(), 0.0);

        // swapping (P, Q) swaps (G2, G1)
        let p = RealField::from_fn(&g, |x| x.sin() + 0.3).unwrap();
        let q = RealField::from_fn(&g, |x| (2.0 * x).cos()).unwrap();
        let (a1, a2) = g_pair(&p, &q, &pr).unwrap();
        let (b1, b2) = g_pair(&q, &p, &pr).unwrap();
        assert_eq!(a1.values(), b2.values());
        assert_eq!(a2.values(), b1.values());
    }

    #[test]
    fn g_pair_rejects_small_shift() {
        let g = grid(16, PI);
        let pr = NlsProblem::free(&g, Nonlinearity::Cubic { beta: -10.0 }).unwrap();
        let one = RealField::constant(&g, 1.0);
        assert!(matches!(
            g_pair(&one, &one, &pr),
            Err(SavError::EnergyShiftTooSmall { .. })
        ));
    }

    #[test]
    fn hamiltonian_examples() {
        let g = grid(128, PI);
        let pr = NlsProblem::free(&g, Nonlinearity::Cubic { beta: 1.0 }).unwrap();
        let z = RealField::zeros(&g);
        assert_eq!(hamiltonian(&z, &z, &pr).unwrap(), 0.0);
        let s = RealField::from_fn(&g, f64::sin).unwrap();
        assert!((hamiltonian(&s, &z, &pr).unwrap() - 11.0 * PI / 16.0).abs() < 1e-9);
    }

    #[test]
    fn potential_offset_shifts_energies_by_half_mass() {
        let g = grid(64, 4.0);
        let pot = RealField::from_fn(&g, |x| 0.5 * x * x).unwrap();
        let pr = NlsProblem::new(pot, Nonlinearity::Cubic { beta: 2.0 }).unwrap();
        let p = RealField::from_fn(&g, |x| (-x * x).exp()).unwrap();
        let q = RealField::from_fn(&g, |x| 0.3 * x * (-x * x).exp()).unwrap();
        let c = 0.75;
        let shifted = pr.with_potential_offset(c).unwrap();
        let h0 = hamiltonian(&p, &q, &pr).unwrap();
        let h1 = hamiltonian(&p, &q, &shifted).unwrap();
        let want = 0.5 * c * mass(&p, &q);
        assert!(((h1 - h0) - want).abs() <= 1e-10 * want.abs());
        let d = e1(&p, &q, &shifted).unwrap() - e1(&p, &q, &pr).unwrap();
        assert!((d - want).abs() <= 1e-10 * want.abs());
    }

    #[test]
    fn modified_hamiltonian_examples() {
        let g = grid(32, PI);
        let z = RealField::zeros(&g);
        let st = SavState { p: z.clone(), q: z, r: 2.0f64.sqrt(), time: 0.0 };
        assert!((modified_hamiltonian(&st) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mass_examples() {
        let g = grid(64, PI);
        let z = RealField::zeros(&g);
        assert_eq!(mass(&z, &z), 0.0);
        let a = 1.7;
        let p = RealField::from_fn(&g, |x| a * (3.0 * x).cos()).unwrap();
        let q = RealField::from_fn(&g, |x| a * (3.0 * x).sin()).unwrap();
        assert!((mass(&p, &q) - 2.0 * PI * a * a).abs() < 1e-12);
    }
}
