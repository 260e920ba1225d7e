//! Periodic Fourier collocation on a uniform grid over `[-L, L)`.
//!
//! Coefficients follow the symmetric-index convention
//! `u(x) = sum_p c_p exp(i k_p x)` with `c_p = (1/N) sum_a U_a exp(-i k_p x_a)`
//! and `k_p = pi p / L` for `p` in `{-N/2, ..., N/2 - 1}`. They are stored in
//! FFT order (`p = 0, 1, ..., N/2 - 1, -N/2, ..., -1`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SavError};

/// Relative size of the imaginary residue tolerated when a spectral
/// operation on a real field is mapped back to real values.
pub const REAL_RESIDUE_TOL: f64 = 1e-12;

pub struct Grid1D {
    num_points: usize,
    half_length: f64,
    spacing: f64,
    nodes: Vec<f64>,
    mode_indices: Vec<i64>,
    wavenumbers: Vec<f64>,
    // exp(-i k_p x_0) = (-1)^p, relating the FFT to the symmetric-index sum
    node_phase: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("num_points", &self.num_points)
            .field("half_length", &self.half_length)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl Grid1D {
    /// Builds the collocation grid with `n` points on `[-half_length, half_length)`.
    pub fn new(n: usize, half_length: f64) -> Result<Arc<Self>> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(SavError::InvalidGrid(format!(
                "number of points must be even and >= 4, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(SavError::InvalidGrid(format!(
                "half length must be positive and finite, got {half_length}"
            )));
        }
        let spacing = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|a| -half_length + a as f64 * spacing).collect();
        let half = (n / 2) as i64;
        let mode_indices: Vec<i64> = (0..n as i64)
            .map(|j| if j < half { j } else { j - n as i64 })
            .collect();
        let wavenumbers = mode_indices.iter().map(|&p| PI * p as f64 / half_length).collect();
        let node_phase = mode_indices
            .iter()
            .map(|&p| if p.rem_euclid(2) == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            num_points: n,
            half_length,
            spacing,
            nodes,
            mode_indices,
            wavenumbers,
            node_phase,
            forward,
            backward,
        }))
    }

    /// Grid with prescribed mesh size `h`; `2L/h` must be an even integer.
    pub fn with_spacing(spacing: f64, half_length: f64) -> Result<Arc<Self>> {
        let ratio = 2.0 * half_length / spacing;
        let n = ratio.round();
        if !(n.is_finite() && n >= 4.0) || (ratio - n).abs() > 1e-9 * ratio {
            return Err(SavError::InvalidGrid(format!(
                "2L/h = {ratio} is not an integer number of points"
            )));
        }
        Self::new(n as usize, half_length)
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        self.num_points == 0
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Length `2L` of the periodic cell.
    pub fn period(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Integer mode indices `p` in FFT order.
    pub fn mode_indices(&self) -> &[i64] {
        &self.mode_indices
    }

    /// Physical wavenumbers `k_p = pi p / L` in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Storage slot of mode `p`, if `p` belongs to the index set.
    pub fn slot(&self, p: i64) -> Option<usize> {
        let n = self.num_points as i64;
        if p < -n / 2 || p >= n / 2 {
            None
        } else {
            Some(p.rem_euclid(n) as usize)
        }
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        std::ptr::eq(self, other)
            || (self.num_points == other.num_points && self.half_length == other.half_length)
    }

    /// Normalized coefficients of nodal values.
    pub(crate) fn transform(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.num_points as f64;
        for (c, s) in buf.iter_mut().zip(&self.node_phase) {
            *c *= scale * s;
        }
        buf
    }

    pub(crate) fn transform_real(&self, values: &[f64]) -> Vec<Complex64> {
        let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&buf)
    }

    /// Nodal values from normalized coefficients.
    pub(crate) fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> =
            coeffs.iter().zip(&self.node_phase).map(|(c, s)| c * s).collect();
        self.backward.process(&mut buf);
        buf
    }

    /// Applies a real Fourier multiplier to a real field and keeps the real part.
    /// Only valid for multipliers even in `p`, for which the output is real.
    pub(crate) fn real_multiplier(&self, values: &[f64], mult: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut c = self.transform_real(values);
        for (ci, &k) in c.iter_mut().zip(&self.wavenumbers) {
            *ci *= mult(k);
        }
        self.synthesize(&c).into_iter().map(|z| z.re).collect()
    }

    /// h-weighted discrete inner product.
    pub(crate) fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.spacing * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Squared H1 seminorm of real nodal values, computed spectrally.
    pub(crate) fn h1_seminorm_sq(&self, values: &[f64]) -> f64 {
        let c = self.transform_real(values);
        self.period()
            * c.iter().zip(&self.wavenumbers).map(|(c, k)| k * k * c.norm_sqr()).sum::<f64>()
    }
}

fn check_grid(a: &Grid1D, b: &Grid1D) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(SavError::GridMismatch)
    }
}

/// Real nodal values on a grid.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Arc<Grid1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SavError::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SavError::NonFinite("real field"));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<Grid1D>, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn zeros(grid: &Arc<Grid1D>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<Grid1D>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    // callers guarantee length and finiteness
    pub(crate) fn from_raw(grid: &Arc<Grid1D>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Discrete L2 inner product `h * sum a_j b_j`.
    pub fn inner(&self, other: &RealField) -> Result<f64> {
        check_grid(&self.grid, &other.grid)?;
        Ok(self.grid.dot(&self.values, &other.values))
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// Complex nodal values on a grid.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<Grid1D>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: &Arc<Grid1D>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SavError::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SavError::NonFinite("complex field"));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<Grid1D>, mut f: impl FnMut(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn from_parts(re: &RealField, im: &RealField) -> Result<Self> {
        check_grid(&re.grid, &im.grid)?;
        Ok(Self {
            grid: re.grid.clone(),
            values: re.values.iter().zip(&im.values).map(|(&a, &b)| Complex64::new(a, b)).collect(),
        })
    }

    pub fn zeros(grid: &Arc<Grid1D>) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub(crate) fn from_raw(grid: &Arc<Grid1D>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> RealField {
        RealField::from_raw(&self.grid, self.values.iter().map(|z| z.re).collect())
    }

    pub fn im(&self) -> RealField {
        RealField::from_raw(&self.grid, self.values.iter().map(|z| z.im).collect())
    }

    pub fn modulus(&self) -> RealField {
        RealField::from_raw(&self.grid, self.values.iter().map(|z| z.norm()).collect())
    }

    pub fn density(&self) -> RealField {
        RealField::from_raw(&self.grid, self.values.iter().map(|z| z.norm_sqr()).collect())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|z| z * c).collect())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest pointwise distance to another field on the same grid.
    pub fn max_distance(&self, other: &ComplexField) -> Result<f64> {
        check_grid(&self.grid, &other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }
}

/// Fourier coefficients in FFT order.
#[derive(Clone, Debug)]
pub struct SpectralCoeffs {
    grid: Arc<Grid1D>,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn new(grid: &Arc<Grid1D>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(SavError::LengthMismatch { expected: grid.len(), actual: coeffs.len() });
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn zeros(grid: &Arc<Grid1D>) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `p`, `None` outside the index set.
    pub fn coeff(&self, p: i64) -> Option<Complex64> {
        self.grid.slot(p).map(|j| self.coeffs[j])
    }

    pub fn set_coeff(&mut self, p: i64, value: Complex64) -> Result<()> {
        let j = self
            .grid
            .slot(p)
            .ok_or_else(|| SavError::InvalidParameter(format!("mode {p} outside index set")))?;
        self.coeffs[j] = value;
        Ok(())
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point. The
    /// Nyquist mode is taken as a cosine so real data interpolate to real values.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let nyquist = -(self.grid.len() as i64) / 2;
        self.grid
            .mode_indices()
            .iter()
            .zip(self.grid.wavenumbers())
            .zip(&self.coeffs)
            .map(|((&p, &k), &c)| {
                if p == nyquist {
                    c * (k * x).cos()
                } else {
                    c * Complex64::from_polar(1.0, k * x)
                }
            })
            .sum()
    }

    /// Zero-padded interpolation onto a finer grid over the same interval.
    pub fn resample(&self, target: &Arc<Grid1D>) -> Result<ComplexField> {
        let n = self.grid.len();
        let m = target.len();
        if m < n || (target.half_length() - self.grid.half_length()).abs() > 0.0 {
            return Err(SavError::Unsupported(
                "resampling needs a grid at least as fine on the same interval".into(),
            ));
        }
        let mut padded = vec![Complex64::new(0.0, 0.0); m];
        let nyquist = -(n as i64) / 2;
        for (&p, &c) in self.grid.mode_indices().iter().zip(&self.coeffs) {
            if p == nyquist && m > n {
                padded[target.slot(p).unwrap()] += 0.5 * c;
                padded[target.slot(-p).unwrap()] += 0.5 * c;
            } else {
                padded[target.slot(p).unwrap()] += c;
            }
        }
        Ok(ComplexField::from_raw(target, target.synthesize(&padded)))
    }
}

pub fn forward(field: &ComplexField) -> SpectralCoeffs {
    SpectralCoeffs { grid: field.grid.clone(), coeffs: field.grid.transform(&field.values) }
}

pub fn inverse(coeffs: &SpectralCoeffs) -> ComplexField {
    ComplexField::from_raw(&coeffs.grid, coeffs.grid.synthesize(&coeffs.coeffs))
}

/// Fields that can be differentiated spectrally.
pub trait SpectralField: Sized {
    fn coefficients(&self) -> SpectralCoeffs;

    /// Spectral Laplacian (multiplier `-k_p^2`).
    fn laplacian(&self) -> Result<Self>;
}

impl SpectralField for ComplexField {
    fn coefficients(&self) -> SpectralCoeffs {
        forward(self)
    }

    fn laplacian(&self) -> Result<Self> {
        let mut c = self.grid.transform(&self.values);
        for (ci, &k) in c.iter_mut().zip(self.grid.wavenumbers()) {
            *ci *= -k * k;
        }
        ComplexField::new(&self.grid, self.grid.synthesize(&c))
    }
}

impl SpectralField for RealField {
    fn coefficients(&self) -> SpectralCoeffs {
        SpectralCoeffs { grid: self.grid.clone(), coeffs: self.grid.transform_real(&self.values) }
    }

    fn laplacian(&self) -> Result<Self> {
        let lap = self.to_complex().laplacian()?;
        let residue = lap.values.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        let scale = self.max_abs().max(lap.values.iter().fold(0.0f64, |m, z| m.max(z.re.abs())));
        let limit = REAL_RESIDUE_TOL * scale;
        if residue > limit {
            return Err(SavError::ImaginaryResidue { residue, limit });
        }
        Ok(lap.re())
    }
}

/// Discrete `H^s` norm `(2L sum_p (1 + k_p^2)^s |c_p|^2)^(1/2)` for `s >= -1`.
pub fn sobolev_norm<F: SpectralField>(field: &F, order: f64) -> Result<f64> {
    if !(order >= -1.0) {
        return Err(SavError::InvalidParameter(format!("Sobolev order must be >= -1, got {order}")));
    }
    let c = field.coefficients();
    let g = c.grid();
    let sum: f64 = c
        .as_slice()
        .iter()
        .zip(g.wavenumbers())
        .map(|(c, k)| (1.0 + k * k).powf(order) * c.norm_sqr())
        .sum();
    Ok((g.period() * sum).sqrt())
}

/// `|u|_1 = ||grad u||_0`, computed in coefficient space.
pub fn h1_seminorm<F: SpectralField>(field: &F) -> f64 {
    let c = field.coefficients();
    let g = c.grid();
    let sum: f64 =
        c.as_slice().iter().zip(g.wavenumbers()).map(|(c, k)| k * k * c.norm_sqr()).sum();
    (g.period() * sum).sqrt()
}

/// Dense Fourier second-derivative matrix for `n` (even) nodes on `[-L, L)`,
/// equal to the nodal action of the multiplier `-k_p^2`.
pub fn dense_d2_for(n: usize, half_length: f64) -> Result<DMatrix<f64>> {
    if !n.is_multiple_of(2) {
        return Err(SavError::Unsupported("dense D2 is only available for even N".into()));
    }
    let nf = n as f64;
    let scale = (PI / half_length).powi(2);
    Ok(DMatrix::from_fn(n, n, |j, l| {
        let value = if j == l {
            -(nf * nf + 2.0) / 12.0
        } else {
            let d = j as i64 - l as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (d as f64 * PI / nf).sin().powi(2))
        };
        value * scale
    }))
}

pub fn dense_d2(grid: &Grid1D) -> DMatrix<f64> {
    dense_d2_for(grid.len(), grid.half_length()).expect("grid size is even")
}

/// The differentiation matrix exactly as the closed form is commonly printed,
/// with the `(-1)^(j+1) N/4` term and diagonal `-(N-1)(N-2)/12` on `[-pi, pi)`.
/// It differs from [`dense_d2`] by a rank-structured `N/4` term and is kept only
/// to document that discrepancy.
pub fn printed_d2(n: usize) -> Result<DMatrix<f64>> {
    if !n.is_multiple_of(2) {
        return Err(SavError::Unsupported("printed D2 is only stated for even N".into()));
    }
    let nf = n as f64;
    let parity = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(DMatrix::from_fn(n, n, |j, l| {
        if j == l {
            -(nf - 1.0) * (nf - 2.0) / 12.0
        } else {
            let d = j as f64 - l as f64;
            0.25 * parity(j + 1) * nf + parity(j + l + 1) / (2.0 * (d * PI / nf).sin().powi(2))
        }
    }))
}
