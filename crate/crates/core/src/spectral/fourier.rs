use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of samples used for argument tracking.
pub const WINDING_SAMPLES: usize = 4096;
/// A loop whose modulus drops to this level on the sample grid is rejected.
pub const WINDING_THRESHOLD: f64 = 1e-8;

/// Which half of the spectrum [`FourierLoop::hardy_project`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyPart {
    /// Frequencies `k >= 0` (boundary values of functions holomorphic in the disk).
    Nonnegative,
    /// Frequencies `k < 0`.
    Negative,
}

/// A finite Fourier series `sum_{|k| <= K} c_k e^{ik theta}` on the unit circle
/// with `rows x cols` complex matrix coefficients. Scalars are `1 x 1`, vector
/// valued loops are `n x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLoop {
    order: usize,
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<Complex64>>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub(crate) fn sample_angles(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |j| 2.0 * PI * j as f64 / count as f64)
}

impl FourierLoop {
    pub fn zeros(order: usize, rows: usize, cols: usize) -> Self {
        Self { order, rows, cols, coeffs: vec![DMatrix::zeros(rows, cols); 2 * order + 1] }
    }

    pub fn constant(value: DMatrix<Complex64>) -> Self {
        Self { order: 0, rows: value.nrows(), cols: value.ncols(), coeffs: vec![value] }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    /// Build from `(frequency, coefficient)` pairs; repeated frequencies add up.
    pub fn from_terms(rows: usize, cols: usize, terms: &[(i64, DMatrix<Complex64>)]) -> Result<Self> {
        let order = terms.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut out = Self::zeros(order, rows, cols);
        for (k, c) in terms {
            if c.nrows() != rows || c.ncols() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "term at frequency {k} is {}x{}, expected {rows}x{cols}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("loop coefficient"));
            }
            *out.coeff_mut(*k) += c;
        }
        Ok(out)
    }

    pub fn scalar(terms: &[(i64, Complex64)]) -> Self {
        let terms: Vec<_> = terms.iter().map(|&(k, c)| (k, DMatrix::from_element(1, 1, c))).collect();
        Self::from_terms(1, 1, &terms).expect("scalar terms are 1x1")
    }

    /// `e^{ik theta}` as a scalar loop.
    pub fn monomial(k: i64) -> Self {
        Self::scalar(&[(k, Complex64::new(1.0, 0.0))])
    }

    /// `diag(e^{i j_1 theta}, ..., e^{i j_n theta})`.
    pub fn diagonal_monomials(exponents: &[i64]) -> Self {
        let n = exponents.len();
        let terms: Vec<_> = exponents
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let mut c = DMatrix::zeros(n, n);
                c[(i, i)] = Complex64::new(1.0, 0.0);
                (k, c)
            })
            .collect();
        Self::from_terms(n, n, &terms).expect("diagonal terms are square")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn coeff(&self, k: i64) -> Option<&DMatrix<Complex64>> {
        if k.unsigned_abs() as usize > self.order {
            None
        } else {
            Some(&self.coeffs[(k + self.order as i64) as usize])
        }
    }

    pub fn coeff_or_zero(&self, k: i64) -> DMatrix<Complex64> {
        self.coeff(k).cloned().unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    /// Mutable access, growing the order when `|k|` exceeds it.
    pub fn coeff_mut(&mut self, k: i64) -> &mut DMatrix<Complex64> {
        let need = k.unsigned_abs() as usize;
        if need > self.order {
            self.grow(need);
        }
        let idx = (k + self.order as i64) as usize;
        &mut self.coeffs[idx]
    }

    fn grow(&mut self, order: usize) {
        let pad = order - self.order;
        let mut coeffs = vec![DMatrix::zeros(self.rows, self.cols); 2 * order + 1];
        for (i, c) in self.coeffs.drain(..).enumerate() {
            coeffs[i + pad] = c;
        }
        self.coeffs = coeffs;
        self.order = order;
    }

    /// Iterate `(k, c_k)` over all stored frequencies.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &DMatrix<Complex64>)> {
        let k0 = -(self.order as i64);
        self.coeffs.iter().enumerate().map(move |(i, c)| (k0 + i as i64, c))
    }

    pub fn eval(&self, theta: f64) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (k, c) in self.terms() {
            out += c * Complex64::from_polar(1.0, k as f64 * theta);
        }
        out
    }

    pub fn eval_scalar(&self, theta: f64) -> Complex64 {
        self.terms().map(|(k, c)| c[(0, 0)] * Complex64::from_polar(1.0, k as f64 * theta)).sum()
    }

    /// Values at the `count` equispaced angles `2 pi j / count`, via FFT with
    /// exact wrap-around of frequencies beyond the Nyquist band.
    pub fn sample(&self, count: usize) -> Vec<DMatrix<Complex64>> {
        let mut out = vec![DMatrix::zeros(self.rows, self.cols); count];
        if count == 0 {
            return out;
        }
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_inverse(count);
        let mut buf = vec![zero(); count];
        for r in 0..self.rows {
            for c in 0..self.cols {
                buf.iter_mut().for_each(|z| *z = zero());
                for (k, m) in self.terms() {
                    buf[k.rem_euclid(count as i64) as usize] += m[(r, c)];
                }
                fft.process(&mut buf);
                for (j, v) in buf.iter().enumerate() {
                    out[j][(r, c)] = *v;
                }
            }
        }
        out
    }

    pub fn sample_scalar(&self, count: usize) -> Vec<Complex64> {
        self.sample(count).into_iter().map(|m| m[(0, 0)]).collect()
    }

    /// Discrete Fourier coefficients of `2M` equispaced samples, keeping
    /// `|k| <= M - 1`. Exact for loops band-limited to that range.
    pub fn from_samples(samples: &[DMatrix<Complex64>]) -> Result<Self> {
        let count = samples.len();
        if count < 2 || count % 2 != 0 {
            return Err(Error::InvalidInput(format!("need an even number >= 2 of samples, got {count}")));
        }
        let (rows, cols) = (samples[0].nrows(), samples[0].ncols());
        if samples.iter().any(|s| s.nrows() != rows || s.ncols() != cols) {
            return Err(Error::ShapeMismatch("samples have differing shapes".into()));
        }
        if samples.iter().flat_map(|s| s.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("loop samples"));
        }
        let order = count / 2 - 1;
        let mut out = Self::zeros(order, rows, cols);
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(count);
        let mut buf = vec![zero(); count];
        let scale = 1.0 / count as f64;
        for r in 0..rows {
            for c in 0..cols {
                for (j, s) in samples.iter().enumerate() {
                    buf[j] = s[(r, c)];
                }
                fft.process(&mut buf);
                for k in -(order as i64)..=(order as i64) {
                    out.coeff_mut(k)[(r, c)] = buf[k.rem_euclid(count as i64) as usize] * scale;
                }
            }
        }
        Ok(out)
    }

    pub fn from_scalar_samples(samples: &[Complex64]) -> Result<Self> {
        let mats: Vec<_> = samples.iter().map(|&z| DMatrix::from_element(1, 1, z)).collect();
        Self::from_samples(&mats)
    }

    /// Pointwise product `a(theta) b(theta)`: the coefficient convolution.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} loop by {}x{} loop",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.order + other.order, self.rows, other.cols);
        for (ka, ca) in self.terms() {
            if ca.iter().all(|z| *z == zero()) {
                continue;
            }
            for (kb, cb) in other.terms() {
                *out.coeff_mut(ka + kb) += ca * cb;
            }
        }
        Ok(out)
    }

    pub fn hardy_project(&self, part: HardyPart) -> Self {
        let mut out = Self::zeros(self.order, self.rows, self.cols);
        for (k, c) in self.terms() {
            let keep = match part {
                HardyPart::Nonnegative => k >= 0,
                HardyPart::Negative => k < 0,
            };
            if keep {
                *out.coeff_mut(k) = c.clone();
            }
        }
        out
    }

    /// The loop `theta -> conj(l(theta))`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zeros(self.order, self.rows, self.cols);
        for (k, c) in self.terms() {
            *out.coeff_mut(-k) = c.map(|z| z.conj());
        }
        out
    }

    /// The loop `theta -> l(theta)^T`.
    pub fn transpose(&self) -> Self {
        Self {
            order: self.order,
            rows: self.cols,
            cols: self.rows,
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    /// The loop `theta -> l(theta)^H`.
    pub fn adjoint(&self) -> Self {
        self.conj().transpose()
    }

    /// Multiply by `e^{i s theta}`.
    pub fn shift(&self, s: i64) -> Self {
        let mut out = Self::zeros(self.order, self.rows, self.cols);
        for (k, c) in self.terms() {
            *out.coeff_mut(k + s) = c.clone();
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            order: self.order,
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch("loop sum of different shapes".into()));
        }
        let mut out = self.clone();
        for (k, c) in other.terms() {
            *out.coeff_mut(k) += c;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest coefficient modulus over all frequencies.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn coeff_size(c: &DMatrix<Complex64>) -> f64 {
        c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Lowest and highest frequency whose coefficient exceeds `rel_tol` times the
    /// largest coefficient. `None` for the zero loop.
    pub fn support(&self, rel_tol: f64) -> Option<(i64, i64)> {
        let cut = rel_tol * self.max_coeff();
        let mut sig = self.terms().filter(|(_, c)| Self::coeff_size(c) > cut).map(|(k, _)| k);
        let first = sig.next()?;
        let last = sig.last().unwrap_or(first);
        Some((first, last))
    }

    /// Drop coefficients below `rel_tol` times the largest one and shrink the order.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let Some((lo, hi)) = self.support(rel_tol) else {
            return Self::zeros(0, self.rows, self.cols);
        };
        let order = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
        let cut = rel_tol * self.max_coeff();
        let mut out = Self::zeros(order, self.rows, self.cols);
        for (k, c) in self.terms() {
            if k >= lo && k <= hi && Self::coeff_size(c) > cut {
                *out.coeff_mut(k) = c.clone();
            }
        }
        out
    }

    /// Pointwise map through sampled values; the result is re-expanded from
    /// `count` samples.
    pub fn map_pointwise<F>(&self, count: usize, f: F) -> Result<Self>
    where
        F: Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
    {
        let samples: Vec<_> = self.sample(count).iter().map(f).collect();
        Self::from_samples(&samples)
    }

    /// Winding number of a scalar loop about the origin with the default
    /// sample count and threshold.
    pub fn winding_number(&self) -> Result<i64> {
        self.winding_number_with(WINDING_SAMPLES, WINDING_THRESHOLD)
    }

    pub fn winding_number_with(&self, samples: usize, threshold: f64) -> Result<i64> {
        if !self.is_scalar() {
            return Err(Error::ShapeMismatch("winding number needs a scalar loop".into()));
        }
        winding_of_samples(&self.sample_scalar(samples), threshold)
    }
}

/// Total continuous argument increment of a closed sampled curve, divided by 2 pi.
pub fn winding_of_samples(values: &[Complex64], threshold: f64) -> Result<i64> {
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("loop samples"));
    }
    let min = values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min > threshold) {
        return Err(Error::LoopVanishes { min, threshold });
    }
    let n = values.len();
    let mut total = 0.0;
    for j in 0..n {
        let step = (values[(j + 1) % n] / values[j]).arg();
        if step.abs() > 0.5 * PI {
            return Err(Error::BranchTracking { jump: step });
        }
        total += step;
    }
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 1e-6 {
        return Err(Error::NonIntegerWinding { value: w, tolerance: 1e-6 });
    }
    Ok(r as i64)
}
