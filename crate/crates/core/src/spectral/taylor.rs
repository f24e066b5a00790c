use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::FourierLoop;
use crate::error::{Error, Result};

/// Slack allowed on `|z| <= 1` when evaluating on the closed disk.
const DISK_SLACK: f64 = 1e-12;

/// A vector-valued polynomial `f(z) = sum_j a_j z^j` on the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorDisk {
    dim: usize,
    coeffs: Vec<DVector<Complex64>>,
}

impl TaylorDisk {
    pub fn new(coeffs: Vec<DVector<Complex64>>) -> Result<Self> {
        let dim = coeffs.first().map(|c| c.len()).ok_or_else(|| {
            Error::InvalidInput("a Taylor disk needs at least one coefficient".into())
        })?;
        if coeffs.iter().any(|c| c.len() != dim) {
            return Err(Error::ShapeMismatch("Taylor coefficients of differing lengths".into()));
        }
        if coeffs.iter().flat_map(|c| c.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Taylor coefficients"));
        }
        Ok(Self { dim, coeffs })
    }

    pub fn zeros(dim: usize, degree: usize) -> Self {
        Self { dim, coeffs: vec![DVector::zeros(dim); degree + 1] }
    }

    pub fn scalar(coeffs: &[Complex64]) -> Self {
        let coeffs = if coeffs.is_empty() { vec![Complex64::new(0.0, 0.0)] } else { coeffs.to_vec() };
        Self { dim: 1, coeffs: coeffs.into_iter().map(|c| DVector::from_element(1, c)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[DVector<Complex64>] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> DVector<Complex64> {
        self.coeffs.get(j).cloned().unwrap_or_else(|| DVector::zeros(self.dim))
    }

    pub fn coeffs_mut(&mut self) -> &mut Vec<DVector<Complex64>> {
        &mut self.coeffs
    }

    /// Horner evaluation with no domain check.
    pub fn eval(&self, z: Complex64) -> DVector<Complex64> {
        let mut acc = DVector::zeros(self.dim);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_disk(&self, points: &[Complex64]) -> Result<Vec<DVector<Complex64>>> {
        points
            .iter()
            .map(|&z| {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite("evaluation point"));
                }
                if z.norm() > 1.0 + DISK_SLACK {
                    return Err(Error::OutsideDisk { re: z.re, im: z.im });
                }
                Ok(self.eval(z))
            })
            .collect()
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zeros(self.dim, 0);
        }
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(j, c)| c * Complex64::new(j as f64, 0.0)).collect();
        Self { dim: self.dim, coeffs }
    }

    /// Boundary values as an `n x 1` loop supported on `k >= 0`.
    pub fn boundary_trace(&self) -> FourierLoop {
        let terms: Vec<_> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (k as i64, DMatrix::from_column_slice(self.dim, 1, c.as_slice())))
            .collect();
        FourierLoop::from_terms(self.dim, 1, &terms).expect("coefficients share a shape")
    }

    /// Real coordinates `(Re a_{0,0}, Im a_{0,0}, Re a_{0,1}, ...)`, coefficient-major.
    pub fn to_real(&self) -> DVector<f64> {
        let mut out = DVector::zeros(2 * self.dim * self.coeffs.len());
        for (k, c) in self.coeffs.iter().enumerate() {
            for (i, z) in c.iter().enumerate() {
                out[2 * (k * self.dim + i)] = z.re;
                out[2 * (k * self.dim + i) + 1] = z.im;
            }
        }
        out
    }

    pub fn from_real(dim: usize, x: &[f64]) -> Result<Self> {
        if dim == 0 || x.is_empty() || x.len() % (2 * dim) != 0 {
            return Err(Error::ShapeMismatch(format!("{} reals do not form {dim}-vectors", x.len())));
        }
        let coeffs = x
            .chunks(2 * dim)
            .map(|chunk| DVector::from_iterator(dim, chunk.chunks(2).map(|p| Complex64::new(p[0], p[1]))))
            .collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch("Taylor disks of different dimension".into()));
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        Ok(Self { dim: self.dim, coeffs: (0..len).map(|j| self.coeff(j) + other.coeff(j)).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pad or truncate to the given degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        Self { dim: self.dim, coeffs: (0..=degree).map(|j| self.coeff(j)).collect() }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Multiply every component by the scalar polynomial `s`, keeping degree `<= max_degree`.
    pub fn mul_scalar_poly(&self, s: &[Complex64], max_degree: usize) -> Self {
        let mut out = Self::zeros(self.dim, max_degree);
        for (a, ca) in self.coeffs.iter().enumerate() {
            for (b, cb) in s.iter().enumerate() {
                if a + b <= max_degree {
                    out.coeffs[a + b] += ca * *cb;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let f = TaylorDisk::scalar(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(f.eval_disk(&[c(0.0, 0.0)]).unwrap()[0][0], c(1.0, 0.0));
        let g = TaylorDisk::scalar(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(g.eval_disk(&[c(0.0, 1.0)]).unwrap()[0][0], c(0.0, 1.0));
    }

    #[test]
    fn outside_disk_rejected() {
        let f = TaylorDisk::scalar(&[c(1.0, 0.0)]);
        assert!(matches!(f.eval_disk(&[c(1.1, 0.0)]), Err(Error::OutsideDisk { .. })));
    }

    #[test]
    fn trace_is_nonnegative() {
        let f = TaylorDisk::scalar(&[c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0)]);
        let t = f.boundary_trace();
        assert_eq!(t.hardy_project(crate::spectral::HardyPart::Negative).max_coeff(), 0.0);
        let z = Complex64::from_polar(1.0, 0.4);
        assert!((t.eval(0.4)[(0, 0)] - f.eval(z)[0]).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn horner_matches_power_sum(
            re in proptest::collection::vec(-1.0f64..1.0, 1..12),
            im in proptest::collection::vec(-1.0f64..1.0, 12),
            r in 0.0f64..1.0,
            t in 0.0f64..6.3,
        ) {
            let coeffs: Vec<_> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
            let f = TaylorDisk::scalar(&coeffs);
            let z = Complex64::from_polar(r, t);
            let naive: Complex64 = coeffs.iter().enumerate().map(|(j, a)| a * z.powu(j as u32)).sum();
            prop_assert!((f.eval_disk(&[z]).unwrap()[0][0] - naive).norm() <= 1e-13);
        }

        #[test]
        fn real_flatten_round_trip(v in proptest::collection::vec(-5.0f64..5.0, 1..6)) {
            let dim = 2;
            let mut x = v.clone();
            while x.len() % (2 * dim) != 0 { x.push(0.5); }
            let f = TaylorDisk::from_real(dim, &x).unwrap();
            let back = f.to_real();
            prop_assert_eq!(back.as_slice(), x.as_slice());
        }
    }
}
