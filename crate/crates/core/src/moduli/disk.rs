use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::perturbation::{argmax_chart, PerturbationSpec};
use crate::error::{Error, Result};
use crate::spectral::TaylorDisk;

/// Tolerance on `u.u = v.v = 1`, `u.v = 0`.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// A pair of orthonormal vectors `(u, v)` representing an oriented 2-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedPlane {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl OrientedPlane {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() || u.len() < 3 {
            return Err(Error::ShapeMismatch(format!("plane vectors of lengths {} and {}", u.len(), v.len())));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("plane vectors"));
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let defect = (dot(&u, &u) - 1.0).abs().max((dot(&v, &v) - 1.0).abs()).max(dot(&u, &v).abs());
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NonOrthonormal { defect });
        }
        Ok(Self { u, v })
    }

    /// Gram-Schmidt on `(u, v)`.
    pub fn orthonormalized(u: &DVector<f64>, v: &DVector<f64>) -> Result<Self> {
        let nu = u.norm();
        if !(nu > 1e-12) {
            return Err(Error::NonOrthonormal { defect: 1.0 });
        }
        let u = u / nu;
        let v = v - &u * u.dot(v);
        let nv = v.norm();
        if !(nv > 1e-12) {
            return Err(Error::NonOrthonormal { defect: 1.0 });
        }
        Self::new(u.as_slice().to_vec(), (v / nv).as_slice().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn m(&self) -> usize {
        self.u.len() - 2
    }

    pub fn u(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u)
    }

    pub fn v(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.v)
    }

    /// `u + i v`, the quadric point of the half-line disk.
    pub fn e0(&self) -> DVector<Complex64> {
        DVector::from_fn(self.dim(), |i, _| Complex64::new(self.u[i], self.v[i]))
    }

    pub fn reversed(&self) -> Self {
        Self { u: self.u.clone(), v: self.v.iter().map(|x| -x).collect() }
    }

    pub fn projector(&self) -> DMatrix<f64> {
        let (u, v) = (self.u(), self.v());
        &u * u.transpose() + &v * v.transpose()
    }

    /// `u v^T - v u^T`; depends only on the oriented plane.
    pub fn bivector(&self) -> DMatrix<f64> {
        let (u, v) = (self.u(), self.v());
        &u * v.transpose() - &v * u.transpose()
    }

    /// Distance between oriented planes, `|omega - omega'| / sqrt 2` in the
    /// Frobenius norm of the bivectors.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.bivector() - other.bivector()).norm() / 2f64.sqrt()
    }

    /// `u x v` when the ambient space is 3-dimensional.
    pub fn normal(&self) -> Option<[f64; 3]> {
        if self.dim() != 3 {
            return None;
        }
        let (u, v) = (&self.u, &self.v);
        Some([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]])
    }

    /// Real orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let mut basis = vec![self.u(), self.v()];
        for i in 0..n {
            let mut e = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
            for _ in 0..2 {
                for b in &basis {
                    e -= b * b.dot(&e);
                }
            }
            let ne = e.norm();
            if ne > 0.5 {
                basis.push(e / ne);
            }
            if basis.len() == n {
                break;
            }
        }
        basis.split_off(2)
    }

    /// The oriented plane spanned by `(Re a, Im a)` for a point `a` of the quadric.
    pub fn from_quadric_point(a: &DVector<Complex64>) -> Result<Self> {
        Self::orthonormalized(&a.map(|z| z.re), &a.map(|z| z.im))
    }

    /// Whether `x` lies in the plane, measured as `|x - P x| / |x|`.
    pub fn containment_defect(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        (&x - self.projector() * &x).norm() / x.norm()
    }
}

/// Holomorphic disk in `CP_{m+1}` in homogeneous coordinates, normalized by the
/// chart functional `l(w) = (u - i v)^T w / 2` of its reference plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskMap {
    plane: OrientedPlane,
    coeffs: Vec<Vec<Complex64>>,
}

impl DiskMap {
    pub fn new(plane: OrientedPlane, coeffs: Vec<DVector<Complex64>>) -> Result<Self> {
        let n = plane.dim();
        if coeffs.is_empty() || coeffs.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch(format!("disk coefficients must have length {n}")));
        }
        if coeffs.iter().flat_map(|c| c.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("disk coefficients"));
        }
        Ok(Self { plane, coeffs: coeffs.into_iter().map(|c| c.as_slice().to_vec()).collect() })
    }

    pub fn plane(&self) -> &OrientedPlane {
        &self.plane
    }

    pub fn m(&self) -> usize {
        self.plane.m()
    }

    pub fn dim(&self) -> usize {
        self.plane.dim()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> DVector<Complex64> {
        match self.coeffs.get(k) {
            Some(c) => DVector::from_column_slice(c),
            None => DVector::zeros(self.dim()),
        }
    }

    pub fn coeff_vectors(&self) -> Vec<DVector<Complex64>> {
        (0..=self.degree()).map(|k| self.coeff(k)).collect()
    }

    pub fn to_taylor(&self) -> TaylorDisk {
        TaylorDisk::new(self.coeff_vectors()).expect("validated coefficients")
    }

    pub fn eval(&self, z: Complex64) -> DVector<Complex64> {
        let mut acc = DVector::zeros(self.dim());
        for c in self.coeffs.iter().rev() {
            acc *= z;
            for (a, x) in acc.iter_mut().zip(c) {
                *a += x;
            }
        }
        acc
    }

    pub fn derivative_at(&self, z: Complex64) -> DVector<Complex64> {
        let mut acc = DVector::zeros(self.dim());
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc *= z;
            for (a, x) in acc.iter_mut().zip(c) {
                *a += x * k as f64;
            }
        }
        acc
    }

    pub fn boundary(&self, theta: f64) -> DVector<Complex64> {
        self.eval(Complex64::from_polar(1.0, theta))
    }

    /// `f(0)`; lies on the quadric when the incidence point is at the center.
    pub fn quadric_point(&self) -> DVector<Complex64> {
        self.coeff(0)
    }

    /// `[Re a0.a0, Im a0.a0, Im (a0.a1) / 2]`; all vanish in gauge.
    pub fn gauge(&self) -> [f64; 3] {
        let (a0, a1) = (self.coeff(0), self.coeff(1));
        let q = a0.transpose() * &a0;
        let r = (a0.transpose() * &a1)[(0, 0)] * 0.5;
        [q[(0, 0)].re, q[(0, 0)].im, r.im]
    }

    /// Taylor coefficients of `l(f(z))`.
    pub fn chart_series(&self) -> Vec<Complex64> {
        let lvec = self.plane.e0().map(|z| z.conj() * 0.5);
        self.coeffs.iter().map(|c| c.iter().zip(lvec.iter()).map(|(a, b)| a * b).sum()).collect()
    }

    /// Divide by `l(f)` as a power series, keeping the degree.
    pub fn normalized(&self) -> Result<Self> {
        let s = self.chart_series();
        let s0 = s[0];
        if !(s0.norm() > 1e-8 * self.coeff(0).norm()) {
            return Err(Error::ChartDegenerate("chart functional vanishes at the center".into()));
        }
        let k = self.degree();
        let mut q: Vec<DVector<Complex64>> = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let mut acc = self.coeff(j);
            for i in 1..=j.min(s.len() - 1) {
                acc -= &q[j - i] * s[i];
            }
            q.push(acc / s0);
        }
        Self::new(self.plane.clone(), q)
    }

    /// Multiply every homogeneous coordinate by the scalar polynomial `h`.
    pub fn rescaled(&self, h: &[Complex64]) -> Self {
        let t = self.to_taylor();
        let deg = self.degree() + h.len().saturating_sub(1);
        let out = t.mul_scalar_poly(h, deg);
        Self::new(self.plane.clone(), out.coeffs().to_vec()).expect("finite product")
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        Self::new(self.plane.clone(), (0..=degree).map(|k| self.coeff(k)).collect()).expect("validated")
    }

    /// Euclidean distance between coefficient sequences.
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        let k = self.degree().max(other.degree());
        (0..=k).map(|j| (self.coeff(j) - other.coeff(j)).norm_squared()).sum::<f64>().sqrt()
    }

    /// `min over theta of max_i |f_i(e^{i theta})|`.
    pub fn projective_floor(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|s| self.boundary(2.0 * PI * s as f64 / samples as f64).camax())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn standard_half_line(plane: &OrientedPlane) -> DiskMap {
    let e0 = plane.e0();
    let e0bar = e0.map(|z| z.conj());
    DiskMap::new(plane.clone(), vec![e0, e0bar]).expect("unit vectors")
}

/// Stacked defects (`m + 1` per angle) of the boundary from `P'`, each measured
/// in the chart of the largest coordinate.
pub fn boundary_residual(f: &DiskMap, p: &PerturbationSpec, angles: &[f64]) -> Result<Vec<f64>> {
    if f.m() != p.m {
        return Err(Error::ShapeMismatch(format!("disk in CP_{} vs perturbation for m = {}", f.m() + 1, p.m)));
    }
    let mut out = Vec::with_capacity(angles.len() * (p.m + 1));
    for &theta in angles {
        let w = f.boundary(theta);
        let pt = p.straighten(&w, argmax_chart(&w))?;
        out.extend(pt.residual.iter());
    }
    Ok(out)
}

/// Largest boundary defect over `count` equispaced angles offset by half a step.
pub fn max_boundary_residual(f: &DiskMap, p: &PerturbationSpec, count: usize) -> Result<f64> {
    let angles: Vec<f64> = (0..count).map(|i| 2.0 * PI * (i as f64 + 0.5) / count as f64).collect();
    Ok(boundary_residual(f, p, &angles)?.into_iter().fold(0.0, |a, r| a.max(r.abs())))
}
