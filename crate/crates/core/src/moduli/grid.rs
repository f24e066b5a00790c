use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use super::disk::OrientedPlane;
use crate::error::{Error, Result};

/// Sampling of the oriented Grassmannian of 2-planes in `R^{m+2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum GridSpec {
    /// `m = 1`: unit normals on a longitude by (midpoint) latitude grid.
    Sphere { longitudes: usize, latitudes: usize },
    /// `m = 2`: self-dual and anti-self-dual parts of the plane's bivector,
    /// each on a Fibonacci lattice of `S^2`.
    SpherePair { first: usize, second: usize },
    /// Any `m`: an explicit list of planes.
    Explicit { planes: Vec<OrientedPlane> },
}

impl GridSpec {
    pub fn planes(&self, m: usize) -> Result<Vec<OrientedPlane>> {
        match self {
            GridSpec::Sphere { longitudes, latitudes } => {
                if m != 1 {
                    return Err(Error::InvalidInput("the sphere grid is for m = 1".into()));
                }
                if *longitudes < 1 || *latitudes < 1 {
                    return Err(Error::InvalidInput("grid sizes must be positive".into()));
                }
                let mut out = Vec::with_capacity(longitudes * latitudes);
                for i in 0..*latitudes {
                    let polar = PI * (i as f64 + 0.5) / *latitudes as f64;
                    for j in 0..*longitudes {
                        let az = 2.0 * PI * j as f64 / *longitudes as f64;
                        out.push(plane_from_normal([polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()])?);
                    }
                }
                Ok(out)
            }
            GridSpec::SpherePair { first, second } => {
                if m != 2 {
                    return Err(Error::InvalidInput("the sphere-pair grid is for m = 2".into()));
                }
                if *first < 1 || *second < 1 {
                    return Err(Error::InvalidInput("grid sizes must be positive".into()));
                }
                let (sa, sb) = (fibonacci_sphere(*first), fibonacci_sphere(*second));
                let mut out = Vec::with_capacity(first * second);
                for a in &sa {
                    for b in &sb {
                        out.push(plane_from_self_dual_pair(*a, *b)?);
                    }
                }
                Ok(out)
            }
            GridSpec::Explicit { planes } => {
                if planes.is_empty() {
                    return Err(Error::InvalidInput("explicit grid has no planes".into()));
                }
                if let Some(p) = planes.iter().find(|p| p.dim() != m + 2) {
                    return Err(Error::ShapeMismatch(format!("plane in R^{} for m = {m}", p.dim())));
                }
                Ok(planes.clone())
            }
        }
    }
}

pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// The oriented plane in `R^3` with unit normal `n` (`u x v = n`).
pub fn plane_from_normal(n: [f64; 3]) -> Result<OrientedPlane> {
    let n = DVector::from_column_slice(&n);
    let len = n.norm();
    if !(len > 1e-12) {
        return Err(Error::InvalidInput("zero normal".into()));
    }
    let n = n / len;
    let axis = if n[2].abs() < 0.9 { DVector::from_vec(vec![0.0, 0.0, 1.0]) } else { DVector::from_vec(vec![1.0, 0.0, 0.0]) };
    let u = axis.cross(&n).normalize();
    let v = n.cross(&u);
    OrientedPlane::orthonormalized(&u, &v)
}

fn e(i: usize, j: usize) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(i, j)] = 1.0;
    m[(j, i)] = -1.0;
    m
}

/// The oriented plane in `R^4` whose bivector has self-dual part `a` and
/// anti-self-dual part `b` (both unit vectors).
pub fn plane_from_self_dual_pair(a: [f64; 3], b: [f64; 3]) -> Result<OrientedPlane> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(na > 1e-12 && nb > 1e-12) {
        return Err(Error::InvalidInput("zero bivector component".into()));
    }
    let plus = [e(0, 1) + e(2, 3), e(0, 2) - e(1, 3), e(0, 3) + e(1, 2)];
    let minus = [e(0, 1) - e(2, 3), e(0, 2) + e(1, 3), e(0, 3) - e(1, 2)];
    let mut omega = Matrix4::zeros();
    for i in 0..3 {
        omega += plus[i] * (a[i] / na) + minus[i] * (b[i] / nb);
    }
    omega *= 0.5;
    let omega = DMatrix::from_column_slice(4, 4, omega.as_slice());
    let proj = -(&omega * &omega);
    let best = (0..4)
        .max_by(|&i, &j| proj.column(i).norm().partial_cmp(&proj.column(j).norm()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let u = proj.column(best).into_owned();
    let u = u.normalize();
    let v = -(&omega * &u);
    OrientedPlane::orthonormalized(&u, &v)
}
