use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::csigma_min;

/// Smallest admissible singular value of `I + i eps Du` when sampling the
/// totally-real condition.
pub const TOTALLY_REAL_THRESHOLD: f64 = 1e-3;

const STRAIGHTEN_MAXIT: usize = 50;
const CHART_FLOOR: f64 = 1e-10;

/// `coefficient * prod x_i^{exponents_i}` placed in one component of `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub component: usize,
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

impl PolyTerm {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// `P' = {[x + i eps u(x)] : x in S^{m+1}}` with `u` odd and polynomial.
///
/// Off the sphere `u` is extended 1-homogeneously, so `x + i eps u(x)` is
/// real-homogeneous of degree one and descends to real projective space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub m: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub terms: Vec<PolyTerm>,
}

/// A boundary value `w` located on `P'` in a fixed affine chart.
#[derive(Debug, Clone)]
pub(crate) struct ChartPoint {
    pub t: DVector<f64>,
    /// Imaginary defect of `w` from `P'`, zero iff `[w]` lies on `P'`.
    pub residual: DVector<f64>,
    /// Derivative of `residual` acting on `[Re dw; Im dw]`.
    pub dr: DMatrix<f64>,
    /// Derivative of `t` acting on `[Re dw; Im dw]`.
    pub dt: DMatrix<f64>,
}

impl PerturbationSpec {
    pub fn new(m: usize, epsilon: f64, terms: Vec<PolyTerm>) -> Result<Self> {
        let spec = Self { m, epsilon, terms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn unperturbed(m: usize) -> Self {
        Self { m, epsilon: 0.0, terms: Vec::new() }
    }

    /// A single cubic `x_{m-1} x_m x_{m+1}` in component 0 (harmonic and odd).
    pub fn odd_cubic(m: usize, epsilon: f64) -> Result<Self> {
        let n = m + 2;
        let mut exponents = vec![0; n];
        for e in &mut exponents[n - 3..] {
            *e = 1;
        }
        Self::new(m, epsilon, vec![PolyTerm { component: 0, coefficient: 1.0, exponents }])
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.m + 2
    }

    pub fn is_trivial(&self) -> bool {
        self.epsilon == 0.0 || self.terms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.m < 1 {
            return Err(Error::InvalidInput("m must be at least 1".into()));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::NonFinite("perturbation amplitude"));
        }
        for t in &self.terms {
            if t.component >= n || t.exponents.len() != n {
                return Err(Error::InvalidInput(format!(
                    "perturbation term must have component < {n} and {n} exponents"
                )));
            }
            if t.degree() % 2 == 0 {
                return Err(Error::InvalidInput(format!("perturbation term of even degree {}", t.degree())));
            }
            if !t.coefficient.is_finite() {
                return Err(Error::NonFinite("perturbation coefficient"));
            }
        }
        Ok(())
    }

    /// `u` extended 1-homogeneously, with its Jacobian.
    pub fn u_tilde(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        let mut val = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        for t in &self.terms {
            let d = t.degree() as i32;
            let mono: f64 = x.iter().zip(&t.exponents).map(|(xi, &e)| xi.powi(e as i32)).product();
            let scale = r.powi(1 - d);
            val[t.component] += t.coefficient * mono * scale;
            for e in 0..n {
                let ae = t.exponents[e];
                let mut dmono = 0.0;
                if ae > 0 {
                    dmono = ae as f64
                        * x.iter()
                            .zip(&t.exponents)
                            .enumerate()
                            .map(|(i, (xi, &k))| if i == e { xi.powi(k as i32 - 1) } else { xi.powi(k as i32) })
                            .product::<f64>();
                }
                let dscale = (1 - d) as f64 * r.powi(-1 - d) * x[e];
                jac[(t.component, e)] += t.coefficient * (dmono * scale + mono * dscale);
            }
        }
        (val, jac)
    }

    /// `Phi(x) = x + i eps u(x)` and its complex Jacobian.
    pub fn phi(&self, x: &[f64]) -> (DVector<Complex64>, DMatrix<Complex64>) {
        let n = self.dim();
        let (u, du) = self.u_tilde(x);
        let i_eps = Complex64::new(0.0, self.epsilon);
        let val = DVector::from_fn(n, |i, _| Complex64::new(x[i], 0.0) + i_eps * u[i]);
        let jac = DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0) + i_eps * du[(i, j)]
        });
        (val, jac)
    }

    /// Smallest singular value of the complex Jacobian of `Phi` over
    /// deterministic samples of the sphere; errors when it falls below
    /// [`TOTALLY_REAL_THRESHOLD`].
    pub fn check_totally_real(&self, samples: usize) -> Result<f64> {
        self.validate()?;
        let n = self.dim();
        let mut worst = f64::INFINITY;
        for x in sphere_samples(n, samples) {
            let (_, jac) = self.phi(x.as_slice());
            let s = csigma_min(&jac);
            worst = worst.min(s);
            if !(s > TOTALLY_REAL_THRESHOLD) {
                return Err(Error::StraighteningFailed(format!(
                    "P' is not totally real near x = {:?}: sigma_min {s:.3e}",
                    x.as_slice()
                )));
            }
        }
        Ok(worst)
    }

    /// Locate `[w]` relative to `P'` in the affine chart `w_chart = 1`.
    pub(crate) fn straighten(&self, w: &DVector<Complex64>, chart: usize) -> Result<ChartPoint> {
        let n = self.dim();
        let others: Vec<usize> = (0..n).filter(|&b| b != chart).collect();
        let wmax = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let wa = w[chart];
        if !(wa.norm() > CHART_FLOOR * wmax) || wmax == 0.0 {
            return Err(Error::ChartDegenerate(format!("coordinate {chart} vanishes")));
        }
        let zeta: DVector<Complex64> = DVector::from_iterator(n - 1, others.iter().map(|&b| w[b] / wa));
        let target = zeta.map(|z| z.re);
        let mut t = target.clone();
        let mut x = vec![0.0; n];
        let mut converged = false;
        for _ in 0..STRAIGHTEN_MAXIT {
            x[chart] = 1.0;
            for (i, &b) in others.iter().enumerate() {
                x[b] = t[i];
            }
            let (z, a, b) = self.chart_jacobian(&x, chart, &others)?;
            let f = z.map(|c| c.re) - &target;
            if converged {
                let residual = zeta.map(|c| c.im) - z.map(|c| c.im);
                return Ok(self.chart_point(t, residual, a, b, w, chart, &others, &zeta)?);
            }
            let step = a.clone().lu().solve(&f).ok_or_else(|| {
                Error::StraighteningFailed("singular chart Jacobian".into())
            })?;
            t -= &step;
            if step.amax() <= 1e-15 * (1.0 + t.amax()) || self.is_trivial() {
                converged = true;
            }
        }
        Err(Error::StraighteningFailed(format!("no convergence in {STRAIGHTEN_MAXIT} iterations")))
    }

    /// `Z(t) = Phi_b / Phi_a` at `x` together with Re and Im of `dZ/dt`.
    fn chart_jacobian(
        &self,
        x: &[f64],
        chart: usize,
        others: &[usize],
    ) -> Result<(DVector<Complex64>, DMatrix<f64>, DMatrix<f64>)> {
        let (phi, dphi) = self.phi(x);
        let pa = phi[chart];
        if !(pa.norm() > CHART_FLOOR) {
            return Err(Error::ChartDegenerate(format!("Phi coordinate {chart} vanishes")));
        }
        let k = others.len();
        let z = DVector::from_iterator(k, others.iter().map(|&b| phi[b] / pa));
        let mut a = DMatrix::zeros(k, k);
        let mut bm = DMatrix::zeros(k, k);
        for (i, &b) in others.iter().enumerate() {
            for (j, &c) in others.iter().enumerate() {
                let dz = (dphi[(b, c)] * pa - phi[b] * dphi[(chart, c)]) / (pa * pa);
                a[(i, j)] = dz.re;
                bm[(i, j)] = dz.im;
            }
        }
        Ok((z, a, bm))
    }

    #[allow(clippy::too_many_arguments)]
    fn chart_point(
        &self,
        t: DVector<f64>,
        residual: DVector<f64>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        w: &DVector<Complex64>,
        chart: usize,
        others: &[usize],
        zeta: &DVector<Complex64>,
    ) -> Result<ChartPoint> {
        let n = self.dim();
        let k = others.len();
        let a_inv = a.try_inverse().ok_or_else(|| Error::StraighteningFailed("singular chart Jacobian".into()))?;
        let wa = w[chart];
        let mut dz_re = DMatrix::zeros(k, n);
        let mut dz_im = DMatrix::zeros(k, n);
        for (i, &bi) in others.iter().enumerate() {
            let d_b = 1.0 / wa;
            let d_a = -zeta[i] / wa;
            dz_re[(i, bi)] = d_b.re;
            dz_im[(i, bi)] = d_b.im;
            dz_re[(i, chart)] = d_a.re;
            dz_im[(i, chart)] = d_a.im;
        }
        let mmat = &b * &a_inv;
        let mut dr = DMatrix::zeros(k, 2 * n);
        dr.columns_mut(0, n).copy_from(&(&dz_im - &mmat * &dz_re));
        dr.columns_mut(n, n).copy_from(&(&dz_re + &mmat * &dz_im));
        let mut dt = DMatrix::zeros(k, 2 * n);
        dt.columns_mut(0, n).copy_from(&(&a_inv * &dz_re));
        dt.columns_mut(n, n).copy_from(&(-(&a_inv * &dz_im)));
        Ok(ChartPoint { t, residual, dr, dt })
    }
}

/// Index of the coordinate of largest modulus.
pub(crate) fn argmax_chart(w: &DVector<Complex64>) -> usize {
    w.iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `L [Re w; Im w]` for a real matrix acting on stacked real and imaginary parts.
pub(crate) fn apply_real(l: &DMatrix<f64>, w: &DVector<Complex64>) -> DVector<f64> {
    let n = w.len();
    let mut out = DVector::zeros(l.nrows());
    for j in 0..n {
        let (re, im) = (w[j].re, w[j].im);
        if re != 0.0 {
            out.axpy(re, &l.column(j), 1.0);
        }
        if im != 0.0 {
            out.axpy(im, &l.column(n + j), 1.0);
        }
    }
    out
}

/// Deterministic, roughly uniform points on `S^{n-1}` (Kronecker sequence
/// pushed through an inverse-normal map).
pub fn sphere_samples(n: usize, count: usize) -> Vec<DVector<f64>> {
    const PRIMES: [f64; 12] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];
    let alphas: Vec<f64> = (0..n).map(|i| PRIMES[i % PRIMES.len()].sqrt().fract() + 0.0137 * (i / PRIMES.len()) as f64).collect();
    (1..=count)
        .map(|k| {
            let g = DVector::from_fn(n, |i, _| {
                let p = (k as f64 * alphas[i]).fract().clamp(1e-6, 1.0 - 1e-6);
                // logistic quantile: heavy enough tails for uniform directions in low dimension
                (p / (1.0 - p)).ln()
            });
            let norm = g.norm();
            if norm > 0.0 { g / norm } else { DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 }) }
        })
        .collect()
}
