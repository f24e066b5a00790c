use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{gauss_legendre, gauss_legendre_on, legendre_coefficients, legendre_eval};
use super::FourierLoop;
use crate::error::{Error, Result};

/// Tensor grid on the unit disk: Gauss–Legendre radii in `(0, 1)` times
/// equispaced angles `2 pi j / angular`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub radial: usize,
    pub angular: usize,
}

impl PolarGrid {
    pub fn new(radial: usize, angular: usize) -> Result<Self> {
        if radial < 2 || angular < 4 || angular % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "polar grid needs radial >= 2 and an even angular count >= 4, got {radial} x {angular}"
            )));
        }
        Ok(Self { radial, angular })
    }

    pub fn len(&self) -> usize {
        self.radial * self.angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radii(&self) -> (Vec<f64>, Vec<f64>) {
        gauss_legendre_on(self.radial, 0.0, 1.0)
    }

    pub fn angles(&self) -> Vec<f64> {
        super::sample_angles(self.angular).collect()
    }

    /// Grid points in storage order (radius-major).
    pub fn points(&self) -> Vec<Complex64> {
        let (r, _) = self.radii();
        let a = self.angles();
        r.iter().flat_map(|&rho| a.iter().map(move |&t| Complex64::from_polar(rho, t))).collect()
    }

    /// Area weights `w_i rho_i (2 pi / angular)` in storage order.
    pub fn area_weights(&self) -> Vec<f64> {
        let (r, w) = self.radii();
        let da = 2.0 * PI / self.angular as f64;
        r.iter().zip(&w).flat_map(|(&rho, &wi)| std::iter::repeat_n(wi * rho * da, self.angular)).collect()
    }
}

/// A `C^n`-valued density `phi` of the form `phi dz-bar`, sampled on a polar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsForm {
    grid: PolarGrid,
    dim: usize,
    values: Vec<DVector<Complex64>>,
}

impl RhsForm {
    pub fn new(grid: PolarGrid, dim: usize, values: Vec<DVector<Complex64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::ShapeMismatch(format!("density samples must have length {dim}")));
        }
        if values.iter().flat_map(|v| v.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density samples"));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_fn<F>(grid: PolarGrid, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> DVector<Complex64>,
    {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, dim, values)
    }

    pub fn zero(grid: PolarGrid, dim: usize) -> Self {
        Self { grid, dim, values: vec![DVector::zeros(dim); grid.len()] }
    }

    pub fn grid(&self) -> PolarGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[DVector<Complex64>] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flat_map(|v| v.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PompeiuOptions {
    /// Largest tolerated relative size of the last resolved angular or radial modes.
    pub tail_tol: f64,
    /// Angular modes below this relative size are dropped.
    pub mode_drop: f64,
    /// Finite-difference step for the interior residual check.
    pub fd_step: f64,
}

impl Default for PompeiuOptions {
    fn default() -> Self {
        Self { tail_tol: 1e-10, mode_drop: 1e-15, fd_step: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Mode {
    component: usize,
    k: i64,
    legendre: Vec<Complex64>,
}

/// Particular solution `F` of `dF/dz-bar = phi` given by the Cauchy–Pompeiu
/// integral `F(z) = -(1/pi) int_D phi(w) / (w - z) dA(w)`.
#[derive(Debug, Clone)]
pub struct PompeiuSolution {
    grid: PolarGrid,
    dim: usize,
    modes: Vec<Mode>,
    grid_values: Vec<DVector<Complex64>>,
    trace: FourierLoop,
    opts: PompeiuOptions,
}

fn radial_integral(mode: &Mode, r: f64, nodes: usize) -> Complex64 {
    let k = mode.k;
    let series = |rho: f64| legendre_eval(&mode.legendre, 2.0 * rho - 1.0);
    if k >= 1 {
        if r >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (x, w) = gauss_legendre_on(nodes, r, 1.0);
        let s: Complex64 = x.iter().zip(&w).map(|(&rho, &wi)| series(rho) * (wi * (r / rho).powi((k - 1) as i32))).sum();
        -2.0 * s
    } else {
        if r <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (x, w) = gauss_legendre_on(nodes, 0.0, r);
        let s: Complex64 = x.iter().zip(&w).map(|(&rho, &wi)| series(rho) * (wi * (rho / r).powi((1 - k) as i32))).sum();
        2.0 * s
    }
}

pub fn cauchy_pompeiu(phi: &RhsForm, opts: PompeiuOptions) -> Result<PompeiuSolution> {
    let grid = phi.grid;
    let (nr, na) = (grid.radial, grid.angular);
    let half = (na / 2 - 1) as i64;
    let scale = phi.max_abs();
    let (gl_x, gl_w) = gauss_legendre(nr);

    let mut modes = Vec::new();
    if scale > 0.0 {
        let mut angular_tail: f64 = 0.0;
        let mut radial_tail: f64 = 0.0;
        for c in 0..phi.dim {
            // per radius: angular Fourier coefficients
            let mut per_radius = Vec::with_capacity(nr);
            for i in 0..nr {
                let samples: Vec<Complex64> = (0..na).map(|j| phi.values[i * na + j][c]).collect();
                per_radius.push(FourierLoop::from_scalar_samples(&samples)?);
            }
            for k in -half..=half {
                let vals: Vec<Complex64> =
                    per_radius.iter().map(|l| l.coeff(k).map(|m| m[(0, 0)]).unwrap_or_default()).collect();
                let size = vals.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
                if k.abs() >= half - 1 {
                    angular_tail = angular_tail.max(size);
                }
                if size <= opts.mode_drop {
                    continue;
                }
                let legendre = legendre_coefficients(&gl_x, &gl_w, &vals);
                let tail = legendre[nr - 2..].iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
                radial_tail = radial_tail.max(tail);
                modes.push(Mode { component: c, k, legendre });
            }
        }
        if angular_tail > opts.tail_tol {
            return Err(Error::GridTooCoarse { tail: angular_tail, tolerance: opts.tail_tol, direction: "angular" });
        }
        if radial_tail > opts.tail_tol {
            return Err(Error::GridTooCoarse { tail: radial_tail, tolerance: opts.tail_tol, direction: "radial" });
        }
    }

    let mut sol = PompeiuSolution {
        grid,
        dim: phi.dim,
        modes,
        grid_values: Vec::new(),
        trace: FourierLoop::zeros(0, phi.dim, 1),
        opts,
    };
    sol.grid_values = grid.points().into_iter().map(|z| sol.eval(z)).collect();
    let mut trace = FourierLoop::zeros(0, phi.dim, 1);
    for mode in sol.modes.iter().filter(|m| m.k <= 0) {
        let h = radial_integral(mode, 1.0, sol.nodes_for(mode));
        trace.coeff_mut(mode.k - 1)[(mode.component, 0)] += h;
    }
    sol.trace = trace;
    Ok(sol)
}

impl PompeiuSolution {
    fn nodes_for(&self, mode: &Mode) -> usize {
        let n = self.grid.radial;
        (n + 16).max((n + mode.k.unsigned_abs() as usize) / 2 + 16)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> PolarGrid {
        self.grid
    }

    /// Number of retained angular modes over all components.
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn eval(&self, z: Complex64) -> DVector<Complex64> {
        let r = z.norm().min(1.0);
        let theta = z.arg();
        let mut out = DVector::zeros(self.dim);
        for mode in &self.modes {
            if r == 0.0 && mode.k != 1 {
                continue;
            }
            let h = radial_integral(mode, r, self.nodes_for(mode));
            out[mode.component] += h * Complex64::from_polar(1.0, (mode.k - 1) as f64 * theta);
        }
        out
    }

    /// Values at the grid nodes in storage order.
    pub fn grid_values(&self) -> &[DVector<Complex64>] {
        &self.grid_values
    }

    /// Boundary values as an `n x 1` loop; only frequencies `<= -1` occur.
    pub fn boundary_trace(&self) -> &FourierLoop {
        &self.trace
    }

    /// Fourth-order central-difference approximation of `dF/dz-bar` at `z`.
    pub fn dbar_fd(&self, z: Complex64, h: f64) -> DVector<Complex64> {
        let d = |dir: Complex64| -> DVector<Complex64> {
            let f = |s: f64| self.eval(z + dir * s);
            (f(-2.0 * h) - f(-h) * Complex64::new(8.0, 0.0) + f(h) * Complex64::new(8.0, 0.0) - f(2.0 * h))
                / Complex64::new(12.0 * h, 0.0)
        };
        let dx = d(Complex64::new(1.0, 0.0));
        let dy = d(Complex64::new(0.0, 1.0));
        (dx + dy * Complex64::new(0.0, 1.0)) * Complex64::new(0.5, 0.0)
    }

    /// Largest finite-difference defect `|dbar F - phi|` over grid nodes with
    /// radius in `[0.2, 0.9]`, sampling every few angles.
    pub fn interior_residual(&self, phi: &RhsForm) -> f64 {
        let (radii, _) = self.grid.radii();
        let na = self.grid.angular;
        let stride = (na / 8).max(1);
        let mut worst: f64 = 0.0;
        for (i, &r) in radii.iter().enumerate() {
            if !(0.2..=0.9).contains(&r) {
                continue;
            }
            for j in (0..na).step_by(stride) {
                let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / na as f64);
                let defect = (self.dbar_fd(z, self.opts.fd_step) - &phi.values[i * na + j]).camax();
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// `int_D g(z)^T phi(z) dA` for a holomorphic `g`, by the grid quadrature.
    pub fn pair_density(phi: &RhsForm, g: impl Fn(Complex64) -> DVector<Complex64>) -> Complex64 {
        let grid = phi.grid;
        grid.points()
            .into_iter()
            .zip(grid.area_weights())
            .zip(&phi.values)
            .map(|((z, w), v)| g(z).dot(v) * w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(z: Complex64) -> DVector<Complex64> {
        let _ = z;
        DVector::from_element(1, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn zero_density_gives_zero() {
        let grid = PolarGrid::new(8, 16).unwrap();
        let sol = cauchy_pompeiu(&RhsForm::zero(grid, 2), PompeiuOptions::default()).unwrap();
        assert_eq!(sol.mode_count(), 0);
        assert!(sol.grid_values().iter().all(|v| v.camax() == 0.0));
    }

    #[test]
    fn unit_density_gives_conj_z() {
        let grid = PolarGrid::new(12, 16).unwrap();
        let phi = RhsForm::from_fn(grid, 1, one).unwrap();
        let sol = cauchy_pompeiu(&phi, PompeiuOptions::default()).unwrap();
        // The Cauchy transform of 1 is exactly conj(z).
        for z in grid.points() {
            assert!((sol.eval(z)[0] - z.conj()).norm() < 1e-13);
        }
        assert!(sol.interior_residual(&phi) < 1e-8);
        let t = sol.boundary_trace();
        assert!((t.coeff(-1).unwrap()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn conj_z_density() {
        let grid = PolarGrid::new(12, 16).unwrap();
        let phi = RhsForm::from_fn(grid, 1, |z| DVector::from_element(1, z.conj())).unwrap();
        let sol = cauchy_pompeiu(&phi, PompeiuOptions::default()).unwrap();
        assert!(sol.interior_residual(&phi) < 1e-6);
        for z in grid.points().into_iter().step_by(7) {
            assert!((sol.eval(z)[0] - 0.5 * z.conj() * z.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mixed_density_matches_closed_form() {
        // phi = z gives F = z conj(z) - 1 (holomorphic part fixed by the integral).
        let grid = PolarGrid::new(12, 16).unwrap();
        let phi = RhsForm::from_fn(grid, 1, |z| DVector::from_element(1, z)).unwrap();
        let sol = cauchy_pompeiu(&phi, PompeiuOptions::default()).unwrap();
        for z in grid.points().into_iter().step_by(5) {
            assert!((sol.eval(z)[0] - (z * z.conj() - 1.0)).norm() < 1e-12);
        }
        assert!(sol.interior_residual(&phi) < 1e-8);
    }

    #[test]
    fn coarse_grid_detected() {
        let grid = PolarGrid::new(4, 8).unwrap();
        let phi = RhsForm::from_fn(grid, 1, |z| DVector::from_element(1, (3.0 * z.conj()).exp())).unwrap();
        assert!(matches!(cauchy_pompeiu(&phi, PompeiuOptions::default()), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn refinement_does_not_increase_residual() {
        let density = |z: Complex64| DVector::from_element(1, (z.conj() * 0.8).exp() * (1.0 + z * z));
        let opts = PompeiuOptions { tail_tol: 1.0, ..Default::default() };
        let mut last = f64::INFINITY;
        for (nr, na) in [(6, 12), (10, 20), (16, 32)] {
            let grid = PolarGrid::new(nr, na).unwrap();
            let phi = RhsForm::from_fn(grid, 1, density).unwrap();
            let res = cauchy_pompeiu(&phi, opts).unwrap().interior_residual(&phi);
            assert!(res <= (last / 2.0).max(1e-9), "{nr}x{na}: {res} vs {last}");
            last = res;
        }
    }
}
