use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::disk::{max_boundary_residual, standard_half_line, DiskMap, OrientedPlane};
use super::perturbation::{apply_real, argmax_chart, PerturbationSpec};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_solve, rank, RankOptions, RankSummary};

pub const DEFAULT_TRUNCATION: usize = 24;

const STEP_RANK: RankOptions = RankOptions { tau: 1e-12, guard: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Taylor degree `K`.
    pub truncation: usize,
    /// Collocation angles; defaults to `2 (2K + m + 1)`.
    pub collocation: Option<usize>,
    pub tol: f64,
    pub maxit: usize,
    /// Rank decision for the tangent-dimension diagnostics.
    pub rank: RankOptions,
    pub check_tangent: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
            collocation: None,
            tol: 1e-10,
            maxit: 8,
            rank: RankOptions { tau: 1e-6, guard: 10.0 },
            check_tangent: true,
        }
    }
}

impl NewtonOptions {
    pub fn collocation_count(&self, m: usize) -> usize {
        self.collocation.unwrap_or(2 * (2 * self.truncation + m + 1))
    }
}

/// Kernel dimensions of the boundary linearization at a disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentDims {
    /// No gauge conditions: moduli plus disk automorphisms, `2m + 3`.
    pub free: usize,
    /// With the three gauge slices: the moduli tangent space, `2m`.
    pub sliced: usize,
    /// Centre pinned and rotation fixed: `0`.
    pub pinned: usize,
    pub sliced_summary: RankSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    /// Residual before each step and after the last one.
    pub history: Vec<f64>,
    pub tangent: Option<TangentDims>,
}

/// Unitary frame adapted to a reference plane: `b_0 = conj(e0)/sqrt 2` and the
/// real complement `w_1..w_m` span `ker l`.
pub(crate) struct Frame {
    pub e0: DVector<Complex64>,
    pub e0bar: DVector<Complex64>,
    pub w: Vec<DVector<Complex64>>,
    pub basis: Vec<DVector<Complex64>>,
}

impl Frame {
    pub fn new(plane: &OrientedPlane) -> Self {
        let e0 = plane.e0();
        let e0bar = e0.map(|z| z.conj());
        let w: Vec<DVector<Complex64>> =
            plane.complement().into_iter().map(|x| x.map(|r| Complex64::new(r, 0.0))).collect();
        let mut basis = vec![e0bar.map(|z| z / SQRT_2)];
        basis.extend(w.iter().cloned());
        Self { e0, e0bar, w, basis }
    }

    fn m(&self) -> usize {
        self.w.len()
    }

    /// Point of the quadric `a.a = 0` in the chart `l = 1`.
    pub fn quadric_point(&self, gamma: &[Complex64]) -> DVector<Complex64> {
        let sq: Complex64 = gamma.iter().map(|g| g * g).sum();
        let mut a = &self.e0 - &self.e0bar * (sq / 4.0);
        for (g, w) in gamma.iter().zip(&self.w) {
            a += w * *g;
        }
        a
    }

    fn coords(&self, a: &DVector<Complex64>) -> Vec<Complex64> {
        self.basis.iter().map(|b| b.dotc(a)).collect()
    }
}

/// Unknowns: incidence point `gamma`, marked boundary angle, and the
/// coefficients `a_k = sum_j g[k-1][j] b_j` for `k >= 1`.
#[derive(Clone)]
pub(crate) struct State {
    pub gamma: Vec<Complex64>,
    pub theta: f64,
    pub g: Vec<Vec<Complex64>>,
}

impl State {
    pub fn from_disk(frame: &Frame, disk: &DiskMap, k: usize) -> Self {
        let a0 = disk.coeff(0);
        let gamma = frame.w.iter().map(|w| w.dotc(&a0)).collect();
        let g = (1..=k).map(|j| frame.coords(&disk.coeff(j))).collect();
        Self { gamma, theta: 0.0, g }
    }

    pub fn coeffs(&self, frame: &Frame) -> Vec<DVector<Complex64>> {
        let mut out = vec![frame.quadric_point(&self.gamma)];
        for gk in &self.g {
            let mut a = DVector::zeros(frame.e0.len());
            for (c, b) in gk.iter().zip(&frame.basis) {
                a += b * *c;
            }
            out.push(a);
        }
        out
    }

    pub fn disk(&self, frame: &Frame, plane: &OrientedPlane) -> Result<DiskMap> {
        DiskMap::new(plane.clone(), self.coeffs(frame))
    }
}

/// Point of `P'` that a disk must pass through, located in a fixed chart.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub chart: usize,
    pub t: DVector<f64>,
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum Mode {
    Pinned,
    Incidence,
}

pub(crate) fn collocation_angles(count: usize) -> Vec<f64> {
    (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect()
}

fn eval_coeffs(coeffs: &[DVector<Complex64>], z: Complex64) -> DVector<Complex64> {
    let mut acc = DVector::zeros(coeffs[0].len());
    for c in coeffs.iter().rev() {
        acc *= z;
        acc += c;
    }
    acc
}

fn deriv_coeffs(coeffs: &[DVector<Complex64>], z: Complex64) -> DVector<Complex64> {
    let mut acc = DVector::zeros(coeffs[0].len());
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc *= z;
        acc += c * Complex64::new(k as f64, 0.0);
    }
    acc
}

fn rotation_gauge(a0: &DVector<Complex64>, a1: &DVector<Complex64>) -> f64 {
    (a0.transpose() * a1)[(0, 0)].im * 0.5
}

fn cdot(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Residual and (optionally) Jacobian of the boundary system.
///
/// Rows: `m + 1` per collocation angle, the rotation gauge, and in incidence
/// mode `m + 1` interpolation rows. Columns: `(gamma, theta)` in incidence
/// mode, then `g` in `(k, j, re/im)` order.
pub(crate) fn assemble(
    frame: &Frame,
    state: &State,
    p: &PerturbationSpec,
    angles: &[f64],
    charts: &[usize],
    mode: Mode,
    target: Option<&Target>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = frame.m();
    let r = m + 1;
    let kdeg = state.g.len();
    let extra = if mode == Mode::Incidence { 2 * m + 1 } else { 0 };
    let ncols = extra + 2 * r * kdeg;
    let nrows = r * angles.len() + 1 + if mode == Mode::Incidence { r } else { 0 };
    let coeffs = state.coeffs(frame);
    let mut res = DVector::zeros(nrows);
    let mut jac = DMatrix::zeros(nrows, ncols);
    let i_unit = Complex64::new(0.0, 1.0);
    // d a0 / d gamma_k along real and imaginary directions
    let dgamma: Vec<DVector<Complex64>> = (0..m)
        .flat_map(|k| {
            let d = &frame.w[k] - &frame.e0bar * (state.gamma[k] / 2.0);
            [d.clone(), d * i_unit]
        })
        .collect();
    let gcol = |k: usize, j: usize| extra + 2 * ((k - 1) * r + j);

    for (ai, &theta) in angles.iter().enumerate() {
        let z = Complex64::from_polar(1.0, theta);
        let w = eval_coeffs(&coeffs, z);
        let pt = p.straighten(&w, charts[ai])?;
        let row = ai * r;
        res.rows_mut(row, r).copy_from(&pt.residual);
        let pb: Vec<DVector<f64>> = frame.basis.iter().map(|b| apply_real(&pt.dr, b)).collect();
        let qb: Vec<DVector<f64>> = frame.basis.iter().map(|b| apply_real(&pt.dr, &(b * i_unit))).collect();
        for k in 1..=kdeg {
            let (s, c) = (k as f64 * theta).sin_cos();
            for j in 0..r {
                let col = gcol(k, j);
                jac.view_mut((row, col), (r, 1)).copy_from(&(&pb[j] * c + &qb[j] * s));
                jac.view_mut((row, col + 1), (r, 1)).copy_from(&(&qb[j] * c - &pb[j] * s));
            }
        }
        if mode == Mode::Incidence {
            for (q, d) in dgamma.iter().enumerate() {
                jac.view_mut((row, q), (r, 1)).copy_from(&apply_real(&pt.dr, d));
            }
        }
    }

    let grow = r * angles.len();
    let (a0, a1) = (&coeffs[0], &coeffs[1.min(coeffs.len() - 1)]);
    res[grow] = if coeffs.len() > 1 { rotation_gauge(a0, a1) } else { 0.0 };
    if kdeg >= 1 {
        for j in 0..r {
            let d = cdot(a0, &frame.basis[j]) * 0.5;
            jac[(grow, gcol(1, j))] = d.im;
            jac[(grow, gcol(1, j) + 1)] = (d * i_unit).im;
        }
    }
    if mode == Mode::Incidence {
        for (q, d) in dgamma.iter().enumerate() {
            jac[(grow, q)] = (cdot(d, a1) * 0.5).im;
        }
        let target = target.expect("incidence mode needs a target");
        let z = Complex64::from_polar(1.0, state.theta);
        let w = eval_coeffs(&coeffs, z);
        let pt = p.straighten(&w, target.chart)?;
        let row = grow + 1;
        res.rows_mut(row, r).copy_from(&(&pt.t - &target.t));
        for (q, d) in dgamma.iter().enumerate() {
            jac.view_mut((row, q), (r, 1)).copy_from(&apply_real(&pt.dt, d));
        }
        let dtheta = deriv_coeffs(&coeffs, z) * (z * i_unit);
        jac.view_mut((row, 2 * m), (r, 1)).copy_from(&apply_real(&pt.dt, &dtheta));
        for k in 1..=kdeg {
            let zk = z.powu(k as u32);
            for j in 0..r {
                let b = &frame.basis[j] * zk;
                let col = gcol(k, j);
                jac.view_mut((row, col), (r, 1)).copy_from(&apply_real(&pt.dt, &b));
                jac.view_mut((row, col + 1), (r, 1)).copy_from(&apply_real(&pt.dt, &(b * i_unit)));
            }
        }
    }
    Ok((res, jac))
}

pub(crate) fn apply_step(state: &mut State, step: &DVector<f64>, mode: Mode) {
    let m = state.gamma.len();
    let mut off = 0;
    if mode == Mode::Incidence {
        for k in 0..m {
            state.gamma[k] += Complex64::new(step[2 * k], step[2 * k + 1]);
        }
        state.theta += step[2 * m];
        off = 2 * m + 1;
    }
    for gk in state.g.iter_mut() {
        for c in gk.iter_mut() {
            *c += Complex64::new(step[off], step[off + 1]);
            off += 2;
        }
    }
}

/// Gauss-Newton solve for the disk through the quadric point of `f0`'s
/// reference plane, with the rotation gauge `Im(a0.a1) = 0`.
pub fn newton_disk(f0: &DiskMap, p: &PerturbationSpec, opts: &NewtonOptions) -> Result<(DiskMap, NewtonReport)> {
    p.validate()?;
    if f0.m() != p.m {
        return Err(Error::ShapeMismatch(format!("disk for m = {} vs perturbation for m = {}", f0.m(), p.m)));
    }
    if opts.truncation < 1 || opts.maxit == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("Newton needs truncation >= 1, maxit >= 1 and tol > 0".into()));
    }
    let plane = f0.plane().clone();
    let frame = Frame::new(&plane);
    let start = f0.normalized()?;
    let mut state = State::from_disk(&frame, &start, opts.truncation);
    state.gamma.iter_mut().for_each(|g| *g = Complex64::new(0.0, 0.0));
    let count = opts.collocation_count(p.m);
    if count < 2 * opts.truncation + p.m + 1 {
        return Err(Error::InvalidInput(format!("{count} collocation angles are too few for degree {}", opts.truncation)));
    }
    let angles = collocation_angles(count);
    let disk0 = state.disk(&frame, &plane)?;
    let charts: Vec<usize> = angles.iter().map(|&t| argmax_chart(&disk0.boundary(t))).collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let disk = state.disk(&frame, &plane)?;
        let residual = max_boundary_residual(&disk, p, count)?.max(disk.gauge()[2].abs());
        history.push(residual);
        if residual <= opts.tol {
            let tangent = if opts.check_tangent { Some(tangent_dimensions(&disk, p, opts)?) } else { None };
            if let Some(t) = &tangent {
                if t.sliced != 2 * p.m {
                    return Err(Error::RankAnomaly { expected: 2 * p.m, found: t.sliced });
                }
            }
            return Ok((disk, NewtonReport { iterations, residual, history, tangent }));
        }
        if iterations == opts.maxit || !residual.is_finite() {
            return Err(Error::NotConverged { iterations, residual, tolerance: opts.tol });
        }
        let (res, jac) = assemble(&frame, &state, p, &angles, &charts, Mode::Pinned, None)?;
        let (step, summary, _) = min_norm_solve(&jac, &(-res), STEP_RANK)?;
        if summary.kernel_dim > 0 {
            return Err(Error::RankAnomaly { expected: 0, found: summary.kernel_dim });
        }
        apply_step(&mut state, &step, Mode::Pinned);
        iterations += 1;
    }
}

/// Continue from the half-line at `eps = 0` to `p` in `steps` uniform steps.
pub fn continue_from_half_line(
    plane: &OrientedPlane,
    p: &PerturbationSpec,
    steps: usize,
    opts: &NewtonOptions,
) -> Result<(DiskMap, NewtonReport)> {
    let steps = steps.max(1);
    let mut disk = standard_half_line(plane);
    let inner = NewtonOptions { check_tangent: false, ..*opts };
    for s in 1..steps {
        let ps = p.with_epsilon(p.epsilon * s as f64 / steps as f64);
        disk = newton_disk(&disk, &ps, &inner)?.0;
    }
    newton_disk(&disk, p, opts)
}

/// Kernel dimensions of the collocation linearization at `disk` with the gauge
/// released, sliced, and pinned.
pub fn tangent_dimensions(disk: &DiskMap, p: &PerturbationSpec, opts: &NewtonOptions) -> Result<TangentDims> {
    let plane = disk.plane().clone();
    let frame = Frame::new(&plane);
    let disk = disk.normalized()?;
    let kdeg = disk.degree().max(2);
    let m = p.m;
    let r = m + 1;
    let count = opts.collocation_count(m).max(2 * (2 * kdeg + r));
    let angles = collocation_angles(count);
    let coeffs: Vec<DVector<Complex64>> = (0..=kdeg).map(|k| disk.coeff(k)).collect();
    let (a0, a1) = (&coeffs[0], &coeffs[1]);
    let ncols = 2 * r * (kdeg + 1);
    let col = |k: usize, j: usize| 2 * (k * r + j);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut boundary = DMatrix::zeros(r * count, ncols);
    for (ai, &theta) in angles.iter().enumerate() {
        let w = eval_coeffs(&coeffs, Complex64::from_polar(1.0, theta));
        let pt = p.straighten(&w, argmax_chart(&w))?;
        for j in 0..r {
            let pb = apply_real(&pt.dr, &frame.basis[j]);
            let qb = apply_real(&pt.dr, &(&frame.basis[j] * i_unit));
            for k in 0..=kdeg {
                let (s, c) = (k as f64 * theta).sin_cos();
                boundary.view_mut((ai * r, col(k, j)), (r, 1)).copy_from(&(&pb * c + &qb * s));
                boundary.view_mut((ai * r, col(k, j) + 1), (r, 1)).copy_from(&(&qb * c - &pb * s));
            }
        }
    }
    let mut slices = DMatrix::zeros(3, ncols);
    for j in 0..r {
        let b = &frame.basis[j];
        for (re_im, unit) in [(0, Complex64::new(1.0, 0.0)), (1, i_unit)] {
            let d = b * unit;
            let q = cdot(a0, &d) * 2.0;
            slices[(0, col(0, j) + re_im)] = q.re;
            slices[(1, col(0, j) + re_im)] = q.im;
            slices[(2, col(0, j) + re_im)] = (cdot(&d, a1) * 0.5).im;
            slices[(2, col(1, j) + re_im)] = (cdot(a0, &d) * 0.5).im;
        }
    }
    let free = rank(&boundary, opts.rank)?;
    let mut sliced_mat = DMatrix::zeros(boundary.nrows() + 3, ncols);
    sliced_mat.rows_mut(0, boundary.nrows()).copy_from(&boundary);
    sliced_mat.rows_mut(boundary.nrows(), 3).copy_from(&slices);
    let sliced = rank(&sliced_mat, opts.rank)?;
    let pinned_mat = sliced_mat.columns(2 * r, ncols - 2 * r).into_owned();
    let pinned = rank(&pinned_mat, opts.rank)?;
    Ok(TangentDims { free: free.kernel_dim, sliced: sliced.kernel_dim, pinned: pinned.kernel_dim, sliced_summary: sliced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::disk::boundary_residual;

    fn tilted() -> OrientedPlane {
        let s = 0.5f64.sqrt();
        OrientedPlane::new(vec![s, 0.0, s, 0.0], vec![0.0, 0.6, 0.0, 0.8]).unwrap()
    }

    #[test]
    fn fixed_point_at_zero() {
        for plane in [tilted(), OrientedPlane::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]).unwrap()] {
            let m = plane.m();
            let h = standard_half_line(&plane);
            let (f, rep) = newton_disk(&h, &PerturbationSpec::unperturbed(m), &NewtonOptions::default()).unwrap();
            assert!(rep.iterations <= 2 && rep.residual <= 1e-12);
            assert!(f.coeff_distance(&h) < 1e-12);
            let t = rep.tangent.unwrap();
            assert_eq!((t.free, t.sliced, t.pinned), (2 * m + 3, 2 * m, 0));
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let p = PerturbationSpec::odd_cubic(2, 0.05).unwrap();
        let plane = tilted();
        let frame = Frame::new(&plane);
        let mut state = State::from_disk(&frame, &standard_half_line(&plane), 3);
        state.theta = 0.7;
        state.gamma = vec![Complex64::new(0.05, -0.02), Complex64::new(0.01, 0.03)];
        state.g[1][2] = Complex64::new(0.02, 0.01);
        let angles = collocation_angles(12);
        let charts: Vec<usize> = angles
            .iter()
            .map(|&t| argmax_chart(&eval_coeffs(&state.coeffs(&frame), Complex64::from_polar(1.0, t))))
            .collect();
        let target = Target { chart: 0, t: DVector::from_vec(vec![0.1, 0.2, -0.3]) };
        let (_, jac) = assemble(&frame, &state, &p, &angles, &charts, Mode::Incidence, Some(&target)).unwrap();
        let h = 1e-6;
        for c in 0..jac.ncols() {
            let mut step = DVector::zeros(jac.ncols());
            step[c] = h;
            let mut sp = state.clone();
            apply_step(&mut sp, &step, Mode::Incidence);
            let mut sm = state.clone();
            apply_step(&mut sm, &(-step), Mode::Incidence);
            let rp = assemble(&frame, &sp, &p, &angles, &charts, Mode::Incidence, Some(&target)).unwrap().0;
            let rm = assemble(&frame, &sm, &p, &angles, &charts, Mode::Incidence, Some(&target)).unwrap().0;
            let fd = (rp - rm) / (2.0 * h);
            assert!((fd - jac.column(c)).amax() < 1e-7, "column {c}");
        }
    }

    #[test]
    fn perturbed_cp3_converges() {
        let p = PerturbationSpec::odd_cubic(2, 0.05).unwrap();
        let (f, rep) = continue_from_half_line(&tilted(), &p, 2, &NewtonOptions::default()).unwrap();
        assert!(rep.iterations <= 8 && rep.residual <= 1e-8, "{rep:?}");
        let t = rep.tangent.unwrap();
        assert_eq!((t.free, t.sliced, t.pinned), (7, 4, 0), "{t:?}");
        assert!(f.gauge().iter().all(|g| g.abs() < 1e-12));
        assert!(f.coeff_distance(&standard_half_line(&tilted())) > 1e-3);
        // residual at arbitrary angles, not only collocation points
        let angles: Vec<f64> = (0..97).map(|i| 0.013 + i as f64 * 0.0647).collect();
        assert!(boundary_residual(&f, &p, &angles).unwrap().iter().all(|r| r.abs() < 1e-8));
    }

    #[test]
    fn rescaling_leaves_residuals_unchanged() {
        let p = PerturbationSpec::odd_cubic(2, 0.05).unwrap();
        let (f, _) = continue_from_half_line(&tilted(), &p, 2, &NewtonOptions::default()).unwrap();
        let h = [Complex64::new(1.0, 0.3), Complex64::new(0.25, -0.1)];
        let g = f.rescaled(&h);
        let angles: Vec<f64> = (0..40).map(|i| 0.1 + 0.157 * i as f64).collect();
        let (rf, rg) = (boundary_residual(&f, &p, &angles).unwrap(), boundary_residual(&g, &p, &angles).unwrap());
        assert!(rf.iter().zip(&rg).all(|(a, b)| (a - b).abs() < 1e-13));
        assert!(g.normalized().unwrap().with_degree(f.degree()).coeff_distance(&f) < 1e-12);
    }

    #[test]
    fn maxit_is_reported() {
        let p = PerturbationSpec::odd_cubic(2, 0.05).unwrap();
        let opts = NewtonOptions { maxit: 1, ..Default::default() };
        let err = newton_disk(&standard_half_line(&tilted()), &p, &opts).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 1, .. }));
    }
}
