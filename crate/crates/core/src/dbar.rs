//! The boundary value problem `df/dz-bar = phi` on the unit disk with
//! `f(e^{i theta})` in a totally real subspace `E(theta)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{frame_to_gloop, partial_indices, twisted_kernel, BoundaryFrame, GLoop, ScanOptions};
use crate::error::{Error, Result};
use crate::linalg::{cinv, csigma_min, min_norm_solve, RankOptions};
use crate::spectral::{cauchy_pompeiu, sample_angles, PompeiuOptions, PompeiuSolution, RhsForm, TaylorDisk};

/// Pointwise frame for `E(theta)` built from `G(theta)` alone:
/// `B = c^{1/2} I + conj(c)^{1/2} G` satisfies `G conj(B) = B`, so its columns span
/// the fixed space of `f -> G conj(f)`. The unit `c` is picked among the eighth
/// roots of unity to keep `B` well conditioned.
pub fn pointwise_frame(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = g.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut best: Option<(f64, DMatrix<Complex64>)> = None;
    for r in 0..8 {
        let half = Complex64::from_polar(1.0, std::f64::consts::PI * r as f64 / 8.0);
        let b = &eye * half + g * half.conj();
        let s = csigma_min(&b);
        if best.as_ref().is_none_or(|(t, _)| s > *t) {
            best = Some((s, b));
        }
    }
    best.expect("eight candidates").1
}

/// Boundary condition in straightened form: `f` satisfies it iff
/// `Im(B(theta)^{-1} f(theta)) = 0`.
#[derive(Debug, Clone)]
pub struct Straightening {
    gloop: GLoop,
    frame: Option<BoundaryFrame>,
}

impl Straightening {
    pub fn from_gloop(g: GLoop) -> Self {
        Self { gloop: g, frame: None }
    }

    pub fn dim(&self) -> usize {
        self.gloop.dim()
    }

    pub fn gloop(&self) -> &GLoop {
        &self.gloop
    }

    pub fn frame(&self) -> Option<&BoundaryFrame> {
        self.frame.as_ref()
    }

    pub fn frame_at(&self, theta: f64) -> DMatrix<Complex64> {
        match &self.frame {
            Some(b) => b.eval(theta),
            None => pointwise_frame(&self.gloop.eval(theta)),
        }
    }

    pub fn inverse_frame_at(&self, theta: f64) -> Result<DMatrix<Complex64>> {
        let b = self.frame_at(theta);
        cinv(&b).ok_or_else(|| Error::StraighteningFailed(format!("frame singular at theta = {theta}")))
    }

    /// `max |Im(B^{-1} f)|` over the given angles.
    pub fn reality_defect(&self, f: &TaylorDisk, angles: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in angles {
            let v = self.inverse_frame_at(t)? * f.eval(Complex64::from_polar(1.0, t));
            worst = worst.max(v.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
        }
        Ok(worst)
    }
}

pub fn straighten_frame(b: &BoundaryFrame) -> Result<Straightening> {
    let gloop = frame_to_gloop(b)?;
    Ok(Straightening { gloop, frame: Some(b.clone()) })
}

/// Real collocation rows `Im(B(theta_c)^{-1} sum_k a_k e^{ik theta_c})` for
/// Taylor coefficients of degree `<= degree`, one block of `n` rows per angle.
pub fn collocation_matrix(cond: &Straightening, degree: usize, angles: &[f64]) -> Result<DMatrix<f64>> {
    let n = cond.dim();
    let mut a = DMatrix::zeros(n * angles.len(), 2 * n * (degree + 1));
    for (c, &t) in angles.iter().enumerate() {
        let binv = cond.inverse_frame_at(t)?;
        for k in 0..=degree {
            let e = Complex64::from_polar(1.0, k as f64 * t);
            for i in 0..n {
                for r in 0..n {
                    let v = binv[(r, i)] * e;
                    a[(c * n + r, 2 * (k * n + i))] = v.im;
                    a[(c * n + r, 2 * (k * n + i) + 1)] = v.re;
                }
            }
        }
    }
    Ok(a)
}

/// Kernel of the collocation system: a real basis (columns, `TaylorDisk::to_real`
/// coordinates) of polynomial solutions of degree `<= degree`.
pub fn collocation_kernel(cond: &Straightening, degree: usize, rank: RankOptions) -> Result<DMatrix<f64>> {
    let count = 2 * (2 * degree + cond.dim()) + 8;
    let angles: Vec<f64> = sample_angles(count).collect();
    let a = collocation_matrix(cond, degree, &angles)?;
    Ok(crate::linalg::null_space(&a, rank)?.0)
}

/// Real basis of holomorphic `f` with `f = G conj(f)` on the circle, orthonormal
/// in coefficient space. The count is checked against `h0` of the index scan.
pub fn kernel_basis(g: &GLoop, opts: ScanOptions) -> Result<Vec<TaylorDisk>> {
    let report = partial_indices(g, opts)?;
    let k = twisted_kernel(g, 0, opts.truncation, opts.rank)?;
    if k.dim() != report.h0 {
        return Err(Error::TruncationTooSmall(format!(
            "kernel has dimension {} but the index scan gives h0 = {}",
            k.dim(),
            report.h0
        )));
    }
    Ok(k.disks(g.dim()))
}

/// `dim ker - dim coker`, with the cokernel measured as the kernel of the dual
/// condition `e^{-2i theta} G^H`.
pub fn numerical_index(g: &GLoop, opts: ScanOptions) -> Result<i64> {
    Ok(stable_kernel_dim(g, opts)? as i64 - stable_kernel_dim(&g.dual(), opts)? as i64)
}

fn stable_kernel_dim(g: &GLoop, opts: ScanOptions) -> Result<usize> {
    let k = twisted_kernel(g, 0, opts.truncation, opts.rank)?;
    if k.capped {
        let wider = twisted_kernel(g, 0, 2 * opts.truncation, opts.rank)?;
        if wider.dim() != k.dim() {
            return Err(Error::TruncationTooSmall(format!(
                "kernel dimension changes from {} to {} when the truncation doubles",
                k.dim(),
                wider.dim()
            )));
        }
    }
    Ok(k.dim())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpTolerances {
    pub rank: RankOptions,
    /// Normalized least-squares residual above which the problem is declared obstructed.
    pub obstruction: f64,
    pub pompeiu: PompeiuOptions,
}

impl Default for BvpTolerances {
    fn default() -> Self {
        Self { rank: RankOptions::default(), obstruction: 1e-6, pompeiu: PompeiuOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct LinearBvp {
    pub condition: Straightening,
    pub rhs: RhsForm,
    /// Taylor degree of the holomorphic correction.
    pub degree: usize,
    /// Number of collocation angles.
    pub collocation: usize,
    pub tolerances: BvpTolerances,
}

impl LinearBvp {
    pub fn new(condition: Straightening, rhs: RhsForm, degree: usize) -> Result<Self> {
        let n = condition.dim();
        let collocation = 2 * (2 * degree + n) + 4 * rhs.grid().angular.div_ceil(2);
        let p = Self { condition, rhs, degree, collocation, tolerances: BvpTolerances::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.condition.dim();
        if self.rhs.dim() != n {
            return Err(Error::ShapeMismatch(format!("density has {} components, condition has {n}", self.rhs.dim())));
        }
        if self.collocation < 2 * (2 * self.degree + n) {
            return Err(Error::InvalidInput(format!(
                "collocation count {} is below 2(2K + n) = {}",
                self.collocation,
                2 * (2 * self.degree + n)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DiskSolution {
    /// Holomorphic correction; the solution is `particular + f`.
    pub f: TaylorDisk,
    pub particular: PompeiuSolution,
    pub interior_residual: f64,
    pub boundary_residual: f64,
    /// Normalized least-squares residual of the collocation system.
    pub lsq_residual: f64,
    /// Real kernel basis of the collocation system, in `TaylorDisk::to_real` coordinates.
    pub kernel: DMatrix<f64>,
    /// Coefficients of `f` against `kernel`; zero for the minimum-norm solution.
    pub kernel_projection: Vec<f64>,
}

impl DiskSolution {
    pub fn eval(&self, z: Complex64) -> DVector<Complex64> {
        self.particular.eval(z) + self.f.eval(z)
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    /// Real dimension of the cokernel, the kernel dimension of the dual condition.
    pub dimension: usize,
    /// Basis `g` of the dual kernel; `phi` is solvable iff `Im int g^T phi dA = 0` for all `g`.
    pub dual_basis: Vec<TaylorDisk>,
    pub pairings: Vec<f64>,
    pub lsq_residual: f64,
}

#[derive(Debug, Clone)]
pub enum BvpOutcome {
    Solved(Box<DiskSolution>),
    Obstructed(Certificate),
}

/// `Im int_D g^T phi dA` for each `g`.
pub fn obstruction_pairings(phi: &RhsForm, dual_basis: &[TaylorDisk]) -> Vec<f64> {
    dual_basis.iter().map(|g| PompeiuSolution::pair_density(phi, |z| g.eval(z)).im).collect()
}

fn fd_dbar<F: Fn(Complex64) -> DVector<Complex64>>(f: F, z: Complex64, h: f64) -> DVector<Complex64> {
    let d = |dir: Complex64| -> DVector<Complex64> {
        let s = |t: f64| f(z + dir * t);
        (s(-2.0 * h) - s(-h) * Complex64::new(8.0, 0.0) + s(h) * Complex64::new(8.0, 0.0) - s(2.0 * h))
            / Complex64::new(12.0 * h, 0.0)
    };
    (d(Complex64::new(1.0, 0.0)) + d(Complex64::new(0.0, 1.0)) * Complex64::new(0.0, 1.0)) * Complex64::new(0.5, 0.0)
}

pub fn solve_bvp(p: &LinearBvp) -> Result<BvpOutcome> {
    p.validate()?;
    let n = p.condition.dim();
    let particular = cauchy_pompeiu(&p.rhs, p.tolerances.pompeiu)?;
    let trace = particular.boundary_trace();
    let angles: Vec<f64> = sample_angles(p.collocation).collect();
    let a = collocation_matrix(&p.condition, p.degree, &angles)?;
    let mut b = DVector::zeros(n * angles.len());
    let mut data_norm2 = 0.0;
    for (c, &t) in angles.iter().enumerate() {
        let v = p.condition.inverse_frame_at(t)? * trace.eval(t).column(0);
        data_norm2 += v.norm_squared();
        for r in 0..n {
            b[c * n + r] = -v[r].im;
        }
    }
    let (x, summary, kernel) = min_norm_solve(&a, &b, p.tolerances.rank)?;
    // measured against the full size of the particular trace, not just its imaginary part
    let scale = data_norm2.sqrt().max(a.norm() * x.norm());
    let lsq_residual = if scale == 0.0 { 0.0 } else { (&a * &x - &b).norm() / scale };
    if !lsq_residual.is_finite() {
        return Err(Error::IllConditioned("collocation residual is not finite".into()));
    }

    if lsq_residual > p.tolerances.obstruction {
        let dual = p.condition.gloop().dual();
        let opts = ScanOptions { rank: p.tolerances.rank, ..ScanOptions::default() };
        let dual_basis = twisted_kernel(&dual, 0, opts.truncation, opts.rank)?.disks(n);
        if dual_basis.is_empty() {
            return Err(Error::IllConditioned(format!(
                "collocation residual {lsq_residual:.3e} with a trivial cokernel (rank {} of {})",
                summary.rank, summary.cols
            )));
        }
        let pairings = obstruction_pairings(&p.rhs, &dual_basis);
        return Ok(BvpOutcome::Obstructed(Certificate {
            dimension: dual_basis.len(),
            dual_basis,
            pairings,
            lsq_residual,
        }));
    }

    let f = TaylorDisk::from_real(n, x.as_slice())?;
    let kernel_projection: Vec<f64> = kernel.column_iter().map(|c| c.dot(&x)).collect();
    let mut sol = DiskSolution {
        f,
        particular,
        interior_residual: 0.0,
        boundary_residual: 0.0,
        lsq_residual,
        kernel,
        kernel_projection,
    };
    sol.interior_residual = interior_residual(&sol, &p.rhs, p.tolerances.pompeiu.fd_step);
    sol.boundary_residual = boundary_residual(&sol, p.condition.gloop(), 4 * p.collocation);
    Ok(BvpOutcome::Solved(Box::new(sol)))
}

fn interior_residual(sol: &DiskSolution, rhs: &RhsForm, h: f64) -> f64 {
    let grid = rhs.grid();
    let (radii, _) = grid.radii();
    let na = grid.angular;
    let stride = (na / 8).max(1);
    let mut worst: f64 = 0.0;
    for (i, &r) in radii.iter().enumerate() {
        if !(0.2..=0.9).contains(&r) {
            continue;
        }
        for j in (0..na).step_by(stride) {
            let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / na as f64);
            let d = fd_dbar(|w| sol.eval(w), z, h) - &rhs.values()[i * na + j];
            worst = worst.max(d.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// `max |f - G conj(f)|` on the circle, relative to `max(1, max |f|)`, at angles
/// interleaved with the collocation nodes.
fn boundary_residual(sol: &DiskSolution, g: &GLoop, count: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut size: f64 = 1.0;
    let offset = std::f64::consts::PI / count as f64;
    for t in sample_angles(count).map(|t| t + offset) {
        let z = Complex64::from_polar(1.0, t);
        let f = sol.particular.boundary_trace().eval(t).column(0).into_owned() + sol.f.eval(z);
        let refl = g.eval(t) * f.map(|v| v.conj());
        size = size.max(f.iter().map(|v| v.norm()).fold(0.0, f64::max));
        worst = worst.max((&f - refl).iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    worst / size
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{maslov_index, PartialIndexReport};
    use crate::spectral::{FourierLoop, PolarGrid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Principal-angle distance between two real column spaces.
    fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        if a.ncols() != b.ncols() {
            return f64::INFINITY;
        }
        let proj = b * (b.transpose() * a);
        (a - proj).norm()
    }

    fn pad(m: &DMatrix<f64>, rows: usize) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(rows, m.ncols());
        p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        p
    }

    #[test]
    fn pointwise_frame_spans_fixed_space() {
        let g = GLoop::diagonal(&[3, -1]).unwrap();
        for t in [0.0, 0.8, 2.5, 5.0] {
            let gm = g.eval(t);
            let b = pointwise_frame(&gm);
            let lhs = &gm * b.map(|z| z.conj());
            assert!((lhs - &b).iter().all(|z| z.norm() < 1e-14));
            assert!(csigma_min(&b) > 0.5);
        }
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_basis(&GLoop::diagonal(&[0]).unwrap(), ScanOptions::default()).unwrap();
        assert_eq!(k.len(), 1);
        let a0 = k[0].coeff(0)[0];
        assert!(a0.im.abs() < 1e-14 && (a0.re.abs() - 1.0).abs() < 1e-14);
        assert_eq!(kernel_basis(&GLoop::diagonal(&[2]).unwrap(), ScanOptions::default()).unwrap().len(), 3);
        assert_eq!(kernel_basis(&GLoop::diagonal(&[1, 1]).unwrap(), ScanOptions::default()).unwrap().len(), 4);
    }

    #[test]
    fn kernel_elements_satisfy_reflection() {
        let g = GLoop::diagonal(&[2, 1]).unwrap();
        for f in kernel_basis(&g, ScanOptions::default()).unwrap() {
            for t in [0.3, 1.9, 4.2] {
                let v = f.eval(Complex64::from_polar(1.0, t));
                let r = g.eval(t) * v.map(|z| z.conj());
                assert!((v - r).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn index_examples() {
        let o = ScanOptions::default();
        assert_eq!(numerical_index(&GLoop::diagonal(&[0, 0, 0]).unwrap(), o).unwrap(), 3);
        assert_eq!(numerical_index(&GLoop::diagonal(&[3]).unwrap(), o).unwrap(), 4);
        assert_eq!(numerical_index(&GLoop::diagonal(&[-3, 1]).unwrap(), o).unwrap(), 0);
    }

    #[test]
    fn frame_and_loop_formulations_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let mut terms = vec![(0i64, DMatrix::<Complex64>::identity(2, 2))];
            for k in 0..2 {
                let m = DMatrix::from_fn(2, 2, |_, _| c(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)));
                terms.push((k, m));
            }
            let b = BoundaryFrame::new(FourierLoop::from_terms(2, 2, &terms).unwrap()).unwrap();
            let s = straighten_frame(&b).unwrap();
            let via_frame = collocation_kernel(&s, 6, RankOptions::default()).unwrap();
            let via_loop = kernel_basis(s.gloop(), ScanOptions::default()).unwrap();
            let degree = via_loop.iter().map(|f| f.degree()).max().unwrap();
            let rows = 2 * 2 * (degree.max(6) + 1);
            let lm = DMatrix::from_columns(&via_loop.iter().map(|f| f.to_real()).collect::<Vec<_>>());
            let gap = subspace_gap(&pad(&via_frame, rows), &pad(&lm, rows));
            assert!(gap < 1e-9, "gap {gap}");
            assert_eq!(via_frame.ncols(), 2);
        }
    }

    #[test]
    fn zero_density_with_trivial_condition() {
        let grid = PolarGrid::new(8, 16).unwrap();
        let p = LinearBvp::new(Straightening::from_gloop(GLoop::diagonal(&[0]).unwrap()), RhsForm::zero(grid, 1), 8)
            .unwrap();
        match solve_bvp(&p).unwrap() {
            BvpOutcome::Solved(s) => {
                assert!(s.f.coeff_norm() < 1e-14);
                assert_eq!(s.kernel.ncols(), 1);
            }
            BvpOutcome::Obstructed(_) => panic!("unexpected obstruction"),
        }
    }

    #[test]
    fn obstructed_for_negative_index() {
        let g = GLoop::diagonal(&[-2]).unwrap();
        let grid = PolarGrid::new(12, 24).unwrap();
        let phi = RhsForm::from_fn(grid, 1, |z| DVector::from_element(1, c(0.0, 1.0) + z * 0.3)).unwrap();
        let p = LinearBvp::new(Straightening::from_gloop(g.clone()), phi, 12).unwrap();
        match solve_bvp(&p).unwrap() {
            BvpOutcome::Obstructed(cert) => {
                let report = partial_indices(&g, ScanOptions::default()).unwrap();
                assert_eq!(cert.dimension, report.h1);
                assert_eq!(cert.dimension, 1);
                assert!(cert.pairings[0].abs() > 1.0);
            }
            BvpOutcome::Solved(_) => panic!("expected an obstruction"),
        }
    }

    #[test]
    fn annihilated_density_is_solvable_despite_cokernel() {
        // dual condition is G* = 1 with kernel the real constants; a real density pairs to zero
        let g = GLoop::diagonal(&[-2]).unwrap();
        let grid = PolarGrid::new(12, 24).unwrap();
        let phi = RhsForm::from_fn(grid, 1, |_| DVector::from_element(1, c(1.0, 0.0))).unwrap();
        let p = LinearBvp::new(Straightening::from_gloop(g), phi, 12).unwrap();
        match solve_bvp(&p).unwrap() {
            BvpOutcome::Solved(s) => {
                // conj(z) itself satisfies the boundary condition
                assert!(s.f.coeff_norm() < 1e-12);
                assert!(s.boundary_residual < 1e-12);
                assert!(s.interior_residual < 1e-8);
            }
            BvpOutcome::Obstructed(c) => panic!("unexpected obstruction {:?}", c.pairings),
        }
    }

    #[test]
    fn manufactured_scalar_problem() {
        // F = p + z^2 conj(p) + q (1 - |z|^2) with p = 0.5 + 0.2i z, q = 0.7: F = e^{2i theta} conj(F) on the circle
        let g = GLoop::diagonal(&[2]).unwrap();
        let pz = |z: Complex64| c(0.5, 0.0) + c(0.0, 0.2) * z;
        let truth = move |z: Complex64| pz(z) + z * z * pz(z).conj() + 0.7 * (1.0 - z.norm_sqr());
        let grid = PolarGrid::new(12, 24).unwrap();
        // dbar F = z^2 conj(p'(z)) - q z
        let phi = RhsForm::from_fn(grid, 1, |z| DVector::from_element(1, z * z * c(0.0, 0.2).conj() - 0.7 * z)).unwrap();
        let p = LinearBvp::new(Straightening::from_gloop(g), phi, 10).unwrap();
        let BvpOutcome::Solved(s) = solve_bvp(&p).unwrap() else { panic!("obstructed") };
        assert!(s.interior_residual < 1e-8 && s.boundary_residual < 1e-8);
        assert!(s.kernel_projection.iter().all(|v| v.abs() < 1e-10));
        // truth - solution lies in the 3-dimensional kernel
        assert_eq!(s.kernel.ncols(), 3);
        let samples: Vec<Complex64> =
            sample_angles(64).map(|t| truth(Complex64::from_polar(1.0, t)) - s.eval(Complex64::from_polar(1.0, t))[0]).collect();
        let d = FourierLoop::from_scalar_samples(&samples).unwrap();
        let coeffs: Vec<Complex64> = (0..=10).map(|k| d.coeff(k).unwrap()[(0, 0)]).collect();
        let x = TaylorDisk::scalar(&coeffs).to_real();
        let resid = &x - &s.kernel * (s.kernel.transpose() * &x);
        assert!(resid.norm() < 1e-9, "{}", resid.norm());
    }

    #[test]
    fn index_theorem_on_small_examples() {
        for idx in [vec![0], vec![2, -3], vec![1, 1, -2]] {
            let g = GLoop::diagonal(&idx).unwrap();
            let mu = maslov_index(&g).unwrap();
            assert_eq!(numerical_index(&g, ScanOptions::default()).unwrap(), mu + idx.len() as i64);
            let r = PartialIndexReport::from_indices(&idx).unwrap();
            assert_eq!(r.h0 as i64 - r.h1 as i64, mu + idx.len() as i64);
        }
    }
}
