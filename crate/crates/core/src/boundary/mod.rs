//! Totally real boundary conditions on the unit circle: frames, clutching
//! loops, Maslov and partial indices.

mod birkhoff;
mod scan;

pub use birkhoff::{birkhoff_scalar, BirkhoffFactors};
pub use scan::{
    is_fredholm_regular, partial_indices, twisted_kernel, PartialIndexReport, ScanOptions, ScanRow,
    TwistedKernel, DEFAULT_TRUNCATION,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cdet, cinv, cmax_abs, conj_mat, csigma_min};
use crate::spectral::{sample_angles, winding_of_samples, FourierLoop, WINDING_SAMPLES, WINDING_THRESHOLD};

/// Frames whose smallest singular value falls below this fraction of the
/// largest are treated as singular.
pub const FRAME_THRESHOLD: f64 = 1e-8;
/// Default tolerance for `G conj(G) = I`.
pub const GLOOP_TOL: f64 = 1e-10;
/// Coefficients below this fraction of the largest are dropped when a loop is
/// rebuilt from samples.
pub const TRIM_TOL: f64 = 1e-14;

const MAX_SAMPLES: usize = 1 << 15;

/// Expand a smooth periodic matrix function as a Fourier loop, doubling the
/// sample count until the upper half of the resolved band is negligible.
pub fn loop_from_fn<F>(rows: usize, cols: usize, min_order: usize, f: F) -> Result<FourierLoop>
where
    F: Fn(f64) -> Result<DMatrix<Complex64>>,
{
    let mut count = (4 * (min_order + 1)).next_power_of_two().max(64);
    loop {
        let samples = sample_angles(count).map(&f).collect::<Result<Vec<_>>>()?;
        if samples.iter().any(|s| s.nrows() != rows || s.ncols() != cols) {
            return Err(Error::ShapeMismatch(format!("expected {rows}x{cols} samples")));
        }
        let l = FourierLoop::from_samples(&samples)?;
        let top = l.max_coeff();
        let quarter = (count / 4) as i64;
        let tail = l
            .terms()
            .filter(|(k, _)| k.abs() > quarter)
            .map(|(_, c)| cmax_abs(c))
            .fold(0.0, f64::max);
        if tail <= TRIM_TOL * top || count >= MAX_SAMPLES {
            if tail > TRIM_TOL * top {
                return Err(Error::TruncationTooSmall(format!(
                    "loop not resolved with {count} samples (relative tail {:.2e})",
                    tail / top
                )));
            }
            return Ok(l.trimmed(TRIM_TOL));
        }
        count *= 2;
    }
}

/// An `n x n` frame `B(theta)` whose columns span the fiber `E(theta) = B(theta) R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    b: FourierLoop,
}

fn check_frame_samples(b: &FourierLoop, count: usize) -> Result<()> {
    for (j, (theta, m)) in sample_angles(count).zip(b.sample(count)).enumerate() {
        let _ = j;
        let top = crate::linalg::cnorm2(&m);
        let s = csigma_min(&m);
        if !(s > FRAME_THRESHOLD * top) {
            return Err(Error::NotTotallyReal { sigma_min: s, theta });
        }
    }
    Ok(())
}

impl BoundaryFrame {
    pub fn new(b: FourierLoop) -> Result<Self> {
        if b.rows() != b.cols() || b.rows() == 0 {
            return Err(Error::ShapeMismatch(format!("frame must be square, got {}x{}", b.rows(), b.cols())));
        }
        check_frame_samples(&b, (8 * (b.order() + 1)).max(256))?;
        Ok(Self { b })
    }

    /// Build from a function of the angle, rejecting functions that do not close up.
    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<Complex64>,
    {
        let start = f(0.0);
        let end = f(2.0 * std::f64::consts::PI);
        let gap = cmax_abs(&(&start - &end));
        if gap > 1e-9 * cmax_abs(&start).max(1.0) {
            return Err(Error::NotSingleValued { gap });
        }
        let b = loop_from_fn(n, n, 0, |t| Ok(f(t)))?;
        Self::new(b)
    }

    pub fn identity(n: usize) -> Self {
        Self { b: FourierLoop::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.b.rows()
    }

    pub fn frame(&self) -> &FourierLoop {
        &self.b
    }

    pub fn eval(&self, theta: f64) -> DMatrix<Complex64> {
        self.b.eval(theta)
    }
}

/// Clutching loop `G = B conj(B)^{-1}` of a totally real boundary condition;
/// boundary values `f` satisfy `f = G conj(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GLoop {
    g: FourierLoop,
}

impl GLoop {
    pub fn new(g: FourierLoop) -> Result<Self> {
        Self::with_tolerance(g, GLOOP_TOL)
    }

    pub fn with_tolerance(g: FourierLoop, tol: f64) -> Result<Self> {
        if g.rows() != g.cols() || g.rows() == 0 {
            return Err(Error::ShapeMismatch(format!("clutching loop must be square, got {}x{}", g.rows(), g.cols())));
        }
        if g.terms().flat_map(|(_, c)| c.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("clutching loop"));
        }
        let n = g.rows();
        let count = (8 * (g.order() + 1)).max(256);
        let eye = DMatrix::<Complex64>::identity(n, n);
        let mut defect: f64 = 0.0;
        for m in g.sample(count) {
            defect = defect.max(cmax_abs(&(&m * conj_mat(&m) - &eye)));
            defect = defect.max((cdet(&m).norm() - 1.0).abs());
        }
        if !(defect <= tol) {
            return Err(Error::InvalidGLoop { defect, tolerance: tol });
        }
        Ok(Self { g })
    }

    /// `diag(e^{i j_1 theta}, ..., e^{i j_n theta})`.
    pub fn diagonal(exponents: &[i64]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidInput("need at least one exponent".into()));
        }
        Ok(Self { g: FourierLoop::diagonal_monomials(exponents) })
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn loop_(&self) -> &FourierLoop {
        &self.g
    }

    pub fn eval(&self, theta: f64) -> DMatrix<Complex64> {
        self.g.eval(theta)
    }

    /// `Theta G conj(Theta)^{-1}` for a matrix loop `Theta` invertible on the circle.
    /// When `Theta` extends holomorphically and invertibly over the disk this is a
    /// change of holomorphic frame and leaves the partial indices unchanged.
    pub fn conjugate_by(&self, theta: &FourierLoop) -> Result<Self> {
        let n = self.dim();
        if theta.shape() != (n, n) {
            return Err(Error::ShapeMismatch("conjugating loop has the wrong shape".into()));
        }
        let g = loop_from_fn(n, n, self.g.order() + 2 * theta.order(), |t| {
            let th = theta.eval(t);
            let inv = cinv(&conj_mat(&th)).ok_or(Error::NotTotallyReal { sigma_min: 0.0, theta: t })?;
            Ok(th * self.g.eval(t) * inv)
        })?;
        Self::new(g)
    }

    /// Boundary condition of the dual problem, `G* = e^{-2i theta} G^H`. Holomorphic
    /// `g` with `g = G* conj(g)` pair to zero against every solvable right-hand side.
    pub fn dual(&self) -> Self {
        Self { g: self.g.adjoint().shift(-2) }
    }

    /// `G(theta)` composed with a reparameterization of the circle, rebuilt from samples.
    pub fn reparameterize<F>(&self, phase: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        let n = self.dim();
        let g = loop_from_fn(n, n, self.g.order(), |t| Ok(self.g.eval(phase(t))))?;
        Self::new(g)
    }
}

pub fn frame_to_gloop(b: &BoundaryFrame) -> Result<GLoop> {
    let n = b.dim();
    let g = loop_from_fn(n, n, 2 * b.b.order(), |t| {
        let m = b.b.eval(t);
        let inv = cinv(&conj_mat(&m)).ok_or(Error::NotTotallyReal { sigma_min: 0.0, theta: t })?;
        Ok(&m * inv)
    })?;
    GLoop::new(g)
}

/// Winding number of `det G` around the origin.
pub fn maslov_index(g: &GLoop) -> Result<i64> {
    let dets: Vec<Complex64> = g.g.sample(WINDING_SAMPLES).iter().map(cdet).collect();
    winding_of_samples(&dets, WINDING_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn random_poly_frame(rng: &mut ChaCha8Rng, n: usize, degree: usize, size: f64) -> FourierLoop {
        // identity plus a perturbation whose coefficient norms sum to `size`
        let mut terms = vec![];
        for k in 0..=degree {
            let m = DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            terms.push((k as i64, m));
        }
        let total: f64 = terms.iter().map(|(_, m)| crate::linalg::cnorm2(m)).sum();
        for (_, m) in terms.iter_mut() {
            *m *= c(size / total, 0.0);
        }
        terms.push((0, DMatrix::identity(n, n)));
        FourierLoop::from_terms(n, n, &terms).unwrap()
    }

    #[test]
    fn identity_frame_gives_identity() {
        let g = frame_to_gloop(&BoundaryFrame::identity(2)).unwrap();
        assert!(g.loop_().sub(&FourierLoop::identity(2)).unwrap().max_coeff() < 1e-14);
    }

    #[test]
    fn rotating_line() {
        let b = BoundaryFrame::new(FourierLoop::monomial(1)).unwrap();
        let g = frame_to_gloop(&b).unwrap();
        assert!(g.loop_().sub(&FourierLoop::monomial(2)).unwrap().max_coeff() < 1e-14);
        assert_eq!(maslov_index(&g).unwrap(), 2);
    }

    #[test]
    fn random_frame_satisfies_reflection_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let b = BoundaryFrame::new(random_poly_frame(&mut rng, 2, 2, 0.4)).unwrap();
            let g = frame_to_gloop(&b).unwrap();
            // pointwise oracle: compare with B conj(B)^{-1} built directly
            for t in [0.1, 1.3, 2.9, 4.4, 6.0] {
                let m = b.eval(t);
                let direct = &m * cinv(&conj_mat(&m)).unwrap();
                assert!(cmax_abs(&(g.eval(t) - direct)) < 1e-10);
                let gm = g.eval(t);
                assert!(cmax_abs(&(&gm * conj_mat(&gm) - DMatrix::identity(2, 2))) < 1e-10);
            }
        }
    }

    #[test]
    fn singular_frame_rejected() {
        // 1 + e^{i theta} vanishes at theta = pi
        let b = FourierLoop::scalar(&[(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]);
        assert!(matches!(BoundaryFrame::new(b), Err(Error::NotTotallyReal { .. })));
    }

    #[test]
    fn half_angle_frame_is_not_single_valued() {
        let r = BoundaryFrame::from_fn(1, |t| DMatrix::from_element(1, 1, Complex64::from_polar(1.0, 0.5 * t)));
        assert!(matches!(r, Err(Error::NotSingleValued { .. })));
        assert!(GLoop::new(FourierLoop::monomial(1)).is_ok());
    }

    #[test]
    fn invalid_gloop_rejected() {
        let g = FourierLoop::scalar(&[(1, c(2.0, 0.0))]);
        assert!(matches!(GLoop::new(g), Err(Error::InvalidGLoop { .. })));
    }

    #[test]
    fn maslov_examples() {
        assert_eq!(maslov_index(&GLoop::diagonal(&[1]).unwrap()).unwrap(), 1);
        assert_eq!(maslov_index(&GLoop::diagonal(&[0, 0, 0]).unwrap()).unwrap(), 0);
        assert_eq!(maslov_index(&GLoop::diagonal(&[1, 1]).unwrap()).unwrap(), 2);
    }

    #[test]
    fn maslov_constant_along_homotopy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = GLoop::diagonal(&[2, -1]).unwrap();
        let p = random_poly_frame(&mut rng, 2, 2, 0.3).sub(&FourierLoop::identity(2)).unwrap();
        for s in 0..=6 {
            let theta = FourierLoop::identity(2).add(&p.scale(c(s as f64 / 6.0, 0.0))).unwrap();
            let gs = g.conjugate_by(&theta).unwrap();
            assert_eq!(maslov_index(&gs).unwrap(), 1);
        }
    }

    #[test]
    fn dual_of_scalar_monomial() {
        let d = GLoop::diagonal(&[3]).unwrap().dual();
        assert_eq!(maslov_index(&d).unwrap(), -5);
    }
}
