//! Series arithmetic on the circle and the disk.

mod fourier;
mod pompeiu;
pub mod quadrature;
mod taylor;

pub use fourier::{winding_of_samples, FourierLoop, HardyPart, WINDING_SAMPLES, WINDING_THRESHOLD};
pub(crate) use fourier::sample_angles;
pub use pompeiu::{cauchy_pompeiu, PolarGrid, PompeiuOptions, PompeiuSolution, RhsForm};
pub use taylor::TaylorDisk;

use crate::error::Result;

/// Discrete Fourier coefficients of equispaced samples.
pub fn loop_from_samples(values: &[nalgebra::DMatrix<num_complex::Complex64>]) -> Result<FourierLoop> {
    FourierLoop::from_samples(values)
}

pub fn loop_product(a: &FourierLoop, b: &FourierLoop) -> Result<FourierLoop> {
    a.product(b)
}

pub fn hardy_project(l: &FourierLoop, part: HardyPart) -> FourierLoop {
    l.hardy_project(part)
}

pub fn winding_number(l: &FourierLoop) -> Result<i64> {
    l.winding_number()
}

pub fn eval_disk(f: &TaylorDisk, points: &[num_complex::Complex64]) -> Result<Vec<nalgebra::DVector<num_complex::Complex64>>> {
    f.eval_disk(points)
}
