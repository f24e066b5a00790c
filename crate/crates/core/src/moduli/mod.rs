//! Holomorphic disks in `CP_{m+1}` with boundary on a perturbed real projective
//! space, their moduli over the oriented Grassmannian, and incidence families.

mod chart;
mod disk;
mod grid;
mod newton;
mod perturbation;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use chart::{
    incidence_family, sweep_moduli, verify_unperturbed, ChartNode, IncidenceFamily, IncidenceMember,
    IncidenceOptions, ModuliChart, SweepOptions, VerifyNode, VerifyReport,
};
pub use disk::{boundary_residual, max_boundary_residual, standard_half_line, DiskMap, OrientedPlane, ORTHONORMAL_TOL};
pub use grid::{fibonacci_sphere, plane_from_normal, plane_from_self_dual_pair, GridSpec};
pub use newton::{continue_from_half_line, newton_disk, tangent_dimensions, NewtonOptions, NewtonReport, TangentDims, DEFAULT_TRUNCATION};
pub use perturbation::{sphere_samples, PerturbationSpec, PolyTerm, TOTALLY_REAL_THRESHOLD};

/// `CP_{m+1}` with its standard affine charts and the quadric `sum z_i^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientModel {
    pub m: usize,
}

impl AmbientModel {
    pub fn dim(&self) -> usize {
        self.m + 2
    }

    /// Chart of the coordinate of largest modulus; after normalizing `w` to
    /// unit length that coordinate has modulus at least `1/sqrt(m+2)`.
    pub fn chart(&self, w: &DVector<Complex64>) -> usize {
        perturbation::argmax_chart(w)
    }

    pub fn quadric(&self, w: &DVector<Complex64>) -> Complex64 {
        w.iter().map(|z| z * z).sum()
    }
}
