//! Numerics for holomorphic disks with totally real boundary conditions:
//! partial indices and Maslov index of boundary loops, the linear boundary
//! value problem for the Cauchy–Riemann operator on the disk, dimension counts
//! for doubled bundles, and Newton continuation of disk families in complex
//! projective space with boundary on a perturbed real projective space.

pub mod boundary;
pub mod dbar;
pub mod doubling;
pub mod error;
pub mod io;
pub mod linalg;
pub mod moduli;
pub mod spectral;

pub use error::{Error, ErrorCategory, Result};
pub use num_complex::Complex64;
