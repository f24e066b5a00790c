//! Invariants of doubled bundles: the genus-zero double of a disk and the
//! doubles attached to real plane curves.

use serde::{Deserialize, Serialize};

use crate::boundary::PartialIndexReport;
use crate::error::{Error, Result};

/// Cohomology of `O(j_1) + ... + O(j_n)` on the Riemann sphere obtained by
/// doubling a disk. Dimensions are real dimensions of the `+1` eigenspaces of
/// the real structure, which equal the complex dimensions on the double.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleReport {
    pub genus: u32,
    pub splitting: Vec<i64>,
    pub degree: i64,
    pub h0: usize,
    pub h1: usize,
    pub h0_rho: usize,
    pub h1_rho: usize,
}

fn h0_line(j: i64) -> usize {
    (j + 1).max(0) as usize
}

fn h1_line(j: i64) -> usize {
    (-j - 1).max(0) as usize
}

pub fn double_disk_bundle(report: &PartialIndexReport) -> DoubleReport {
    let mut splitting = report.indices.clone();
    splitting.sort_unstable();
    let h0 = splitting.iter().map(|&j| h0_line(j)).sum();
    let h1 = splitting.iter().map(|&j| h1_line(j)).sum();
    DoubleReport { genus: 0, degree: splitting.iter().sum(), splitting, h0, h1, h0_rho: h0, h1_rho: h1 }
}

/// `h0 - h1` for a line bundle of the given degree on a curve of the given
/// (arithmetic) genus.
pub fn riemann_roch_check(genus: i64, degree: i64) -> i64 {
    degree - genus + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Components {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoubleKind {
    /// `X - C` has two components and the double is `X` itself.
    SelfDouble,
    /// `X - C` is connected and the double is its orientation double cover.
    OrientationDoubleCover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneCurveSpec {
    pub d: u32,
    pub components: Components,
}

impl PlaneCurveSpec {
    pub fn new(d: u32, components: Components) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidInput("plane curve degree must be at least 1".into()));
        }
        Ok(Self { d, components })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneCurveReport {
    pub d: u32,
    pub components: Components,
    pub genus_x: i64,
    pub double: DoubleKind,
    /// Arithmetic genus of the double (negative when the double is disconnected).
    pub genus_double: i64,
    pub deg_n: i64,
    pub deg_k_minus_n: i64,
    pub h0: i64,
    pub h1: i64,
    pub moduli_dim: i64,
}

/// Dimension count for deformations of a smooth real plane curve of degree `d`
/// with nonempty real locus, via the normal bundle of its double.
pub fn plane_curve_double(spec: &PlaneCurveSpec) -> Result<PlaneCurveReport> {
    let spec = PlaneCurveSpec::new(spec.d, spec.components)?;
    let d = spec.d as i64;
    let genus_x = (d - 1) * (d - 2) / 2;
    // normal bundle O(d)|X and canonical bundle O(d - 3)|X
    let (deg_n_x, deg_k_x) = (d * d, d * (d - 3));
    let (double, sheets, genus_double) = match spec.components {
        Components::Two => (DoubleKind::SelfDouble, 1, genus_x),
        // unramified double cover: Euler characteristic doubles
        Components::One => (DoubleKind::OrientationDoubleCover, 2, 2 * genus_x - 1),
    };
    let deg_n = sheets * deg_n_x;
    let deg_k_minus_n = sheets * (deg_k_x - deg_n_x);
    if deg_k_minus_n >= 0 {
        return Err(Error::Invariant(format!("deg(K - N) = {deg_k_minus_n} is not negative")));
    }
    // Serre duality: H^1(N) is dual to H^0(K - N), which vanishes in negative degree
    let h1 = 0;
    let h0 = riemann_roch_check(genus_double, deg_n) + h1;
    Ok(PlaneCurveReport { d: spec.d, components: spec.components, genus_x, double, genus_double, deg_n, deg_k_minus_n, h0, h1, moduli_dim: h0 })
}

/// One table row per degree: `(d, two-component dimension, connected dimension)`.
pub fn plane_curve_table(degrees: std::ops::RangeInclusive<u32>) -> Result<Vec<(PlaneCurveReport, PlaneCurveReport)>> {
    degrees
        .map(|d| {
            Ok((
                plane_curve_double(&PlaneCurveSpec::new(d, Components::Two)?)?,
                plane_curve_double(&PlaneCurveSpec::new(d, Components::One)?)?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disk_doubles() {
        for (idx, deg, h0, h1) in [(vec![1, 1], 2, 4, 0), (vec![-1], -1, 0, 0), (vec![0, 0, 0], 0, 3, 0)] {
            let r = double_disk_bundle(&PartialIndexReport::from_indices(&idx).unwrap());
            assert_eq!((r.degree, r.h0, r.h1, r.genus), (deg, h0, h1, 0));
            assert_eq!((r.h0_rho, r.h1_rho), (h0, h1));
        }
    }

    #[test]
    fn cubic_counts() {
        let two = plane_curve_double(&PlaneCurveSpec { d: 3, components: Components::Two }).unwrap();
        assert_eq!((two.moduli_dim, two.genus_x, two.deg_n), (9, 1, 9));
        let one = plane_curve_double(&PlaneCurveSpec { d: 3, components: Components::One }).unwrap();
        assert_eq!(one.moduli_dim, 18);
        let line = plane_curve_double(&PlaneCurveSpec { d: 1, components: Components::Two }).unwrap();
        assert_eq!(line.moduli_dim, 2);
    }

    #[test]
    fn riemann_roch_examples() {
        assert_eq!(riemann_roch_check(0, 1), 2);
        assert_eq!(riemann_roch_check(1, 0), 0);
        assert_eq!(riemann_roch_check(1, 9), 9);
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(matches!(PlaneCurveSpec::new(0, Components::Two), Err(Error::InvalidInput(_))));
        assert!(plane_curve_double(&PlaneCurveSpec { d: 0, components: Components::One }).is_err());
    }

    proptest! {
        #[test]
        fn closed_forms(d in 1u32..=40) {
            let dd = d as i64;
            let two = plane_curve_double(&PlaneCurveSpec::new(d, Components::Two).unwrap()).unwrap();
            let one = plane_curve_double(&PlaneCurveSpec::new(d, Components::One).unwrap()).unwrap();
            prop_assert_eq!(2 * two.moduli_dim, dd * (dd + 3));
            prop_assert_eq!(one.moduli_dim, dd * (dd + 3));
            prop_assert!(two.deg_k_minus_n < 0 && one.deg_k_minus_n < 0);
            prop_assert_eq!(two.h0 - two.h1, riemann_roch_check(two.genus_double, two.deg_n));
            prop_assert_eq!(one.h0 - one.h1, riemann_roch_check(one.genus_double, one.deg_n));
        }

        #[test]
        fn disk_double_matches_line_sums(idx in proptest::collection::vec(-6i64..=6, 1..5)) {
            let r = double_disk_bundle(&PartialIndexReport::from_indices(&idx).unwrap());
            let rr: i64 = idx.iter().map(|&j| riemann_roch_check(0, j)).sum();
            prop_assert_eq!(r.h0 as i64 - r.h1 as i64, rr);
        }
    }
}
