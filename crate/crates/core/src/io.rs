//! Serializable literals for boundary loops, densities and Taylor disks.
//! Complex numbers are written as two-element arrays `[re, im]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{frame_to_gloop, BoundaryFrame, GLoop};
use crate::dbar::{straighten_frame, Straightening};
use crate::error::{Error, Result};
use crate::spectral::{FourierLoop, PolarGrid, RhsForm, TaylorDisk};

/// Version of every structured-text document read or written.
pub const SCHEMA_VERSION: u32 = 1;

pub fn check_schema(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!("schema {found} is not supported (expected {SCHEMA_VERSION})")));
    }
    Ok(())
}

/// One Fourier coefficient: the `n x n` matrix multiplying `e^{ik theta}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopTerm {
    pub k: i64,
    pub entries: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopKind {
    /// The clutching loop `G` itself.
    #[default]
    Clutching,
    /// A frame `B` whose columns span `E(theta)`; `G = B conj(B)^{-1}`.
    Frame,
}

/// A loop given either as `diagonal = [j_1, ..., j_n]` (meaning
/// `diag(e^{i j_1 theta}, ...)`) or by explicit terms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopLiteral {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub kind: LoopKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<LoopTerm>,
}

impl LoopLiteral {
    pub fn diagonal(exponents: &[i64]) -> Self {
        Self { diagonal: Some(exponents.to_vec()), ..Default::default() }
    }

    pub fn from_loop(l: &FourierLoop, kind: LoopKind) -> Self {
        let terms = l
            .terms()
            .filter(|(_, c)| c.iter().any(|z| *z != Complex64::new(0.0, 0.0)))
            .map(|(k, c)| LoopTerm { k, entries: c.transpose().iter().copied().collect() })
            .collect();
        Self { n: Some(l.rows()), kind, diagonal: None, terms }
    }

    pub fn to_fourier(&self) -> Result<FourierLoop> {
        match (&self.diagonal, self.terms.is_empty()) {
            (Some(d), true) => {
                if d.is_empty() || self.n.is_some_and(|n| n != d.len()) {
                    return Err(Error::InvalidInput("diagonal loop has the wrong size".into()));
                }
                Ok(FourierLoop::diagonal_monomials(d))
            }
            (None, false) => {
                let n = self.n.ok_or_else(|| Error::InvalidInput("explicit loop terms need `n`".into()))?;
                if n == 0 {
                    return Err(Error::InvalidInput("loop size must be positive".into()));
                }
                let mut terms = Vec::with_capacity(self.terms.len());
                for t in &self.terms {
                    if t.entries.len() != n * n {
                        return Err(Error::ShapeMismatch(format!(
                            "term k = {} has {} entries, expected {}",
                            t.k,
                            t.entries.len(),
                            n * n
                        )));
                    }
                    terms.push((t.k, DMatrix::from_row_slice(n, n, &t.entries)));
                }
                FourierLoop::from_terms(n, n, &terms)
            }
            (Some(_), false) => Err(Error::InvalidInput("give either `diagonal` or `terms`, not both".into())),
            (None, true) => Err(Error::InvalidInput("loop has neither `diagonal` nor `terms`".into())),
        }
    }

    pub fn to_gloop(&self) -> Result<GLoop> {
        let l = self.to_fourier()?;
        match self.kind {
            LoopKind::Clutching => GLoop::new(l),
            LoopKind::Frame => frame_to_gloop(&BoundaryFrame::new(l)?),
        }
    }

    pub fn to_condition(&self) -> Result<Straightening> {
        let l = self.to_fourier()?;
        match self.kind {
            LoopKind::Clutching => Ok(Straightening::from_gloop(GLoop::new(l)?)),
            LoopKind::Frame => straighten_frame(&BoundaryFrame::new(l)?),
        }
    }
}

/// `coeff * z^z * conj(z)^zbar` in one component of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityTerm {
    pub component: usize,
    pub coeff: Complex64,
    #[serde(default)]
    pub z: u32,
    #[serde(default)]
    pub zbar: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityLiteral {
    #[serde(default)]
    pub terms: Vec<DensityTerm>,
}

impl DensityLiteral {
    pub fn eval(&self, n: usize, z: Complex64) -> DVector<Complex64> {
        let mut v = DVector::zeros(n);
        for t in &self.terms {
            v[t.component] += t.coeff * z.powu(t.z) * z.conj().powu(t.zbar);
        }
        v
    }

    pub fn to_rhs(&self, grid: PolarGrid, n: usize) -> Result<RhsForm> {
        if let Some(t) = self.terms.iter().find(|t| t.component >= n) {
            return Err(Error::ShapeMismatch(format!("density component {} for n = {n}", t.component)));
        }
        RhsForm::from_fn(grid, n, |z| self.eval(n, z))
    }
}

/// Taylor coefficients `a_0, a_1, ...`, each a vector of complex entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorRecord {
    pub coeffs: Vec<Vec<Complex64>>,
}

impl TaylorRecord {
    pub fn from_disk(f: &TaylorDisk) -> Self {
        Self { coeffs: f.coeffs().iter().map(|c| c.iter().copied().collect()).collect() }
    }

    pub fn to_disk(&self) -> Result<TaylorDisk> {
        TaylorDisk::new(self.coeffs.iter().map(|c| DVector::from_column_slice(c)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_literal() {
        let g = LoopLiteral::diagonal(&[1, -2]).to_gloop().unwrap();
        assert_eq!(g.dim(), 2);
        let z = Complex64::from_polar(1.0, 0.4);
        assert!((g.eval(0.4)[(1, 1)] - z.powi(-2)).norm() < 1e-15);
    }

    #[test]
    fn explicit_round_trip() {
        let l = FourierLoop::diagonal_monomials(&[3, 0]);
        let lit = LoopLiteral::from_loop(&l, LoopKind::Clutching);
        let json = serde_json::to_string(&lit).unwrap();
        let back: LoopLiteral = serde_json::from_str(&json).unwrap();
        assert!(back.to_fourier().unwrap().sub(&l).unwrap().max_coeff() == 0.0);
        assert!(json.contains("[1.0,0.0]"));
    }

    #[test]
    fn malformed_literals() {
        assert!(LoopLiteral::default().to_fourier().is_err());
        let bad = LoopLiteral { n: Some(2), terms: vec![LoopTerm { k: 0, entries: vec![Complex64::new(1.0, 0.0)] }], ..Default::default() };
        assert!(matches!(bad.to_fourier(), Err(Error::ShapeMismatch(_))));
        assert!(check_schema(2).is_err() && check_schema(1).is_ok());
    }

    #[test]
    fn density_evaluation() {
        let d = DensityLiteral { terms: vec![DensityTerm { component: 1, coeff: Complex64::new(0.0, 2.0), z: 1, zbar: 2 }] };
        let z = Complex64::new(0.3, -0.4);
        let v = d.eval(2, z);
        assert_eq!(v[0], Complex64::new(0.0, 0.0));
        assert!((v[1] - Complex64::new(0.0, 2.0) * z * z.conj() * z.conj()).norm() < 1e-15);
        assert!(d.to_rhs(PolarGrid::new(8, 8).unwrap(), 1).is_err());
    }
}
