use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GLoop, TRIM_TOL};
use crate::error::{Error, Result};
use crate::spectral::{FourierLoop, HardyPart, WINDING_THRESHOLD};

/// `G = theta_plus e^{ij theta} theta_minus` for a scalar loop.
#[derive(Debug, Clone)]
pub struct BirkhoffFactors {
    pub j: i64,
    /// Supported on frequencies `>= 0`; extends holomorphically and without zeros into the disk.
    pub plus: FourierLoop,
    /// Supported on frequencies `<= 0`; extends to the outside of the disk.
    pub minus: FourierLoop,
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSummary {
    pub j: i64,
    pub residual: f64,
    pub plus_order: usize,
    pub minus_order: usize,
}

impl BirkhoffFactors {
    pub fn summary(&self) -> BirkhoffSummary {
        BirkhoffSummary { j: self.j, residual: self.residual, plus_order: self.plus.order(), minus_order: self.minus.order() }
    }
}

/// Continuous logarithm of equispaced samples of a loop with winding number zero.
fn unwrapped_log(values: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(values.len());
    let mut arg = values[0].arg();
    out.push(Complex64::new(values[0].norm().ln(), arg));
    for w in values.windows(2) {
        let step = (w[1] / w[0]).arg();
        if step.abs() > 0.5 * PI {
            return Err(Error::BranchTracking { jump: step });
        }
        arg += step;
        out.push(Complex64::new(w[1].norm().ln(), arg));
    }
    Ok(out)
}

pub fn birkhoff_scalar(g: &GLoop) -> Result<BirkhoffFactors> {
    if g.dim() != 1 {
        return Err(Error::ShapeMismatch("scalar factorization needs n = 1".into()));
    }
    let gl = g.loop_();
    let j = gl.winding_number()?;
    let reduced = gl.shift(-j);
    let mut count = (8 * (gl.order() + 1)).next_power_of_two().max(256);
    loop {
        let values = reduced.sample_scalar(count);
        let min = values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if !(min > WINDING_THRESHOLD) {
            return Err(Error::LoopVanishes { min, threshold: WINDING_THRESHOLD });
        }
        let h = FourierLoop::from_scalar_samples(&unwrapped_log(&values)?)?;
        let top = h.max_coeff().max(1.0);
        let quarter = (count / 4) as i64;
        let tail = h.terms().filter(|(k, _)| k.abs() > quarter).map(|(_, c)| c[(0, 0)].norm()).fold(0.0, f64::max);
        if tail > TRIM_TOL * top && count < (1 << 16) {
            count *= 2;
            continue;
        }
        let exp_of = |part: HardyPart| -> Result<FourierLoop> {
            let vals: Vec<Complex64> =
                h.hardy_project(part).sample_scalar(count).into_iter().map(|z| z.exp()).collect();
            let full = FourierLoop::from_scalar_samples(&vals)?;
            let mut kept = FourierLoop::zeros(0, 1, 1);
            for (k, c) in full.terms() {
                let keep = match part {
                    HardyPart::Nonnegative => k >= 0,
                    HardyPart::Negative => k <= 0,
                };
                if keep {
                    *kept.coeff_mut(k) = c.clone();
                }
            }
            Ok(kept.trimmed(TRIM_TOL))
        };
        let plus = exp_of(HardyPart::Nonnegative)?;
        let minus = exp_of(HardyPart::Negative)?;
        let recon = plus.product(&minus)?.shift(j);
        let check = 4 * count;
        let residual = recon
            .sample_scalar(check)
            .iter()
            .zip(gl.sample_scalar(check))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        return Ok(BirkhoffFactors { j, plus, minus, residual, samples: count });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn monomial_has_trivial_factors() {
        let f = birkhoff_scalar(&GLoop::diagonal(&[5]).unwrap()).unwrap();
        assert_eq!(f.j, 5);
        assert!(f.plus.sub(&FourierLoop::monomial(0)).unwrap().max_coeff() < 1e-13);
        assert!(f.minus.sub(&FourierLoop::monomial(0)).unwrap().max_coeff() < 1e-13);
        let f = birkhoff_scalar(&GLoop::diagonal(&[0]).unwrap()).unwrap();
        assert_eq!(f.j, 0);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn rational_loop() {
        // (2 + e^{i theta}) / (2 + e^{-i theta}), built from samples
        let g = crate::boundary::loop_from_fn(1, 1, 0, |t| {
            let z = Complex64::from_polar(1.0, t);
            Ok(nalgebra::DMatrix::from_element(1, 1, (2.0 + z) / (2.0 + z.conj())))
        })
        .unwrap();
        let g = GLoop::new(g).unwrap();
        let f = birkhoff_scalar(&g).unwrap();
        assert_eq!(f.j, 0);
        assert!(f.residual < 1e-10, "{}", f.residual);
        assert!(f.plus.terms().filter(|(k, _)| *k < 0).all(|(_, m)| m[(0, 0)].norm() == 0.0));
        assert!(f.minus.terms().filter(|(k, _)| *k > 0).all(|(_, m)| m[(0, 0)].norm() == 0.0));
        // up to a constant, theta_plus = 1 + z/2
        let ratio = f.plus.eval_scalar(0.0) / c(3.0, 0.0);
        assert!((f.plus.eval_scalar(1.1) - ratio * (2.0 + Complex64::from_polar(1.0, 1.1))).norm() < 1e-12);
    }

    #[test]
    fn agrees_with_winding_for_shifted_loop() {
        let g = crate::boundary::loop_from_fn(1, 1, 0, |t| {
            let z = Complex64::from_polar(1.0, t);
            Ok(nalgebra::DMatrix::from_element(1, 1, z * z * z * (3.0 + z) / (3.0 + z.conj())))
        })
        .unwrap();
        let f = birkhoff_scalar(&GLoop::new(g).unwrap()).unwrap();
        assert_eq!(f.j, 3);
        assert!(f.residual < 1e-10);
    }
}
