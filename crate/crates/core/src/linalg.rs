//! Dense linear-algebra helpers shared by the solvers: SVD rank decisions,
//! real null spaces, minimum-norm least squares and a few complex utilities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used for every rank decision unless overridden.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Multiplicative half-width of the band around `tau` inside which a singular
/// value is considered unresolved.
pub const DEFAULT_GUARD: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOptions {
    pub tau: f64,
    pub guard: f64,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_RANK_TOL, guard: DEFAULT_GUARD }
    }
}

/// Outcome of a singular-value rank decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub cols: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    pub sigma_max: f64,
    /// Largest normalized singular value classified as zero.
    pub largest_dropped: Option<f64>,
    /// Smallest normalized singular value classified as nonzero.
    pub smallest_kept: Option<f64>,
}

impl RankSummary {
    fn decide(sorted: &[f64], cols: usize, opts: RankOptions) -> Result<Self> {
        let sigma_max = sorted.first().copied().unwrap_or(0.0);
        if sigma_max == 0.0 {
            return Ok(Self {
                cols,
                rank: 0,
                kernel_dim: cols,
                sigma_max,
                largest_dropped: None,
                smallest_kept: None,
            });
        }
        let mut rank = 0;
        let mut largest_dropped = None;
        let mut smallest_kept = None;
        for &s in sorted {
            let rel = s / sigma_max;
            if rel > opts.tau / opts.guard && rel < opts.tau * opts.guard {
                return Err(Error::RankAmbiguous { sigma: rel, tau: opts.tau });
            }
            if rel >= opts.tau {
                rank += 1;
                smallest_kept = Some(rel);
            } else if largest_dropped.is_none() {
                largest_dropped = Some(rel);
            }
        }
        Ok(Self { cols, rank, kernel_dim: cols - rank, sigma_max, largest_dropped, smallest_kept })
    }
}

/// Singular value decomposition `a = U S V^T` with values in descending order.
/// `U` holds `min(rows, cols)` columns, `V` is square, and the returned values
/// are padded with zeros to `cols`.
struct Svd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v: DMatrix<f64>,
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("system matrix"));
    }
    Ok(())
}

fn svd(a: &DMatrix<f64>) -> Result<Svd> {
    let (rows, cols) = a.shape();
    let f = to_faer(a);
    let dec = if rows >= cols { f.thin_svd() } else { f.svd() }
        .map_err(|e| Error::IllConditioned(format!("singular value decomposition failed: {e:?}")))?;
    let k = rows.min(cols);
    let (fu, fv, fs) = (dec.U(), dec.V(), dec.S().column_vector());
    let mut s: Vec<f64> = (0..k).map(|i| fs[i]).collect();
    s.resize(cols, 0.0);
    Ok(Svd {
        u: DMatrix::from_fn(rows, k, |i, j| fu[(i, j)]),
        s,
        v: DMatrix::from_fn(cols, cols, |i, j| fv[(i, j)]),
    })
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Vec::new();
    }
    let mut v = to_faer(a).singular_values().unwrap_or_default();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    v
}

pub fn rank(a: &DMatrix<f64>, opts: RankOptions) -> Result<RankSummary> {
    check_finite(a)?;
    let mut sv = singular_values(a);
    // Wide systems have at most `nrows` nonzero singular values.
    sv.resize(sv.len().max(a.ncols().min(a.nrows())), 0.0);
    RankSummary::decide(&sv, a.ncols(), opts)
}

/// Orthonormal basis (columns) of the numerical null space of `a`.
pub fn null_space(a: &DMatrix<f64>, opts: RankOptions) -> Result<(DMatrix<f64>, RankSummary)> {
    check_finite(a)?;
    let cols = a.ncols();
    if cols == 0 {
        return Ok((DMatrix::zeros(0, 0), RankSummary::decide(&[], 0, opts)?));
    }
    if a.nrows() == 0 {
        return Ok((DMatrix::identity(cols, cols), RankSummary::decide(&vec![0.0; cols], cols, opts)?));
    }
    let d = svd(a)?;
    let summary = RankSummary::decide(&d.s, cols, opts)?;
    let basis = d.v.columns(summary.rank, summary.kernel_dim).into_owned();
    Ok((basis, summary))
}

/// Minimum-norm least-squares solution of `a x = b` with singular values below
/// `tau * sigma_max` treated as zero. Returns the solution, the rank summary and
/// an orthonormal basis of the discarded (kernel) directions.
pub fn min_norm_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    opts: RankOptions,
) -> Result<(DVector<f64>, RankSummary, DMatrix<f64>)> {
    if a.nrows() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} rows vs rhs length {}", a.nrows(), b.len())));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    check_finite(a)?;
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        let summary = RankSummary::decide(&vec![0.0; cols], cols, opts)?;
        return Ok((DVector::zeros(cols), summary, DMatrix::identity(cols, cols)));
    }
    let d = svd(a)?;
    let summary = RankSummary::decide(&d.s, cols, opts)?;
    let mut x = DVector::zeros(cols);
    for i in 0..summary.rank {
        x += d.v.column(i) * (d.u.column(i).dot(b) / d.s[i]);
    }
    let kernel = d.v.columns(summary.rank, summary.kernel_dim).into_owned();
    Ok((x, summary, kernel))
}

/// Least-squares solve for a full-column-rank system (no truncation).
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let opts = RankOptions { tau: 1e-14, guard: 1.0 };
    let (x, summary, _) = min_norm_solve(a, b, opts)?;
    if summary.kernel_dim > 0 {
        return Err(Error::IllConditioned(format!(
            "least-squares system has {} numerically null directions",
            summary.kernel_dim
        )));
    }
    Ok(x)
}

pub fn cdet(m: &DMatrix<Complex64>) -> Complex64 {
    match m.nrows() {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

pub fn cinv(m: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    m.clone().try_inverse()
}

/// Smallest singular value of a complex square matrix.
pub fn csigma_min(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    singular_values(&real_embedding(m)).last().copied().unwrap_or(0.0)
}

/// `[[Re m, -Im m], [Im m, Re m]]`, whose singular values are those of `m`, each twice.
fn real_embedding(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn conj_mat(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.map(|z| z.conj())
}

/// Largest entry modulus.
pub fn cmax_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm of a complex matrix.
pub fn cnorm2(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(&real_embedding(m)).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, -1.0, -2.0, -3.0]);
        let (basis, summary) = null_space(&a, RankOptions::default()).unwrap();
        assert_eq!(summary.rank, 1);
        assert_eq!(basis.ncols(), 2);
        assert!((&a * &basis).norm() < 1e-12);
    }

    #[test]
    fn wide_system_counts_missing_rows_as_kernel() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let s = rank(&a, RankOptions::default()).unwrap();
        assert_eq!(s.kernel_dim, 2);
        let (basis, _) = null_space(&a, RankOptions::default()).unwrap();
        assert_eq!(basis.ncols(), 2);
    }

    #[test]
    fn min_norm_solution_is_orthogonal_to_kernel() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 1.0]);
        let (x, s, k) = min_norm_solve(&a, &b, RankOptions::default()).unwrap();
        assert_eq!(s.kernel_dim, 1);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!((k.transpose() * &x).norm() < 1e-14);
    }

    #[test]
    fn guard_band_flags_unresolved_singular_value() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8]));
        assert!(matches!(rank(&a, RankOptions::default()), Err(Error::RankAmbiguous { .. })));
    }
}
