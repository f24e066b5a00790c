use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{maslov_index, GLoop};
use crate::error::{Error, Result};
use crate::linalg::{null_space, RankOptions, RankSummary};
use crate::spectral::TaylorDisk;

pub const DEFAULT_TRUNCATION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Largest Taylor degree used for a twisted kernel.
    pub truncation: usize,
    pub rank: RankOptions,
    /// How far the window may grow beyond its seed on either side.
    pub max_extension: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { truncation: DEFAULT_TRUNCATION, rank: RankOptions::default(), max_extension: 64 }
    }
}

/// Real kernel of `f = e^{-im theta} G conj(f)` on Taylor polynomials.
#[derive(Debug, Clone)]
pub struct TwistedKernel {
    pub m: i64,
    /// Taylor degree of the unknowns.
    pub degree: usize,
    /// Orthonormal real kernel vectors in [`TaylorDisk::to_real`] coordinates.
    pub basis: DMatrix<f64>,
    pub summary: RankSummary,
    /// Whether the degree was limited by the truncation rather than by the
    /// frequency support of `G`.
    pub capped: bool,
}

impl TwistedKernel {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn disks(&self, n: usize) -> Vec<TaylorDisk> {
        self.basis
            .column_iter()
            .map(|c| TaylorDisk::from_real(n, c.as_slice()).expect("column length is 2n(d+1)"))
            .collect()
    }
}

/// Fourier-coefficient equations for the twisted problem. Unknowns are the
/// Taylor coefficients `a_0..a_d`; every frequency reached by either side is
/// included, so the discrete kernel is the exact kernel among polynomials of
/// degree `<= d`.
fn twisted_system(g: &GLoop, m: i64, d: usize) -> DMatrix<f64> {
    let n = g.dim();
    let gl = g.loop_();
    let (p_lo, p_hi) = gl.support(0.0).unwrap_or((0, 0));
    let d_i = d as i64;
    let lo = 0.min(p_lo - m - d_i);
    let hi = d_i.max(p_hi - m);
    let rows = 2 * n * (hi - lo + 1) as usize;
    let cols = 2 * n * (d + 1);
    let mut a = DMatrix::zeros(rows, cols);
    let row = |l: i64, r: usize| 2 * ((l - lo) as usize * n + r);
    for k in 0..=d_i {
        for i in 0..n {
            let cx = 2 * (k as usize * n + i);
            // identity term a_l at l = k
            let r0 = row(k, i);
            a[(r0, cx)] += 1.0;
            a[(r0 + 1, cx + 1)] += 1.0;
            for (p, gp) in gl.terms() {
                if p < p_lo || p > p_hi {
                    continue;
                }
                let l = p - m - k;
                for r in 0..n {
                    let z = gp[(r, i)];
                    if z == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let ri = row(l, r);
                    // -G conj(a): d/dx -> -G, d/dy -> +iG
                    a[(ri, cx)] -= z.re;
                    a[(ri + 1, cx)] -= z.im;
                    a[(ri, cx + 1)] -= z.im;
                    a[(ri + 1, cx + 1)] += z.re;
                }
            }
        }
    }
    a
}

pub fn twisted_kernel(g: &GLoop, m: i64, cap: usize, rank: RankOptions) -> Result<TwistedKernel> {
    let (_, p_hi) = g.loop_().support(0.0).unwrap_or((0, 0));
    let bound = (p_hi - m).max(0) as usize;
    let degree = bound.min(cap);
    let a = twisted_system(g, m, degree);
    let (basis, summary) = null_space(&a, rank)?;
    Ok(TwistedKernel { m, degree, basis, summary, capped: bound > cap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub m: i64,
    pub kernel_dim: usize,
    /// `N(m) - N(m+1)`, the number of indices `>= m`.
    pub first_difference: Option<i64>,
    /// `N(m-1) - 2N(m) + N(m+1)`, the multiplicity of the index `m - 1`.
    pub second_difference: Option<i64>,
    pub degree: usize,
    pub largest_dropped: Option<f64>,
    pub smallest_kept: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialIndexReport {
    pub n: usize,
    pub indices: Vec<i64>,
    pub maslov: i64,
    pub regular: bool,
    pub h0: usize,
    pub h1: usize,
    pub truncation: usize,
    pub tau: f64,
    pub scan: Vec<ScanRow>,
}

impl PartialIndexReport {
    /// Report for a known splitting type, with an analytic scan table.
    pub fn from_indices(indices: &[i64]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty index multiset".into()));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let lo = sorted[0] - 1;
        let hi = sorted[n - 1] + 2;
        let table: BTreeMap<i64, usize> = (lo..=hi).map(|m| (m, expand(&sorted, m))).collect();
        let scan = scan_rows(&table, &BTreeMap::new());
        Ok(Self::assemble(sorted, sorted_sum(indices), 0, 0.0, scan))
    }

    fn assemble(indices: Vec<i64>, maslov: i64, truncation: usize, tau: f64, scan: Vec<ScanRow>) -> Self {
        let h0 = indices.iter().map(|&j| (j + 1).max(0) as usize).sum();
        let h1 = indices.iter().map(|&j| (-j - 1).max(0) as usize).sum();
        Self {
            n: indices.len(),
            regular: indices.iter().all(|&j| j >= -1),
            indices,
            maslov,
            h0,
            h1,
            truncation,
            tau,
            scan,
        }
    }
}

fn sorted_sum(v: &[i64]) -> i64 {
    v.iter().sum()
}

/// `N(m) = sum_i max(j_i - m + 1, 0)`.
fn expand(indices: &[i64], m: i64) -> usize {
    indices.iter().map(|&j| (j - m + 1).max(0) as usize).sum()
}

fn scan_rows(table: &BTreeMap<i64, usize>, detail: &BTreeMap<i64, TwistedKernel>) -> Vec<ScanRow> {
    table
        .iter()
        .map(|(&m, &nm)| {
            let get = |k: i64| table.get(&k).map(|&v| v as i64);
            let first_difference = get(m + 1).map(|next| nm as i64 - next);
            let second_difference = match (get(m - 1), get(m + 1)) {
                (Some(a), Some(b)) => Some(a - 2 * nm as i64 + b),
                _ => None,
            };
            let d = detail.get(&m);
            ScanRow {
                m,
                kernel_dim: nm,
                first_difference,
                second_difference,
                degree: d.map(|k| k.degree).unwrap_or(0),
                largest_dropped: d.and_then(|k| k.summary.largest_dropped),
                smallest_kept: d.and_then(|k| k.summary.smallest_kept),
            }
        })
        .collect()
}

pub fn partial_indices(g: &GLoop, opts: ScanOptions) -> Result<PartialIndexReport> {
    if opts.truncation == 0 || !(opts.rank.tau > 0.0) {
        return Err(Error::InvalidInput("truncation and tau must be positive".into()));
    }
    let n = g.dim() as i64;
    let mu = maslov_index(g)?;
    let center = mu.div_euclid(n);
    let (seed_lo, seed_hi) = (center - n - 1, center + n + 1);
    let mut detail: BTreeMap<i64, TwistedKernel> = BTreeMap::new();
    let compute = |m: i64, detail: &mut BTreeMap<i64, TwistedKernel>| -> Result<usize> {
        if let Some(k) = detail.get(&m) {
            return Ok(k.dim());
        }
        let mut k = twisted_kernel(g, m, opts.truncation, opts.rank)?;
        if k.capped {
            let wider = twisted_kernel(g, m, 2 * opts.truncation, opts.rank)?;
            if wider.dim() != k.dim() {
                return Err(Error::TruncationTooSmall(format!(
                    "N({m}) changes from {} to {} when the truncation doubles from {}",
                    k.dim(),
                    wider.dim(),
                    opts.truncation
                )));
            }
            k = wider;
        }
        let dim = k.dim();
        detail.insert(m, k);
        Ok(dim)
    };

    let (mut lo, mut hi) = (seed_lo, seed_hi);
    for m in lo..=hi {
        compute(m, &mut detail)?;
    }
    let limit = opts.max_extension as i64;
    while compute(hi, &mut detail)? != 0 {
        hi += 1;
        if hi - seed_hi > limit {
            return Err(Error::TruncationTooSmall(format!("scan does not vanish by m = {hi}")));
        }
        compute(hi, &mut detail)?;
    }
    loop {
        let d = compute(lo, &mut detail)? as i64 - compute(lo + 1, &mut detail)? as i64;
        if d == n {
            break;
        }
        if d > n {
            return Err(Error::InconsistentIndices(format!("N({lo}) - N({}) = {d} exceeds n = {n}", lo + 1)));
        }
        lo -= 1;
        if seed_lo - lo > limit {
            return Err(Error::TruncationTooSmall(format!("scan does not saturate by m = {lo}")));
        }
    }

    let table: BTreeMap<i64, usize> = detail.iter().filter(|(&m, _)| m >= lo && m <= hi).map(|(&m, k)| (m, k.dim())).collect();
    let first = |m: i64| -> i64 {
        let next = table.get(&(m + 1)).copied().unwrap_or(0) as i64;
        table[&m] as i64 - next
    };
    let mut indices = Vec::new();
    for j in lo..hi {
        let mult = first(j) - if j + 1 < hi { first(j + 1) } else { 0 };
        if mult < 0 {
            return Err(Error::InconsistentIndices(format!(
                "negative multiplicity {mult} for index {j}; the scan table is not convex"
            )));
        }
        indices.extend(std::iter::repeat_n(j, mult as usize));
    }
    if indices.len() as i64 != n {
        return Err(Error::TruncationTooSmall(format!(
            "scan reconstructs {} indices instead of {n}",
            indices.len()
        )));
    }
    let total: i64 = indices.iter().sum();
    if total != mu {
        return Err(Error::InconsistentIndices(format!("sum of indices {total} differs from Maslov index {mu}")));
    }
    for (&m, &nm) in &table {
        if expand(&indices, m) != nm {
            return Err(Error::InconsistentIndices(format!(
                "indices {indices:?} predict N({m}) = {} but the scan found {nm}",
                expand(&indices, m)
            )));
        }
    }
    let scan = scan_rows(&table, &detail);
    Ok(PartialIndexReport::assemble(indices, mu, opts.truncation, opts.rank.tau, scan))
}

pub fn is_fredholm_regular(report: &PartialIndexReport) -> bool {
    report.indices.iter().all(|&j| j >= -1)
}
