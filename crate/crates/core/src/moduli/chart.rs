use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::disk::{max_boundary_residual, standard_half_line, DiskMap, OrientedPlane};
use super::grid::GridSpec;
use super::newton::{
    apply_step, assemble, collocation_angles, continue_from_half_line, newton_disk, Frame, Mode, NewtonOptions,
    State, TangentDims, Target,
};
use super::perturbation::{argmax_chart, PerturbationSpec};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_solve, RankOptions};

const TOTALLY_REAL_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub newton: NewtonOptions,
    /// Node the sweep starts from; the rest follow in order of distance to it.
    pub seed: usize,
    /// Uniform epsilon steps used at the seed node.
    pub continuation_steps: usize,
    /// Uniform epsilon steps used when a warm start fails.
    pub fallback_steps: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { newton: NewtonOptions::default(), seed: 0, continuation_steps: 2, fallback_steps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartNode {
    pub index: usize,
    pub plane: OrientedPlane,
    pub disk: Option<DiskMap>,
    pub iterations: usize,
    /// `None` when Newton failed.
    pub residual: Option<f64>,
    pub tangent: Option<TangentDims>,
    /// Node whose solution seeded this one; `None` for continuation from a half-line.
    pub warm_start: Option<usize>,
    pub history: Vec<f64>,
    pub error: Option<String>,
}

impl ChartNode {
    pub fn tangent_dim(&self) -> Option<usize> {
        self.tangent.as_ref().map(|t| t.sliced)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliChart {
    pub perturbation: PerturbationSpec,
    pub grid: GridSpec,
    pub options: SweepOptions,
    pub nodes: Vec<ChartNode>,
    /// Nodes where Newton failed; a nonempty list marks the chart partial.
    pub failed: Vec<usize>,
}

impl ModuliChart {
    pub fn m(&self) -> usize {
        self.perturbation.m
    }

    pub fn is_partial(&self) -> bool {
        !self.failed.is_empty()
    }

    /// Largest coefficient distance between this chart and another over the same grid.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.nodes.len() != other.nodes.len() {
            return Err(Error::ShapeMismatch("charts over different grids".into()));
        }
        let mut d = 0.0f64;
        for (a, b) in self.nodes.iter().zip(&other.nodes) {
            match (&a.disk, &b.disk) {
                (Some(x), Some(y)) => d = d.max(x.coeff_distance(y)),
                _ => return Err(Error::InvalidInput(format!("node {} has no solution", a.index))),
            }
        }
        Ok(d)
    }
}

/// Carry a solution at a nearby plane over to `target` as a Newton guess.
///
/// The neighbor's correction to its half-line is added to the half-line of
/// `target` in a frame aligned with the neighbor, then rotated into the
/// frame `(u, v)` of `target`; a rotation of the frame by `phi` acts on a
/// gauged disk as `a_k -> e^{i (2k - 1) phi} a_k`.
fn transport(neighbor: &DiskMap, target: &OrientedPlane) -> Result<DiskMap> {
    let proj = target.projector();
    let aligned = OrientedPlane::orthonormalized(&(&proj * neighbor.plane().u()), &(&proj * neighbor.plane().v()))?;
    let (u, v) = (target.u(), target.v());
    let (cos, sin) = (u.dot(&aligned.u()), u.dot(&aligned.v()));
    let det = cos * v.dot(&aligned.v()) - sin * v.dot(&aligned.u());
    if det <= 0.0 {
        return Err(Error::InvalidInput("neighbor has the opposite orientation".into()));
    }
    let k = neighbor.degree();
    let (h_old, h_new) = (standard_half_line(neighbor.plane()), standard_half_line(&aligned));
    let guess: Vec<DVector<Complex64>> =
        (0..=k).map(|j| h_new.coeff(j) + neighbor.coeff(j) - h_old.coeff(j)).collect();
    let mut coeffs = DiskMap::new(aligned.clone(), guess)?.normalized()?.coeff_vectors();
    coeffs[0] = aligned.e0();
    let phi = sin.atan2(cos);
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, (2.0 * j as f64 - 1.0) * phi);
    }
    DiskMap::new(target.clone(), coeffs)
}

pub fn sweep_moduli(grid: &GridSpec, p: &PerturbationSpec, opts: &SweepOptions) -> Result<ModuliChart> {
    p.validate()?;
    p.check_totally_real(TOTALLY_REAL_SAMPLES)?;
    let planes = grid.planes(p.m)?;
    if opts.seed >= planes.len() {
        return Err(Error::InvalidInput(format!("seed {} outside a grid of {} nodes", opts.seed, planes.len())));
    }
    let seed = &planes[opts.seed];
    let mut order: Vec<usize> = (0..planes.len()).collect();
    order.sort_by(|&a, &b| {
        seed.distance(&planes[a]).partial_cmp(&seed.distance(&planes[b])).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut nodes: Vec<Option<ChartNode>> = vec![None; planes.len()];
    let mut solved: Vec<usize> = Vec::new();
    for idx in order {
        let plane = &planes[idx];
        let nearest = solved.iter().copied().min_by(|&a, &b| {
            plane.distance(&planes[a]).partial_cmp(&plane.distance(&planes[b])).unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut attempt = match nearest {
            Some(nb) => {
                let disk = nodes[nb].as_ref().and_then(|n| n.disk.as_ref()).expect("solved node");
                transport(disk, plane).and_then(|g| newton_disk(&g, p, &opts.newton)).map(|r| (r, Some(nb)))
            }
            None => continue_from_half_line(plane, p, opts.continuation_steps, &opts.newton).map(|r| (r, None)),
        };
        if attempt.is_err() && nearest.is_some() {
            attempt = continue_from_half_line(plane, p, opts.fallback_steps, &opts.newton).map(|r| (r, None));
        }
        let node = match attempt {
            Ok(((disk, rep), warm_start)) => {
                solved.push(idx);
                ChartNode {
                    index: idx,
                    plane: plane.clone(),
                    disk: Some(disk),
                    iterations: rep.iterations,
                    residual: Some(rep.residual),
                    tangent: rep.tangent,
                    warm_start,
                    history: rep.history,
                    error: None,
                }
            }
            Err(e) => ChartNode {
                index: idx,
                plane: plane.clone(),
                disk: None,
                iterations: 0,
                residual: None,
                tangent: None,
                warm_start: nearest,
                history: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        nodes[idx] = Some(node);
    }
    let nodes: Vec<ChartNode> = nodes.into_iter().map(|n| n.expect("every node visited")).collect();
    let failed = nodes.iter().filter(|n| n.disk.is_none()).map(|n| n.index).collect();
    Ok(ModuliChart { perturbation: p.clone(), grid: grid.clone(), options: *opts, nodes, failed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyNode {
    pub index: usize,
    pub half_line_error: f64,
    /// `|sum a_i^2| / |a|^2` at the center.
    pub quadric_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub nodes: Vec<VerifyNode>,
    /// Smallest projective distance between incidence points of distinct nodes.
    pub min_separation: f64,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn projective_distance(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    let c = a.dotc(b).norm() / (a.norm() * b.norm());
    (1.0 - (c * c).min(1.0)).sqrt()
}

pub fn verify_unperturbed(chart: &ModuliChart, tolerance: f64) -> Result<VerifyReport> {
    if !chart.perturbation.is_trivial() {
        return Err(Error::InvalidInput("verification needs an unperturbed chart".into()));
    }
    let mut failures = Vec::new();
    let mut nodes = Vec::new();
    let mut points = Vec::new();
    for n in &chart.nodes {
        let Some(disk) = &n.disk else {
            failures.push(format!("node {}: no solution ({})", n.index, n.error.as_deref().unwrap_or("unknown")));
            continue;
        };
        let half_line_error = disk.coeff_distance(&standard_half_line(&n.plane));
        let a0 = disk.quadric_point();
        let quadric_defect = a0.iter().map(|z| z * z).sum::<Complex64>().norm() / a0.norm_squared();
        if !(half_line_error <= tolerance) {
            failures.push(format!("node {}: differs from its half-line by {half_line_error:.3e}", n.index));
        }
        if !(quadric_defect <= tolerance) {
            failures.push(format!("node {}: incidence point off the quadric by {quadric_defect:.3e}", n.index));
        }
        nodes.push(VerifyNode { index: n.index, half_line_error, quadric_defect });
        points.push((n.index, a0));
    }
    let mut min_separation = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = projective_distance(&points[i].1, &points[j].1);
            if d < min_separation {
                min_separation = d;
            }
            if d <= 1e3 * tolerance {
                failures.push(format!("nodes {} and {} share an incidence point", points[i].0, points[j].0));
            }
        }
    }
    Ok(VerifyReport { tolerance, nodes, min_separation, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidenceOptions {
    /// Coarse selection radius in projective distance; defaults to the median
    /// nearest-neighbor spacing of the grid.
    pub threshold: Option<f64>,
    pub tol: f64,
    pub maxit: usize,
    /// Boundary samples used in the coarse search.
    pub samples: usize,
}

impl Default for IncidenceOptions {
    fn default() -> Self {
        Self { threshold: None, tol: 1e-10, maxit: 12, samples: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceMember {
    pub node: usize,
    pub theta: f64,
    /// Moduli coordinate of the refined disk: the plane of its incidence point.
    pub plane: OrientedPlane,
    pub coarse_distance: f64,
    pub residual: f64,
    /// `|x - P x| / |x|` for the refined plane; vanishes at `eps = 0`.
    pub containment_defect: f64,
    pub order_key: f64,
    pub disk: DiskMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceFamily {
    /// Real representative of the base point, `y = [x + i eps u(x)]`.
    pub x: Vec<f64>,
    pub y: Vec<Complex64>,
    pub threshold: f64,
    pub members: Vec<IncidenceMember>,
    /// Nodes selected by the coarse search whose refinement failed.
    pub rejected: Vec<(usize, String)>,
}

fn median_spacing(planes: &[OrientedPlane]) -> f64 {
    let mut nn: Vec<f64> = planes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            planes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| p.distance(q)).fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .collect();
    if nn.is_empty() {
        return 0.5;
    }
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    nn[nn.len() / 2]
}

const INCIDENCE_RANK: RankOptions = RankOptions { tau: 1e-9, guard: 1.0 };

fn refine(
    disk: &DiskMap,
    p: &PerturbationSpec,
    target: &Target,
    theta: f64,
    newton: &NewtonOptions,
    opts: &IncidenceOptions,
) -> Result<(DiskMap, f64, f64)> {
    let plane = disk.plane().clone();
    let frame = Frame::new(&plane);
    let disk = disk.normalized()?;
    let kdeg = disk.degree();
    let mut state = State::from_disk(&frame, &disk, kdeg);
    state.theta = theta;
    let count = newton.collocation_count(p.m).max(2 * (2 * kdeg + p.m + 1));
    let angles = collocation_angles(count);
    let charts: Vec<usize> = angles.iter().map(|&t| argmax_chart(&disk.boundary(t))).collect();
    for it in 0..=opts.maxit {
        let (res, jac) = assemble(&frame, &state, p, &angles, &charts, Mode::Incidence, Some(target))?;
        let current = state.disk(&frame, &plane)?;
        let incidence = res.rows(res.len() - p.m - 1, p.m + 1).amax();
        let residual = max_boundary_residual(&current, p, count)?.max(current.gauge()[2].abs()).max(incidence);
        if residual <= opts.tol {
            return Ok((current, state.theta.rem_euclid(2.0 * PI), residual));
        }
        if it == opts.maxit || !residual.is_finite() {
            return Err(Error::NotConverged { iterations: it, residual, tolerance: opts.tol });
        }
        let (step, _, _) = min_norm_solve(&jac, &(-res), INCIDENCE_RANK)?;
        apply_step(&mut state, &step, Mode::Incidence);
    }
    unreachable!("loop returns")
}

pub fn incidence_family(x: &[f64], chart: &ModuliChart, opts: &IncidenceOptions) -> Result<IncidenceFamily> {
    let p = &chart.perturbation;
    let n = p.dim();
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!("base point needs {n} coordinates")));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("base point must be a nonzero finite vector".into()));
    }
    let x: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let (y, _) = p.phi(&x);
    let a = argmax_chart(&y);
    let others: Vec<usize> = (0..n).filter(|&b| b != a).collect();
    let target = Target { chart: a, t: DVector::from_iterator(n - 1, others.iter().map(|&b| x[b] / x[a])) };
    let planes: Vec<OrientedPlane> = chart.nodes.iter().map(|nd| nd.plane.clone()).collect();
    let threshold = opts.threshold.unwrap_or_else(|| median_spacing(&planes));
    // orthonormal basis of x-perp, used to order a one-parameter family
    let xv = DVector::from_column_slice(&x);
    let perp = OrientedPlane::orthonormalized(
        &{
            let mut e = DVector::zeros(n);
            e[others[0]] = 1.0;
            e
        },
        &{
            let mut e = DVector::zeros(n);
            e[others[1]] = 1.0;
            e
        },
    )?;
    let e1 = { let v = perp.u() - &xv * xv.dot(&perp.u()); v.normalize() };
    let e2 = { let v = perp.v() - &xv * xv.dot(&perp.v()); let v = &v - &e1 * e1.dot(&v); v.normalize() };

    let mut members = Vec::new();
    let mut rejected = Vec::new();
    for node in &chart.nodes {
        let Some(disk) = &node.disk else { continue };
        let (mut best, mut theta) = (f64::INFINITY, 0.0);
        for s in 0..opts.samples {
            let t = 2.0 * PI * s as f64 / opts.samples as f64;
            let d = projective_distance(&disk.boundary(t), &y);
            if d < best {
                best = d;
                theta = t;
            }
        }
        if best >= threshold {
            continue;
        }
        match refine(disk, p, &target, theta, &chart.options.newton, opts) {
            Ok((refined, theta, residual)) => {
                let plane = OrientedPlane::from_quadric_point(&refined.quadric_point())?;
                let containment_defect = plane.containment_defect(&x);
                let order_key = match plane.normal() {
                    Some(nrm) => {
                        let nv = DVector::from_column_slice(&nrm);
                        nv.dot(&e2).atan2(nv.dot(&e1))
                    }
                    None => node.index as f64,
                };
                members.push(IncidenceMember {
                    node: node.index,
                    theta,
                    plane,
                    coarse_distance: best,
                    residual,
                    containment_defect,
                    order_key,
                    disk: refined,
                });
            }
            Err(e) => rejected.push((node.index, e.to_string())),
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyFamily { threshold });
    }
    members.sort_by(|a, b| a.order_key.partial_cmp(&b.order_key).unwrap_or(std::cmp::Ordering::Equal));
    Ok(IncidenceFamily { x, y: y.iter().copied().collect(), threshold, members, rejected })
}
