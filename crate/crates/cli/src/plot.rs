use std::io::Write;
use std::str::FromStr;

use holodisk::boundary::PartialIndexReport;
use holodisk::moduli::{IncidenceFamily, IncidenceMember, ModuliChart, OrientedPlane};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scan,
    Chart,
    Incidence,
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "scan" => Ok(Self::Scan),
            "chart" => Ok(Self::Chart),
            "incidence" => Ok(Self::Incidence),
            other => Err(CliError::Config(format!("unknown plot kind `{other}` (expected scan, chart or incidence)"))),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn scan_csv<W: Write>(report: &PartialIndexReport, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "kernel_dim", "first_difference", "second_difference", "degree", "largest_dropped", "smallest_kept"])?;
    for r in &report.scan {
        w.write_record([
            r.m.to_string(),
            r.kernel_dim.to_string(),
            opt(r.first_difference),
            opt(r.second_difference),
            r.degree.to_string(),
            opt(r.largest_dropped),
            opt(r.smallest_kept),
        ])?;
    }
    w.flush().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}

pub fn chart_csv<W: Write>(chart: &ModuliChart, out: W) -> Result<(), CliError> {
    let n = chart.m() + 2;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["node", "status", "iterations", "residual", "tangent_dim", "free_kernel_dim", "warm_start"].map(String::from).to_vec();
    for i in 0..n {
        header.push(format!("q{i}_re"));
        header.push(format!("q{i}_im"));
    }
    w.write_record(&header)?;
    for node in &chart.nodes {
        let mut row = vec![
            node.index.to_string(),
            if node.disk.is_some() { "converged".into() } else { "failed".into() },
            node.iterations.to_string(),
            opt(node.residual),
            opt(node.tangent_dim()),
            opt(node.tangent.as_ref().map(|t| t.free)),
            opt(node.warm_start),
        ];
        match &node.disk {
            Some(d) => {
                for z in d.quadric_point().iter() {
                    row.push(z.re.to_string());
                    row.push(z.im.to_string());
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 2 * n)),
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}

/// Column names for [`plane_coordinates`].
pub fn coordinate_names(m: usize) -> Vec<String> {
    match m {
        1 => ["n_x", "n_y", "n_z"].map(String::from).to_vec(),
        2 => ["sd_1", "sd_2", "sd_3", "asd_1", "asd_2", "asd_3"].map(String::from).to_vec(),
        _ => (0..m + 2).map(|i| format!("u_{i}")).chain((0..m + 2).map(|i| format!("v_{i}"))).collect(),
    }
}

/// Coordinates of an oriented plane used in plots: the unit normal for
/// `m = 1`, the self-dual and anti-self-dual parts of the bivector for
/// `m = 2`, and `(u, v)` otherwise.
pub fn plane_coordinates(p: &OrientedPlane) -> Vec<f64> {
    match p.m() {
        1 => p.normal().expect("R^3").to_vec(),
        2 => {
            let w = p.bivector();
            vec![
                w[(0, 1)] + w[(2, 3)],
                w[(0, 2)] - w[(1, 3)],
                w[(0, 3)] + w[(1, 2)],
                w[(0, 1)] - w[(2, 3)],
                w[(0, 2)] + w[(1, 3)],
                w[(0, 3)] - w[(1, 2)],
            ]
        }
        _ => p.u().iter().chain(p.v().iter()).copied().collect(),
    }
}

/// One row per member in family order; for `m = 1` the first member is
/// repeated at the end so the polyline closes.
pub fn incidence_csv<W: Write>(family: &IncidenceFamily, m: usize, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["order", "node", "theta", "residual", "containment_defect"].map(String::from).to_vec();
    header.extend(coordinate_names(m));
    w.write_record(&header)?;
    let mut rows: Vec<&IncidenceMember> = family.members.iter().collect();
    if m == 1 && !rows.is_empty() {
        rows.push(rows[0]);
    }
    for (i, mbr) in rows.into_iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            mbr.node.to_string(),
            mbr.theta.to_string(),
            mbr.residual.to_string(),
            mbr.containment_defect.to_string(),
        ];
        row.extend(plane_coordinates(&mbr.plane).iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}
