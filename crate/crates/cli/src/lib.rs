//! Command-line front end: reads versioned TOML configurations, runs the
//! computations of the `holodisk` library and writes JSON reports and CSV
//! tables.

pub mod config;
pub mod persist;
pub mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use holodisk::boundary::{partial_indices, PartialIndexReport};
use holodisk::dbar::{solve_bvp, BvpOutcome, BvpTolerances, LinearBvp};
use holodisk::doubling::{double_disk_bundle, plane_curve_table};
use holodisk::io::TaylorRecord;
use holodisk::moduli::{incidence_family, sweep_moduli, verify_unperturbed, IncidenceFamily, IncidenceOptions};
use holodisk::spectral::PolarGrid;
use holodisk::ErrorCategory;
use serde::Serialize;

use config::{read_toml, schema};
use persist::{load_chart, read_json, save_chart, write_json, Versioned};
use plot::PlotKind;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Tolerance used by `verify` unless overridden.
pub const VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] holodisk::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.category() {
                ErrorCategory::Input => EXIT_INPUT,
                ErrorCategory::Numerical => EXIT_NUMERICAL,
                ErrorCategory::Invariant => EXIT_INVARIANT,
            },
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Config(_) | CliError::Csv(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "holodisk", version, about = "Partial indices, disk boundary value problems and disk moduli")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Override the command's main tolerance (rank cutoff, obstruction, Newton or verification tolerance).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Override the Taylor truncation degree.
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partial indices of a clutching loop; writes a JSON report.
    Indices {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the scan table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve the boundary value problem for the Cauchy-Riemann operator.
    Solve {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Cohomology of the doubled bundle on the Riemann sphere.
    Double {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Deformation counts of real plane curves over a degree range (CSV).
    PlaneCurve {
        /// Config with `d_min` and `d_max`; defaults to degrees 1 to 12.
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Sweep the moduli of disks over a grid; writes a chart directory.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Disks of a chart whose boundary passes through a point of P'.
    Incidence {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the family as a CSV polyline.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check an unperturbed chart against the half-line disks.
    Verify {
        chart: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Emit plot data from a stored result: `scan` (indices report), `chart`
    /// (chart directory) or `incidence` (family report).
    Plot {
        #[arg(long)]
        kind: String,
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn positive_f64(v: Option<f64>, what: &str) -> Result<Option<f64>, CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Config(format!("{what} must be positive, got {x}"))),
        _ => Ok(v),
    }
}

fn positive_usize(v: Option<usize>, what: &str) -> Result<Option<usize>, CliError> {
    match v {
        Some(0) => Err(CliError::Config(format!("{what} must be positive"))),
        _ => Ok(v),
    }
}

fn create(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

#[derive(Serialize)]
struct DoubleOut {
    indices: PartialIndexReport,
    double: holodisk::doubling::DoubleReport,
}

#[derive(Serialize)]
struct CertificateOut {
    dimension: usize,
    pairings: Vec<f64>,
    dual_basis: Vec<TaylorRecord>,
}

#[derive(Serialize)]
struct SolveOut {
    outcome: &'static str,
    degree: usize,
    collocation: usize,
    lsq_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    interior_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correction: Option<TaylorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateOut>,
}

/// Runs one command and returns a human-readable summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let tol = positive_f64(cli.tol, "--tol")?;
    let truncation = positive_usize(cli.truncation, "--truncation")?;
    let mut s = String::new();
    match &cli.command {
        Command::Indices { config, out, csv } => {
            let cfg: config::LoopConfig = read_toml(config)?;
            schema(cfg.schema)?;
            let mut opts = cfg.scan.options();
            opts.truncation = truncation.unwrap_or(opts.truncation);
            opts.rank.tau = tol.unwrap_or(opts.rank.tau);
            let report = partial_indices(&cfg.loop_.to_gloop()?, opts)?;
            write_json(out, &Versioned::new(&report))?;
            if let Some(path) = csv {
                plot::scan_csv(&report, create(path)?)?;
            }
            let _ = writeln!(
                s,
                "indices {:?}  maslov {}  h0 {}  h1 {}  regular {}",
                report.indices, report.maslov, report.h0, report.h1, report.regular
            );
        }
        Command::Solve { config, out } => {
            let cfg: config::SolveConfig = read_toml(config)?;
            schema(cfg.schema)?;
            let cond = cfg.loop_.to_condition()?;
            let grid = PolarGrid::new(cfg.grid.radial, cfg.grid.angular)?;
            let rhs = cfg.density.to_rhs(grid, cond.dim())?;
            let degree = truncation.unwrap_or(cfg.degree);
            let mut p = LinearBvp::new(cond, rhs, degree)?;
            let d = BvpTolerances::default();
            p.tolerances.rank.tau = cfg.tolerances.tau.unwrap_or(d.rank.tau);
            p.tolerances.obstruction = tol.or(cfg.tolerances.obstruction).unwrap_or(d.obstruction);
            if let Some(c) = cfg.tolerances.collocation {
                p.collocation = c;
            }
            let record = match solve_bvp(&p)? {
                BvpOutcome::Solved(sol) => {
                    let _ = writeln!(
                        s,
                        "solved: interior residual {:.3e}, boundary residual {:.3e}, kernel dimension {}",
                        sol.interior_residual,
                        sol.boundary_residual,
                        sol.kernel.ncols()
                    );
                    SolveOut {
                        outcome: "solved",
                        degree,
                        collocation: p.collocation,
                        lsq_residual: sol.lsq_residual,
                        interior_residual: Some(sol.interior_residual),
                        boundary_residual: Some(sol.boundary_residual),
                        kernel_dim: Some(sol.kernel.ncols()),
                        correction: Some(TaylorRecord::from_disk(&sol.f)),
                        certificate: None,
                    }
                }
                BvpOutcome::Obstructed(cert) => {
                    let _ = writeln!(s, "obstructed: cokernel dimension {}, pairings {:?}", cert.dimension, cert.pairings);
                    SolveOut {
                        outcome: "obstructed",
                        degree,
                        collocation: p.collocation,
                        lsq_residual: cert.lsq_residual,
                        interior_residual: None,
                        boundary_residual: None,
                        kernel_dim: None,
                        correction: None,
                        certificate: Some(CertificateOut {
                            dimension: cert.dimension,
                            pairings: cert.pairings.clone(),
                            dual_basis: cert.dual_basis.iter().map(TaylorRecord::from_disk).collect(),
                        }),
                    }
                }
            };
            write_json(out, &Versioned::new(record))?;
        }
        Command::Double { config, out } => {
            let cfg: config::LoopConfig = read_toml(config)?;
            schema(cfg.schema)?;
            let mut opts = cfg.scan.options();
            opts.truncation = truncation.unwrap_or(opts.truncation);
            opts.rank.tau = tol.unwrap_or(opts.rank.tau);
            let indices = partial_indices(&cfg.loop_.to_gloop()?, opts)?;
            let double = double_disk_bundle(&indices);
            let _ = writeln!(
                s,
                "O{:?} on CP1: degree {}, h0 {}, h1 {}",
                double.splitting, double.degree, double.h0, double.h1
            );
            write_json(out, &Versioned::new(DoubleOut { indices, double }))?;
        }
        Command::PlaneCurve { config, out } => {
            let (lo, hi) = match config {
                Some(path) => {
                    let cfg: config::PlaneCurveConfig = read_toml(path)?;
                    schema(cfg.schema)?;
                    (cfg.d_min, cfg.d_max)
                }
                None => (1, 12),
            };
            if lo < 1 || hi < lo {
                return Err(CliError::Config(format!("degree range {lo}..={hi} is empty or starts below 1")));
            }
            let rows = plane_curve_table(lo..=hi)?;
            let mut w = csv::Writer::from_writer(create(out)?);
            w.write_record([
                "d",
                "genus_x",
                "two_component_dim",
                "connected_dim",
                "deg_n_two",
                "deg_n_connected",
                "deg_k_minus_n_two",
                "deg_k_minus_n_connected",
                "h1_two",
                "h1_connected",
            ])?;
            for (two, one) in &rows {
                w.write_record([two.d as i64, two.genus_x, two.moduli_dim, one.moduli_dim, two.deg_n, one.deg_n, two.deg_k_minus_n, one.deg_k_minus_n, two.h1, one.h1].map(|v| v.to_string()))?;
            }
            w.flush().map_err(|source| CliError::Io { path: out.clone(), source })?;
            let _ = writeln!(s, "plane curves d = {lo}..{hi}: {} rows", rows.len());
        }
        Command::Sweep { config, out } => {
            let cfg: config::SweepConfig = read_toml(config)?;
            schema(cfg.schema)?;
            let mut opts = cfg.options();
            opts.newton.truncation = truncation.unwrap_or(opts.newton.truncation);
            opts.newton.tol = tol.unwrap_or(opts.newton.tol);
            let chart = sweep_moduli(&cfg.grid, &cfg.perturbation, &opts)?;
            save_chart(out, &chart)?;
            let converged = chart.nodes.len() - chart.failed.len();
            let worst = chart.nodes.iter().filter_map(|n| n.residual).fold(0.0, f64::max);
            let _ = writeln!(s, "{converged}/{} nodes converged, worst residual {worst:.3e}", chart.nodes.len());
            if chart.is_partial() {
                return Err(CliError::Numerical(format!(
                    "chart is partial: Newton failed at nodes {:?} (chart written to {})",
                    chart.failed,
                    out.display()
                )));
            }
        }
        Command::Incidence { config, out, csv } => {
            let cfg: config::IncidenceConfig = read_toml(config)?;
            schema(cfg.schema)?;
            let dir = if cfg.chart.is_relative() {
                config.parent().unwrap_or(Path::new(".")).join(&cfg.chart)
            } else {
                cfg.chart.clone()
            };
            let chart = load_chart(&dir)?;
            let d = IncidenceOptions::default();
            let opts = IncidenceOptions {
                threshold: positive_f64(cfg.threshold, "threshold")?,
                tol: tol.or(cfg.tol).unwrap_or(d.tol),
                maxit: cfg.maxit.unwrap_or(d.maxit),
                samples: cfg.samples.unwrap_or(d.samples),
            };
            let family = incidence_family(&cfg.point, &chart, &opts)?;
            write_json(out, &Versioned::new(&family))?;
            if let Some(path) = csv {
                plot::incidence_csv(&family, chart.m(), create(path)?)?;
            }
            let worst = family.members.iter().map(|m| m.residual).fold(0.0, f64::max);
            let _ = writeln!(
                s,
                "{} members ({} rejected), worst residual {worst:.3e}",
                family.members.len(),
                family.rejected.len()
            );
        }
        Command::Verify { chart, out } => {
            let chart = load_chart(chart)?;
            let report = verify_unperturbed(&chart, tol.unwrap_or(VERIFY_TOL))?;
            write_json(out, &Versioned::new(&report))?;
            let worst = report.nodes.iter().map(|n| n.half_line_error.max(n.quadric_defect)).fold(0.0, f64::max);
            let _ = writeln!(
                s,
                "{} nodes checked, worst defect {worst:.3e}, min separation {:.3e}",
                report.nodes.len(),
                report.min_separation
            );
            if !report.ok() {
                return Err(CliError::Invariant(report.failures.join("; ")));
            }
        }
        Command::Plot { kind, input, out } => {
            let file = || create(out);
            match kind.parse::<PlotKind>()? {
                PlotKind::Scan => {
                    let r: Versioned<PartialIndexReport> = read_json(input)?;
                    schema(r.schema)?;
                    plot::scan_csv(&r.body, file()?)?;
                }
                PlotKind::Chart => plot::chart_csv(&load_chart(input)?, file()?)?,
                PlotKind::Incidence => {
                    let r: Versioned<IncidenceFamily> = read_json(input)?;
                    schema(r.schema)?;
                    let m = r.body.x.len().checked_sub(2).filter(|&m| m >= 1).ok_or_else(|| {
                        CliError::Config("incidence base point has fewer than 3 coordinates".into())
                    })?;
                    plot::incidence_csv(&r.body, m, file()?)?;
                }
            }
            let _ = writeln!(s, "wrote {}", out.display());
        }
    }
    Ok(s)
}
