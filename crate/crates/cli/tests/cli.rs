use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use holodisk::moduli::{GridSpec, ModuliChart, PerturbationSpec, SweepOptions};
use holodisk_cli::persist::save_chart;
use holodisk_cli::{run, Cli, CliError};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("holodisk").chain(args.iter().copied())).unwrap()
}

fn exec(args: &[&str]) -> Result<String, CliError> {
    run(&cli(args))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn indices_of_diagonal_loop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i.json");
    let csv = dir.path().join("scan.csv");
    let cfg = configs().join("indices_diag.toml");
    exec(&["indices", p(&cfg), "-o", p(&out), "--csv", p(&csv)]).unwrap();
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["indices"], serde_json::json!([1, 1]));
    assert_eq!(v["h0"], 4);
    assert_eq!(v["h1"], 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("m,kernel_dim,first_difference,second_difference,degree,largest_dropped,smallest_kept\n"));
}

#[test]
fn twisted_loop_and_double() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("indices_twisted.toml");
    let out = dir.path().join("d.json");
    exec(&["double", p(&cfg), "-o", p(&out)]).unwrap();
    let v = json(&out);
    assert_eq!(v["indices"]["indices"], serde_json::json!([0, 2]));
    assert_eq!(v["double"]["splitting"], serde_json::json!([0, 2]));
    assert_eq!(v["double"]["h0"], 4);
    assert_eq!(v["double"]["h1"], 0);
}

#[test]
fn solve_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    exec(&["solve", p(&configs().join("solve_diag.toml")), "-o", p(&out)]).unwrap();
    let v = json(&out);
    assert_eq!(v["outcome"], "solved");
    assert_eq!(v["kernel_dim"], 4);
    assert!(v["interior_residual"].as_f64().unwrap() < 1e-8);
    exec(&["solve", p(&configs().join("solve_obstructed.toml")), "-o", p(&out)]).unwrap();
    let v = json(&out);
    assert_eq!(v["outcome"], "obstructed");
    assert_eq!(v["certificate"]["dimension"], 1);
    let pairing = v["certificate"]["pairings"][0].as_f64().unwrap();
    assert!((pairing.abs() - std::f64::consts::PI).abs() < 1e-6, "{pairing}");
}

#[test]
fn plane_curve_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pc.csv");
    exec(&["plane-curve", "-o", p(&out)]).unwrap();
    let mut r = csv::Reader::from_path(&out).unwrap();
    let h = r.headers().unwrap().clone();
    assert_eq!(&h[0], "d");
    assert_eq!(&h[2], "two_component_dim");
    assert_eq!(&h[3], "connected_dim");
    let rows: Vec<Vec<i64>> = r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 12);
    for row in &rows {
        let d = row[0];
        assert_eq!(2 * row[2], d * (d + 3));
        assert_eq!(row[3], d * (d + 3));
    }
    assert_eq!((rows[2][2], rows[2][3]), (9, 18));
}

#[test]
fn plane_curve_rejects_empty_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pc.toml");
    std::fs::write(&cfg, "schema = 1\nd_min = 5\nd_max = 3\n").unwrap();
    let e = exec(&["plane-curve", p(&cfg), "-o", p(&dir.path().join("x.csv"))]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unperturbed_sweep_verify_incidence_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let chart = dir.path().join("chart");
    exec(&["sweep", p(&configs().join("sweep_sphere.toml")), "-o", p(&chart)]).unwrap();
    assert!(chart.join("chart.json").exists() && chart.join("node_0127.json").exists());

    let rep = dir.path().join("verify.json");
    exec(&["verify", p(&chart), "-o", p(&rep)]).unwrap();
    let v = json(&rep);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 128);
    assert!(v["failures"].as_array().unwrap().is_empty());

    let cfg = dir.path().join("inc.toml");
    std::fs::write(&cfg, "schema = 1\nchart = \"chart\"\npoint = [1.0, 0.0, 0.0]\n").unwrap();
    let fam = dir.path().join("family.json");
    let poly = dir.path().join("family.csv");
    exec(&["incidence", p(&cfg), "-o", p(&fam), "--csv", p(&poly)]).unwrap();
    let members = json(&fam)["members"].as_array().unwrap().len();
    assert!(members >= 8);
    let rows: Vec<csv::StringRecord> = csv::Reader::from_path(&poly).unwrap().records().map(Result::unwrap).collect();
    // closed polyline
    assert_eq!(rows.len(), members + 1);
    assert_eq!(rows[0].iter().skip(1).collect::<Vec<_>>(), rows[members].iter().skip(1).collect::<Vec<_>>());

    let plot = dir.path().join("plot.csv");
    exec(&["plot", "--kind", "incidence", p(&fam), "-o", p(&plot)]).unwrap();
    assert_eq!(std::fs::read(&plot).unwrap(), std::fs::read(&poly).unwrap());
    exec(&["plot", "--kind", "chart", p(&chart), "-o", p(&plot)]).unwrap();
    assert_eq!(std::fs::read(&plot).unwrap(), std::fs::read(chart.join("summary.csv")).unwrap());
}

#[test]
fn verify_rejects_tampered_and_perturbed_charts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "schema = 1\n[perturbation]\nm = 1\nepsilon = 0.0\n[grid]\nkind = \"sphere\"\nlongitudes = 4\nlatitudes = 2\n").unwrap();
    let chart = dir.path().join("chart");
    exec(&["sweep", p(&cfg), "-o", p(&chart)]).unwrap();
    let node = chart.join("node_0003.json");
    let mut v = json(&node);
    let re = &mut v["disk"]["coeffs"][1][0][0];
    *re = serde_json::json!(re.as_f64().unwrap() + 1e-6);
    std::fs::write(&node, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let e = exec(&["verify", p(&chart), "-o", p(&dir.path().join("v.json"))]).unwrap_err();
    assert_eq!(e.exit_code(), 4, "{e}");

    std::fs::write(
        &cfg,
        "schema = 1\n[perturbation]\nm = 1\nepsilon = 0.05\n[[perturbation.terms]]\ncomponent = 0\ncoefficient = 1.0\nexponents = [0, 1, 2]\n[grid]\nkind = \"sphere\"\nlongitudes = 4\nlatitudes = 2\n",
    )
    .unwrap();
    let chart = dir.path().join("perturbed");
    exec(&["sweep", p(&cfg), "-o", p(&chart)]).unwrap();
    let e = exec(&["verify", p(&chart), "-o", p(&dir.path().join("v.json"))]).unwrap_err();
    assert_eq!(e.exit_code(), 2, "{e}");
}

#[test]
fn empty_chart_plot_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let empty = ModuliChart {
        perturbation: PerturbationSpec::unperturbed(1),
        grid: GridSpec::Explicit { planes: vec![] },
        options: SweepOptions::default(),
        nodes: vec![],
        failed: vec![],
    };
    let chart = dir.path().join("chart");
    save_chart(&chart, &empty).unwrap();
    let plot = dir.path().join("plot.csv");
    exec(&["plot", "--kind", "chart", p(&chart), "-o", p(&plot)]).unwrap();
    let text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("node,status,iterations,residual,tangent_dim,free_kernel_dim,warm_start"));
    // no planes to sweep is an input error
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "schema = 1\n[perturbation]\nm = 1\nepsilon = 0.0\n[grid]\nkind = \"explicit\"\nplanes = []\n").unwrap();
    let e = exec(&["sweep", p(&cfg), "-o", p(&dir.path().join("x"))]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let e = exec(&["plot", "--kind", "heatmap", p(&out), "-o", p(&out)]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = exec(&["indices", p(&dir.path().join("missing.toml")), "-o", p(&out)]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema = 2\n[loop]\ndiagonal = [1]\n").unwrap();
    assert_eq!(exec(&["indices", p(&bad), "-o", p(&out)]).unwrap_err().exit_code(), 2);
    std::fs::write(&bad, "schema = 1\n[loop]\ndiagonal = [1]\nextra = 3\n").unwrap();
    assert_eq!(exec(&["indices", p(&bad), "-o", p(&out)]).unwrap_err().exit_code(), 2);
    let e = exec(&["--tol=-1", "indices", p(&configs().join("indices_diag.toml")), "-o", p(&out)]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_holodisk");
    let out = dir.path().join("i.json");
    let ok = Command::new(bin).args(["indices", p(&configs().join("indices_diag.toml")), "-o", p(&out)]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("[1, 1]"));
    let bad = Command::new(bin).args(["plot", "--kind", "nope", p(&out), "-o", p(&out)]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown plot kind"));
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "schema = 1\n[perturbation]\nm = 1\nepsilon = 0.02\n[[perturbation.terms]]\ncomponent = 1\ncoefficient = 1.0\nexponents = [1, 1, 1]\n[grid]\nkind = \"sphere\"\nlongitudes = 6\nlatitudes = 3\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    exec(&["sweep", p(&cfg), "-o", p(&a)]).unwrap();
    exec(&["sweep", p(&cfg), "-o", p(&b)]).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 18 + 2);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    let (x, y) = (dir.path().join("x.json"), dir.path().join("y.json"));
    let cfg = configs().join("indices_twisted.toml");
    exec(&["indices", p(&cfg), "-o", p(&x)]).unwrap();
    exec(&["indices", p(&cfg), "-o", p(&y)]).unwrap();
    assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
}
