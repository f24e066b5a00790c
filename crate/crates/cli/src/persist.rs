use std::path::Path;

use holodisk::moduli::{ChartNode, GridSpec, ModuliChart, PerturbationSpec, SweepOptions};
use holodisk::io::SCHEMA_VERSION;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Wraps a report with the schema version.
#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self { schema: SCHEMA_VERSION, body }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ChartHeader {
    perturbation: PerturbationSpec,
    grid: GridSpec,
    options: SweepOptions,
    nodes: usize,
    failed: Vec<usize>,
}

fn node_file(dir: &Path, index: usize) -> std::path::PathBuf {
    dir.join(format!("node_{index:04}.json"))
}

/// `chart.json`, one `node_XXXX.json` per grid node, and `summary.csv`.
pub fn save_chart(dir: &Path, chart: &ModuliChart) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let header = ChartHeader {
        perturbation: chart.perturbation.clone(),
        grid: chart.grid.clone(),
        options: chart.options,
        nodes: chart.nodes.len(),
        failed: chart.failed.clone(),
    };
    write_json(&dir.join("chart.json"), &Versioned::new(header))?;
    for node in &chart.nodes {
        write_json(&node_file(dir, node.index), &Versioned::new(node))?;
    }
    let file = dir.join("summary.csv");
    let out = std::fs::File::create(&file).map_err(|source| CliError::Io { path: file.clone(), source })?;
    crate::plot::chart_csv(chart, out)
}

pub fn load_chart(dir: &Path) -> Result<ModuliChart, CliError> {
    let header: Versioned<ChartHeader> = read_json(&dir.join("chart.json"))?;
    crate::config::schema(header.schema)?;
    let h = header.body;
    let mut nodes = Vec::with_capacity(h.nodes);
    for i in 0..h.nodes {
        let node: Versioned<ChartNode> = read_json(&node_file(dir, i))?;
        crate::config::schema(node.schema)?;
        if node.body.index != i {
            return Err(CliError::Config(format!("{} holds node {}", node_file(dir, i).display(), node.body.index)));
        }
        nodes.push(node.body);
    }
    Ok(ModuliChart { perturbation: h.perturbation, grid: h.grid, options: h.options, nodes, failed: h.failed })
}
