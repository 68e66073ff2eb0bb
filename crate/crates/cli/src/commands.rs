//! The four subcommands as library functions.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use confpred::dataset::{generate_synthetic, Dataset};
use confpred::evaluation::{
    baseline_errors, read_baselines, read_dataset_infos, read_results, run_loaded, write_baselines,
    write_dataset_infos, write_results, FoldResult, NamedDataset,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::plot::write_charts;
use crate::report::{create, write_reports};

pub const RESULTS_CSV: &str = "results.csv";
pub const DATASETS_CSV: &str = "datasets.csv";
pub const BASELINE_CSV: &str = "baseline.csv";
pub const PLOTS_DIR: &str = "plots";

fn runtime(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Generates the four-cluster dataset and writes it as `x1,x2,label` CSV.
pub fn cmd_synth(sigma: f64, n_per_class: usize, seed: u64, out: &Path) -> Result<Dataset, CliError> {
    let data = generate_synthetic(sigma, n_per_class, seed)?;
    data.write_csv(out).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(data)
}

/// What [`cmd_run`] produced.
#[derive(Debug)]
pub struct RunOutputs {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Skipped datasets or classifiers, already formatted as warnings.
    pub warnings: Vec<String>,
    pub n_results: usize,
}

/// Runs the grid described by the config file and writes every output.
pub fn cmd_run(config_path: &Path) -> Result<RunOutputs, CliError> {
    let config = ExperimentConfig::load(config_path)?;
    run_config(&config)
}

/// Same as [`cmd_run`] for an already loaded config.
pub fn run_config(config: &ExperimentConfig) -> Result<RunOutputs, CliError> {
    let grid = config.to_grid()?;
    let workers = config.effective_workers()?;

    let mut warnings = Vec::new();
    let mut loaded: Vec<NamedDataset> = Vec::new();
    for source in &grid.datasets {
        let id = source.id();
        if loaded.iter().any(|d| d.id == id) {
            warnings.push(format!("dataset {id}: duplicate dataset id, skipped"));
            continue;
        }
        match source.load(grid.plan.seed) {
            Ok(data) => loaded.push(NamedDataset { id, data }),
            Err(e) => warnings.push(format!("dataset {id}: {e}")),
        }
    }
    let run = run_loaded(&loaded, &grid.classifiers, &grid.epsilons, &grid.plan, workers)?;
    warnings.extend(run.failures.iter().cloned());
    if run.results.is_empty() {
        let mut msg = String::from("no dataset could be evaluated");
        for w in &warnings {
            msg.push_str("\n  ");
            msg.push_str(w);
        }
        return Err(CliError::Runtime(msg));
    }
    let evaluated: Vec<NamedDataset> = loaded
        .into_iter()
        .filter(|d| run.datasets.iter().any(|info| info.dataset == d.id))
        .collect();
    let baselines = baseline_errors(&evaluated, &grid.classifiers, &grid.plan, workers)?;

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| runtime(dir, e))?;
    let mut files = Vec::new();
    let path = dir.join(RESULTS_CSV);
    write_results(create(&path)?, &run.results)?;
    files.push(path);
    let path = dir.join(DATASETS_CSV);
    write_dataset_infos(create(&path)?, &run.datasets)?;
    files.push(path);
    let path = dir.join(BASELINE_CSV);
    write_baselines(create(&path)?, &baselines)?;
    files.push(path);
    files.extend(write_reports(dir, &run.results, &run.datasets, &baselines)?);
    if config.plot {
        let plots = dir.join(PLOTS_DIR);
        files.extend(write_charts(&run.results, &plots).map_err(|e| runtime(&plots, e))?);
    }
    Ok(RunOutputs {
        output_dir: dir.clone(),
        files,
        warnings,
        n_results: run.results.len(),
    })
}

/// Reads a results CSV, reporting the first malformed line.
pub fn load_results(path: &Path) -> Result<Vec<FoldResult>, CliError> {
    let file = File::open(path).map_err(|e| runtime(path, e))?;
    read_results(BufReader::new(file)).map_err(|e| runtime(path, e))
}

/// Writes oneC and avgC charts for every dataset/classifier pair.
pub fn cmd_plot(results: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = load_results(results)?;
    write_charts(&rows, out_dir).map_err(|e| runtime(out_dir, e))
}

/// Rebuilds the summaries from a results CSV and the `datasets.csv` (and,
/// if present, `baseline.csv`) written next to it.
pub fn cmd_report(results: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = load_results(results)?;
    let dir = results.parent().unwrap_or(Path::new(""));
    let infos_path = dir.join(DATASETS_CSV);
    let infos = read_dataset_infos(&infos_path).map_err(|e| runtime(&infos_path, e))?;
    let baseline_path = dir.join(BASELINE_CSV);
    let baselines = if baseline_path.exists() {
        read_baselines(&baseline_path).map_err(|e| runtime(&baseline_path, e))?
    } else {
        Vec::new()
    };
    write_reports(out_dir, &rows, &infos, &baselines)
}
