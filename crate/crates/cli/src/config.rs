//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "datasets": [{"synthetic": {"sigma": 0.6, "n_per_class": 500}}, {"path": "iris.csv", "label": "class"}],
//!   "classifiers": [{"kind": "knn"}, {"kind": "dtree", "min_samples_split_floor": 10}],
//!   "epsilons": [0.01, 0.05, 0.1, 0.15, 0.2],
//!   "repeats": 10, "folds": 10, "calibration_fraction": 0.2, "seed": 0,
//!   "workers": 4, "output_dir": "results", "plot": true
//! }
//! ```
//!
//! Everything except `datasets` is optional. Relative paths are resolved
//! against the directory holding the config file.

use std::path::{Path, PathBuf};

use confpred::classifiers::ClassifierSpec;
use confpred::conformal::SignificanceLevel;
use confpred::dataset::SplitPlan;
use confpred::evaluation::{DatasetSource, ExperimentGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable consulted when the config does not set `workers`.
pub const WORKERS_ENV: &str = "CONFPRED_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_calibration_fraction")]
    pub calibration_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub plot: bool,
}

fn default_classifiers() -> Vec<ClassifierSpec> {
    vec![ClassifierSpec::knn(), ClassifierSpec::gnb(), ClassifierSpec::dtree()]
}

fn default_epsilons() -> Vec<f64> {
    SignificanceLevel::default_grid().into_iter().map(f64::from).collect()
}

fn default_repeats() -> usize {
    SplitPlan::default().repeats
}

fn default_folds() -> usize {
    SplitPlan::default().folds
}

fn default_calibration_fraction() -> f64 {
    SplitPlan::default().calibration_fraction
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid {field}: {reason}"))
}

impl ExperimentConfig {
    /// Default settings over the given datasets.
    pub fn new(datasets: Vec<DatasetSource>) -> Self {
        Self::from_grid(&ExperimentGrid::with_defaults(datasets), default_output_dir(), None, false)
    }

    /// Parses JSON text; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Reads, parses, validates and resolves relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for source in &mut self.datasets {
            if let DatasetSource::Csv { path, .. } = source {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        self.to_grid().map(|_| ())
    }

    /// The grid this config describes, validated.
    pub fn to_grid(&self) -> Result<ExperimentGrid, CliError> {
        let epsilons = self
            .epsilons
            .iter()
            .map(|&e| SignificanceLevel::new(e).map_err(|_| invalid("epsilons", format!("{e} is not in (0, 1)"))))
            .collect::<Result<Vec<_>, _>>()?;
        let grid = ExperimentGrid {
            datasets: self.datasets.clone(),
            classifiers: self.classifiers.clone(),
            epsilons,
            plan: SplitPlan {
                repeats: self.repeats,
                folds: self.folds,
                calibration_fraction: self.calibration_fraction,
                seed: self.seed,
            },
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn from_grid(grid: &ExperimentGrid, output_dir: PathBuf, workers: Option<usize>, plot: bool) -> Self {
        Self {
            datasets: grid.datasets.clone(),
            classifiers: grid.classifiers.clone(),
            epsilons: grid.epsilons.iter().map(|&e| e.value()).collect(),
            repeats: grid.plan.repeats,
            folds: grid.plan.folds,
            calibration_fraction: grid.plan.calibration_fraction,
            seed: grid.plan.seed,
            workers,
            output_dir,
            plot,
        }
    }

    /// Worker count: the config wins, then the environment, then the
    /// number of available cores.
    pub fn effective_workers(&self) -> Result<usize, CliError> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(invalid(WORKERS_ENV, format!("expected a positive integer, got '{v}'"))),
            },
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_the_default_grid() {
        let c = ExperimentConfig::from_json(r#"{"datasets": [{"synthetic": {"sigma": 0.6, "n_per_class": 100}}]}"#)
            .unwrap();
        let grid = c.to_grid().unwrap();
        assert_eq!(grid, ExperimentGrid::with_defaults(vec![DatasetSource::synthetic(0.6, 100)]));
        assert_eq!(c.output_dir, PathBuf::from("results"));
        assert!(!c.plot);
        assert_eq!(c.workers, None);
    }

    #[test]
    fn full_config_round_trips_through_grid_and_json() {
        let text = r#"{
            "datasets": [{"path": "data/iris.csv", "label": "class"}, {"synthetic": {"sigma": 0.8, "n_per_class": 50, "seed": 9}}],
            "classifiers": [{"kind": "knn", "k_neighbors": 7}, {"kind": "dtree", "name": "tree10", "min_samples_split_floor": 10}],
            "epsilons": [0.05, 0.1],
            "repeats": 3, "folds": 4, "calibration_fraction": 0.25, "seed": 17,
            "workers": 2, "output_dir": "out", "plot": true
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let grid = c.to_grid().unwrap();
        assert_eq!(grid.classifiers[1].id(), "tree10");
        let back = ExperimentConfig::from_grid(&grid, c.output_dir.clone(), c.workers, c.plot);
        assert_eq!(back, c);
        assert_eq!(back.to_grid().unwrap(), grid);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn epsilon_out_of_range_names_the_field() {
        let c = ExperimentConfig::from_json(r#"{"datasets": [{"synthetic": {"sigma": 0.6, "n_per_class": 10}}], "epsilons": [0.05, 1.5]}"#)
            .unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("epsilons"), "{msg}");
    }

    #[test]
    fn empty_dataset_list_is_a_usage_error() {
        let c = ExperimentConfig::from_json(r#"{"datasets": []}"#).unwrap();
        let err = c.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("datasets"));
    }

    #[test]
    fn parse_errors_report_position() {
        let err = ExperimentConfig::from_json("{\n  \"datasets\": [],\n  \"folds\": \"ten\"\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"datasets": [], "colour": 1}"#).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = ExperimentConfig::from_json(r#"{"datasets": [{"path": "a.csv", "label": "y"}, {"path": "/abs/b.csv", "label": "y"}]}"#)
            .unwrap();
        c.resolve_paths(Path::new("/cfg/dir"));
        match (&c.datasets[0], &c.datasets[1]) {
            (DatasetSource::Csv { path: a, .. }, DatasetSource::Csv { path: b, .. }) => {
                assert_eq!(a, Path::new("/cfg/dir/a.csv"));
                assert_eq!(b, Path::new("/abs/b.csv"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.output_dir, Path::new("/cfg/dir/results"));
    }

    #[test]
    fn zero_workers_rejected() {
        let c = ExperimentConfig::from_json(r#"{"datasets": [{"synthetic": {"sigma": 0.6, "n_per_class": 10}}], "workers": 0}"#)
            .unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("workers"));
    }
}
