//! The experiment harness.
//!
//! [`run_grid`] evaluates every `(dataset, classifier, ncf, ε, repeat, fold)`
//! combination. Within a fold the classifier is fitted once on the proper
//! training set and calibrated once; the inverse-probability, margin and
//! `IP_M` predictors all share that model and calibration split, and every
//! `ε` reuses the same p-values.
//!
//! Fold tasks run on a rayon pool sized by the caller. Results are sorted by
//! grid key before they are returned, so the output does not depend on the
//! number of workers.

mod matrix;
mod results_csv;
mod stats;
mod summary;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{baseline_error, fit, ClassifierSpec, ProbabilisticClassifier};
use crate::conformal::{IpMPredictor, PredictionSet, SignificanceLevel};
use crate::dataset::{generate_synthetic, load_csv, make_splits, Dataset, FoldSplit, SplitPlan};
use crate::error::{Error, Result};
use crate::metrics::{BatchOutcome, MetricRecord};

pub use matrix::{build_matrix, build_matrix_with, render_matrices_markdown, Cell, ComparisonMatrix, Sign};
pub use results_csv::{
    read_baselines, read_dataset_infos, read_results, write_baselines, write_dataset_infos, write_results,
    write_validity, RESULTS_HEADER,
};
pub use stats::{
    paired_t_test, threshold_compare, threshold_compare_with, Metric, TTest, Verdict, DEFAULT_ALPHA,
    DEFAULT_THRESHOLD,
};
pub use summary::{
    mean_metrics, summarize_effective_one_c, summarize_validity, CellMeans, EffectiveOneCClassifier,
    EffectiveOneCSummary, ValidityRow, ValiditySummary, MEAN_DATASET,
};

/// The three compared setups, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NcfId {
    #[serde(rename = "IP")]
    Ip,
    #[serde(rename = "IP_M")]
    IpM,
    #[serde(rename = "M")]
    M,
}

impl NcfId {
    pub const ALL: [NcfId; 3] = [NcfId::Ip, NcfId::IpM, NcfId::M];

    pub fn as_str(self) -> &'static str {
        match self {
            NcfId::Ip => "IP",
            NcfId::IpM => "IP_M",
            NcfId::M => "M",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for NcfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NcfId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IP" => Ok(NcfId::Ip),
            "IP_M" => Ok(NcfId::IpM),
            "M" => Ok(NcfId::M),
            other => Err(Error::invalid("ncf", format!("unknown nonconformity function '{other}'"))),
        }
    }
}

/// Parameters of a generated four-cluster dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub sigma: f64,
    pub n_per_class: usize,
    /// Generator seed; the split seed is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Csv { path: PathBuf, label: String },
    Synthetic { synthetic: SyntheticSpec },
}

impl DatasetSource {
    pub fn synthetic(sigma: f64, n_per_class: usize) -> Self {
        DatasetSource::Synthetic {
            synthetic: SyntheticSpec {
                sigma,
                n_per_class,
                seed: None,
            },
        }
    }

    /// Identifier used in result files.
    pub fn id(&self) -> String {
        match self {
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            DatasetSource::Synthetic { synthetic } => format!("synthetic_sigma{}", synthetic.sigma),
        }
    }

    pub fn load(&self, default_seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, label } => load_csv(path, label),
            DatasetSource::Synthetic { synthetic } => generate_synthetic(
                synthetic.sigma,
                synthetic.n_per_class,
                synthetic.seed.unwrap_or(default_seed),
            ),
        }
    }
}

/// A loaded dataset with its identifier.
#[derive(Debug, Clone)]
pub struct NamedDataset {
    pub id: String,
    pub data: Dataset,
}

/// Shape of a dataset as recorded next to the results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub dataset: String,
    pub n_instances: usize,
    pub n_features: usize,
    pub n_classes: usize,
}

impl From<&NamedDataset> for DatasetInfo {
    fn from(d: &NamedDataset) -> Self {
        Self {
            dataset: d.id.clone(),
            n_instances: d.data.len(),
            n_features: d.data.n_features(),
            n_classes: d.data.n_classes(),
        }
    }
}

/// Everything [`run_grid`] evaluates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub datasets: Vec<DatasetSource>,
    pub classifiers: Vec<ClassifierSpec>,
    pub epsilons: Vec<SignificanceLevel>,
    pub plan: SplitPlan,
}

impl ExperimentGrid {
    /// Default ε grid, 10x10 folds and 4:1 calibration split over all three
    /// built-in classifiers.
    pub fn with_defaults(datasets: Vec<DatasetSource>) -> Self {
        Self {
            datasets,
            classifiers: vec![ClassifierSpec::knn(), ClassifierSpec::gnb(), ClassifierSpec::dtree()],
            epsilons: SignificanceLevel::default_grid(),
            plan: SplitPlan::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::invalid("datasets", "at least one dataset is required"));
        }
        validate_axes(&self.classifiers, &self.epsilons)?;
        self.plan.validate()
    }
}

fn validate_axes(classifiers: &[ClassifierSpec], epsilons: &[SignificanceLevel]) -> Result<()> {
    if classifiers.is_empty() {
        return Err(Error::invalid("classifiers", "at least one classifier is required"));
    }
    for (i, spec) in classifiers.iter().enumerate() {
        spec.validate()?;
        if classifiers[..i].iter().any(|other| other.id() == spec.id()) {
            return Err(Error::invalid("classifiers", format!("duplicate classifier id '{}'", spec.id())));
        }
    }
    if epsilons.is_empty() {
        return Err(Error::invalid("epsilons", "at least one significance level is required"));
    }
    if epsilons.windows(2).any(|w| w[0].value() >= w[1].value()) {
        return Err(Error::invalid("epsilons", "values must be strictly increasing"));
    }
    Ok(())
}

/// Metrics of one `(dataset, classifier, ncf, ε, repeat, fold)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub dataset: String,
    pub classifier: String,
    pub ncf: NcfId,
    pub epsilon: f64,
    pub repeat: usize,
    pub fold: usize,
    pub n_test: usize,
    pub metrics: MetricRecord,
}

/// Output of a grid run.
#[derive(Debug, Clone, Default)]
pub struct GridRun {
    pub datasets: Vec<DatasetInfo>,
    pub results: Vec<FoldResult>,
    /// Datasets or dataset/classifier combinations that were skipped.
    pub failures: Vec<String>,
}

/// Loads every dataset of the grid and evaluates it on `workers` threads.
///
/// Datasets that fail to load and classifiers that fail to fit are recorded
/// in [`GridRun::failures`] and skipped.
pub fn run_grid(grid: &ExperimentGrid, workers: usize) -> Result<GridRun> {
    grid.validate()?;
    let mut loaded = Vec::new();
    let mut failures = Vec::new();
    for source in &grid.datasets {
        let id = source.id();
        match source.load(grid.plan.seed) {
            Ok(data) => {
                if loaded.iter().any(|d: &NamedDataset| d.id == id) {
                    failures.push(format!("dataset {id}: duplicate dataset id, skipped"));
                } else {
                    loaded.push(NamedDataset { id, data });
                }
            }
            Err(e) => failures.push(format!("dataset {id}: {e}")),
        }
    }
    let mut run = run_loaded(&loaded, &grid.classifiers, &grid.epsilons, &grid.plan, workers)?;
    failures.append(&mut run.failures);
    run.failures = failures;
    Ok(run)
}

struct FoldTask<'a> {
    dataset: usize,
    classifier: usize,
    split: &'a FoldSplit,
}

/// Evaluates already loaded datasets.
pub fn run_loaded(
    datasets: &[NamedDataset],
    classifiers: &[ClassifierSpec],
    epsilons: &[SignificanceLevel],
    plan: &SplitPlan,
    workers: usize,
) -> Result<GridRun> {
    validate_axes(classifiers, epsilons)?;
    plan.validate()?;
    let mut failures = Vec::new();
    let mut usable = Vec::new();
    let mut splits = Vec::new();
    for (d, named) in datasets.iter().enumerate() {
        match make_splits(&named.data, plan) {
            Ok(s) => {
                usable.push(d);
                splits.push(s);
            }
            Err(e) => failures.push(format!("dataset {}: {e}", named.id)),
        }
    }
    let tasks: Vec<FoldTask<'_>> = usable
        .iter()
        .zip(&splits)
        .flat_map(|(&d, fold_splits)| {
            (0..classifiers.len()).flat_map(move |c| {
                fold_splits.iter().map(move |split| FoldTask {
                    dataset: d,
                    classifier: c,
                    split,
                })
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let outcomes: Vec<(usize, usize, Result<Vec<FoldResult>>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let named = &datasets[task.dataset];
                let spec = &classifiers[task.classifier];
                let out = evaluate_fold(named, spec, task.split, epsilons);
                (task.dataset, task.classifier, out)
            })
            .collect()
    });

    let mut failed: Vec<(usize, usize)> = Vec::new();
    let mut keyed = Vec::new();
    for (d, c, outcome) in outcomes {
        match outcome {
            Ok(rows) => keyed.extend(rows.into_iter().map(|r| ((d, c), r))),
            Err(e) => {
                if !failed.contains(&(d, c)) {
                    failures.push(format!(
                        "dataset {} / classifier {}: {e}",
                        datasets[d].id,
                        classifiers[c].id()
                    ));
                    failed.push((d, c));
                }
            }
        }
    }
    keyed.retain(|(dc, _)| !failed.contains(dc));
    keyed.sort_by(|(a_dc, a), (b_dc, b)| {
        a_dc.cmp(b_dc)
            .then(a.ncf.cmp(&b.ncf))
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.repeat.cmp(&b.repeat))
            .then(a.fold.cmp(&b.fold))
    });
    Ok(GridRun {
        datasets: usable.iter().map(|&d| DatasetInfo::from(&datasets[d])).collect(),
        results: keyed.into_iter().map(|(_, r)| r).collect(),
        failures,
    })
}

fn evaluate_fold(
    named: &NamedDataset,
    spec: &ClassifierSpec,
    split: &FoldSplit,
    epsilons: &[SignificanceLevel],
) -> Result<Vec<FoldResult>> {
    let data = &named.data;
    let model = fit(spec, data.view(&split.proper_train_idx))?;
    let predictor = IpMPredictor::calibrate(&model, data.view(&split.calibration_idx))?;
    let truths: Vec<usize> = split.test_idx.iter().map(|&i| data.label(i)).collect();
    let mut ip_p = Vec::with_capacity(truths.len());
    let mut m_p = Vec::with_capacity(truths.len());
    for &i in &split.test_idx {
        let probs = model.predict_proba(data.row(i))?;
        ip_p.push(predictor.inverse_probability().p_values_from_probs(&probs)?);
        m_p.push(predictor.margin().p_values_from_probs(&probs)?);
    }
    let mut rows = Vec::with_capacity(epsilons.len() * NcfId::ALL.len());
    for &eps in epsilons {
        let ip_sets: Vec<PredictionSet> = ip_p.iter().map(|p| PredictionSet::from_p_values(p, eps)).collect();
        let m_sets: Vec<PredictionSet> = m_p.iter().map(|p| PredictionSet::from_p_values(p, eps)).collect();
        let ipm_sets: Vec<PredictionSet> = ip_sets
            .iter()
            .zip(&m_p)
            .map(|(ip, m)| crate::conformal::combine_ip_m(ip.clone(), PredictionSet::from_p_values(m, eps.halved())))
            .collect();
        for (ncf, sets) in [(NcfId::Ip, ip_sets), (NcfId::IpM, ipm_sets), (NcfId::M, m_sets)] {
            let batch = BatchOutcome::new(sets, truths.clone(), data.n_classes())?;
            rows.push(FoldResult {
                dataset: named.id.clone(),
                classifier: spec.id().to_string(),
                ncf,
                epsilon: eps.value(),
                repeat: split.repeat,
                fold: split.fold,
                n_test: truths.len(),
                metrics: MetricRecord::from_batch(&batch),
            });
        }
    }
    Ok(rows)
}

/// Baseline (non-conformal) error of one classifier on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub dataset: String,
    pub classifier: String,
    pub b_err: f64,
}

/// Cross-validated baseline error for every dataset/classifier pair.
pub fn baseline_errors(
    datasets: &[NamedDataset],
    classifiers: &[ClassifierSpec],
    plan: &SplitPlan,
    workers: usize,
) -> Result<Vec<BaselineRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let mut out = Vec::new();
    for named in datasets {
        for spec in classifiers {
            if let Ok(b_err) = pool.install(|| baseline_error(spec, &named.data, plan)) {
                out.push(BaselineRecord {
                    dataset: named.id.clone(),
                    classifier: spec.id().to_string(),
                    b_err,
                });
            }
        }
    }
    Ok(out)
}
