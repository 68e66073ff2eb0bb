//! Probabilistic baseline classifiers.
//!
//! Every model fits on a [`DatasetView`] (the proper training set) and maps a
//! feature vector to a [`ProbabilityVector`]. The conformal layer only relies
//! on the [`ProbabilisticClassifier`] trait, so other models can be plugged in.

mod knn;
mod naive_bayes;
mod tree;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{make_splits, Dataset, DatasetView, SplitPlan};
use crate::error::{Error, Result};

pub use knn::KNearestNeighbors;
pub use naive_bayes::GaussianNaiveBayes;
pub use tree::{effective_min_samples_split, DecisionTree};

/// Per-class probability estimates for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    const SUM_TOLERANCE: f64 = 1e-9;

    /// Validates that entries lie in `[0, 1]` and sum to one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probabilities", "empty vector"));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid("probabilities", format!("entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::invalid("probabilities", format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Normalised class counts.
    pub(crate) fn from_counts(counts: &[usize]) -> Self {
        let total: usize = counts.iter().sum();
        Self(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> Option<f64> {
        self.0.get(class).copied()
    }

    /// Most probable class, ties going to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (c, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = c;
            }
        }
        best
    }
}

/// The model-agnostic contract the conformal predictors build on.
pub trait ProbabilisticClassifier: Send + Sync {
    fn n_classes(&self) -> usize;
    fn n_features(&self) -> usize;
    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Gnb,
    Dtree,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Gnb => "gnb",
            ClassifierKind::Dtree => "dtree",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_k() -> usize {
    5
}
fn default_split_floor() -> usize {
    5
}
fn default_split_fraction() -> f64 {
    0.05
}
fn default_smoothing() -> f64 {
    1e-9
}

/// Classifier family plus hyperparameters. Parameters that do not apply to
/// `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// Display name used in reports; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    #[serde(default = "default_split_floor")]
    pub min_samples_split_floor: usize,
    #[serde(default = "default_split_fraction")]
    pub min_samples_split_fraction: f64,
    #[serde(default = "default_smoothing")]
    pub variance_smoothing: f64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            name: None,
            k_neighbors: default_k(),
            min_samples_split_floor: default_split_floor(),
            min_samples_split_fraction: default_split_fraction(),
            variance_smoothing: default_smoothing(),
        }
    }

    pub fn knn() -> Self {
        Self::new(ClassifierKind::Knn)
    }

    pub fn gnb() -> Self {
        Self::new(ClassifierKind::Gnb)
    }

    pub fn dtree() -> Self {
        Self::new(ClassifierKind::Dtree)
    }

    pub fn id(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::invalid("k_neighbors", "must be at least 1"));
        }
        if self.min_samples_split_floor == 0 {
            return Err(Error::invalid("min_samples_split_floor", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.min_samples_split_fraction) {
            return Err(Error::invalid(
                "min_samples_split_fraction",
                format!("must lie in [0, 1), got {}", self.min_samples_split_fraction),
            ));
        }
        if !(self.variance_smoothing > 0.0 && self.variance_smoothing.is_finite()) {
            return Err(Error::invalid("variance_smoothing", "must be a small positive number"));
        }
        Ok(())
    }
}

/// A trained model of one of the built-in families.
#[derive(Debug, Clone)]
pub enum FittedClassifier {
    Knn(KNearestNeighbors),
    Gnb(GaussianNaiveBayes),
    Dtree(DecisionTree),
}

impl FittedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            FittedClassifier::Knn(_) => ClassifierKind::Knn,
            FittedClassifier::Gnb(_) => ClassifierKind::Gnb,
            FittedClassifier::Dtree(_) => ClassifierKind::Dtree,
        }
    }

    fn inner(&self) -> &dyn ProbabilisticClassifier {
        match self {
            FittedClassifier::Knn(m) => m,
            FittedClassifier::Gnb(m) => m,
            FittedClassifier::Dtree(m) => m,
        }
    }
}

impl ProbabilisticClassifier for FittedClassifier {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector> {
        self.inner().predict_proba(x)
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Fits `spec` on the given training view.
pub fn fit(spec: &ClassifierSpec, train: DatasetView<'_>) -> Result<FittedClassifier> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyView("training"));
    }
    Ok(match spec.kind {
        ClassifierKind::Knn => FittedClassifier::Knn(KNearestNeighbors::fit(spec.k_neighbors, train)),
        ClassifierKind::Gnb => {
            FittedClassifier::Gnb(GaussianNaiveBayes::fit(spec.variance_smoothing, train))
        }
        ClassifierKind::Dtree => FittedClassifier::Dtree(DecisionTree::fit(
            effective_min_samples_split(spec, train.len()),
            train,
        )),
    })
}

/// Plain cross-validated misclassification rate of `spec`.
///
/// Uses the same folds as the conformal runs but trains on the whole
/// training portion (no calibration holdout). Returns the mean of the
/// per-fold error rates.
pub fn baseline_error(spec: &ClassifierSpec, dataset: &Dataset, plan: &SplitPlan) -> Result<f64> {
    let splits = make_splits(dataset, plan)?;
    let fold_errors: Vec<f64> = splits
        .par_iter()
        .map(|split| {
            let train = split.training_idx();
            let model = fit(spec, dataset.view(&train))?;
            let mut wrong = 0usize;
            for &i in &split.test_idx {
                if model.predict_proba(dataset.row(i))?.argmax() != dataset.label(i) {
                    wrong += 1;
                }
            }
            Ok(wrong as f64 / split.test_idx.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(fold_errors.iter().sum::<f64>() / fold_errors.len() as f64)
}
