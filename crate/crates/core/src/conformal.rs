//! Inductive conformal prediction on top of a probabilistic classifier.
//!
//! A fitted model is calibrated on instances it was not trained on: each
//! calibration pair gets a nonconformity score and the sorted scores form a
//! [`CalibrationTable`]. For a test instance, every tentative label `y` is
//! scored the same way and converted to a p-value
//!
//! ```text
//! p(y) = (#{calibration scores >= score(x, y)} + 1) / (q + 1)
//! ```
//!
//! and the prediction set keeps the labels with `p(y) > ε`.
//!
//! Two nonconformity functions are available:
//!
//! * inverse probability (hinge): `1 - P(y | x)`
//! * margin: `max_{y' != y} P(y' | x) - P(y | x)`
//!
//! [`IpMPredictor`] combines them: inverse probability at `ε`, margin at
//! `ε / 2`, and the margin set replaces the inverse-probability set only
//! when the margin set is a singleton and the inverse-probability set is not.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ProbabilisticClassifier, ProbabilityVector};
use crate::dataset::DatasetView;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonconformityKind {
    /// `1 - P(y | x)`, also called hinge.
    InverseProbability,
    /// Highest competing probability minus `P(y | x)`.
    Margin,
}

impl fmt::Display for NonconformityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonconformityKind::InverseProbability => "inverse_probability",
            NonconformityKind::Margin => "margin",
        })
    }
}

/// Nonconformity of `label` under the class probabilities `probs`.
pub fn score(kind: NonconformityKind, probs: &ProbabilityVector, label: usize) -> Result<f64> {
    let p = probs.as_slice();
    let Some(&p_label) = p.get(label) else {
        return Err(Error::LabelOutOfRange {
            label,
            n_classes: p.len(),
        });
    };
    Ok(match kind {
        NonconformityKind::InverseProbability => 1.0 - p_label,
        NonconformityKind::Margin => {
            let best_other = p
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != label)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            // With a single class there is no competitor.
            let best_other = if best_other.is_finite() { best_other } else { 0.0 };
            best_other - p_label
        }
    })
}

/// Significance level `ε`, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SignificanceLevel(f64);

impl SignificanceLevel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon < 1.0 {
            Ok(Self(epsilon))
        } else {
            Err(Error::invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `ε / 2`, used for the margin half of `IP_M`.
    pub fn halved(self) -> Self {
        Self(self.0 / 2.0)
    }

    /// The default grid: 0.01, 0.05, 0.10, 0.15, 0.20.
    pub fn default_grid() -> Vec<Self> {
        [0.01, 0.05, 0.1, 0.15, 0.2].into_iter().map(Self).collect()
    }
}

impl TryFrom<f64> for SignificanceLevel {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SignificanceLevel> for f64 {
    fn from(eps: SignificanceLevel) -> f64 {
        eps.0
    }
}

/// Sorted calibration nonconformity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    scores: Vec<f64>,
}

impl CalibrationTable {
    pub fn new(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyView("calibration"));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::invalid("calibration scores", "NaN score"));
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Non-smoothed p-value: `(#{s_j >= score} + 1) / (q + 1)`.
    pub fn p_value(&self, test_score: f64) -> f64 {
        let below = self.scores.partition_point(|&s| s < test_score);
        let at_least = self.scores.len() - below;
        (at_least + 1) as f64 / (self.scores.len() + 1) as f64
    }
}

/// Free-function form of [`CalibrationTable::p_value`].
pub fn p_value(table: &CalibrationTable, test_score: f64) -> f64 {
    table.p_value(test_score)
}

/// Labels predicted for one instance, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PredictionSet {
    labels: Vec<usize>,
}

impl PredictionSet {
    /// Builds a set from arbitrary labels; duplicates are dropped.
    pub fn from_labels(labels: impl IntoIterator<Item = usize>) -> Self {
        let mut labels: Vec<usize> = labels.into_iter().collect();
        labels.sort_unstable();
        labels.dedup();
        Self { labels }
    }

    /// Keeps every label whose p-value is strictly greater than `ε`.
    pub fn from_p_values(p_values: &[f64], eps: SignificanceLevel) -> Self {
        Self {
            labels: p_values
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > eps.value())
                .map(|(c, _)| c)
                .collect(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.labels.len() == 1
    }

    pub fn contains(&self, label: usize) -> bool {
        self.labels.binary_search(&label).is_ok()
    }

    pub fn is_subset(&self, other: &PredictionSet) -> bool {
        self.labels.iter().all(|&l| other.contains(l))
    }
}

impl<T: ProbabilisticClassifier + ?Sized> ProbabilisticClassifier for &T {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector> {
        (**self).predict_proba(x)
    }
}

impl<T: ProbabilisticClassifier + ?Sized> ProbabilisticClassifier for Arc<T> {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector> {
        (**self).predict_proba(x)
    }
}

/// A fitted model, a nonconformity function and its calibration table.
#[derive(Debug, Clone)]
pub struct ConformalPredictor<M> {
    model: M,
    ncf: NonconformityKind,
    table: CalibrationTable,
}

fn calibration_probs<M: ProbabilisticClassifier>(
    model: &M,
    calibration: DatasetView<'_>,
) -> Result<Vec<(ProbabilityVector, usize)>> {
    if calibration.is_empty() {
        return Err(Error::EmptyView("calibration"));
    }
    calibration
        .iter()
        .map(|(x, y)| Ok((model.predict_proba(x)?, y)))
        .collect()
}

fn table_from(ncf: NonconformityKind, probs: &[(ProbabilityVector, usize)]) -> Result<CalibrationTable> {
    let scores = probs
        .iter()
        .map(|(p, y)| score(ncf, p, *y))
        .collect::<Result<Vec<_>>>()?;
    CalibrationTable::new(scores)
}

/// Scores every calibration instance with `ncf` and stores the sorted scores.
///
/// The calibration instances must not overlap the model's training data.
pub fn calibrate<M: ProbabilisticClassifier>(
    model: M,
    ncf: NonconformityKind,
    calibration: DatasetView<'_>,
) -> Result<ConformalPredictor<M>> {
    let probs = calibration_probs(&model, calibration)?;
    let table = table_from(ncf, &probs)?;
    Ok(ConformalPredictor { model, ncf, table })
}

impl<M: ProbabilisticClassifier> ConformalPredictor<M> {
    /// Builds a predictor from an already computed table.
    pub fn from_table(model: M, ncf: NonconformityKind, table: CalibrationTable) -> Self {
        Self { model, ncf, table }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn ncf(&self) -> NonconformityKind {
        self.ncf
    }

    pub fn table(&self) -> &CalibrationTable {
        &self.table
    }

    /// p-value of every label given the model's probabilities for one instance.
    pub fn p_values_from_probs(&self, probs: &ProbabilityVector) -> Result<Vec<f64>> {
        (0..probs.n_classes())
            .map(|y| Ok(self.table.p_value(score(self.ncf, probs, y)?)))
            .collect()
    }

    pub fn p_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.p_values_from_probs(&self.model.predict_proba(x)?)
    }

    pub fn predict_set(&self, x: &[f64], eps: SignificanceLevel) -> Result<PredictionSet> {
        Ok(PredictionSet::from_p_values(&self.p_values(x)?, eps))
    }
}

/// Free-function form of [`ConformalPredictor::predict_set`].
pub fn predict_set<M: ProbabilisticClassifier>(
    cp: &ConformalPredictor<M>,
    x: &[f64],
    eps: SignificanceLevel,
) -> Result<PredictionSet> {
    cp.predict_set(x, eps)
}

/// Uses the margin set when it is a singleton and the inverse-probability
/// set is not; otherwise keeps the inverse-probability set.
///
/// `ip_set` is expected at `ε` and `m_set` at `ε / 2` for the same instance.
pub fn combine_ip_m(ip_set: PredictionSet, m_set: PredictionSet) -> PredictionSet {
    if m_set.is_singleton() && !ip_set.is_singleton() {
        m_set
    } else {
        ip_set
    }
}

/// Inverse-probability and margin predictors sharing one model and one
/// calibration split.
#[derive(Debug, Clone)]
pub struct IpMPredictor<M> {
    ip: ConformalPredictor<M>,
    margin: ConformalPredictor<M>,
}

impl<M: ProbabilisticClassifier + Clone> IpMPredictor<M> {
    pub fn calibrate(model: M, calibration: DatasetView<'_>) -> Result<Self> {
        let probs = calibration_probs(&model, calibration)?;
        let ip_table = table_from(NonconformityKind::InverseProbability, &probs)?;
        let m_table = table_from(NonconformityKind::Margin, &probs)?;
        Ok(Self {
            ip: ConformalPredictor::from_table(model.clone(), NonconformityKind::InverseProbability, ip_table),
            margin: ConformalPredictor::from_table(model, NonconformityKind::Margin, m_table),
        })
    }
}

impl<M: ProbabilisticClassifier> IpMPredictor<M> {
    pub fn inverse_probability(&self) -> &ConformalPredictor<M> {
        &self.ip
    }

    pub fn margin(&self) -> &ConformalPredictor<M> {
        &self.margin
    }

    pub fn predict_from_probs(&self, probs: &ProbabilityVector, eps: SignificanceLevel) -> Result<PredictionSet> {
        let ip_set = PredictionSet::from_p_values(&self.ip.p_values_from_probs(probs)?, eps);
        let m_set = PredictionSet::from_p_values(&self.margin.p_values_from_probs(probs)?, eps.halved());
        Ok(combine_ip_m(ip_set, m_set))
    }

    pub fn predict(&self, x: &[f64], eps: SignificanceLevel) -> Result<PredictionSet> {
        self.predict_from_probs(&self.ip.model().predict_proba(x)?, eps)
    }
}

/// One-shot `IP_M` prediction for a single instance.
pub fn predict_ip_m<M: ProbabilisticClassifier>(
    model: &M,
    calibration: DatasetView<'_>,
    x: &[f64],
    eps: SignificanceLevel,
) -> Result<PredictionSet> {
    IpMPredictor::calibrate(model, calibration)?.predict(x, eps)
}
