//! Efficiency and validity metrics over a batch of prediction sets.

use serde::{Deserialize, Serialize};

use crate::conformal::PredictionSet;
use crate::error::{Error, Result};

/// Prediction sets paired with the true labels of the same instances.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    sets: Vec<PredictionSet>,
    truths: Vec<usize>,
    n_classes: usize,
}

impl BatchOutcome {
    pub fn new(sets: Vec<PredictionSet>, truths: Vec<usize>, n_classes: usize) -> Result<Self> {
        if sets.len() != truths.len() {
            return Err(Error::LengthMismatch(sets.len(), truths.len()));
        }
        if sets.is_empty() {
            return Err(Error::EmptyView("batch"));
        }
        if let Some(&label) = truths
            .iter()
            .chain(sets.iter().flat_map(|s| s.labels()))
            .find(|&&l| l >= n_classes)
        {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        Ok(Self {
            sets,
            truths,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn sets(&self) -> &[PredictionSet] {
        &self.sets
    }

    pub fn truths(&self) -> &[usize] {
        &self.truths
    }

    fn pairs(&self) -> impl Iterator<Item = (&PredictionSet, usize)> {
        self.sets.iter().zip(self.truths.iter().copied())
    }
}

/// Fraction of singleton prediction sets.
pub fn one_c(batch: &BatchOutcome) -> f64 {
    batch.sets.iter().filter(|s| s.is_singleton()).count() as f64 / batch.len() as f64
}

/// Mean prediction-set size; empty sets count as zero.
pub fn avg_c(batch: &BatchOutcome) -> f64 {
    batch.sets.iter().map(PredictionSet::len).sum::<usize>() as f64 / batch.len() as f64
}

/// Fraction of instances whose true label is missing from its set.
pub fn empirical_error(batch: &BatchOutcome) -> f64 {
    batch.pairs().filter(|(s, y)| !s.contains(*y)).count() as f64 / batch.len() as f64
}

fn singleton_counts(batch: &BatchOutcome) -> (usize, usize) {
    batch
        .pairs()
        .filter(|(s, _)| s.is_singleton())
        .fold((0, 0), |(hit, all), (s, y)| (hit + usize::from(s.contains(y)), all + 1))
}

/// Fraction of singleton sets that hold the true label; `None` without singletons.
pub fn effective_one_c(batch: &BatchOutcome) -> Option<f64> {
    let (hit, all) = singleton_counts(batch);
    (all > 0).then(|| hit as f64 / all as f64)
}

/// Sample Pearson correlation; `None` on length mismatch, fewer than two
/// points or zero variance in either argument.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// All metrics of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub err: f64,
    pub one_c: f64,
    pub avg_c: f64,
    pub e_one_c: Option<f64>,
    pub n_singletons: usize,
}

impl MetricRecord {
    pub fn from_batch(batch: &BatchOutcome) -> Self {
        Self {
            err: empirical_error(batch),
            one_c: one_c(batch),
            avg_c: avg_c(batch),
            e_one_c: effective_one_c(batch),
            n_singletons: singleton_counts(batch).1,
        }
    }

    /// Singletons that contained the true label.
    pub fn correct_singletons(&self) -> usize {
        self.e_one_c.map_or(0, |e| (e * self.n_singletons as f64).round() as usize)
    }
}
