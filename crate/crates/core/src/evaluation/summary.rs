//! Aggregations over fold results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BaselineRecord, FoldResult, NcfId};
use crate::error::{Error, Result};
use crate::metrics::pearson_correlation;

/// Dataset label of the grand-mean rows.
pub const MEAN_DATASET: &str = "MEAN";

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// First-appearance order of a key.
fn order_of<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut order: Vec<&str> = Vec::new();
    for item in items {
        if !order.contains(&item) {
            order.push(item);
        }
    }
    order
}

/// Fold-mean metrics of one `(dataset, classifier, ncf, ε)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeans {
    pub dataset: String,
    pub classifier: String,
    pub ncf: NcfId,
    pub epsilon: f64,
    pub n_folds: usize,
    pub err: f64,
    pub one_c: f64,
    pub avg_c: f64,
    /// Singleton-weighted E_oneC over folds; `None` without any singleton.
    pub e_one_c: Option<f64>,
}

/// Unweighted fold means per cell, in first-appearance order of dataset and
/// classifier, then by ncf and ε.
pub fn mean_metrics(results: &[FoldResult]) -> Vec<CellMeans> {
    let datasets = order_of(results.iter().map(|r| r.dataset.as_str()));
    let classifiers = order_of(results.iter().map(|r| r.classifier.as_str()));
    let mut groups: BTreeMap<(usize, usize, NcfId, u64), Vec<&FoldResult>> = BTreeMap::new();
    for r in results {
        let d = datasets.iter().position(|&x| x == r.dataset).unwrap_or_default();
        let c = classifiers.iter().position(|&x| x == r.classifier).unwrap_or_default();
        // Positive floats order the same as their bit patterns.
        groups.entry((d, c, r.ncf, r.epsilon.to_bits())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((d, c, ncf, eps), rows)| {
            let n = rows.len();
            let pick = |f: fn(&FoldResult) -> f64| mean(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            let singletons: usize = rows.iter().map(|r| r.metrics.n_singletons).sum();
            let correct: usize = rows.iter().map(|r| r.metrics.correct_singletons()).sum();
            CellMeans {
                dataset: datasets[d].to_string(),
                classifier: classifiers[c].to_string(),
                ncf,
                epsilon: f64::from_bits(eps),
                n_folds: n,
                err: pick(|r| r.metrics.err),
                one_c: pick(|r| r.metrics.one_c),
                avg_c: pick(|r| r.metrics.avg_c),
                e_one_c: (singletons > 0).then(|| correct as f64 / singletons as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityRow {
    pub dataset: String,
    pub ncf: NcfId,
    pub epsilon: f64,
    pub mean_err: f64,
}

/// Mean empirical error per dataset, ncf and ε, followed by the grand mean
/// over datasets under [`MEAN_DATASET`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValiditySummary {
    pub rows: Vec<ValidityRow>,
}

pub fn summarize_validity(results: &[FoldResult]) -> Result<ValiditySummary> {
    if results.is_empty() {
        return Err(Error::EmptyView("results"));
    }
    let datasets = order_of(results.iter().map(|r| r.dataset.as_str()));
    let mut per_dataset: BTreeMap<(usize, NcfId, u64), Vec<f64>> = BTreeMap::new();
    for r in results {
        let d = datasets.iter().position(|&x| x == r.dataset).unwrap_or_default();
        per_dataset.entry((d, r.ncf, r.epsilon.to_bits())).or_default().push(r.metrics.err);
    }
    let mut rows = Vec::new();
    let mut grand: BTreeMap<(NcfId, u64), Vec<f64>> = BTreeMap::new();
    for ((d, ncf, eps), errs) in per_dataset {
        let m = mean(&errs);
        grand.entry((ncf, eps)).or_default().push(m);
        rows.push(ValidityRow {
            dataset: datasets[d].to_string(),
            ncf,
            epsilon: f64::from_bits(eps),
            mean_err: m,
        });
    }
    for ((ncf, eps), means) in grand {
        rows.push(ValidityRow {
            dataset: MEAN_DATASET.to_string(),
            ncf,
            epsilon: f64::from_bits(eps),
            mean_err: mean(&means),
        });
    }
    Ok(ValiditySummary { rows })
}

impl ValiditySummary {
    pub fn get(&self, dataset: &str, ncf: NcfId, epsilon: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.ncf == ncf && r.epsilon == epsilon)
            .map(|r| r.mean_err)
    }

    /// Tables of errors rounded to two decimals, one block per dataset.
    pub fn to_markdown(&self) -> String {
        let datasets = order_of(self.rows.iter().map(|r| r.dataset.as_str()));
        let mut out = String::from("# Empirical error rates\n");
        for d in datasets {
            let _ = write!(out, "\n## {d}\n\n| ε | IP | IP_M | M |\n|---|---|---|---|\n");
            let mut eps: Vec<f64> = self.rows.iter().filter(|r| r.dataset == d).map(|r| r.epsilon).collect();
            eps.sort_by(f64::total_cmp);
            eps.dedup();
            for e in eps {
                let _ = write!(out, "| {e:.2} |");
                for ncf in NcfId::ALL {
                    match self.get(d, ncf, e) {
                        Some(v) => {
                            let _ = write!(out, " {v:.2} |");
                        }
                        None => out.push_str("  |"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Per-classifier E_oneC compared to its baseline accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOneCClassifier {
    pub classifier: String,
    /// Mean over ncf and ε of the singleton-weighted E_oneC.
    pub mean_e_one_c: f64,
    pub baseline_accuracy: Option<f64>,
}

/// E_oneC analysis of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOneCSummary {
    pub dataset: String,
    /// Mean of the per-classifier means.
    pub mean: f64,
    /// Standard deviation of the three per-ncf averages.
    pub mean_std: f64,
    /// Pearson correlation of classifier E_oneC with baseline accuracy.
    pub corr_b_acc: Option<f64>,
    pub classifiers: Vec<EffectiveOneCClassifier>,
}

/// Summarises E_oneC per dataset. Cells without any singleton are left out
/// of the averages.
pub fn summarize_effective_one_c(results: &[FoldResult], baselines: &[BaselineRecord]) -> Vec<EffectiveOneCSummary> {
    let cells = mean_metrics(results);
    let datasets = order_of(cells.iter().map(|c| c.dataset.as_str()));
    let mut out = Vec::new();
    for d in datasets {
        let in_dataset: Vec<&CellMeans> = cells.iter().filter(|c| c.dataset == d).collect();
        let classifiers = order_of(in_dataset.iter().map(|c| c.classifier.as_str()));
        let mut per_classifier = Vec::new();
        for clf in classifiers {
            let values: Vec<f64> = in_dataset
                .iter()
                .filter(|c| c.classifier == clf)
                .filter_map(|c| c.e_one_c)
                .collect();
            if values.is_empty() {
                continue;
            }
            let baseline_accuracy = baselines
                .iter()
                .find(|b| b.dataset == d && b.classifier == clf)
                .map(|b| 1.0 - b.b_err);
            per_classifier.push(EffectiveOneCClassifier {
                classifier: clf.to_string(),
                mean_e_one_c: mean(&values),
                baseline_accuracy,
            });
        }
        if per_classifier.is_empty() {
            continue;
        }
        let per_ncf: Vec<f64> = NcfId::ALL
            .iter()
            .filter_map(|&ncf| {
                let v: Vec<f64> = in_dataset.iter().filter(|c| c.ncf == ncf).filter_map(|c| c.e_one_c).collect();
                (!v.is_empty()).then(|| mean(&v))
            })
            .collect();
        let ncf_mean = mean(&per_ncf);
        let mean_std = if per_ncf.len() > 1 {
            (per_ncf.iter().map(|v| (v - ncf_mean).powi(2)).sum::<f64>() / (per_ncf.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        let paired: Vec<(f64, f64)> = per_classifier
            .iter()
            .filter_map(|c| c.baseline_accuracy.map(|acc| (c.mean_e_one_c, acc)))
            .collect();
        let (e, acc): (Vec<f64>, Vec<f64>) = paired.into_iter().unzip();
        out.push(EffectiveOneCSummary {
            dataset: d.to_string(),
            mean: mean(&per_classifier.iter().map(|c| c.mean_e_one_c).collect::<Vec<_>>()),
            mean_std,
            corr_b_acc: pearson_correlation(&e, &acc),
            classifiers: per_classifier,
        });
    }
    out
}
