//! Significance and threshold tests used to compare nonconformity functions.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance level of the paired t-test.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Minimum relative difference counted as a threshold difference.
pub const DEFAULT_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Two-tailed paired Student's t-test on `xs - ys`.
///
/// If every difference is identical the variance vanishes: all-zero
/// differences are not significant (`t = 0`, `p = 1`), any other constant
/// difference is significant with `t = ±∞` and `p = 0`.
pub fn paired_t_test(xs: &[f64], ys: &[f64], alpha: f64) -> Result<TTest> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("paired t-test", "needs at least two pairs"));
    }
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let constant = diffs.iter().all(|&d| d == diffs[0]);
    if constant || var == 0.0 {
        return Ok(if diffs[0] == 0.0 && constant {
            TTest {
                t: 0.0,
                p_value: 1.0,
                significant: false,
            }
        } else {
            TTest {
                t: f64::INFINITY.copysign(mean),
                p_value: 0.0,
                significant: true,
            }
        });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::invalid("paired t-test", e.to_string()))?;
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest {
        t,
        p_value,
        significant: p_value < alpha,
    })
}

/// Efficiency metric compared across nonconformity functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Fraction of singletons; higher is better.
    OneC,
    /// Mean set size; lower is better.
    AvgC,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::OneC => "oneC",
            Metric::AvgC => "avgC",
        }
    }

    /// Value representing 100% of the metric's range.
    pub fn full_scale(self, n_classes: usize) -> f64 {
        match self {
            Metric::OneC => 1.0,
            Metric::AvgC => n_classes as f64,
        }
    }

    /// Positive when `a` is better than `b`.
    pub fn improvement(self, a: f64, b: f64) -> f64 {
        match self {
            Metric::OneC => a - b,
            Metric::AvgC => b - a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Better,
    Worse,
    Neither,
}

/// Compares two means against a 2% threshold of the metric's full scale.
pub fn threshold_compare(mean_a: f64, mean_b: f64, metric: Metric, n_classes: usize) -> Verdict {
    threshold_compare_with(mean_a, mean_b, metric, n_classes, DEFAULT_THRESHOLD)
}

pub fn threshold_compare_with(
    mean_a: f64,
    mean_b: f64,
    metric: Metric,
    n_classes: usize,
    threshold: f64,
) -> Verdict {
    let margin = threshold * metric.full_scale(n_classes);
    let gain = metric.improvement(mean_a, mean_b);
    if gain > margin {
        Verdict::Better
    } else if -gain > margin {
        Verdict::Worse
    } else {
        Verdict::Neither
    }
}
