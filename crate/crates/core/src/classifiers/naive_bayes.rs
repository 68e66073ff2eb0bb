use std::f64::consts::PI;

use crate::dataset::DatasetView;
use crate::error::Result;

use super::{check_dim, ProbabilisticClassifier, ProbabilityVector};

/// Gaussian naive Bayes with class priors taken from training frequencies.
///
/// Every per-class variance is inflated by `smoothing * max_j var(x_j)`,
/// the largest per-feature variance of the whole training set, so constant
/// features never yield a zero variance.
#[derive(Debug, Clone)]
pub struct GaussianNaiveBayes {
    n_features: usize,
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    epsilon: f64,
}

impl GaussianNaiveBayes {
    pub(super) fn fit(smoothing: f64, train: DatasetView<'_>) -> Self {
        let n_classes = train.n_classes();
        let n_features = train.n_features();
        let n = train.len() as f64;

        let mut overall_mean = vec![0.0; n_features];
        for (row, _) in train.iter() {
            for (m, v) in overall_mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        overall_mean.iter_mut().for_each(|m| *m /= n);
        let mut overall_var = vec![0.0; n_features];
        for (row, _) in train.iter() {
            for ((s, v), m) in overall_var.iter_mut().zip(row).zip(&overall_mean) {
                *s += (v - m) * (v - m);
            }
        }
        let max_var = overall_var.iter().map(|s| s / n).fold(0.0, f64::max);
        let epsilon = if max_var > 0.0 { smoothing * max_var } else { smoothing };

        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![0.0; n_features]; n_classes];
        for (row, label) in train.iter() {
            counts[label] += 1;
            for (m, v) in means[label].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            if c > 0 {
                m.iter_mut().for_each(|x| *x /= c as f64);
            }
        }
        let mut variances = vec![vec![0.0; n_features]; n_classes];
        for (row, label) in train.iter() {
            for ((s, v), m) in variances[label].iter_mut().zip(row).zip(&means[label]) {
                *s += (v - m) * (v - m);
            }
        }
        for (var, &c) in variances.iter_mut().zip(&counts) {
            for s in var.iter_mut() {
                *s = if c > 0 { *s / c as f64 } else { 0.0 } + epsilon;
            }
        }
        let log_priors = counts
            .iter()
            .map(|&c| if c > 0 { (c as f64 / n).ln() } else { f64::NEG_INFINITY })
            .collect();
        Self {
            n_features,
            log_priors,
            means,
            variances,
            epsilon,
        }
    }

    /// Additive variance smoothing actually applied.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl ProbabilisticClassifier for GaussianNaiveBayes {
    fn n_classes(&self) -> usize {
        self.log_priors.len()
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector> {
        check_dim(self.n_features, x)?;
        let joint: Vec<f64> = self
            .log_priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(&lp, (mean, var))| {
                if lp == f64::NEG_INFINITY {
                    return lp;
                }
                lp + x
                    .iter()
                    .zip(mean.iter().zip(var))
                    .map(|(xi, (m, v))| -0.5 * (2.0 * PI * v).ln() - (xi - m) * (xi - m) / (2.0 * v))
                    .sum::<f64>()
            })
            .collect();
        let max = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = joint.iter().map(|j| (j - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(ProbabilityVector(weights.iter().map(|w| w / total).collect()))
    }
}

#[cfg(test)]
mod tests {
    use crate::classifiers::{fit, ClassifierSpec, FittedClassifier, ProbabilisticClassifier};
    use crate::dataset::Dataset;

    fn four_points() -> Dataset {
        // Second feature is constant everywhere.
        Dataset::new(
            vec![vec![0.0, 5.0], vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]],
            vec![0, 0, 1, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn constant_feature_is_smoothed_and_posterior_finite() {
        let d = four_points();
        let model = fit(&ClassifierSpec::gnb(), d.view(&[0, 1, 2, 3])).unwrap();
        // Overall variance of the first feature is 5, so epsilon = 5e-9.
        match &model {
            FittedClassifier::Gnb(m) => assert!((m.epsilon() - 5e-9).abs() < 1e-24),
            _ => unreachable!(),
        }
        // Per-class variance of feature 0 is 1 (+eps); class means 1 and 5.
        // At x = (1, 5) the log-odds are 16 / (2 (1 + eps)), just under 8.
        let log_odds: f64 = 8.0 / (1.0 + 5e-9);
        let p = model.predict_proba(&[1.0, 5.0]).unwrap();
        assert!((p.as_slice()[0] - 1.0 / (1.0 + (-log_odds).exp())).abs() < 1e-12, "{p:?}");
        assert!((p.as_slice()[0] - 0.999_664_649_869_533_6).abs() < 1e-10);
        // Off the constant value both classes are penalised identically.
        let p = model.predict_proba(&[3.0, 5.001]).unwrap();
        assert!(p.as_slice().iter().all(|v| v.is_finite()));
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_classes_split_evenly_at_midpoint() {
        let d = Dataset::new(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let model = fit(&ClassifierSpec::gnb(), d.view(&[0, 1, 2, 3])).unwrap();
        let p = model.predict_proba(&[0.0]).unwrap();
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((p.as_slice()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn absent_class_gets_zero_probability() {
        let d = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![5.0]],
            vec![0, 0, 1],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let model = fit(&ClassifierSpec::gnb(), d.view(&[0, 1, 2])).unwrap();
        assert_eq!(model.n_classes(), 3);
        let p = model.predict_proba(&[0.5]).unwrap();
        assert_eq!(p.as_slice()[2], 0.0);
    }

    #[test]
    fn all_features_constant() {
        let d = Dataset::new(vec![vec![1.0], vec![1.0], vec![1.0]], vec![0, 1, 1], vec!["a".into(), "b".into()])
            .unwrap();
        let model = fit(&ClassifierSpec::gnb(), d.view(&[0, 1, 2])).unwrap();
        let p = model.predict_proba(&[1.0]).unwrap();
        assert!((p.as_slice()[0] - 1.0 / 3.0).abs() < 1e-12);
    }
}
