use crate::dataset::DatasetView;
use crate::error::Result;

use super::{check_dim, ProbabilisticClassifier, ProbabilityVector};

/// Unweighted k-nearest-neighbour voting under Euclidean distance.
///
/// Equidistant neighbours are ranked by their position in the training view.
#[derive(Debug, Clone)]
pub struct KNearestNeighbors {
    k: usize,
    n_features: usize,
    n_classes: usize,
    points: Vec<f64>,
    labels: Vec<usize>,
}

impl KNearestNeighbors {
    pub(super) fn fit(k: usize, train: DatasetView<'_>) -> Self {
        let mut points = Vec::with_capacity(train.len() * train.n_features());
        let mut labels = Vec::with_capacity(train.len());
        for (row, label) in train.iter() {
            points.extend_from_slice(row);
            labels.push(label);
        }
        Self {
            k,
            n_features: train.n_features(),
            n_classes: train.n_classes(),
            points,
            labels,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl ProbabilisticClassifier for KNearestNeighbors {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector> {
        check_dim(self.n_features, x)?;
        let mut dists: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.n_features.max(1))
            .enumerate()
            .map(|(i, p)| {
                let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        if self.n_features == 0 {
            dists = (0..self.labels.len()).map(|i| (0.0, i)).collect();
        }
        let k = self.k.min(dists.len());
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, by_distance);
        }
        let mut counts = vec![0usize; self.n_classes];
        for &(_, i) in &dists[..k] {
            counts[self.labels[i]] += 1;
        }
        Ok(ProbabilityVector::from_counts(&counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{fit, ClassifierSpec, FittedClassifier};
    use crate::dataset::Dataset;

    #[test]
    fn five_neighbours_vote_by_fraction() {
        // Three 'a' points and two 'b' points nearest the origin, one far 'b'.
        let rows = vec![vec![0.1], vec![0.2], vec![-0.1], vec![0.3], vec![-0.3], vec![10.0]];
        let labels = vec![0, 0, 0, 1, 1, 1];
        let d = Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let idx: Vec<usize> = (0..6).collect();
        let model = fit(&ClassifierSpec::knn(), d.view(&idx)).unwrap();
        let p = model.predict_proba(&[0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.6, 0.4]);
    }

    #[test]
    fn distance_ties_prefer_lower_training_index() {
        // Four points at distance 1 from the origin; k = 1 picks the first.
        let rows = vec![vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]];
        let labels = vec![1, 0, 0, 1];
        let d = Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let idx: Vec<usize> = (0..4).collect();
        let mut spec = ClassifierSpec::knn();
        spec.k_neighbors = 1;
        let model = fit(&spec, d.view(&idx)).unwrap();
        assert_eq!(model.predict_proba(&[0.0]).unwrap().as_slice(), &[0.0, 1.0]);
        spec.k_neighbors = 2;
        let model = fit(&spec, d.view(&idx)).unwrap();
        assert_eq!(model.predict_proba(&[0.0]).unwrap().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn k_larger_than_training_set_uses_everything() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 1], vec!["a".into(), "b".into()])
            .unwrap();
        let model = fit(&ClassifierSpec::knn(), d.view(&[0, 1, 2])).unwrap();
        assert!(matches!(model, FittedClassifier::Knn(ref m) if m.k() == 5));
        let p = model.predict_proba(&[0.0]).unwrap();
        assert!((p.as_slice()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let d = Dataset::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1], vec!["a".into(), "b".into()])
            .unwrap();
        let model = fit(&ClassifierSpec::knn(), d.view(&[0, 1])).unwrap();
        assert!(model.predict_proba(&[0.0]).is_err());
    }
}
