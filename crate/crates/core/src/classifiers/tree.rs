use crate::dataset::DatasetView;
use crate::error::Result;

use super::{check_dim, ClassifierSpec, ProbabilisticClassifier, ProbabilityVector};

/// `max(floor, ceil(fraction * n_train))`.
pub fn effective_min_samples_split(spec: &ClassifierSpec, n_train: usize) -> usize {
    let scaled = (spec.min_samples_split_fraction * n_train as f64).ceil() as usize;
    spec.min_samples_split_floor.max(scaled)
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(ProbabilityVector),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree grown with Gini impurity.
///
/// A node is split when it holds at least `min_samples_split` instances and
/// is impure. Candidate thresholds are midpoints between consecutive distinct
/// values; among equal impurities the lower feature index and then the lower
/// threshold wins. Leaves predict their class frequencies.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
    min_samples_split: usize,
}

struct Builder<'a> {
    train: DatasetView<'a>,
    n_classes: usize,
    min_samples_split: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &r in rows {
            counts[self.train.label(r)] += 1;
        }
        counts
    }

    // Sum over children of n_child * gini(child), kept unnormalised.
    fn weighted_gini(counts: &[usize], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        n as f64 - sq / n as f64
    }

    fn best_split(&self, rows: &[usize], counts: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for feature in 0..self.train.n_features() {
            sorted.sort_by(|&a, &b| {
                self.train.row(a)[feature]
                    .total_cmp(&self.train.row(b)[feature])
                    .then(a.cmp(&b))
            });
            let mut left = vec![0usize; self.n_classes];
            for pos in 0..n - 1 {
                let r = sorted[pos];
                left[self.train.label(r)] += 1;
                let lo = self.train.row(r)[feature];
                let hi = self.train.row(sorted[pos + 1])[feature];
                if lo == hi {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
                let impurity =
                    Self::weighted_gini(&left, pos + 1) + Self::weighted_gini(&right, n - pos - 1);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    // Guard against the midpoint rounding up onto `hi`.
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>) -> usize {
        let counts = self.class_counts(&rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(ProbabilityVector::from_counts(&counts)));
        if pure || rows.len() < self.min_samples_split {
            return id;
        }
        let Some(split) = self.best_split(&rows, &counts) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.train.row(r)[split.feature] <= split.threshold);
        let left = self.grow(left_rows);
        let right = self.grow(right_rows);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub(super) fn fit(min_samples_split: usize, train: DatasetView<'_>) -> Self {
        let mut builder = Builder {
            train,
            n_classes: train.n_classes(),
            min_samples_split: min_samples_split.max(2),
            nodes: Vec::new(),
        };
        builder.grow((0..train.len()).collect());
        Self {
            nodes: builder.nodes,
            n_features: train.n_features(),
            n_classes: train.n_classes(),
            min_samples_split,
        }
    }

    pub fn min_samples_split(&self) -> usize {
        self.min_samples_split
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn leaf_for(&self, x: &[f64]) -> &ProbabilityVector {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

impl ProbabilisticClassifier for DecisionTree {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityVector> {
        check_dim(self.n_features, x)?;
        Ok(self.leaf_for(x).clone())
    }
}
