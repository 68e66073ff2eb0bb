//! Datasets, CSV ingestion, the Gaussian-cluster generator and
//! cross-validation splitting.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centers of the four synthetic clusters, one per class.
pub const SYNTHETIC_CENTERS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

/// A dense, labelled feature matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows of equal length.
    ///
    /// Feature names default to `x1, x2, ...`.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let feature_names = (1..=n_features).map(|j| format!("x{j}")).collect();
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for row in &rows {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_parts(features, n_features, labels, class_names, feature_names)
    }

    fn from_parts(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if class_names.len() < 2 {
            return Err(Error::TooFewClasses(class_names.len()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::LengthMismatch(features.len(), labels.len() * n_features));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                n_classes: class_names.len(),
            });
        }
        Ok(Self {
            features,
            n_features,
            labels,
            class_names,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of instances of each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// A borrowed subset of rows, in the order given by `indices`.
    pub fn view<'a>(&'a self, indices: &'a [usize]) -> DatasetView<'a> {
        DatasetView { data: self, indices }
    }

    /// Writes the dataset as CSV with the feature columns followed by `label`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        writer.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            record.push(self.class_names[self.labels[i]].clone());
            writer.write_record(&record).map_err(csv_err)?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// A subset of a [`Dataset`] addressed through an index list.
#[derive(Debug, Clone, Copy)]
pub struct DatasetView<'a> {
    data: &'a Dataset,
    indices: &'a [usize],
}

impl<'a> DatasetView<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn row(&self, j: usize) -> &'a [f64] {
        self.data.row(self.indices[j])
    }

    pub fn label(&self, j: usize) -> usize {
        self.data.label(self.indices[j])
    }

    pub fn n_classes(&self) -> usize {
        self.data.n_classes()
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    pub fn indices(&self) -> &'a [usize] {
        self.indices
    }

    /// Iterates over `(features, label)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&'a [f64], usize)> + 'a {
        let data = self.data;
        self.indices.iter().map(move |&i| (data.row(i), data.label(i)))
    }
}

/// Loads a headed CSV file. Every column except `label_column` must be numeric.
///
/// Class indices follow the order in which labels first appear in the file.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let csv_err = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(csv_err)?.clone();
    let label_pos = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_pos)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // Row numbers are 1-based and count the header.
        let row_no = r + 2;
        for (j, cell) in record.iter().enumerate() {
            if j == label_pos {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                row: row_no,
                column: header.get(j).unwrap_or("?").to_string(),
                value: cell.to_string(),
            })?;
            features.push(value);
        }
        let name = record.get(label_pos).unwrap_or_default().to_string();
        let next = class_names.len();
        let idx = *class_index.entry(name.clone()).or_insert_with(|| {
            class_names.push(name);
            next
        });
        labels.push(idx);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if class_names.len() < 2 {
        return Err(Error::TooFewClasses(class_names.len()));
    }
    Dataset::from_parts(features, feature_names.len(), labels, class_names, feature_names)
}

/// Four isotropic 2D Gaussian clusters centred on the unit axes.
///
/// Rows are emitted class by class, `n_per_class` rows each, so the class
/// names `0..=3` also come out in first-appearance order.
pub fn generate_synthetic(sigma: f64, n_per_class: usize, seed: u64) -> Result<Dataset> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid("sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = SYNTHETIC_CENTERS.len() * n_per_class;
    let mut features = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in SYNTHETIC_CENTERS.iter().enumerate() {
        for _ in 0..n_per_class {
            features.push(center[0] + noise.sample(&mut rng));
            features.push(center[1] + noise.sample(&mut rng));
            labels.push(class);
        }
    }
    let class_names = (0..SYNTHETIC_CENTERS.len()).map(|c| c.to_string()).collect();
    Dataset::from_parts(
        features,
        2,
        labels,
        class_names,
        vec!["x1".to_string(), "x2".to_string()],
    )
}

/// Repeated stratified k-fold plan with a calibration holdout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub repeats: usize,
    pub folds: usize,
    pub calibration_fraction: f64,
    pub seed: u64,
}

impl Default for SplitPlan {
    /// 10x10-fold cross-validation with a 4:1 proper/calibration split.
    fn default() -> Self {
        Self {
            repeats: 10,
            folds: 10,
            calibration_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn new(repeats: usize, folds: usize, calibration_fraction: f64, seed: u64) -> Result<Self> {
        let plan = Self {
            repeats,
            folds,
            calibration_fraction,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::invalid("repeats", "must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds", format!("must be at least 2, got {}", self.folds)));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return Err(Error::invalid(
                "calibration_fraction",
                format!("must lie in (0, 1), got {}", self.calibration_fraction),
            ));
        }
        Ok(())
    }
}

/// One train/calibrate/test partition. All index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub repeat: usize,
    pub fold: usize,
    pub proper_train_idx: Vec<usize>,
    pub calibration_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl FoldSplit {
    /// Proper training and calibration instances together, sorted.
    pub fn training_idx(&self) -> Vec<usize> {
        let mut all = self.proper_train_idx.clone();
        all.extend_from_slice(&self.calibration_idx);
        all.sort_unstable();
        all
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for a `(seed, repeat, fold)` triple.
pub fn derive_seed(seed: u64, repeat: u64, fold: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ repeat) ^ fold)
}

// Fold-assignment streams use this in place of a fold index.
const ASSIGNMENT_STREAM: u64 = u64::MAX;

/// Stratified repeated k-fold splits with a stratified calibration holdout
/// taken from each training portion.
pub fn make_splits(dataset: &Dataset, plan: &SplitPlan) -> Result<Vec<FoldSplit>> {
    plan.validate()?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes()];
    for (i, &l) in dataset.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < plan.folds {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                folds: plan.folds,
            });
        }
    }

    let mut splits = Vec::with_capacity(plan.repeats * plan.folds);
    for repeat in 0..plan.repeats {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, repeat as u64, ASSIGNMENT_STREAM));
        // Deal every class round-robin into folds, continuing the rotation
        // across classes so fold sizes differ by at most one.
        let mut assignment = vec![0usize; dataset.len()];
        let mut next = 0usize;
        for members in &by_class {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                assignment[i] = next % plan.folds;
                next += 1;
            }
        }
        for fold in 0..plan.folds {
            let mut fold_rng =
                ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, repeat as u64, fold as u64));
            let test_idx: Vec<usize> = (0..dataset.len()).filter(|&i| assignment[i] == fold).collect();
            let train_by_class: Vec<Vec<usize>> = by_class
                .iter()
                .map(|m| m.iter().copied().filter(|&i| assignment[i] != fold).collect())
                .collect();
            let n_train: usize = train_by_class.iter().map(Vec::len).sum();
            let quotas = calibration_quotas(&train_by_class, n_train, plan.calibration_fraction);
            let mut calibration_idx = Vec::new();
            let mut proper_train_idx = Vec::new();
            for (members, quota) in train_by_class.into_iter().zip(quotas) {
                let mut shuffled = members;
                shuffled.shuffle(&mut fold_rng);
                calibration_idx.extend_from_slice(&shuffled[..quota]);
                proper_train_idx.extend_from_slice(&shuffled[quota..]);
            }
            calibration_idx.sort_unstable();
            proper_train_idx.sort_unstable();
            splits.push(FoldSplit {
                repeat,
                fold,
                proper_train_idx,
                calibration_idx,
                test_idx,
            });
        }
    }
    Ok(splits)
}

/// Per-class calibration counts by largest remainder, so the total is the
/// rounded overall target and each class is within one of its exact share.
fn calibration_quotas(train_by_class: &[Vec<usize>], n_train: usize, fraction: f64) -> Vec<usize> {
    let mut total = (fraction * n_train as f64).round() as usize;
    if n_train >= 2 {
        total = total.clamp(1, n_train - 1);
    }
    let exact: Vec<f64> = train_by_class.iter().map(|m| fraction * m.len() as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(assigned);
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quotas[c] < train_by_class[c].len() {
            quotas[c] += 1;
            remaining -= 1;
        }
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_maps_labels_by_first_appearance() {
        let f = write_tmp("x,y,cls\n1,2,a\n3,4,b\n5,6,a\n");
        let d = load_csv(f.path(), "cls").unwrap();
        assert_eq!(d.n_classes(), 2);
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.class_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn load_csv_label_column_anywhere() {
        let f = write_tmp("cls,x\nz,1.5\ny,2.5\n");
        let d = load_csv(f.path(), "cls").unwrap();
        assert_eq!(d.feature_names(), &["x".to_string()]);
        assert_eq!(d.class_names(), &["z".to_string(), "y".to_string()]);
    }

    #[test]
    fn load_csv_single_class_is_an_error() {
        let f = write_tmp("x,cls\n1,a\n2,a\n");
        let err = load_csv(f.path(), "cls").unwrap_err();
        assert!(err.to_string().contains("fewer than 2 classes"), "{err}");
    }

    #[test]
    fn load_csv_header_only_is_empty() {
        let f = write_tmp("x,cls\n");
        let err = load_csv(f.path(), "cls").unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn load_csv_reports_bad_cell_location() {
        let f = write_tmp("x,y,cls\n1,2,a\n3,oops,b\n");
        match load_csv(f.path(), "cls").unwrap_err() {
            Error::NonNumeric { row, column, value, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_csv_missing_file_and_column() {
        assert!(matches!(
            load_csv(Path::new("/nonexistent/file.csv"), "cls"),
            Err(Error::Io { .. })
        ));
        let f = write_tmp("x,cls\n1,a\n2,b\n");
        assert!(matches!(load_csv(f.path(), "label"), Err(Error::MissingLabelColumn(_))));
    }

    #[test]
    fn synthetic_shape() {
        let d = generate_synthetic(0.2, 2000, 3).unwrap();
        assert_eq!(d.len(), 8000);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.n_classes(), 4);
        assert_eq!(d.class_counts(), vec![2000; 4]);
    }

    #[test]
    fn synthetic_single_instance_near_center() {
        let sigma = 0.4;
        let d = generate_synthetic(sigma, 1, 11).unwrap();
        assert_eq!(d.len(), 4);
        for i in 0..4 {
            let c = SYNTHETIC_CENTERS[d.label(i)];
            let r = d.row(i);
            let dist = ((r[0] - c[0]).powi(2) + (r[1] - c[1]).powi(2)).sqrt();
            assert!(dist < 6.0 * sigma, "instance {i} at distance {dist}");
        }
    }

    #[test]
    fn synthetic_moments() {
        let sigma = 0.6;
        let d = generate_synthetic(sigma, 4000, 5).unwrap();
        for (class, center) in SYNTHETIC_CENTERS.iter().enumerate() {
            let rows: Vec<&[f64]> = (0..d.len()).filter(|&i| d.label(i) == class).map(|i| d.row(i)).collect();
            let n = rows.len() as f64;
            for j in 0..2 {
                let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                assert!((mean - center[j]).abs() < 0.05, "mean {mean}");
                assert!((var.sqrt() / sigma - 1.0).abs() < 0.05, "sd {}", var.sqrt());
            }
        }
    }

    #[test]
    fn synthetic_rejects_bad_sigma() {
        assert!(generate_synthetic(0.0, 10, 1).is_err());
        assert!(generate_synthetic(-1.0, 10, 1).is_err());
        assert!(generate_synthetic(f64::NAN, 10, 1).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(generate_synthetic(0.8, 50, 9).unwrap(), generate_synthetic(0.8, 50, 9).unwrap());
        assert_ne!(generate_synthetic(0.8, 50, 9).unwrap(), generate_synthetic(0.8, 50, 10).unwrap());
    }

    #[test]
    fn write_then_load_round_trips() {
        let d = generate_synthetic(0.6, 25, 42).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_csv(f.path(), "label").unwrap();
        assert_eq!(back, d);
    }

    fn balanced(n: usize, classes: usize) -> Dataset {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| i % classes).collect();
        let names = (0..classes).map(|c| format!("c{c}")).collect();
        Dataset::new(rows, labels, names).unwrap()
    }

    #[test]
    fn splits_follow_four_to_one_arithmetic() {
        let d = balanced(100, 2);
        let plan = SplitPlan::new(1, 10, 0.2, 7).unwrap();
        let splits = make_splits(&d, &plan).unwrap();
        assert_eq!(splits.len(), 10);
        for s in &splits {
            assert_eq!(s.test_idx.len(), 10);
            assert_eq!(s.calibration_idx.len(), 18);
            assert_eq!(s.proper_train_idx.len(), 72);
        }
    }

    #[test]
    fn splits_are_deterministic() {
        let d = balanced(60, 3);
        let plan = SplitPlan::new(2, 5, 0.2, 99).unwrap();
        assert_eq!(make_splits(&d, &plan).unwrap(), make_splits(&d, &plan).unwrap());
        let other = SplitPlan { seed: 100, ..plan };
        assert_ne!(make_splits(&d, &plan).unwrap(), make_splits(&d, &other).unwrap());
    }

    #[test]
    fn full_scale_split_sizes() {
        let d = generate_synthetic(0.6, 2000, 1).unwrap();
        let splits = make_splits(&d, &SplitPlan::default()).unwrap();
        assert_eq!(splits.len(), 100);
        for s in &splits {
            assert_eq!(s.test_idx.len(), 800);
            assert_eq!(s.calibration_idx.len(), 1440);
            assert_eq!(s.proper_train_idx.len(), 5760);
        }
    }

    #[test]
    fn class_smaller_than_folds_is_an_error() {
        let rows = (0..12).map(|i| vec![i as f64]).collect();
        let mut labels = vec![0; 12];
        labels[0] = 1;
        labels[1] = 1;
        let d = Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let plan = SplitPlan::new(1, 3, 0.2, 0).unwrap();
        assert!(matches!(make_splits(&d, &plan), Err(Error::ClassTooSmall { class: 1, count: 2, folds: 3 })));
    }

    #[test]
    fn plan_validation() {
        assert!(SplitPlan::new(1, 1, 0.2, 0).is_err());
        assert!(SplitPlan::new(0, 5, 0.2, 0).is_err());
        assert!(SplitPlan::new(1, 5, 0.0, 0).is_err());
        assert!(SplitPlan::new(1, 5, 1.0, 0).is_err());
    }

    #[test]
    fn dataset_rejects_ragged_rows_and_bad_labels() {
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![2], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![0], vec!["a".into()]).is_err());
    }
}
