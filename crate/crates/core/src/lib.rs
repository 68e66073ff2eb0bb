//! Inductive conformal classification.
//!
//! The crate provides the pieces needed to build and benchmark inductive
//! conformal classifiers (ICP) on top of ordinary probabilistic models:
//!
//! * [`dataset`]: in-memory datasets, CSV ingestion, the four-cluster
//!   Gaussian generator and stratified repeated k-fold splitting with a
//!   proper-training / calibration holdout.
//! * [`classifiers`]: k-NN, Gaussian naive Bayes and a CART decision tree,
//!   all emitting class-probability vectors.
//! * [`conformal`]: hinge (inverse probability) and margin nonconformity
//!   scores, calibration tables, p-values, prediction sets and the `IP_M`
//!   combination of an inverse-probability predictor at `ε` with a margin
//!   predictor at `ε/2`.
//! * [`metrics`]: `oneC`, `avgC`, empirical error and effective `oneC`.
//! * [`evaluation`]: the experiment grid runner, paired t-test, comparison
//!   matrices, validity summaries and the results CSV format.
//!
//! ```
//! use confpred::classifiers::{fit, ClassifierSpec};
//! use confpred::conformal::{predict_ip_m, SignificanceLevel};
//! use confpred::dataset::generate_synthetic;
//!
//! let data = generate_synthetic(0.4, 200, 7).unwrap();
//! let idx: Vec<usize> = (0..data.len()).collect();
//! let (train, calib) = idx.split_at(600);
//! let model = fit(&ClassifierSpec::gnb(), data.view(train)).unwrap();
//! let eps = SignificanceLevel::new(0.1).unwrap();
//! let set = predict_ip_m(&model, data.view(calib), data.row(0), eps).unwrap();
//! assert!(set.len() <= 4);
//! ```

pub mod classifiers;
pub mod conformal;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod metrics;

pub use error::{Error, Result};
