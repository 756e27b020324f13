//! Early-round exit prediction for private companies.
//!
//! The crate turns company records (sector, foundation year, the first three
//! investment rounds) into a 19-column feature matrix and trains three binary
//! classifiers on it: a ridge-stabilized logistic regression, a Gini random
//! forest and an RBF support vector machine fitted by SMO with sigmoid
//! calibration. Their thresholded labels are fused by majority or unanimity
//! vote, and [`fusion::voting_dynamics`] reports how often the components
//! agree and who is right when one of them dissents.
//!
//! Everything here is `no_std` + `alloc`. File formats, the command line and
//! the thread-pool [`exec::Executor`] live in the `pexit` crate.
//!
//! All randomized steps take an explicit seed and draw from independent
//! ChaCha streams derived from it (see [`rng`]), so results do not depend on
//! how work is scheduled.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cv;
pub mod domain;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod forest;
pub mod fusion;
pub mod linalg;
pub mod logreg;
pub mod math;
pub mod matrix;
pub mod pca;
pub mod rng;
pub mod sampling;
pub mod summary;
pub mod svm;
pub mod synth;

pub use domain::{BinaryLabel, CompanyRecord, ExitStatus, LabelMapping, RoundRecord};
pub use error::{Error, Result};
pub use features::{FeatureVector, InvestorIndex, N_FEATURES};
pub use matrix::Matrix;
