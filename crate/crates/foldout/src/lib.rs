//! Three-way dataset partitioning with analysis-naive holdouts.
//!
//! An extension of k-fold cross validation that splits a record set into
//! holdout, test, and train groups: the first shuffled fold is reserved as a
//! holdout that no model ever touches, the second is the test set, and the
//! remaining k-2 folds train a disposable baseline whose skill scores are
//! kept while the model itself is discarded. Every record is stamped with a
//! disposition and a SHA-256 hash key binding study, record, role, and seed,
//! so label tampering is detectable by any standard tooling.
//!
//! The crate also implements the usual tactics for configuring k — a 5x2cv
//! paired t-test between candidates, fixed k=10, and leave-one-out over the
//! non-holdout records — plus .632+ bootstrap balancing of fold skill
//! scores.
//!
//! ```
//! use foldout::partition::{build_plan, PlanRequest};
//! use foldout::evaluate::{evaluate_plan, StumpLearner};
//!
//! let mut dataset = foldout::synth::binary_dataset(100, 42, 0.0);
//! let (plan, counts) = build_plan(&mut dataset, &PlanRequest::kfold("demo", 42, 10)).unwrap();
//! assert_eq!((counts.holdout, counts.test, counts.train), (10, 10, 80));
//! let skill = evaluate_plan(&dataset, &plan, &StumpLearner, Some("pos"), true).unwrap();
//! assert_eq!(skill.mean_f1, 1.0); // separable demo data
//! ```
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability, or the `foldout` binary for the file-based workflow.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod kselect;
pub mod partition;
pub mod synth;

pub use error::{Error, Result};
