//! Universal likelihood-based inference.
//!
//! Split and crossfit likelihood-ratio tests, universal confidence sets,
//! running-MLE sequential tests with anytime-valid p-values and confidence
//! sequences, sieve model selection, and a Monte Carlo harness that checks the
//! finite-sample guarantees.

pub mod cli;
pub mod data;
pub mod em;
pub mod error;
pub mod family;
pub mod harness;
pub mod numeric;
pub mod sequential;
pub mod sieve;
pub mod split;

pub use data::{DataSplit, Dataset};
pub use em::{em_fit_mixture, EmConfig, EmRun};
pub use error::{Error, Result};
pub use family::{sample_from, Constraint, Family, FamilyTag, MixtureParams, Params, ProfileTarget};
pub use sequential::{ConfSeqTracker, MartingaleState, PlugIn};
pub use sieve::{mixture_sieve, select_model, SieveResult};
pub use split::{
    crossfit_lrt, split_lrt, universal_lrt, universal_set_contains, Estimator, Interval, Mle, SplitScheme, TestOutcome,
};
