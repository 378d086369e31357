//! Synthetic two-candidate elections with controllable, labeled fraud,
//! and a detector that flags anomalous electoral regions by comparing
//! actual results against regression- and poll-based predictions with
//! per-cluster one-class SVMs.
//!
//! The simulation side (`popgen`, `votecast`, `polling`, `fraud`) builds
//! individual-level elections with known ground truth. The detection side
//! (`regression`, `kmeans`, `ocsvm`, `detector`, `baseline`) sees only
//! demographics, the poll, and post-fraud results; labels are consumed
//! solely by `metrics::evaluate`.

pub mod baseline;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod fraud;
pub mod io;
pub mod kmeans;
pub mod metrics;
pub mod ocsvm;
pub mod polling;
pub mod popgen;
pub mod regression;
pub mod rng;
pub mod schema;
pub mod votecast;

pub use error::{Error, Result};
pub use schema::{AttributeSchema, SimConfig};
pub use votecast::Candidate;
