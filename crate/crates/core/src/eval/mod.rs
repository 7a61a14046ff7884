//! Rank-based and threshold metrics, PCA projection for plotting, and the
//! parameter-sweep harness.

mod metrics;
mod pca;
mod sweep;

pub use metrics::{auc, classification_metrics, evaluate, Confusion, EvalReport};
pub use pca::{pca_project, Pca};
pub use sweep::{parameter_sweep, SeedPolicy, SweepCell, SweepGrid, SweepPoint, SweepResult};
