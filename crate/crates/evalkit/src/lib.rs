//! Evaluation toolkit: metrics, late fusion of intent features into
//! downstream tasks, token attribution heatmaps and the consistency tables
//! relating belief, desire and plan labels to each other and to engagement.

pub mod attribution;
pub mod consistency;
pub mod error;
pub mod features;
pub mod fusion;
pub mod stats;
pub mod synthetic;

pub use nint_core::metrics::{
    argmax, classification_metrics, regression_metrics, ClassScores, ClassificationReport, MetricError,
    RegressionReport,
};

pub use attribution::{attribute, render_heatmap_html, validate_heatmap, HeatmapDoc, TokenAttribution};
pub use consistency::{consistency_tables, ConsistencyOptions, ConsistencyTables};
pub use error::EvalError;
pub use features::{intent_features, FeatureSet, IntentSource};
pub use fusion::{fuse_and_train, FusionOutcome, FusionSpec, Targets, TaskReport};
pub use stats::{standard_error, zscore};
