//! Inter-rater reliability analytics for skin-type labels.
//!
//! Labels are projected onto 1..6 for correlation; not-applicable labels are
//! dropped pairwise. Correlations between methods are compared with Fisher's
//! z transformation, and crowd-size effects are estimated by resampling
//! annotation pools.

pub mod agreement;
pub mod bootstrap;
pub mod correlation;
pub mod fisher;
pub mod irr;

pub use agreement::{confusion_matrix, exact_agreement, within_k_agreement, ConfusionMatrix};
pub use bootstrap::{bootstrap_crowd_curve, CrowdCurveConfig, CrowdCurvePoint, Sampling};
pub use correlation::{pearson, pearson_f64, LabelVectorPair};
pub use fisher::{fisher_z_compare, min_pairwise_pvalue, normal_two_sided_p, FisherComparison};
pub use irr::{IrrReport, MinPValue};

pub type ImageId = String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("correlation {0} is not strictly inside (-1, 1)")]
    InvalidRho(f64),
    #[error("sample size {0} too small (need at least 4)")]
    SampleTooSmall(usize),
    #[error("no label pairs")]
    EmptyInput,
    #[error("image {0} is labeled by one method but not the other")]
    MissingLabel(ImageId),
    #[error("no pairs where both labels are applicable")]
    NoApplicablePairs,
    #[error("image {image} has {have} annotations, need {need}")]
    PoolTooSmall {
        image: ImageId,
        have: usize,
        need: usize,
    },
}
