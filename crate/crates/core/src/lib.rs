//! Directional statistics and geodesic editing for text-encoder embeddings.
//!
//! Token states are treated as points on the unit hypersphere. The crate fits
//! vMF, mixture-of-vMF and Kent distributions to concept pools, derives
//! anchors from them, and edits embedding sequences by moving directions
//! along geodesics while keeping each row's norm.

pub mod anchors;
pub mod edit;
pub mod io;
pub mod linalg;
pub mod probes;
pub mod sphere;
pub mod stats;

pub use anchors::{
    attribute_direction, build_pool, estimate_anchor, AnchorError, AttributeDirection, AttributePair, ConceptAnchor,
    PromptPool, TokenRole,
};
pub use edit::{
    contamination_weights, decompose_subject, edit_attribute_sequence, edit_subject_sequence, edit_subject_token,
    injection_schedule, AnchorPair, EditError, EditPlan, EditResult, SubjectAnchors, SubjectDecomposition,
};
pub use io::{EmbeddingSequence, IoError, ModelArtifact, ModelDocument, SequenceMeta};
pub use probes::{ContaminationReport, NnReport, ProbeError, ThinnessReport};
pub use sphere::{
    exp_map, geodesic_distance, log_map, normalize, slerp, tangent_project, Direction, SphereError, TangentVector,
};
pub use stats::{
    fit_kent, fit_movmf, fit_vmf, sample_kent, sample_vmf, select_model, FitReport, KentModel, ModelTag, MovmfModel,
    StatsError, VmfModel,
};
