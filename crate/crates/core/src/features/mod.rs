//! Sparse-keypoint machinery on spherical images: lifting tangent-image
//! detections to the sphere, FOV overlap between posed panoramas, and the
//! putative-ratio / matching-score / precision metrics.

pub mod keypoints;
pub mod metrics;
pub mod overlap;

pub use keypoints::{keypoints_to_sphere, Keypoint, KeypointRecord, KeypointSource};
pub use metrics::{matching_metrics, MatchStats, MatchingMetrics};
pub use overlap::{covisible_count, fov_overlap, OcclusionTolerance, Pose, PosedSphericalImage};
