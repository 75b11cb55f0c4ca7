//! Dynamic anchor learning for arbitrary-oriented object detection.
//!
//! The crate provides the pieces of the label-assignment loop around a
//! detector rather than the detector itself:
//!
//! - [`geometry`]: exact rotated IoU by convex clipping, minimum-area
//!   rectangles, rotated NMS.
//! - [`codec`]: `(x, y, w, h, theta)` boxes to regression offsets and back.
//! - [`anchors`]: horizontal anchor grids over a feature pyramid.
//! - [`assignment`]: matching degree, its warm-up schedule, and dynamic
//!   positive selection with compensation.
//! - [`loss`]: matching-sensitive focal and smooth-L1 losses with analytic
//!   gradients.
//! - [`batch`]: flat-array entry points for foreign callers.
//! - [`harness`]: annotation ingestion, a synthetic regressor, diagnostic
//!   statistics, oracles and benchmarks.
//!
//! Batch kernels run on rayon when the `parallel` feature (on by default) is
//! enabled; every batch result is independent of thread count.

pub mod anchors;
pub mod assignment;
pub mod batch;
pub mod codec;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod loss;

pub use anchors::{generate_grid, AnchorGrid, LevelSpec};
pub use assignment::{
    alpha_schedule, assign, compensation_weights, matching_degree, Assignment, Label, MatchScores,
    MatchingConfig,
};
pub use codec::{decode, encode, Offsets};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{min_area_rect, rotated_iou, rotated_nms, OrientedBox, Point, Quad};
