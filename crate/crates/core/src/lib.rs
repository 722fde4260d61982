//! Motion-tracking benchmark harness.

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod choreo;
pub mod error;
pub mod filters;
pub mod format;
pub mod interp;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod quat;
pub mod report;
pub mod score;
pub mod sim;
pub mod special;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use motion::{Difficulty, MotionSequence, PoseFrame, Skeleton};
pub use quat::{lerp, slerp, Quaternion, Vec3};
