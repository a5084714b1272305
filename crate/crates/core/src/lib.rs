//! Evaluation of instance segmentations of thin curvilinear objects.
//!
//! Predicted masks are matched to ground truth, both are thinned to
//! one-pixel skeletons, and the relative error of the skeleton lengths gives
//! a length-aware recall next to COCO-style average precision. A seeded
//! synthetic scene generator provides curves of known length for testing.

pub mod annotation;
pub mod error;
pub mod mask;
pub mod mask_ops;
pub mod metrics;
pub mod skeleton;
pub mod synth;

pub use error::{Error, Result};
pub use mask::{BinaryMask, PixelBox};
pub use skeleton::{LengthEstimator, Skeleton};
