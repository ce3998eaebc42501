//! Depth-class instance segmentation without a segmentation head.
//!
//! A pixel-level map of discrete depth classes is turned into instance masks
//! by matching each pixel's class against the depth class of every detected
//! object, within a tolerance derived from the object's footprint, and inside
//! the object's 2D box. This crate holds the pure algorithmic pieces:
//!
//! * [`depth_bins`]: linear and exponential depth discretization.
//! * [`geometry`]: pinhole projection, cuboid corners, depth margin and threshold.
//! * [`mask_assembly`]: match-and-crop assembly of instance masks.
//! * [`kitti`]: KITTI label and calibration text parsers.
//! * [`labels`]: depth-class label synthesis from binary coarse masks.
//! * [`losses`]: training losses with analytic subgradients.
//! * [`evaluation`]: mask IoU, greedy matching and average precision.
//! * [`synth`]: a seeded synthetic-scene generator used as a ground-truth oracle.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, the binary map
//! formats and the command-line front end live in the `depthseg` crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(any(feature = "std", test))]
extern crate std;

pub mod bitmap;
pub mod depth_bins;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod kitti;
pub mod labels;
pub mod losses;
pub mod mask_assembly;
pub mod rng;
pub mod synth;

pub use bitmap::Bitmap;
pub use depth_bins::{DepthBins, Scheme};
pub use error::{Error, Result};
pub use evaluation::{EvalParams, EvalResult};
pub use geometry::{CameraIntrinsics, CornerSet, ObjectDims, Point3D};
pub use mask_assembly::{
    AssemblyParams, BBox, Category, InstanceDetection, InstanceMask, PixelDepthMap,
};
pub use synth::{Scene, SceneSpec};
