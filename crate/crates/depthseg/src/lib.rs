//! File formats, configuration and batch tools around `depthseg-core`.
//!
//! * [`pgm`]: binary graymap (P5) codec used for depth-class and instance-id maps.
//! * [`formats`]: detection lists, mask sidecars and the on-disk map layouts.
//! * [`config`]: run configuration with flag > file > default precedence.
//! * [`parallel`]: multi-threaded assembly that matches the serial result.
//! * [`sweep`]: the AP-vs-K sensitivity sweep over synthetic scenes.
//! * [`bench`]: assembly timing.
//! * [`cli`]: the `depthseg` command line.

pub mod bench;
pub mod cli;
pub mod config;
pub mod formats;
pub mod parallel;
pub mod pgm;
pub mod sweep;

pub use depthseg_core as core;
pub use formats::FormatError;
