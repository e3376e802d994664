//! Region-aware evaluation for 4D video editing.
//!
//! Edited target frames are split into Preserve, Reveal and Expand roles and
//! scored with region-specific metrics, camera/object control metrics and
//! metric-validation statistics. A synthetic proxy-case generator provides
//! cases with known best and worst outputs.

pub mod raster;
pub mod geometry;
pub mod perceptual;
pub mod control;
pub mod metrics;
pub mod validation;
pub mod harness;
