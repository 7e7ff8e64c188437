//! Tools for converting static images into event camera recordings.
//!
//! A change detection sensor only responds to relative intensity change, so a
//! static scene produces nothing. The simulator here moves a virtual sensor
//! through a short pan/tilt fixation pattern in front of the scene, emits the
//! address events that motion would generate, and stores them in a compact
//! binary record format. On top of that sit dataset conversion pipelines,
//! stream statistics and spectral analysis, and three reference classifiers
//! for the resulting recordings.

pub mod analysis;
pub mod annotation;
pub mod classify;
pub mod event;
pub mod meta;
pub mod pipeline;
pub mod raster;
pub mod schedule;
mod seed;
pub mod sim;
pub mod synth;

pub use event::{Event, EventStream, PixelBox, Polarity};
