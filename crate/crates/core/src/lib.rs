//! Polygonal point set tracking across video frames.
//!
//! The crate covers the full pipeline: contour and raster primitives
//! ([`geometry`]), training objectives with analytic point gradients
//! ([`losses`]), evaluation metrics ([`metrics`]), the local alignment network
//! as explicit kernels ([`lam`]), synthetic sequence generation ([`synth`]),
//! the global-then-local tracker ([`tracker`]) and file formats ([`io`]).

pub mod error;
pub mod geometry;
pub mod gradcheck;
pub mod image;
pub mod io;
pub mod lam;
pub mod losses;
pub mod metrics;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{AffineTransform, CropWindow, Point, PointSet};
pub use image::FrameImage;
