//! Zero-surface-tension Laplacian growth of simply connected droplets.
//!
//! The crate evolves exterior conformal maps under point sinks, continues the
//! Schwarz function of the boundary, and solves the one-parameter family of
//! algebraic droplets whose Schwarz function has one pole on each sheet. The
//! `verify` module turns the structural identities into runnable checks.

pub mod conformal;
pub mod curve;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hodograph;
pub mod poly;
pub mod schwarz;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{cauchy_transform, hausdorff_distance, signed_area, Contour, PlanePoint};
