//! Numerical toolkit for i.i.d. random dynamics of rational maps on the
//! Riemann sphere.
//!
//! The main objects are a finitely supported measure on a generator system
//! ([`semigroup::DiscreteMeasure`]), its transition operator acting on
//! grid-sampled functions ([`operator`]), the functions `T_L` giving the
//! probability that an orbit tends to a minimal set `L`, and the parameter
//! derivatives of `T_L` (complex Takagi functions, [`takagi`]). The
//! [`oracle1d`] module holds the real-line analogues used as exact oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fractal;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod minimal;
pub mod operator;
pub mod oracle1d;
pub mod poly;
pub mod rng;
pub mod semigroup;
pub mod series;
pub mod spatial;
pub mod systems;
pub mod takagi;

pub use error::{Error, Result};
pub use geometry::{chordal_distance, MapSpec, RationalMap, SpherePoint};
pub use grid::{BasinLabelGrid, GridFunction, GridGeometry, Label};
pub use minimal::{Classification, MinimalSetEstimate};
pub use num_complex::Complex64;
pub use rng::RngStreams;
pub use semigroup::{DiscreteMeasure, GeneratorSystem, RandomWord, Target};
pub use spatial::{PointCloud, Provenance};
