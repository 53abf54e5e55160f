//! Fixed-radius particle interactions computed with ray-tracing style
//! queries against a bounding volume hierarchy.
//!
//! Three geometric encodings map "which particles lie within the cutoff of
//! this one?" onto ray/primitive intersection tests:
//!
//! * [`sphere`]: one sphere per particle, three axis rays per target and a
//!   closest-axis filter.
//! * [`squares`]: two facing squares (four triangles) per particle, four
//!   corner rays per target and a ray-index filter.
//! * [`aabb`]: one box of half-width `C` per particle and a point query per
//!   target.
//!
//! A uniform grid of cells ([`grid`]) is the classical baseline and
//! [`oracle`] is the O(N²) reference. [`engine`] ties them together behind a
//! common build/compute contract.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aabb;
pub mod bvh;
pub mod engine;
mod error;
pub mod gen;
pub mod geom;
pub mod grid;
pub mod morton;
pub mod oracle;
pub mod sphere;
pub mod squares;

pub use bvh::Split;
pub use engine::{Accumulators, Engine, Kernel, Method, ProblemSpec, TargetValue};
pub use error::{Error, Result};
pub use geom::{Aabb, Axis, Hit, RaySeg, Vec3};
