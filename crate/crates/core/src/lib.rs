//! Colombeau generalized numbers and functions represented as sampled
//! epsilon-nets, with numerical valuations, wave front set detection at a
//! growth scale, slow-scale symbol tests, generalized bicharacteristics and
//! the singular transport problem with a mollified Heaviside coefficient.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bichar;
pub mod error;
pub mod fit;
pub mod genfun;
pub mod grid;
pub mod io;
pub mod mollifier;
pub mod scale;
pub mod symbols;
pub mod transport;
pub mod wavefront;

pub use error::{Error, Result};
pub use genfun::{DistSpec, GenPoint, GridFn};
pub use grid::{Axis, SpatialGrid};
pub use mollifier::Mollifier;
pub use scale::{EpsGrid, GenNumber, ScaleFn};
