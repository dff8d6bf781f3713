//! Finite-dimensional quantum reference frames.
//!
//! Operators and channels live in [`operator`], groups and representations in
//! [`symmetry`], covariant POVMs in [`measure`] and operator-valued integration
//! in [`integral`]. Frames over a single group are handled by
//! [`group_frame`], frames on principal bundles by [`bundle`], lifted
//! difference operators by [`pde`] and frame-bundle geometry by [`geometry`].
//! [`scenario`] loads JSON scenarios and runs named checks over them.

pub mod error;
pub mod operator;
pub mod symmetry;
pub mod measure;
pub mod integral;
pub mod group_frame;
pub mod bundle;
pub mod pde;
pub mod geometry;
pub mod scenario;

pub use error::{Error, Result};
pub use operator::{Channel, Effect, Operator, State, C64, DEFAULT_TOL};
